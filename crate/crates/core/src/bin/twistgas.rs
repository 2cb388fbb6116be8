use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use twistgas::config::{LemmasConfig, MapAnalyzeConfig, RunConfig, SimulateConfig};
use twistgas::experiments::{
    default_workers, drift_curve, escape_scan, fit_scaling, simulate, sstar_decay, DriftConfig, EscapeScanConfig,
    FitModel, SStarDecayConfig, WORKERS_ENV,
};
use twistgas::interval_map::analyze;
use twistgas::io::{self as out, EventLog};
use twistgas::quadrature::lemma_result;
use twistgas::{Result, RuleFamily, SimParams, TwistRule, WallId};

#[derive(Parser)]
#[command(name = "twistgas", version, about = "Hard disks in a channel with twisting walls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Main output file (stdout if absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Model {
    /// specular, tan_center or reversible_shear.
    #[arg(long, value_parser = parse_family)]
    family: Option<RuleFamily>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Number of disks.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    diameter: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and report conservation diagnostics.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        events: Option<u64>,
        /// Per-event CSV log.
        #[arg(long)]
        event_log: Option<PathBuf>,
    },
    /// Mean escape time into the trap over a grid of λ.
    EscapeScan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        /// Comma-separated λ grid.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambdas: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        max_events: Option<u64>,
        /// JSON with the per-λ statistics and scaling fits.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Mean wall-collision change of u binned by u.
    Drift {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        events: Option<u64>,
        #[arg(long)]
        bin_width: Option<f64>,
    },
    /// Decay of a perturbation of the symmetric two-disk regime.
    SstarDecay {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long)]
        diameter: Option<f64>,
        #[arg(long)]
        perturbation: Option<f64>,
        #[arg(long)]
        collisions: Option<u64>,
        /// JSON summary with the fitted slopes.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fixed points and invariant intervals of the one-disk angle map.
    MapAnalyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_family)]
        family: Option<RuleFamily>,
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Mean log-derivative integrals of the wall laws.
    Lemmas {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_family)]
        family: Option<RuleFamily>,
        /// λ values (repeat or comma-separate).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambda: Vec<f64>,
        #[arg(long)]
        t_points: Option<usize>,
    },
}

fn parse_family(s: &str) -> std::result::Result<RuleFamily, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn load(common: &Common) -> Result<RunConfig> {
    match &common.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(path: Option<&Path>, schema: &str, data: &T) -> Result<()> {
    let mut w = sink(path)?;
    w.write_all(out::json_report(schema, data)?.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn apply_model(sim: &mut SimParams, model: &Model) {
    if let Some(f) = model.family {
        sim.rule.family = f;
    }
    if let Some(l) = model.lambda {
        sim.rule.lambda = l;
    }
    if let Some(n) = model.n {
        sim.n_disks = n;
    }
    if let Some(d) = model.diameter {
        sim.diameter = d;
    }
}

fn seed(common: &Common, file: &RunConfig) -> Option<u64> {
    common.seed.or(file.seed)
}

fn workers(common: &Common, file: &RunConfig) -> Option<usize> {
    common.workers.or(file.workers)
}

fn output<'a>(common: &'a Common, file: &'a RunConfig) -> Option<&'a Path> {
    common.output.as_deref().or(file.output.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            common,
            model,
            events,
            event_log,
        } => {
            let file = load(&common)?;
            let mut cfg = file.simulate.clone().unwrap_or(SimulateConfig {
                sim: SimParams::new(2, 0.1, TwistRule::specular()),
                events: 1000,
                event_log: None,
            });
            apply_model(&mut cfg.sim, &model);
            if let Some(s) = seed(&common, &file) {
                cfg.sim.seed = s;
            }
            if let Some(e) = events {
                cfg.events = e;
            }
            if event_log.is_some() {
                cfg.event_log = event_log;
            }
            let report = match &cfg.event_log {
                Some(path) => {
                    let mut log = EventLog::new(BufWriter::new(File::create(path)?))?;
                    let r = simulate(&cfg, Some(&mut log))?;
                    log.finish()?;
                    r
                }
                None => simulate::<io::Sink>(&cfg, None)?,
            };
            emit_json(output(&common, &file), "simulate", &report)
        }
        Command::EscapeScan {
            common,
            model,
            lambdas,
            samples,
            max_events,
            report,
        } => {
            let file = load(&common)?;
            let mut cfg = file.escape_scan.clone().unwrap_or_else(|| EscapeScanConfig {
                lambda_grid: vec![0.04, 0.06, 0.08, 0.12, 0.16, 0.2],
                samples_per_lambda: 1000,
                trap: None,
                sim: SimParams::new(2, 0.1, TwistRule::tan_center(0.1)),
                workers: default_workers(),
            });
            apply_model(&mut cfg.sim, &model);
            if let Some(s) = seed(&common, &file) {
                cfg.sim.seed = s;
            }
            if let Some(w) = workers(&common, &file) {
                cfg.workers = w;
            }
            if let Some(g) = lambdas {
                cfg.lambda_grid = g;
            }
            if let Some(s) = samples {
                cfg.samples_per_lambda = s;
            }
            if let Some(m) = max_events {
                cfg.sim.max_events = m;
            }
            let stats = escape_scan(&cfg)?;
            let mut w = sink(output(&common, &file))?;
            out::write_escape_csv(&mut w, &stats)?;
            w.flush()?;
            if let Some(path) = report {
                #[derive(Serialize)]
                struct ScanReport<'a> {
                    stats: &'a [twistgas::experiments::EscapeStats],
                    linear: Option<twistgas::experiments::FitResult>,
                    loglog_refined: Option<twistgas::experiments::FitResult>,
                }
                let r = ScanReport {
                    stats: &stats,
                    linear: fit_scaling(&stats, FitModel::Linear).ok(),
                    loglog_refined: fit_scaling(&stats, FitModel::LoglogRefined).ok(),
                };
                emit_json(Some(&path), "escape-scan-report", &r)?;
            }
            Ok(())
        }
        Command::Drift {
            common,
            model,
            samples,
            events,
            bin_width,
        } => {
            let file = load(&common)?;
            let mut cfg = file.drift.clone().unwrap_or_else(|| DriftConfig {
                sim: SimParams::new(2, 0.1, TwistRule::tan_center(-0.015)),
                samples: 100,
                events_per_sample: 100_000,
                bin_width: 0.05,
                stop_at_trap: true,
                workers: default_workers(),
            });
            apply_model(&mut cfg.sim, &model);
            if let Some(s) = seed(&common, &file) {
                cfg.sim.seed = s;
            }
            if let Some(w) = workers(&common, &file) {
                cfg.workers = w;
            }
            if let Some(s) = samples {
                cfg.samples = s;
            }
            if let Some(e) = events {
                cfg.events_per_sample = e;
            }
            if let Some(b) = bin_width {
                cfg.bin_width = b;
            }
            let curve = drift_curve(&cfg)?;
            let mut w = sink(output(&common, &file))?;
            out::write_drift_csv(&mut w, &curve)?;
            w.flush()?;
            if curve.anomalies > 0 {
                eprintln!("warning: {} trajectories ended in an anomaly", curve.anomalies);
            }
            Ok(())
        }
        Command::SstarDecay {
            common,
            lambda,
            diameter,
            perturbation,
            collisions,
            report,
        } => {
            let file = load(&common)?;
            let mut cfg = file
                .sstar_decay
                .clone()
                .unwrap_or_else(|| SStarDecayConfig::new(0.25, 0.1, 1e-3, 400));
            if let Some(s) = seed(&common, &file) {
                cfg.seed = s;
            }
            if let Some(l) = lambda {
                cfg.lambda = l;
            }
            if let Some(d) = diameter {
                cfg.diameter = d;
            }
            if let Some(p) = perturbation {
                cfg.perturbation = p;
            }
            if let Some(c) = collisions {
                cfg.n_pair_collisions = c;
            }
            let decay = sstar_decay(&cfg)?;
            let mut w = sink(output(&common, &file))?;
            out::write_sstar_csv(&mut w, &decay)?;
            w.flush()?;
            if let Some(path) = report {
                #[derive(Serialize)]
                struct Summary {
                    slope_log_dv: Option<f64>,
                    slope_log_ell: Option<f64>,
                    odd_intervals: u64,
                    even_intervals: u64,
                    mixed_intervals: u64,
                    max_even_interval_change: f64,
                    events: u64,
                }
                let s = Summary {
                    slope_log_dv: decay.slope_log_dv,
                    slope_log_ell: decay.slope_log_ell,
                    odd_intervals: decay.odd_intervals,
                    even_intervals: decay.even_intervals,
                    mixed_intervals: decay.mixed_intervals,
                    max_even_interval_change: decay.max_even_interval_change,
                    events: decay.events,
                };
                emit_json(Some(&path), "sstar-decay-report", &s)?;
            }
            Ok(())
        }
        Command::MapAnalyze {
            common,
            family,
            lambda,
            grid,
        } => {
            let file = load(&common)?;
            let mut cfg = file
                .map_analyze
                .clone()
                .unwrap_or_else(|| MapAnalyzeConfig::new(TwistRule::tan_center(0.1)));
            if let Some(f) = family {
                cfg.rule.family = f;
            }
            if let Some(l) = lambda {
                cfg.rule.lambda = l;
            }
            if let Some(g) = grid {
                cfg.grid = g;
            }
            cfg.validate()?;
            let report = analyze(&cfg.rule, cfg.grid, cfg.tol)?;
            emit_json(output(&common, &file), "map-analyze", &report)
        }
        Command::Lemmas {
            common,
            family,
            lambda,
            t_points,
        } => {
            let file = load(&common)?;
            let mut cfg = file
                .lemmas
                .clone()
                .unwrap_or_else(|| LemmasConfig::new(RuleFamily::ReversibleShear, vec![0.3]));
            if let Some(f) = family {
                cfg.family = f;
            }
            if !lambda.is_empty() {
                cfg.lambdas = lambda;
            }
            if let Some(t) = t_points {
                cfg.t_points = t;
            }
            cfg.validate()?;
            let mut rows = Vec::new();
            for &l in &cfg.lambdas {
                for k in WallId::BOTH {
                    rows.push(lemma_result(&TwistRule::new(cfg.family, l), k, cfg.t_points, cfg.tol)?);
                }
            }
            emit_json(output(&common, &file), "lemmas", &rows)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
