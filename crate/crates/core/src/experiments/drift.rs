//! Mean change of the horizontal velocity component at wall collisions,
//! binned by its value before the collision.

use serde::{Deserialize, Serialize};

use super::{default_workers, run_partitioned, trajectory_rng, Partial};
use crate::engine::{run_until, EventKind};
use crate::error::{invalid, Error, Result};
use crate::regimes::in_wpm;
use crate::state::{sample_initial_state, SimParams};
use crate::twist::RuleFamily;

pub const DEFAULT_BIN_WIDTH: f64 = 0.05;
/// Fixed-point scale for the exact `Δu` sums.
const SCALE: f64 = (1u64 << 48) as f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub sim: SimParams,
    pub samples: u64,
    pub events_per_sample: u64,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    /// End a trajectory when it enters `W±` (only under an expanding law).
    #[serde(default = "default_true")]
    pub stop_at_trap: bool,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_bin_width() -> f64 {
    DEFAULT_BIN_WIDTH
}

fn default_true() -> bool {
    true
}

impl DriftConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.samples == 0 || self.events_per_sample == 0 {
            return Err(invalid("samples", "samples and events_per_sample must be positive"));
        }
        let bins = 2.0 / self.bin_width;
        if !(self.bin_width > 0.0) || (bins - bins.round()).abs() > 1e-9 {
            return Err(invalid("bin_width", "must divide [-1, 1] evenly"));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        Ok(())
    }

    fn n_bins(&self) -> usize {
        (2.0 / self.bin_width).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DriftPartial {
    pub bin_width_bits: u64,
    pub counts: Vec<u64>,
    pub sum_du: Vec<i128>,
    pub sum_du_sq: Vec<i128>,
    /// Wall events with `|u| > 1` before the collision.
    pub overflow: u64,
    pub wall_events: u64,
    pub trajectories: u64,
    pub trapped: u64,
    pub anomalies: u64,
}

impl DriftPartial {
    pub fn empty(bin_width: f64) -> Self {
        let n = (2.0 / bin_width).round() as usize;
        Self {
            bin_width_bits: bin_width.to_bits(),
            counts: vec![0; n],
            sum_du: vec![0; n],
            sum_du_sq: vec![0; n],
            overflow: 0,
            wall_events: 0,
            trajectories: 0,
            trapped: 0,
            anomalies: 0,
        }
    }

    pub fn bin_of(&self, u: f64) -> Option<usize> {
        if !(-1.0..=1.0).contains(&u) {
            return None;
        }
        let w = f64::from_bits(self.bin_width_bits);
        Some((((u + 1.0) / w).floor() as usize).min(self.counts.len() - 1))
    }

    pub fn add(&mut self, u_before: f64, du: f64) {
        self.wall_events += 1;
        match self.bin_of(u_before) {
            None => self.overflow += 1,
            Some(b) => {
                let q = (du * SCALE).round() as i128;
                self.counts[b] += 1;
                self.sum_du[b] += q;
                self.sum_du_sq[b] += q * q;
            }
        }
    }
}

impl Partial for DriftPartial {
    fn merge(mut self, other: Self) -> Result<Self> {
        if self.bin_width_bits != other.bin_width_bits {
            return Err(Error::MergeMismatch("drift bin widths differ".into()));
        }
        for b in 0..self.counts.len() {
            self.counts[b] += other.counts[b];
            self.sum_du[b] += other.sum_du[b];
            self.sum_du_sq[b] += other.sum_du_sq[b];
        }
        self.overflow += other.overflow;
        self.wall_events += other.wall_events;
        self.trajectories += other.trajectories;
        self.trapped += other.trapped;
        self.anomalies += other.anomalies;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftCurve {
    pub bin_edges: Vec<f64>,
    pub mean_du: Vec<f64>,
    pub stderr: Vec<f64>,
    pub counts: Vec<u64>,
    pub overflow: u64,
    pub wall_events: u64,
    pub trajectories: u64,
    pub trapped: u64,
    pub anomalies: u64,
}

impl DriftCurve {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

impl From<&DriftPartial> for DriftCurve {
    fn from(p: &DriftPartial) -> Self {
        let w = f64::from_bits(p.bin_width_bits);
        let n = p.counts.len();
        let mut mean = vec![f64::NAN; n];
        let mut stderr = vec![f64::NAN; n];
        for b in 0..n {
            let c = p.counts[b];
            if c == 0 {
                continue;
            }
            let cf = c as f64;
            let m = p.sum_du[b] as f64 / SCALE / cf;
            mean[b] = m;
            if c > 1 {
                let num = (c as i128 * p.sum_du_sq[b] - p.sum_du[b] * p.sum_du[b]).max(0);
                let var = num as f64 / (SCALE * SCALE) / (cf * (cf - 1.0));
                stderr[b] = (var / cf).sqrt();
            }
        }
        DriftCurve {
            bin_edges: (0..=n).map(|i| -1.0 + w * i as f64).collect(),
            mean_du: mean,
            stderr,
            counts: p.counts.clone(),
            overflow: p.overflow,
            wall_events: p.wall_events,
            trajectories: p.trajectories,
            trapped: p.trapped,
            anomalies: p.anomalies,
        }
    }
}

/// Wall-event drift statistics of one trajectory.
pub fn drift_sample(cfg: &DriftConfig, sample: u64) -> DriftPartial {
    let mut acc = DriftPartial::empty(cfg.bin_width);
    acc.trajectories = 1;
    let mut rng = trajectory_rng(cfg.sim.seed, 0, sample);
    let mut state = match sample_initial_state(&cfg.sim, &mut rng) {
        Ok(s) => s,
        Err(_) => {
            acc.anomalies = 1;
            return acc;
        }
    };
    let rule = cfg.sim.rule;
    let use_trap = cfg.stop_at_trap && rule.family == RuleFamily::TanCenter && rule.lambda < 0.0;
    if use_trap && in_wpm(&state, None).trapped {
        acc.trapped = 1;
        return acc;
    }
    let result = run_until(
        &mut state,
        &rule,
        &cfg.sim.tolerances,
        cfg.events_per_sample,
        |s, out| {
            if let EventKind::Wall { .. } = out.event.kind {
                let (before, after) = (out.before.0.x, out.after.0.x);
                acc.add(before, after - before);
            }
            use_trap && in_wpm(s, None).trapped
        },
    );
    match result {
        Ok(summary) if summary.reason == crate::engine::StopReason::Trapped => acc.trapped = 1,
        Ok(_) => {}
        Err(_) => acc.anomalies = 1,
    }
    acc
}

pub fn drift_curve(cfg: &DriftConfig) -> Result<DriftCurve> {
    cfg.validate()?;
    let empty = DriftPartial::empty(cfg.bin_width);
    debug_assert_eq!(empty.counts.len(), cfg.n_bins());
    let merged = run_partitioned(cfg.samples, cfg.workers, &empty, |i| drift_sample(cfg, i))?;
    Ok(DriftCurve::from(&merged))
}
