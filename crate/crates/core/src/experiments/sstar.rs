//! Decay of perturbations of the symmetric two-disk regime `S*`.
//!
//! Between consecutive disk–disk collisions each disk alternates walls. When
//! both disks make an odd number of wall hits the interval contracts the
//! perturbation; an even number restores each velocity exactly under the
//! reversible law. The regression abscissa is therefore the running count
//! `m` of odd intervals.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ols_slope, trajectory_rng};
use crate::engine::{next_event, step, EventKind, StepResult};
use crate::error::{invalid, Error, Result};
use crate::regimes::{sstar_deviation, sstar_state};
use crate::state::{PhaseState, ToleranceSet, Vec2};
use crate::twist::TwistRule;

/// Magnitudes below this are reported as exact zeros.
pub const EXACT_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SStarDecayConfig {
    pub lambda: f64,
    pub diameter: f64,
    /// Size of the momentum kick and of the vertical offset applied to the
    /// second disk.
    pub perturbation: f64,
    pub n_pair_collisions: u64,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: ToleranceSet,
}

fn default_max_events() -> u64 {
    10_000_000
}

impl SStarDecayConfig {
    pub fn new(lambda: f64, diameter: f64, perturbation: f64, n_pair_collisions: u64) -> Self {
        Self {
            lambda,
            diameter,
            perturbation,
            n_pair_collisions,
            max_events: default_max_events(),
            seed: 0,
            tolerances: ToleranceSet::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diameter > 0.0 && self.diameter < 0.5) {
            return Err(invalid("diameter", "need 0 < d < 1/2 for two disks"));
        }
        if !(self.perturbation >= 0.0 && self.perturbation < 0.1) {
            return Err(invalid("perturbation", "must lie in [0, 0.1)"));
        }
        if self.n_pair_collisions == 0 || self.max_events == 0 {
            return Err(invalid("n_pair_collisions", "budgets must be positive"));
        }
        self.tolerances.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// Both disks hit the walls an odd number of times.
    Odd,
    Even,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SStarRow {
    /// 1-based index of the disk–disk collision.
    pub collision: u64,
    /// Odd intervals up to and including the one ending here.
    pub m: u64,
    pub parity: Parity,
    /// `None` when `‖δv‖ < EXACT_CUTOFF`.
    pub log_dv: Option<f64>,
    /// `None` when `|ℓ| < EXACT_CUTOFF`.
    pub log_ell: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SStarDecay {
    pub rows: Vec<SStarRow>,
    pub slope_log_dv: Option<f64>,
    pub slope_log_ell: Option<f64>,
    pub odd_intervals: u64,
    pub even_intervals: u64,
    pub mixed_intervals: u64,
    /// Largest `|‖δv‖_end − ‖δv‖_start|` over even intervals.
    pub max_even_interval_change: f64,
    pub events: u64,
}

fn log_or_exact(x: f64) -> Option<f64> {
    (x.abs() >= EXACT_CUTOFF).then(|| x.abs().ln())
}

/// A random exact `S*` state, then the second disk's momentum is kicked by
/// `ε` in a random direction and its height shifted by `±ε`; momenta are
/// rescaled to `KE = 1`.
pub fn perturbed_sstar_state<R: Rng + ?Sized>(diameter: f64, eps: f64, rng: &mut R) -> Result<PhaseState> {
    let r = 0.5 * diameter;
    let x = rng.random::<f64>();
    let y = r + (0.5 - 2.0 * r) * rng.random::<f64>() + eps;
    let theta = 2.0 * PI * rng.random::<f64>();
    let mut state = sstar_state(x, y.min(0.5 - r), Vec2::new(theta.cos(), theta.sin()), diameter)?;
    if eps > 0.0 {
        let kick = 2.0 * PI * rng.random::<f64>();
        state.velocities[1] = state.velocities[1] + Vec2::new(kick.cos(), kick.sin()).scale(eps);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let y2 = (state.positions[1].y + sign * eps).clamp(r, 1.0 - r);
        state.positions[1].y = y2;
        let norm = (state.velocities[0].norm_sq() + state.velocities[1].norm_sq()).sqrt();
        let scale = 2f64.sqrt() / norm;
        for p in &mut state.velocities {
            *p = p.scale(scale);
        }
    }
    Ok(state)
}

/// Runs the reversible law from a perturbed `S*` state and records both
/// perturbation magnitudes at every disk–disk collision.
pub fn sstar_decay(cfg: &SStarDecayConfig) -> Result<SStarDecay> {
    cfg.validate()?;
    let mut rng = trajectory_rng(cfg.seed, 0, 0);
    let state = perturbed_sstar_state(cfg.diameter, cfg.perturbation, &mut rng)?;
    sstar_decay_from(state, cfg)
}

/// As [`sstar_decay`], from a given two-disk state.
pub fn sstar_decay_from(mut state: PhaseState, cfg: &SStarDecayConfig) -> Result<SStarDecay> {
    if state.n_disks() != 2 {
        return Err(Error::Unsupported("S* decay needs exactly 2 disks".into()));
    }
    let rule = TwistRule::reversible_shear(cfg.lambda);
    let mut out = SStarDecay {
        rows: Vec::new(),
        slope_log_dv: None,
        slope_log_ell: None,
        odd_intervals: 0,
        even_intervals: 0,
        mixed_intervals: 0,
        max_even_interval_change: 0.0,
        events: 0,
    };
    let mut wall_hits = [0u64; 2];
    let mut last_dv: Option<f64> = None;
    let mut m = 0;
    while (out.rows.len() as u64) < cfg.n_pair_collisions && out.events < cfg.max_events {
        let outcome = match step(&mut state, &rule, &cfg.tolerances)? {
            StepResult::Frozen => break,
            StepResult::Collision(o) => o,
        };
        out.events += 1;
        match outcome.event.kind {
            EventKind::Wall { disk, .. } => wall_hits[disk] += 1,
            EventKind::Pair { .. } => {
                let contact = outcome.contact.expect("pair events carry a contact point");
                let (dv, ell) = sstar_deviation(&state, &contact)?;
                let parity = match (wall_hits[0] % 2, wall_hits[1] % 2) {
                    (1, 1) => Parity::Odd,
                    (0, 0) => Parity::Even,
                    _ => Parity::Mixed,
                };
                match parity {
                    Parity::Odd => {
                        m += 1;
                        out.odd_intervals += 1;
                    }
                    Parity::Even => {
                        out.even_intervals += 1;
                        if let Some(prev) = last_dv {
                            out.max_even_interval_change = out.max_even_interval_change.max((dv - prev).abs());
                        }
                    }
                    Parity::Mixed => out.mixed_intervals += 1,
                }
                last_dv = Some(dv);
                wall_hits = [0, 0];
                out.rows.push(SStarRow {
                    collision: out.rows.len() as u64 + 1,
                    m,
                    parity,
                    log_dv: log_or_exact(dv),
                    log_ell: log_or_exact(ell),
                });
            }
        }
    }
    let series = |pick: fn(&SStarRow) -> Option<f64>| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = out.rows.iter().filter_map(|r| pick(r).map(|y| (r.m as f64, y))).unzip();
        ols_slope(&xs, &ys)
    };
    out.slope_log_dv = series(|r| r.log_dv);
    out.slope_log_ell = series(|r| r.log_ell);
    Ok(out)
}

/// Largest `‖p₁ + p₂‖` and `|y₁ + y₂ − 1|` over `n_events` collisions under
/// the reversible law. The symmetric disks hit opposite walls at the same
/// instant, so states followed by a further event at the same time (within
/// `tol_event_tie`) are skipped.
pub fn sstar_symmetry_drift(state: &PhaseState, lambda: f64, n_events: u64, tol: &ToleranceSet) -> Result<(f64, f64)> {
    if state.n_disks() != 2 {
        return Err(Error::Unsupported("S* symmetry needs exactly 2 disks".into()));
    }
    let rule = TwistRule::reversible_shear(lambda);
    let mut s = state.clone();
    let (mut dv_max, mut dy_max) = (0.0_f64, 0.0_f64);
    for _ in 0..n_events {
        if let StepResult::Frozen = step(&mut s, &rule, tol)? {
            break;
        }
        if next_event(&s, tol).is_some_and(|(dt, _)| dt <= tol.tol_event_tie) {
            continue;
        }
        dv_max = dv_max.max((s.velocities[0] + s.velocities[1]).norm());
        dy_max = dy_max.max((s.positions[0].y + s.positions[1].y - 1.0).abs());
    }
    Ok((dv_max, dy_max))
}
