//! A single logged trajectory with conservation diagnostics.

use std::io::Write;

use serde::Serialize;

use super::trajectory_rng;
use crate::config::SimulateConfig;
use crate::engine::{run_until, EventKind, StopReason};
use crate::error::Result;
use crate::io::EventLog;
use crate::state::{horizontal_momentum, kinetic_energy, sample_initial_state};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub events: u64,
    pub wall_events: u64,
    pub pair_events: u64,
    pub final_time: f64,
    pub stop_reason: StopReason,
    pub initial_energy: f64,
    /// Largest `|KE(t) − KE(0)|` over post-collision states.
    pub energy_drift: f64,
    /// Largest `|M_u(t) − M_u(0)|`.
    pub momentum_drift: f64,
}

/// Runs `cfg.events` collisions from the initial state drawn for
/// `cfg.sim.seed`, optionally logging each one.
pub fn simulate<W: Write>(cfg: &SimulateConfig, mut log: Option<&mut EventLog<W>>) -> Result<SimulateReport> {
    cfg.validate()?;
    let mut rng = trajectory_rng(cfg.sim.seed, 0, 0);
    let mut state = sample_initial_state(&cfg.sim, &mut rng)?;
    let e0 = kinetic_energy(&state);
    let m0 = horizontal_momentum(&state);
    let (mut de, mut dm) = (0.0_f64, 0.0_f64);
    let (mut walls, mut pairs) = (0, 0);
    let mut failure = None;
    let summary = run_until(&mut state, &cfg.sim.rule, &cfg.sim.tolerances, cfg.events, |s, out| {
        match out.event.kind {
            EventKind::Wall { .. } => walls += 1,
            EventKind::Pair { .. } => pairs += 1,
        }
        de = de.max((kinetic_energy(s) - e0).abs());
        dm = dm.max((horizontal_momentum(s) - m0).abs());
        if let Some(log) = log.as_deref_mut() {
            if let Err(e) = log.record(s, out) {
                failure = Some(e);
                return true;
            }
        }
        false
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SimulateReport {
        events: summary.n_events,
        wall_events: walls,
        pair_events: pairs,
        final_time: state.time,
        stop_reason: summary.reason,
        initial_energy: e0,
        energy_drift: de,
        momentum_drift: dm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::SimParams;
    use crate::twist::TwistRule;

    #[test]
    fn specular_single_disk_log() {
        let mut sim = SimParams::new(1, 0.1, TwistRule::specular());
        sim.seed = 7;
        let cfg = SimulateConfig {
            sim,
            events: 100,
            event_log: None,
        };
        let mut buf = Vec::new();
        let mut log = EventLog::new(&mut buf).unwrap();
        let report = simulate(&cfg, Some(&mut log)).unwrap();
        log.finish().unwrap();
        assert_eq!(report.events, 100);
        assert_eq!(report.wall_events, 100);
        assert!(report.energy_drift < 1e-15);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 102);
    }
}
