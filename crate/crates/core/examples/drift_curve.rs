//! Binned mean change of `u` at wall collisions under an expanding law.

use twistgas::experiments::{default_workers, drift_curve, DriftConfig};
use twistgas::{SimParams, TwistRule};

fn main() -> twistgas::Result<()> {
    let mut sim = SimParams::new(2, 0.1, TwistRule::tan_center(-0.015));
    sim.seed = 1;
    let cfg = DriftConfig {
        sim,
        samples: 2000,
        events_per_sample: 1_000_000,
        bin_width: 0.1,
        stop_at_trap: true,
        workers: default_workers(),
    };
    let curve = drift_curve(&cfg)?;
    println!(
        "{} wall events, {} trajectories trapped",
        curve.wall_events, curve.trapped
    );
    for ((u, m), n) in curve.bin_centers().iter().zip(&curve.mean_du).zip(&curve.counts) {
        let bar = "#".repeat((m.abs() * 6000.0) as usize);
        println!("{u:+.2}  {m:+.3e}  {n:8}  {bar}");
    }
    Ok(())
}
