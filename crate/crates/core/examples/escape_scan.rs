//! Mean escape time into the trap over a small λ grid, with the log-log fit.
//!
//! `cargo run --release --example escape_scan -- 200` sets the sample count.

use twistgas::experiments::{default_workers, escape_scan, fit_scaling, EscapeScanConfig, FitModel};
use twistgas::{SimParams, TwistRule};

fn main() -> twistgas::Result<()> {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    for sign in [1.0, -1.0] {
        let mut sim = SimParams::new(2, 0.1, TwistRule::tan_center(sign));
        sim.seed = 2024;
        let cfg = EscapeScanConfig {
            lambda_grid: [0.06, 0.08, 0.12, 0.16, 0.2].iter().map(|l| l * sign).collect(),
            samples_per_lambda: samples,
            trap: None,
            sim,
            workers: default_workers(),
        };
        let stats = escape_scan(&cfg)?;
        for s in &stats {
            println!(
                "lambda {:+.3}  mean tau {:9.1} ± {:6.1}  censored {}",
                s.lambda, s.mean_tau, s.stderr, s.censored_count
            );
        }
        let fit = fit_scaling(&stats, FitModel::Linear)?;
        println!("slope of ln(mean tau) against -ln|lambda|: {:.3}\n", fit.a);
    }
    Ok(())
}
