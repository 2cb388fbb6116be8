//! A perturbed symmetric two-disk state under the reversible law relaxes
//! back: both deviations shrink with the number of odd intervals.

use twistgas::experiments::sstar::sstar_decay;
use twistgas::experiments::SStarDecayConfig;

fn main() -> twistgas::Result<()> {
    let mut cfg = SStarDecayConfig::new(0.25, 0.1, 1e-3, 1000);
    cfg.seed = 4;
    let out = sstar_decay(&cfg)?;
    for r in out.rows.iter().step_by(100) {
        println!(
            "collision {:5}  m {:4}  log|dv| {:8.3}  log|ell| {:8.3}",
            r.collision,
            r.m,
            r.log_dv.unwrap_or(f64::NEG_INFINITY),
            r.log_ell.unwrap_or(f64::NEG_INFINITY)
        );
    }
    println!(
        "slopes per odd interval: dv {:.4}, ell {:.4}",
        out.slope_log_dv.unwrap_or(f64::NAN),
        out.slope_log_ell.unwrap_or(f64::NAN)
    );
    Ok(())
}
