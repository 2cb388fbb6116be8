//! Fixed points, stability and invariant intervals of the one-disk angle map.

use twistgas::interval_map::{analyze, DEFAULT_GRID, DEFAULT_ROOT_TOL};
use twistgas::TwistRule;

fn main() -> twistgas::Result<()> {
    for rule in [
        TwistRule::tan_center(0.1),
        TwistRule::tan_center(-0.1),
        TwistRule::reversible_shear(0.5),
    ] {
        let r = analyze(&rule, DEFAULT_GRID, DEFAULT_ROOT_TOL)?;
        println!(
            "{rule}: center {:.6}, g = h∘h residual {:.1e}",
            r.center, r.h_decomposition_residual
        );
        if r.all_fixed {
            println!("  every angle is fixed");
        }
        for p in &r.fixed_points {
            println!(
                "  fixed point {:.6}  {:?}  g' = {:.6}",
                p.phi, p.stability, p.derivative
            );
        }
        for i in &r.intervals {
            println!("  ({:.4}, {:.4}) moves {:?} the center", i.lo, i.hi, i.direction);
        }
    }
    Ok(())
}
