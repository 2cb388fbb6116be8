//! Mean log-derivative integrals of both wall laws: negative for every
//! nonzero twist.

use twistgas::quadrature::{lemma_result, DEFAULT_TOL};
use twistgas::{RuleFamily, TwistRule, WallId};

fn main() -> twistgas::Result<()> {
    for family in [RuleFamily::TanCenter, RuleFamily::ReversibleShear] {
        for lambda in [-0.3, -0.1, 0.0, 0.1, 0.3] {
            let r = lemma_result(&TwistRule::new(family, lambda), WallId::Bottom, 11, DEFAULT_TOL)?;
            print!("{family:17} {lambda:+.1}  mu1 {:+.6e}  mu2 {:+.6e}", r.mu1, r.mu2);
            match r.mu2_from_f {
                Some(m) => println!("  -F(1)/pi {m:+.6e}"),
                None => println!(),
            }
        }
    }
    Ok(())
}
