//! One disk under a contracting wall law: horizontal legs shrink by `e^{-λ}`
//! per bounce and the disk settles on a vertical line.

use twistgas::engine::{step, StepResult};
use twistgas::state::{PhaseState, ToleranceSet, Vec2};
use twistgas::TwistRule;

fn main() -> twistgas::Result<()> {
    let lambda = 0.25;
    let rule = TwistRule::tan_center(lambda);
    let mut state = PhaseState::new(vec![Vec2::new(0.0, 0.05)], vec![Vec2::new(0.6, 0.8)], 0.1)?;
    let tol = ToleranceSet::default();
    // Starting on the bottom wall, every leg is a full crossing.
    let first = 0.9 * 0.6 / 0.8;
    println!("predicted total displacement {:.9}", first / (1.0 - (-lambda).exp()));
    let mut total = 0.0;
    for n in 0..40 {
        let StepResult::Collision(out) = step(&mut state, &rule, &tol)? else {
            break;
        };
        let dx = out.before.0.x * out.dt;
        total += dx;
        if n % 5 == 0 {
            println!("leg {n:2}  dx = {dx:.6e}  total = {total:.9}");
        }
    }
    Ok(())
}
