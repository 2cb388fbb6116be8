//! Forward, reverse, forward, reverse: the reversible law returns to its
//! start exactly in exact arithmetic. Doubles lose the trajectory to chaos
//! within a few dozen collisions; 2048-bit floats do not.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twistgas::engine::{advance_to_next_event, reversal_roundtrip};
use twistgas::state::{max_state_difference, sample_initial_state};
use twistgas::twist::time_reversal_rule;
use twistgas::{HighPrecision, PhaseState, SimParams, TwistRule};

fn main() -> twistgas::Result<()> {
    let rule = TwistRule::reversible_shear(0.25);
    let params = SimParams::new(2, 0.1, rule);
    let tol = params.tolerances;
    let sampled = sample_initial_state(&params, &mut ChaCha8Rng::seed_from_u64(5))?;
    let mut start = sampled.clone();
    advance_to_next_event(&mut start, &tol);
    let back = time_reversal_rule(&rule);
    for n in [10, 30, 100] {
        let end = reversal_roundtrip(&start, &rule, &back, n, &tol)?;
        println!(
            "f64      {n:4} events: error {:.2e}",
            max_state_difference(&start, &end)?
        );
    }
    HighPrecision::set_precision(2048);
    let mut hp = PhaseState::<HighPrecision>::from_f64(&sampled);
    advance_to_next_event(&mut hp, &tol);
    for n in [100, 1000] {
        let end = reversal_roundtrip(&hp, &rule, &back, n, &tol)?;
        println!("2048 bit {n:4} events: error {:.2e}", max_state_difference(&hp, &end)?);
    }
    Ok(())
}
