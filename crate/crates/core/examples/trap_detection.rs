//! Trap membership for hand-built states.

use twistgas::regimes::{detect, in_u0, in_wpm, sstar_state, TrapSpec};
use twistgas::state::{PhaseState, Vec2};
use twistgas::TwistRule;

fn main() -> twistgas::Result<()> {
    let s = (0.5f64).sqrt();
    let near_vertical = PhaseState::new(
        vec![Vec2::new(0.1, 0.3), Vec2::new(0.6, 0.7)],
        vec![
            Vec2::new(0.01, (1.0 - 1e-4f64).sqrt()),
            Vec2::new(-0.01, -(1.0 - 1e-4f64).sqrt()),
        ],
        0.1,
    )?;
    let u0 = in_u0(&near_vertical, 0.2)?;
    println!("near-vertical disks in U0: {} {:?}", u0.trapped, u0.diagnostics);

    let streaming = PhaseState::new(
        vec![Vec2::new(0.1, 0.3), Vec2::new(0.6, 0.7)],
        vec![Vec2::new(s * 1.4, 0.1), Vec2::new(s * 1.3, -0.1)],
        0.1,
    )?;
    println!("both streaming right in W+: {}", in_wpm(&streaming, None).trapped);

    let sym = sstar_state(0.2, 0.3, Vec2::new(0.6, 0.8), 0.1)?;
    let spec = TrapSpec::SStar {
        tol_momentum: 1e-9,
        tol_center: 1e-9,
    };
    println!(
        "symmetric state in S*: {}",
        detect(&sym, &spec, &TwistRule::reversible_shear(0.25))?.trapped
    );
    Ok(())
}
