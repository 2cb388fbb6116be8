//! Trap detectors for the stable regimes.
//!
//! * `U₀`: under a contracting wall law (`TanCenter`, `λ > 0`) every disk's
//!   horizontal excursion is bounded, and if the bounded x-ranges never meet
//!   no disk–disk collision can happen again.
//! * `W±`: under an expanding law (`λ < 0`) the horizontal momentum is close
//!   enough to its extreme `±N` that every disk moves the same way.
//! * `S*`: two disks with opposite velocities mirrored about mid-channel.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::state::{circular_x_distance, horizontal_momentum, PhaseState, Vec2};
use crate::twist::{RuleFamily, TwistRule};

pub const DEFAULT_SSTAR_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrapSpec {
    U0,
    Wpm {
        #[serde(default)]
        eps0: Option<f64>,
    },
    #[serde(rename = "sstar")]
    SStar {
        tol_momentum: f64,
        tol_center: f64,
    },
}

impl TrapSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TrapSpec::U0 | TrapSpec::Wpm { eps0: None } => Ok(()),
            TrapSpec::Wpm { eps0: Some(e) } => {
                if e > 0.0 && e.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("eps0", "must be positive"))
                }
            }
            TrapSpec::SStar {
                tol_momentum,
                tol_center,
            } => {
                if tol_momentum > 0.0 && tol_center > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("sstar tolerances", "must be positive"))
                }
            }
        }
    }

    /// The natural trap for a rule: `U₀` for contracting, `W±` for expanding
    /// and `S*` for the reversible family.
    pub fn default_for(rule: &TwistRule) -> Option<TrapSpec> {
        match rule.family {
            RuleFamily::TanCenter if rule.lambda > 0.0 => Some(TrapSpec::U0),
            RuleFamily::TanCenter if rule.lambda < 0.0 => Some(TrapSpec::Wpm { eps0: None }),
            RuleFamily::ReversibleShear => Some(TrapSpec::SStar {
                tol_momentum: DEFAULT_SSTAR_TOL,
                tol_center: DEFAULT_SSTAR_TOL,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapKind {
    U0,
    Wplus,
    Wminus,
    #[serde(rename = "sstar")]
    SStar,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    pub trapped: bool,
    pub which: Option<TrapKind>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl DetectionResult {
    fn new(which: Option<TrapKind>, diagnostics: impl IntoIterator<Item = (&'static str, f64)>) -> Self {
        Self {
            trapped: which.is_some(),
            which,
            diagnostics: diagnostics.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

/// Upper bound on the total future horizontal travel of disk `i` if it only
/// bounces between the walls under `TanCenter(λ)`.
///
/// Each wall hit multiplies `|u|/|v|` by `e^{-λ}`, so the travel is the
/// remainder of the current leg plus a geometric series over full legs of
/// height `1 − d`. Returns `+∞` for a horizontally moving disk.
pub fn displacement_bound_s(state: &PhaseState, i: usize, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", "displacement bound needs lambda > 0"));
    }
    let p = state.velocities[i];
    let (u, v) = (p.x.abs(), p.y.abs());
    if u == 0.0 {
        return Ok(0.0);
    }
    if v == 0.0 {
        return Ok(f64::INFINITY);
    }
    let d = state.diameter;
    let y = state.positions[i].y;
    let remaining = if p.y > 0.0 {
        (1.0 - 0.5 * d - y).max(0.0)
    } else {
        (y - 0.5 * d).max(0.0)
    };
    let q = (-lambda).exp();
    let tail = (1.0 - d) * q / -(-lambda).exp_m1();
    Ok(u / v * (remaining + tail))
}

/// `U₀` membership: pairwise circular x-distances exceed `d + s_i + s_j`.
pub fn in_u0(state: &PhaseState, lambda: f64) -> Result<DetectionResult> {
    let n = state.n_disks();
    let s = (0..n)
        .map(|i| displacement_bound_s(state, i, lambda))
        .collect::<Result<Vec<_>>>()?;
    let mut margin = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            let gap = circular_x_distance(state.positions[i].x, state.positions[j].x);
            margin = margin.min(gap - state.diameter - s[i] - s[j]);
        }
    }
    let trapped = margin > 0.0;
    let max_s = s.iter().cloned().fold(0.0, f64::max);
    Ok(DetectionResult::new(
        trapped.then_some(TrapKind::U0),
        [("margin", margin), ("max_s", max_s)],
    ))
}

/// `W±` membership from the horizontal momentum. Without `eps0` the
/// threshold is `√(N(N−1))`, the largest `|Σu|` compatible with some
/// `u_i ≤ 0` on the energy sphere.
pub fn in_wpm(state: &PhaseState, eps0: Option<f64>) -> DetectionResult {
    let n = state.n_disks() as f64;
    let threshold = match eps0 {
        Some(e) => n - e,
        None => (n * (n - 1.0)).sqrt(),
    };
    let m = horizontal_momentum(state);
    let which = if m > threshold {
        Some(TrapKind::Wplus)
    } else if -m > threshold {
        Some(TrapKind::Wminus)
    } else {
        None
    };
    DetectionResult::new(
        which,
        [
            ("margin", m.abs() - threshold),
            ("momentum", m),
            ("threshold", threshold),
        ],
    )
}

fn require_two(state: &PhaseState) -> Result<()> {
    if state.n_disks() == 2 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "S* diagnostics need exactly 2 disks, got {}",
            state.n_disks()
        )))
    }
}

/// `(‖p₁ + p₂‖, contact_y − ½)` at a disk–disk collision.
pub fn sstar_deviation(state: &PhaseState, contact: &Vec2) -> Result<(f64, f64)> {
    require_two(state)?;
    let dv = state.velocities[0] + state.velocities[1];
    Ok((dv.norm(), contact.y - 0.5))
}

/// `S*` membership: opposite velocities and `y₁ + y₂ = 1`, both within
/// tolerance.
pub fn in_sstar(state: &PhaseState, tol_momentum: f64, tol_center: f64) -> Result<DetectionResult> {
    require_two(state)?;
    let dv = (state.velocities[0] + state.velocities[1]).norm();
    let dy = (state.positions[0].y + state.positions[1].y - 1.0).abs();
    let trapped = dv < tol_momentum && dy < tol_center;
    Ok(DetectionResult::new(
        trapped.then_some(TrapKind::SStar),
        [("dv_norm", dv), ("center_offset", dy)],
    ))
}

/// Evaluates `spec` on `state`. `U₀` needs a `TanCenter` rule with `λ > 0`.
pub fn detect(state: &PhaseState, spec: &TrapSpec, rule: &TwistRule) -> Result<DetectionResult> {
    match *spec {
        TrapSpec::U0 => {
            if rule.family != RuleFamily::TanCenter || !(rule.lambda > 0.0) {
                return Err(Error::Unsupported(format!("U0 trap under {rule}")));
            }
            in_u0(state, rule.lambda)
        }
        TrapSpec::Wpm { eps0 } => Ok(in_wpm(state, eps0)),
        TrapSpec::SStar {
            tol_momentum,
            tol_center,
        } => in_sstar(state, tol_momentum, tol_center),
    }
}

/// Builds an exact `S*` state: disk 0 at `(x, y)` with momentum `p`, disk 1
/// at `(x + ½, 1 − y)` with momentum `−p`, rescaled to `KE = 1`.
pub fn sstar_state(x: f64, y: f64, p: Vec2, diameter: f64) -> Result<PhaseState> {
    let norm = p.norm();
    if !(norm > 0.0) {
        return Err(Error::Degenerate("zero momentum for S* state".into()));
    }
    let p = p.scale(1.0 / norm);
    PhaseState::new(
        vec![Vec2::new(x, y), Vec2::new(x + 0.5, 1.0 - y)],
        vec![p, -p],
        diameter,
    )
}
