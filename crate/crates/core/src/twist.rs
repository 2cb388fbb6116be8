//! Wall-reflection laws `ψ = f_k(φ)`.
//!
//! Angles are measured from the positive x direction: an incoming velocity
//! `(u, v)` has incidence angle `φ = atan2(|v|, u)` and the outgoing velocity
//! has reflection angle `ψ = atan2(|v'|, u')`, both in `[0, π]`, at either
//! wall. With this convention the two families below read
//!
//! * `TanCenter(λ)`: `tan f_k(φ) = e^λ tan φ` on both walls, i.e.
//!   `u'/|v'| = e^{-λ} u/|v|`;
//! * `ReversibleShear(λ)`: `cot f_k(φ) = (−1)^k λ + cot φ`, i.e.
//!   `u'/|v'| = u/|v| + (−1)^k λ`.
//!
//! Both satisfy `f_1(φ) = π − f_0(π − φ)`. The velocity-space form is the
//! one the engine uses; the angle form serves the interval-map analysis and
//! the quadrature checks.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::real::Real;
use crate::state::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleFamily {
    Specular,
    #[serde(alias = "tan", alias = "tan-center")]
    TanCenter,
    #[serde(alias = "reversible", alias = "reversible-shear")]
    ReversibleShear,
}

impl fmt::Display for RuleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleFamily::Specular => "specular",
            RuleFamily::TanCenter => "tan_center",
            RuleFamily::ReversibleShear => "reversible_shear",
        })
    }
}

/// Rigid wall index: `Bottom` is `y = 0` (k = 0), `Top` is `y = 1` (k = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WallId {
    Bottom,
    Top,
}

impl WallId {
    pub fn new(k: u8) -> Result<Self> {
        match k {
            0 => Ok(WallId::Bottom),
            1 => Ok(WallId::Top),
            _ => Err(invalid("wall", format!("wall index must be 0 or 1, got {k}"))),
        }
    }

    pub fn k(self) -> u8 {
        match self {
            WallId::Bottom => 0,
            WallId::Top => 1,
        }
    }

    /// `(−1)^k`.
    pub fn sign(self) -> f64 {
        match self {
            WallId::Bottom => 1.0,
            WallId::Top => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            WallId::Bottom => WallId::Top,
            WallId::Top => WallId::Bottom,
        }
    }

    pub const BOTH: [WallId; 2] = [WallId::Bottom, WallId::Top];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistRule {
    pub family: RuleFamily,
    #[serde(default)]
    pub lambda: f64,
}

impl TwistRule {
    pub const fn specular() -> Self {
        Self {
            family: RuleFamily::Specular,
            lambda: 0.0,
        }
    }

    pub const fn tan_center(lambda: f64) -> Self {
        Self {
            family: RuleFamily::TanCenter,
            lambda,
        }
    }

    pub const fn reversible_shear(lambda: f64) -> Self {
        Self {
            family: RuleFamily::ReversibleShear,
            lambda,
        }
    }

    pub fn new(family: RuleFamily, lambda: f64) -> Self {
        Self { family, lambda }
    }

    /// Twist strength; `Specular` always reports 0.
    pub fn effective_lambda(&self) -> f64 {
        match self.family {
            RuleFamily::Specular => 0.0,
            _ => self.lambda,
        }
    }

    /// True when the law reduces to specular reflection.
    pub fn is_identity(&self) -> bool {
        self.effective_lambda() == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(invalid("lambda", format!("must be finite, got {}", self.lambda)));
        }
        Ok(())
    }
}

impl fmt::Display for TwistRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(λ={})", self.family, self.effective_lambda())
    }
}

fn check_angle(phi: f64) -> Result<()> {
    if (0.0..=PI).contains(&phi) {
        Ok(())
    } else {
        Err(Error::AngleDomain(phi))
    }
}

/// `ψ = f_k(φ)`.
pub fn apply_f(rule: &TwistRule, k: WallId, phi: f64) -> Result<f64> {
    check_angle(phi)?;
    if rule.is_identity() || phi == 0.0 || phi == PI {
        return Ok(phi);
    }
    let lambda = rule.effective_lambda();
    let (s, c) = phi.sin_cos();
    let psi = match rule.family {
        RuleFamily::Specular => phi,
        RuleFamily::TanCenter => (lambda.exp() * s).atan2(c),
        RuleFamily::ReversibleShear => s.atan2(c + k.sign() * lambda * s),
    };
    Ok(psi.clamp(0.0, PI))
}

/// `f_k'(φ)`; the closed forms are smooth on the closed interval so the
/// endpoints return the one-sided limits.
pub fn f_derivative(rule: &TwistRule, k: WallId, phi: f64) -> Result<f64> {
    check_angle(phi)?;
    if rule.is_identity() {
        return Ok(1.0);
    }
    let lambda = rule.effective_lambda();
    let (s, c) = phi.sin_cos();
    Ok(match rule.family {
        RuleFamily::Specular => 1.0,
        RuleFamily::TanCenter => {
            let q = lambda.exp();
            q / (c * c + q * q * s * s)
        }
        RuleFamily::ReversibleShear => {
            let a = c + k.sign() * lambda * s;
            1.0 / (s * s + a * a)
        }
    })
}

/// `sin f_k(φ) / sin φ`, continuous on `[0, π]` (equal to `f_k'` at the ends).
pub fn sin_ratio(rule: &TwistRule, k: WallId, phi: f64) -> Result<f64> {
    check_angle(phi)?;
    if rule.is_identity() {
        return Ok(1.0);
    }
    let lambda = rule.effective_lambda();
    let (s, c) = phi.sin_cos();
    Ok(match rule.family {
        RuleFamily::Specular => 1.0,
        RuleFamily::TanCenter => {
            let q = lambda.exp();
            q / c.hypot(q * s)
        }
        RuleFamily::ReversibleShear => 1.0 / (c + k.sign() * lambda * s).hypot(s),
    })
}

/// Outgoing velocity for a disk hitting wall `k` with velocity `p_in`.
///
/// Speed is preserved and the result points away from the wall. For a law
/// that reduces to the identity the result is the exact mirror `(u, −v)`.
pub fn apply_twist_velocity<T: Real>(rule: &TwistRule, k: WallId, p_in: &Vec2<T>) -> Result<Vec2<T>> {
    let v = p_in.y.clone();
    if v == T::zero() {
        return Err(Error::Degenerate(
            "tangential velocity (v = 0) cannot hit a wall".into(),
        ));
    }
    let into_wall = match k {
        WallId::Bottom => v < T::zero(),
        WallId::Top => v > T::zero(),
    };
    if !into_wall {
        return Err(Error::Contract(format!(
            "velocity {:?} does not point into wall {}",
            p_in.to_f64(),
            k.k()
        )));
    }
    let out_sign = match k {
        WallId::Bottom => T::one(),
        WallId::Top => -T::one(),
    };
    if rule.is_identity() {
        return Ok(Vec2::new(p_in.x.clone(), -v));
    }

    let lambda = T::from_f64(rule.effective_lambda());
    let u = p_in.x.clone();
    let abs_v = v.abs();
    // Unnormalised outgoing direction (u', |v'|).
    let (a, b) = match rule.family {
        RuleFamily::Specular => unreachable!("identity handled above"),
        RuleFamily::TanCenter => ((-lambda).exp() * u, abs_v),
        RuleFamily::ReversibleShear => {
            let shift = if k == WallId::Bottom { lambda } else { -lambda };
            (u + shift * abs_v.clone(), abs_v)
        }
    };
    let speed = p_in.norm();
    let scale = speed / a.clone().hypot(b.clone());
    Ok(Vec2::new(a * scale.clone(), out_sign * b * scale))
}

/// The time-reversed law: `TanCenter(λ) ↦ TanCenter(−λ)`; the reversible
/// family and specular reflection are their own reversals.
pub fn time_reversal_rule(rule: &TwistRule) -> TwistRule {
    match rule.family {
        RuleFamily::TanCenter => TwistRule::tan_center(-rule.lambda),
        RuleFamily::ReversibleShear | RuleFamily::Specular => *rule,
    }
}

/// Max over a uniform grid of `|f_1(φ) − (π − f_0(π − φ))|`.
pub fn check_opposition(rule: &TwistRule, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(invalid("grid_size", "must be at least 2"));
    }
    let mut worst = 0.0_f64;
    for i in 0..grid_size {
        let phi = PI * i as f64 / (grid_size - 1) as f64;
        let f1 = apply_f(rule, WallId::Top, phi)?;
        let mirrored = PI - apply_f(rule, WallId::Bottom, PI - phi)?;
        worst = worst.max((f1 - mirrored).abs());
    }
    Ok(worst)
}

/// Incidence angle of a velocity heading into a wall: `atan2(|v|, u)`.
pub fn incidence_angle(p: &Vec2) -> f64 {
    p.y.abs().atan2(p.x)
}
