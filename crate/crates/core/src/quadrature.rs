//! Quadratures for the one-particle contraction integrals.
//!
//! For a wall law `f` with derivative `f'` on `[0, π]`:
//!
//! * `μ₁ = ∫₀^π ∫₀^{2π} log[1 − (1 − f'(φ)²) sin²(β − φ)] dβ dφ`, whose inner
//!   integral has the closed form `4π log((1 + f')/2)`;
//! * `μ₂ = (1/π) ∫₀^π log(sin f(φ) / sin φ) dφ`;
//! * `F(t) = ∫₀^π log[sin(s + t w) / sin(s − t w)] w'(s) ds` with
//!   `s = (f + φ)/2`, `w = (f − φ)/2`, evaluated in the `φ` variable where
//!   `w'(s) ds = (f' − 1)/2 dφ`. For the reversible family `μ₂ = −F(1)/π`.
//!
//! Panels are integrated by the double-exponential rule of the `quadrature`
//! crate and bisected until each meets its share of the tolerance.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::twist::{apply_f, f_derivative, sin_ratio, RuleFamily, TwistRule, WallId};

pub const DEFAULT_TOL: f64 = 1e-9;
const MAX_DEPTH: u32 = 24;
/// Below this distance from `0` or `π` the `F` integrand uses its limit.
const ENDPOINT_CUTOFF: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    /// Strictly positive error estimate.
    pub error: f64,
}

fn floor_error(value: f64, error: f64) -> f64 {
    error.max(4.0 * f64::EPSILON * (value.abs() + 1.0))
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(invalid("interval", "need finite a < b"));
    }
    let (value, error) = panel(f, a, b, tol, 0)?;
    Ok(Integral {
        value,
        error: floor_error(value, error),
    })
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<(f64, f64)> {
    let out = quadrature::double_exponential::integrate(f, a, b, tol);
    if out.error_estimate <= tol && out.integral.is_finite() {
        return Ok((out.integral, out.error_estimate));
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature {
            achieved: out.error_estimate,
            target: tol,
        });
    }
    let mid = 0.5 * (a + b);
    let (left, e_left) = panel(f, a, mid, 0.5 * tol, depth + 1)?;
    let (right, e_right) = panel(f, mid, b, 0.5 * tol, depth + 1)?;
    Ok((left + right, e_left + e_right))
}

/// `4π log((1 + a)/2)`.
pub fn beta_inner_closed_form(a: f64) -> f64 {
    4.0 * PI * (0.5 * (1.0 + a)).ln()
}

/// `∫₀^{2π} log[1 − (1 − a²) sin²β] dβ` by quadrature.
pub fn beta_inner_integral(a: f64, tol: f64) -> Result<Integral> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid("a", "must be positive"));
    }
    let m = 1.0 - a * a;
    let g = |beta: f64| {
        let s = beta.sin();
        (1.0 - m * s * s).ln()
    };
    // Split at the extrema of sin² so each panel is monotone.
    let mut total = Integral { value: 0.0, error: 0.0 };
    for q in 0..4 {
        let lo = 0.5 * PI * q as f64;
        let part = integrate(&g, lo, lo + 0.5 * PI, 0.25 * tol)?;
        total.value += part.value;
        total.error += part.error;
    }
    Ok(total)
}

fn derivative(rule: &TwistRule, k: WallId, phi: f64) -> f64 {
    f_derivative(rule, k, phi.clamp(0.0, PI)).expect("phi clamped into the domain")
}

/// `μ₁` through the closed-form inner integral.
pub fn mu1(rule: &TwistRule, k: WallId, tol: f64) -> Result<Integral> {
    rule.validate()?;
    let g = |phi: f64| beta_inner_closed_form(derivative(rule, k, phi));
    integrate(&g, 0.0, PI, tol)
}

/// `μ₁` as a genuine double integral, with the inner `β` integral done by
/// quadrature at every outer node.
pub fn mu1_double(rule: &TwistRule, k: WallId, tol: f64) -> Result<Integral> {
    rule.validate()?;
    let inner_tol = tol / (4.0 * PI);
    let inner_error = std::cell::Cell::new(0.0_f64);
    let failure = std::cell::Cell::new(None);
    let g = |phi: f64| match beta_inner_integral(derivative(rule, k, phi), inner_tol) {
        Ok(v) => {
            inner_error.set(inner_error.get().max(v.error));
            v.value
        }
        Err(e) => {
            failure.set(Some(e.to_string()));
            f64::NAN
        }
    };
    let outer = integrate(&g, 0.0, PI, 0.5 * tol);
    if let Some(msg) = failure.take() {
        return Err(Error::Degenerate(format!("inner beta integral failed: {msg}")));
    }
    let outer = outer?;
    Ok(Integral {
        value: outer.value,
        error: outer.error + PI * inner_error.get(),
    })
}

/// `μ₂ = (1/π) ∫₀^π log(sin f(φ)/sin φ) dφ`, using the closed-form ratio so
/// the endpoints need no special care.
pub fn mu2(rule: &TwistRule, k: WallId, tol: f64) -> Result<Integral> {
    rule.validate()?;
    let g = |phi: f64| {
        sin_ratio(rule, k, phi.clamp(0.0, PI))
            .expect("phi clamped into the domain")
            .ln()
    };
    let r = integrate(&g, 0.0, PI, PI * tol)?;
    Ok(Integral {
        value: r.value / PI,
        error: r.error / PI,
    })
}

/// `(1/π) ∫₀^π f'(φ) dφ`, equal to 1 for any orientation-preserving
/// bijection of `[0, π]`.
pub fn derivative_mean(rule: &TwistRule, k: WallId, tol: f64) -> Result<f64> {
    let g = |phi: f64| derivative(rule, k, phi);
    Ok(integrate(&g, 0.0, PI, tol)?.value / PI)
}

/// Sampled `(s, w, w')` along `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WPath {
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    pub w_prime: Vec<f64>,
}

pub fn w_path(rule: &TwistRule, k: WallId, n: usize) -> Result<WPath> {
    if n < 2 {
        return Err(invalid("n", "need at least 2 samples"));
    }
    let mut path = WPath {
        s: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
        w_prime: Vec::with_capacity(n),
    };
    for i in 0..n {
        let phi = PI * i as f64 / (n - 1) as f64;
        let f = apply_f(rule, k, phi)?;
        let fp = f_derivative(rule, k, phi)?;
        path.s.push(0.5 * (f + phi));
        path.w.push(0.5 * (f - phi));
        path.w_prime.push((fp - 1.0) / (fp + 1.0));
    }
    Ok(path)
}

fn require_reversible(rule: &TwistRule) -> Result<()> {
    match rule.family {
        RuleFamily::ReversibleShear | RuleFamily::Specular => Ok(()),
        RuleFamily::TanCenter => Err(Error::Unsupported("F(t) needs a time-reversible wall law".into())),
    }
}

fn log_sin_ratio_limit(a: f64, t: f64) -> f64 {
    (((1.0 + a) + t * (a - 1.0)) / ((1.0 + a) - t * (a - 1.0))).ln()
}

fn f_integrand(rule: &TwistRule, k: WallId, t: f64, phi: f64) -> f64 {
    let phi = phi.clamp(0.0, PI);
    let fp = derivative(rule, k, phi);
    let log_ratio = if phi < ENDPOINT_CUTOFF {
        log_sin_ratio_limit(derivative(rule, k, 0.0), t)
    } else if PI - phi < ENDPOINT_CUTOFF {
        log_sin_ratio_limit(derivative(rule, k, PI), t)
    } else {
        let f = apply_f(rule, k, phi).expect("phi clamped into the domain");
        let (s, w) = (0.5 * (f + phi), 0.5 * (f - phi));
        ((s + t * w).sin() / (s - t * w).sin()).ln()
    };
    0.5 * log_ratio * (fp - 1.0)
}

/// `F(t)` at each point of `t_grid` (all in `[0, 1]`).
pub fn f_curve(rule: &TwistRule, k: WallId, t_grid: &[f64], tol: f64) -> Result<Vec<Integral>> {
    rule.validate()?;
    require_reversible(rule)?;
    t_grid
        .iter()
        .map(|&t| {
            if !(0.0..=1.0).contains(&t) {
                return Err(invalid("t", "must lie in [0, 1]"));
            }
            integrate(&|phi| f_integrand(rule, k, t, phi), 0.0, PI, tol)
        })
        .collect()
}

/// `∫₀^π log[sin(s + w)/sin(s − w)] ds`, which vanishes when `w` is even
/// about `π/2`.
pub fn antisymmetry_residual(rule: &TwistRule, k: WallId, tol: f64) -> Result<Integral> {
    rule.validate()?;
    let g = |phi: f64| {
        let phi = phi.clamp(0.0, PI);
        let ratio = sin_ratio(rule, k, phi).expect("phi clamped into the domain");
        0.5 * ratio.ln() * (derivative(rule, k, phi) + 1.0)
    };
    integrate(&g, 0.0, PI, tol)
}

/// `μ₁`, `μ₂` and their error estimates for one wall.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaResult {
    pub rule: TwistRule,
    pub wall: u8,
    pub mu1: f64,
    pub mu1_error: f64,
    pub mu1_double: f64,
    pub mu1_double_error: f64,
    pub mu2: f64,
    pub mu2_error: f64,
    pub estimated_error: f64,
    /// `(t, F(t), error)` for time-reversible laws.
    pub f_curve: Option<Vec<(f64, f64, f64)>>,
    pub mu2_from_f: Option<f64>,
}

pub fn lemma_result(rule: &TwistRule, k: WallId, t_points: usize, tol: f64) -> Result<LemmaResult> {
    let m1 = mu1(rule, k, tol)?;
    let m1d = mu1_double(rule, k, tol)?;
    let m2 = mu2(rule, k, tol)?;
    let (curve, mu2_from_f) = if rule.family == RuleFamily::TanCenter || t_points < 2 {
        (None, None)
    } else {
        let grid: Vec<f64> = (0..t_points).map(|i| i as f64 / (t_points - 1) as f64).collect();
        let values = f_curve(rule, k, &grid, tol)?;
        let last = values.last().map(|v| -v.value / PI);
        let curve = grid.iter().zip(&values).map(|(&t, v)| (t, v.value, v.error)).collect();
        (Some(curve), last)
    };
    Ok(LemmaResult {
        rule: *rule,
        wall: k.k(),
        mu1: m1.value,
        mu1_error: m1.error,
        mu1_double: m1d.value,
        mu1_double_error: m1d.error,
        mu2: m2.value,
        mu2_error: m2.error,
        estimated_error: m1.error.max(m2.error),
        f_curve: curve,
        mu2_from_f,
    })
}
