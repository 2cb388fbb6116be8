//! One-particle interval map `g = f_1 ∘ f_0` on `[0, π]`.
//!
//! A lone disk alternates walls, so its incidence angle at every second wall
//! hit evolves by `g`. When the two walls oppose each other,
//! `g = h ∘ h` with the orientation-reversing `h(φ) = π − f_0(φ)`; the unique
//! fixed point of `h` is the center of `g`, and the open intervals between
//! consecutive fixed points of `g` are exchanged in pairs by `h`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::twist::{apply_f, f_derivative, TwistRule, WallId};

pub const DEFAULT_GRID: usize = 4096;
pub const DEFAULT_ROOT_TOL: f64 = 1e-13;
/// `|g'(φ*) − 1|` below this is reported as neutral.
pub const NEUTRAL_TOL: f64 = 1e-8;
const DIFF_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPoint {
    pub phi: f64,
    pub stability: Stability,
    pub is_center: bool,
    /// Central-difference `g'(φ*)`.
    pub derivative: f64,
    /// `f_1'(f_0(φ*)) · f_0'(φ*)`.
    pub derivative_chain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPoints {
    pub points: Vec<FixedPoint>,
    /// Every grid point is fixed (`g` is the identity within tolerance).
    pub all_fixed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Toward,
    Away,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub direction: Direction,
}

impl Interval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, phi: f64) -> bool {
        phi > self.lo && phi < self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualPair {
    pub left: Interval,
    pub right: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalMapReport {
    pub rule: TwistRule,
    pub fixed_points: Vec<FixedPoint>,
    pub all_fixed: bool,
    pub center: f64,
    pub h_decomposition_residual: f64,
    pub intervals: Vec<Interval>,
    pub dual_pairs: Vec<DualPair>,
    /// Odd number of interior fixed points (including the center).
    pub interior_count_odd: bool,
    /// Every two dual pairs are nested.
    pub pairs_nested: bool,
}

/// `g(φ) = f_1(f_0(φ))`.
pub fn eval_g(rule: &TwistRule, phi: f64) -> Result<f64> {
    let psi = apply_f(rule, WallId::Bottom, phi)?;
    apply_f(rule, WallId::Top, psi)
}

/// `h(φ) = π − f_0(φ)`.
pub fn eval_h(rule: &TwistRule, phi: f64) -> Result<f64> {
    Ok(PI - apply_f(rule, WallId::Bottom, phi)?)
}

fn g_prime_numeric(rule: &TwistRule, phi: f64) -> Result<f64> {
    let h = DIFF_STEP;
    if phi - h < 0.0 {
        let (g0, g1, g2) = (eval_g(rule, phi)?, eval_g(rule, phi + h)?, eval_g(rule, phi + 2.0 * h)?);
        Ok((-3.0 * g0 + 4.0 * g1 - g2) / (2.0 * h))
    } else if phi + h > PI {
        let (g0, g1, g2) = (eval_g(rule, phi)?, eval_g(rule, phi - h)?, eval_g(rule, phi - 2.0 * h)?);
        Ok((3.0 * g0 - 4.0 * g1 + g2) / (2.0 * h))
    } else {
        Ok((eval_g(rule, phi + h)? - eval_g(rule, phi - h)?) / (2.0 * h))
    }
}

fn g_prime_chain(rule: &TwistRule, phi: f64) -> Result<f64> {
    let psi = apply_f(rule, WallId::Bottom, phi)?;
    Ok(f_derivative(rule, WallId::Top, psi)? * f_derivative(rule, WallId::Bottom, phi)?)
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn classify(rule: &TwistRule, phi: f64) -> Result<FixedPoint> {
    let derivative = g_prime_numeric(rule, phi)?;
    let derivative_chain = g_prime_chain(rule, phi)?;
    let stability = if (derivative - 1.0).abs() < NEUTRAL_TOL {
        Stability::Neutral
    } else if derivative.abs() < 1.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    Ok(FixedPoint {
        phi,
        stability,
        is_center: false,
        derivative,
        derivative_chain,
    })
}

/// Fixed points of `g` by sign-change bracketing on a uniform grid followed by
/// bisection. The endpoints `0` and `π` are always reported. The fixed point
/// of `h` is flagged as the center.
pub fn find_fixed_points(rule: &TwistRule, grid_size: usize, tol: f64) -> Result<FixedPoints> {
    if grid_size < 3 {
        return Err(invalid("grid_size", "must be at least 3"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let grid: Vec<f64> = (0..grid_size).map(|i| PI * i as f64 / (grid_size - 1) as f64).collect();
    let excess: Vec<f64> = grid
        .iter()
        .map(|&phi| eval_g(rule, phi).map(|g| g - phi))
        .collect::<Result<_>>()?;

    let zero_tol = 4.0 * f64::EPSILON;
    let all_fixed = excess.iter().all(|e| e.abs() <= zero_tol.max(tol));

    let mut roots = vec![0.0];
    if !all_fixed {
        let sign = |e: f64| {
            if e.abs() <= zero_tol {
                0
            } else if e > 0.0 {
                1
            } else {
                -1
            }
        };
        let interior = 1..grid_size - 1;
        for i in interior {
            let s = sign(excess[i]);
            if s == 0 {
                roots.push(grid[i]);
                continue;
            }
            if i + 1 < grid_size - 1 {
                let s_next = sign(excess[i + 1]);
                if s_next != 0 && s_next != s {
                    let root = bisect(|phi| eval_g(rule, phi).map(|g| g - phi), grid[i], grid[i + 1], tol)?;
                    roots.push(root);
                }
            }
        }
    }
    roots.push(PI);

    let (center, _) = decompose_h(rule, 3)?;
    let mut points = roots
        .into_iter()
        .map(|phi| classify(rule, phi))
        .collect::<Result<Vec<_>>>()?;
    if !all_fixed {
        if let Some(c) = points
            .iter_mut()
            .filter(|p| p.phi > 0.0 && p.phi < PI)
            .min_by(|a, b| (a.phi - center).abs().total_cmp(&(b.phi - center).abs()))
        {
            if (c.phi - center).abs() < 1e3 * tol.max(PI / grid_size as f64) {
                c.is_center = true;
            }
        }
    }
    Ok(FixedPoints { points, all_fixed })
}

/// The center (unique fixed point of `h`, by bisection) and the maximal grid
/// deviation `|g(φ) − h(h(φ))|`.
pub fn decompose_h(rule: &TwistRule, grid_size: usize) -> Result<(f64, f64)> {
    if grid_size < 2 {
        return Err(invalid("grid_size", "must be at least 2"));
    }
    let center = bisect(|phi| eval_h(rule, phi).map(|h| h - phi), 0.0, PI, 1e-15)?;
    let mut residual = 0.0_f64;
    for i in 0..grid_size {
        let phi = PI * i as f64 / (grid_size - 1) as f64;
        let hh = eval_h(rule, eval_h(rule, phi)?.clamp(0.0, PI))?;
        residual = residual.max((eval_g(rule, phi)? - hh).abs());
    }
    Ok((center, residual))
}

fn direction_at(rule: &TwistRule, phi: f64, center: f64) -> Result<Direction> {
    let g = eval_g(rule, phi)?;
    Ok(if (g - center).abs() < (phi - center).abs() {
        Direction::Toward
    } else {
        Direction::Away
    })
}

/// The open intervals between consecutive fixed points, labelled by the
/// direction in which `g` moves their points relative to the center.
pub fn movement_intervals(rule: &TwistRule, fixed: &FixedPoints, center: f64) -> Result<Vec<Interval>> {
    if fixed.all_fixed {
        return Ok(Vec::new());
    }
    fixed
        .points
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0].phi, w[1].phi);
            let direction = direction_at(rule, 0.5 * (lo + hi), center)?;
            Ok(Interval { lo, hi, direction })
        })
        .collect()
}

/// Pairs each interval with the one containing `h` of its midpoint.
pub fn dual_intervals(rule: &TwistRule, intervals: &[Interval]) -> Result<Vec<DualPair>> {
    let mut pairs = Vec::new();
    let mut seen = vec![false; intervals.len()];
    for (m, interval) in intervals.iter().enumerate() {
        if seen[m] {
            continue;
        }
        let image = eval_h(rule, interval.midpoint())?;
        let Some(dual) = intervals.iter().position(|iv| iv.contains(image)) else {
            continue;
        };
        seen[m] = true;
        seen[dual] = true;
        let (a, b) = (intervals[m], intervals[dual]);
        let (left, right) = if a.lo <= b.lo { (a, b) } else { (b, a) };
        pairs.push(DualPair { left, right });
    }
    Ok(pairs)
}

fn pairs_are_nested(pairs: &[DualPair]) -> bool {
    let spans: Vec<(f64, f64)> = pairs.iter().map(|p| (p.left.lo, p.right.hi)).collect();
    spans.iter().enumerate().all(|(i, a)| {
        spans
            .iter()
            .skip(i + 1)
            .all(|b| (a.0 <= b.0 && b.1 <= a.1) || (b.0 <= a.0 && a.1 <= b.1))
    })
}

/// Iterates `g` `n` times from `phi0`; the result has `n + 1` entries.
pub fn one_particle_orbit(rule: &TwistRule, phi0: f64, n: usize) -> Result<Vec<f64>> {
    let mut orbit = Vec::with_capacity(n + 1);
    let mut phi = phi0;
    orbit.push(phi);
    for _ in 0..n {
        phi = eval_g(rule, phi)?;
        orbit.push(phi);
    }
    Ok(orbit)
}

/// Full interval-map report for a rule.
pub fn analyze(rule: &TwistRule, grid_size: usize, tol: f64) -> Result<IntervalMapReport> {
    let fixed = find_fixed_points(rule, grid_size, tol)?;
    let (center, residual) = decompose_h(rule, grid_size)?;
    let intervals = movement_intervals(rule, &fixed, center)?;
    let dual_pairs = dual_intervals(rule, &intervals)?;
    let interior = fixed.points.iter().filter(|p| p.phi > 0.0 && p.phi < PI).count();
    Ok(IntervalMapReport {
        rule: *rule,
        all_fixed: fixed.all_fixed,
        center,
        h_decomposition_residual: residual,
        interior_count_odd: interior % 2 == 1,
        pairs_nested: pairs_are_nested(&dual_pairs),
        fixed_points: fixed.points,
        intervals,
        dual_pairs,
    })
}
