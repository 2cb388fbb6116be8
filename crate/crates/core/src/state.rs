//! Phase-space data model, observables and initial-state sampling.
//!
//! The channel is the unit square with rigid walls at `y = 0` and `y = 1` and
//! periodic identification at `x = 0` and `x = 1`. Disk centers are confined
//! to `y ∈ [d/2, 1 − d/2]` and stored with `x` wrapped into `[0, 1)`.

use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::real::Real;
use crate::twist::TwistRule;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

impl<T: Real> Vec2<T> {
    pub fn dot(&self, other: &Self) -> T {
        self.x.clone() * other.x.clone() + self.y.clone() * other.y.clone()
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.x.clone().hypot(self.y.clone())
    }

    pub fn scale(&self, k: T) -> Self {
        Self::new(self.x.clone() * k.clone(), self.y.clone() * k)
    }

    pub fn to_f64(&self) -> Vec2<f64> {
        Vec2::new(self.x.to_f64(), self.y.to_f64())
    }

    pub fn from_f64(v: Vec2<f64>) -> Self {
        Self::new(T::from_f64(v.x), T::from_f64(v.y))
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        self.scale(k)
    }
}

/// Numerical tolerances shared by the engine, the detectors and the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSet {
    /// Allowed deviation of total kinetic energy from `N/2`.
    pub tol_energy: f64,
    /// Allowed interpenetration of two disks.
    pub tol_overlap: f64,
    /// Event times closer than this are treated as simultaneous.
    pub tol_event_tie: f64,
    /// Contact/grazing tolerance for root finding.
    pub tol_root: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            tol_energy: 1e-9,
            tol_overlap: 1e-9,
            tol_event_tie: 1e-12,
            tol_root: 1e-10,
        }
    }
}

impl ToleranceSet {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("tol_energy", self.tol_energy),
            ("tol_overlap", self.tol_overlap),
            ("tol_event_tie", self.tol_event_tie),
            ("tol_root", self.tol_root),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be strictly positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Positions, velocities and bookkeeping for `N` identical disks.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState<T = f64> {
    pub positions: Vec<Vec2<T>>,
    pub velocities: Vec<Vec2<T>>,
    pub diameter: T,
    pub time: T,
    pub collisions: u64,
}

impl<T: Real> PhaseState<T> {
    /// Builds a state, wrapping every `x` into `[0, 1)`.
    pub fn new(positions: Vec<Vec2<T>>, velocities: Vec<Vec2<T>>, diameter: T) -> Result<Self> {
        if positions.len() != velocities.len() {
            return Err(invalid(
                "velocities",
                format!("{} positions but {} velocities", positions.len(), velocities.len()),
            ));
        }
        if positions.is_empty() {
            return Err(invalid("positions", "at least one disk is required"));
        }
        let d = diameter.to_f64();
        if !(d > 0.0 && d < 1.0) {
            return Err(invalid("diameter", format!("must lie in (0, 1), got {d}")));
        }
        let positions = positions.into_iter().map(|p| Vec2::new(p.x.wrap_unit(), p.y)).collect();
        Ok(Self {
            positions,
            velocities,
            diameter,
            time: T::zero(),
            collisions: 0,
        })
    }

    pub fn n_disks(&self) -> usize {
        self.positions.len()
    }

    pub fn to_f64(&self) -> PhaseState<f64> {
        PhaseState {
            positions: self.positions.iter().map(Vec2::to_f64).collect(),
            velocities: self.velocities.iter().map(Vec2::to_f64).collect(),
            diameter: self.diameter.to_f64(),
            time: self.time.to_f64(),
            collisions: self.collisions,
        }
    }

    pub fn from_f64(s: &PhaseState<f64>) -> Self {
        Self {
            positions: s.positions.iter().copied().map(Vec2::from_f64).collect(),
            velocities: s.velocities.iter().copied().map(Vec2::from_f64).collect(),
            diameter: T::from_f64(s.diameter),
            time: T::from_f64(s.time),
            collisions: s.collisions,
        }
    }
}

impl PhaseState<f64> {
    /// Checks every structural invariant of the state: wall clearance, wrapped
    /// `x`, no pair overlap beyond `tol_overlap`, and `KE = N/2` within
    /// `tol_energy`.
    pub fn validate(&self, tol: &ToleranceSet) -> Result<()> {
        let d = self.diameter;
        let slack = tol.tol_overlap;
        for (i, q) in self.positions.iter().enumerate() {
            if !(q.x.is_finite() && q.y.is_finite()) {
                return Err(Error::Contract(format!("disk {i} has non-finite position")));
            }
            if !(0.0..1.0).contains(&q.x) {
                return Err(Error::Contract(format!("disk {i}: x = {} not wrapped", q.x)));
            }
            if q.y < d / 2.0 - slack || q.y > 1.0 - d / 2.0 + slack {
                return Err(Error::Contract(format!("disk {i}: y = {} outside the channel", q.y)));
            }
        }
        for i in 0..self.n_disks() {
            for j in i + 1..self.n_disks() {
                let dist = pair_distance(&self.positions[i], &self.positions[j]);
                if dist < d - tol.tol_overlap {
                    return Err(Error::Contract(format!(
                        "disks {i} and {j} overlap: distance {dist} < d = {d}"
                    )));
                }
            }
        }
        let target = self.n_disks() as f64 / 2.0;
        let ke = kinetic_energy(self);
        if (ke - target).abs() > tol.tol_energy {
            return Err(Error::Contract(format!(
                "kinetic energy {ke} differs from N/2 = {target}"
            )));
        }
        Ok(())
    }
}

/// Largest coordinate difference between two states of the same size, with
/// `x` compared on the circle.
pub fn max_state_difference<T: Real>(a: &PhaseState<T>, b: &PhaseState<T>) -> Result<f64> {
    if a.n_disks() != b.n_disks() {
        return Err(invalid("states", "disk counts differ"));
    }
    let mut worst = 0.0_f64;
    for i in 0..a.n_disks() {
        let (qa, qb) = (a.positions[i].to_f64(), b.positions[i].to_f64());
        let (pa, pb) = (a.velocities[i].to_f64(), b.velocities[i].to_f64());
        worst = worst
            .max(circular_x_distance(qa.x, qb.x))
            .max((qa.y - qb.y).abs())
            .max((pa.x - pb.x).abs())
            .max((pa.y - pb.y).abs());
    }
    Ok(worst)
}

/// Minimum center distance over the periodic x-images `{−1, 0, +1}`.
pub fn pair_distance(a: &Vec2, b: &Vec2) -> f64 {
    let dx = circular_x_distance(a.x, b.x);
    dx.hypot(a.y - b.y)
}

/// Simulation parameters for one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    pub n_disks: usize,
    pub diameter: f64,
    pub rule: TwistRule,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: ToleranceSet,
}

fn default_max_events() -> u64 {
    10_000_000
}

impl SimParams {
    pub fn new(n_disks: usize, diameter: f64, rule: TwistRule) -> Self {
        Self {
            n_disks,
            diameter,
            rule,
            max_events: default_max_events(),
            seed: 0,
            tolerances: ToleranceSet::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_disks == 0 {
            return Err(invalid("n_disks", "must be at least 1"));
        }
        if !(self.diameter > 0.0 && self.diameter * (self.n_disks as f64) < 1.0) {
            return Err(invalid(
                "diameter",
                format!("need 0 < d < 1/N, got d = {} with N = {}", self.diameter, self.n_disks),
            ));
        }
        if self.max_events == 0 {
            return Err(invalid("max_events", "must be positive"));
        }
        self.rule.validate()?;
        self.tolerances.validate()
    }
}

pub fn kinetic_energy<T: Real>(state: &PhaseState<T>) -> T {
    let sum = state.velocities.iter().fold(T::zero(), |acc, p| acc + p.norm_sq());
    sum * T::from_f64(0.5)
}

/// `M_u = u_1 + ... + u_N`.
pub fn horizontal_momentum<T: Real>(state: &PhaseState<T>) -> T {
    state.velocities.iter().fold(T::zero(), |acc, p| acc + p.x.clone())
}

/// Distance between two points of the unit circle `[0, 1)`.
pub fn circular_x_distance(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs().rem_euclid(1.0);
    diff.min(1.0 - diff)
}

const MAX_SAMPLING_ATTEMPTS: usize = 1_000_000;

/// Draws an initial state: positions uniform over the admissible region by
/// whole-configuration rejection, velocities uniform on the sphere
/// `Σ|p_i|² = N`.
pub fn sample_initial_state<R: Rng + ?Sized>(params: &SimParams, rng: &mut R) -> Result<PhaseState> {
    params.validate()?;
    let n = params.n_disks;
    let d = params.diameter;
    let height = 1.0 - d;

    let mut positions = Vec::with_capacity(n);
    let mut attempts = 0;
    'outer: loop {
        if attempts >= MAX_SAMPLING_ATTEMPTS {
            return Err(Error::SamplingFailed { attempts });
        }
        attempts += 1;
        positions.clear();
        for _ in 0..n {
            let q = Vec2::new(rng.random::<f64>(), d / 2.0 + height * rng.random::<f64>());
            if positions.iter().any(|p| pair_distance(p, &q) < d) {
                continue 'outer;
            }
            positions.push(q);
        }
        break;
    }

    let mut raw: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
    let norm = raw.iter().map(|z| z * z).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate("zero velocity draw".into()));
    }
    let scale = (n as f64).sqrt() / norm;
    raw.iter_mut().for_each(|z| *z *= scale);
    let velocities = raw.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect();

    PhaseState::new(positions, velocities, d)
}
