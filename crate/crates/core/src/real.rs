//! Scalar abstraction for the kinematic kernel.
//!
//! Everything in the product path runs on `f64`. The engine, the phase-state
//! container and the velocity-space wall laws are generic over [`Real`] so the
//! same code can be replayed in extended precision when a check (such as a
//! long time-reversal roundtrip through chaotic disk–disk collisions) needs
//! more digits than `f64` carries.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicUsize, Ordering};

pub trait Real:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn floor(self) -> Self;
    fn is_finite(&self) -> bool;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn hypot(self, other: Self) -> Self {
        (self.clone() * self + other.clone() * other).sqrt()
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Wraps into `[0, 1)`.
    fn wrap_unit(self) -> Self {
        let w = self.clone() - self.floor();
        if w >= Self::one() {
            Self::zero()
        } else {
            w
        }
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn floor(self) -> Self {
        f64::floor(self)
    }
    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn hypot(self, other: Self) -> Self {
        f64::hypot(self, other)
    }
    #[inline]
    fn wrap_unit(self) -> Self {
        let w = self.rem_euclid(1.0);
        if w >= 1.0 {
            0.0
        } else {
            w
        }
    }
}

/// Binary floating point with a process-wide working precision, for replaying
/// trajectories whose round-off growth exceeds what `f64` can absorb.
#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct HighPrecision(dashu_float::FBig<dashu_float::round::mode::HalfEven, 2>);

static HIGH_PRECISION_BITS: AtomicUsize = AtomicUsize::new(1024);

impl HighPrecision {
    /// Sets the mantissa width (in bits) of values created afterwards.
    pub fn set_precision(bits: usize) {
        HIGH_PRECISION_BITS.store(bits.max(64), Ordering::Relaxed);
    }

    pub fn precision() -> usize {
        HIGH_PRECISION_BITS.load(Ordering::Relaxed)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for HighPrecision {
            type Output = Self;
            #[inline]
            fn $method(self, rhs: Self) -> Self {
                Self($trait::$method(self.0, rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for HighPrecision {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Real for HighPrecision {
    fn from_f64(x: f64) -> Self {
        let v = dashu_float::FBig::try_from(x).expect("finite f64");
        Self(v.with_precision(Self::precision()).value())
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn sqrt(self) -> Self {
        use dashu_float::ops::SquareRoot;
        Self(self.0.sqrt())
    }
    fn exp(self) -> Self {
        Self(self.0.exp())
    }
    fn floor(self) -> Self {
        Self(self.0.floor())
    }
    fn is_finite(&self) -> bool {
        !self.0.repr().is_infinite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_unit_f64() {
        assert_eq!(0.25f64.wrap_unit(), 0.25);
        assert_eq!((-0.25f64).wrap_unit(), 0.75);
        assert_eq!((-1e-20f64).wrap_unit(), 0.0);
        assert_eq!(3.0f64.wrap_unit(), 0.0);
    }

    #[test]
    fn high_precision_arithmetic() {
        let two = HighPrecision::from_f64(2.0);
        let r = two.clone().sqrt();
        let residual = (r.clone() * r - two).abs().to_f64();
        assert!(residual < 1e-250, "{residual}");
        let x = HighPrecision::from_f64(-1.25);
        assert_eq!(x.clone().floor().to_f64(), -2.0);
        assert_eq!(x.clone().wrap_unit().to_f64(), 0.75);
        assert_eq!(x.abs().to_f64(), 1.25);
        assert!((HighPrecision::one().exp().to_f64() - std::f64::consts::E).abs() < 1e-15);
        assert!(HighPrecision::from_f64(3.0).is_finite());
    }
}
