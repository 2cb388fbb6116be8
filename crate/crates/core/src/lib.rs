#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod interval_map;
pub mod io;
pub mod quadrature;
pub mod real;
pub mod regimes;
pub mod state;
pub mod twist;

pub use error::{Error, Result};
pub use real::{HighPrecision, Real};
pub use state::{PhaseState, SimParams, ToleranceSet, Vec2};
pub use twist::{RuleFamily, TwistRule, WallId};
