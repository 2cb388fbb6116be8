//! Least-squares fits of `y = ln μ_τ` against `x = −ln|λ|`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::escape::EscapeStats;
use crate::error::{invalid, Error, Result};

/// Relative singular-value cutoff below which the design matrix counts as
/// rank deficient.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = a x + c`
    Linear,
    /// `y = a x + b ln x + c`
    LoglogRefined,
}

impl FitModel {
    fn min_points(self) -> usize {
        match self {
            FitModel::Linear => 3,
            FitModel::LoglogRefined => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub a: f64,
    pub b: Option<f64>,
    pub c: f64,
    pub rms_residual: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.a * x + self.b.map_or(0.0, |b| b * x.ln()) + self.c
    }
}

/// Fits `model` to the points `(x_i, y_i)`.
pub fn fit_points(xs: &[f64], ys: &[f64], model: FitModel) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(invalid("points", "x and y lengths differ"));
    }
    let n = xs.len();
    if n < model.min_points() {
        return Err(invalid(
            "points",
            format!("{model:?} needs at least {} points, got {n}", model.min_points()),
        ));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(invalid("points", "non-finite coordinate"));
    }
    if model == FitModel::LoglogRefined && xs.iter().any(|&x| x <= 0.0) {
        return Err(invalid("points", "refined model needs x > 0"));
    }
    let cols = match model {
        FitModel::Linear => 2,
        FitModel::LoglogRefined => 3,
    };
    let design = DMatrix::from_fn(n, cols, |i, j| match (model, j) {
        (_, 0) => xs[i],
        (FitModel::LoglogRefined, 1) => xs[i].ln(),
        _ => 1.0,
    });
    let rhs = DVector::from_column_slice(ys);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_TOL * smax {
        return Err(Error::SingularFit(format!(
            "condition {:.3e} for {n} points",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }
    let coef = svd
        .solve(&rhs, RANK_TOL * smax)
        .map_err(|e| Error::SingularFit(e.to_string()))?;
    let residual = &design * &coef - rhs;
    let rms = (residual.norm_squared() / n as f64).sqrt();
    let (a, b, c) = match model {
        FitModel::Linear => (coef[0], None, coef[1]),
        FitModel::LoglogRefined => (coef[0], Some(coef[1]), coef[2]),
    };
    Ok(FitResult {
        model,
        a,
        b,
        c,
        rms_residual: rms,
        n_points: n,
    })
}

/// Fits `ln μ_τ` against `−ln|λ|` over the scan. All λ must share a sign and
/// have at least one uncensored trajectory.
pub fn fit_scaling(stats: &[EscapeStats], model: FitModel) -> Result<FitResult> {
    let positive = stats.iter().filter(|s| s.lambda > 0.0).count();
    if positive != 0 && positive != stats.len() {
        return Err(invalid("stats", "lambda values of mixed sign"));
    }
    let mut xs = Vec::with_capacity(stats.len());
    let mut ys = Vec::with_capacity(stats.len());
    for s in stats {
        if !(s.mean_tau > 0.0) {
            return Err(invalid(
                "stats",
                format!("no positive mean escape time at lambda {}", s.lambda),
            ));
        }
        xs.push(-s.lambda.abs().ln());
        ys.push(s.mean_tau.ln());
    }
    fit_points(&xs, &ys, model)
}
