//! Escape times into the traps and their statistics over λ grids.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{default_workers, run_partitioned, trajectory_rng, Partial};
use crate::engine::{run_until, StopReason};
use crate::error::{invalid, Error, Result};
use crate::regimes::{detect, TrapSpec};
use crate::state::{sample_initial_state, SimParams};
use crate::twist::{RuleFamily, TwistRule};

/// Number of `log₂` histogram bins; bin `b` holds `τ` with
/// `⌊log₂(τ + 1)⌋ = b`.
pub const HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EscapeOutcome {
    /// Collision count at the first state inside the trap.
    Escaped(u64),
    /// The event budget ran out first.
    Censored,
    /// No further collisions are possible and the trap was never entered.
    Frozen,
}

/// Checks that `trap` is the trap a rule can actually fall into.
pub fn check_trap_consistency(rule: &TwistRule, trap: &TrapSpec) -> Result<()> {
    let ok = match (trap, rule.family) {
        (TrapSpec::U0, RuleFamily::TanCenter) => rule.lambda > 0.0,
        (TrapSpec::Wpm { .. }, RuleFamily::TanCenter) => rule.lambda < 0.0,
        (TrapSpec::SStar { .. }, RuleFamily::ReversibleShear) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(invalid("trap", format!("{trap:?} does not match wall law {rule}")))
    }
}

/// Runs one trajectory from a random initial state until it enters `trap`.
pub fn escape_time<R: Rng + ?Sized>(params: &SimParams, trap: &TrapSpec, rng: &mut R) -> Result<EscapeOutcome> {
    params.validate()?;
    trap.validate()?;
    check_trap_consistency(&params.rule, trap)?;
    let mut state = sample_initial_state(params, rng)?;
    if detect(&state, trap, &params.rule)?.trapped {
        return Ok(EscapeOutcome::Escaped(0));
    }
    let mut failure = None;
    let summary = run_until(
        &mut state,
        &params.rule,
        &params.tolerances,
        params.max_events,
        |s, _| match detect(s, trap, &params.rule) {
            Ok(r) => r.trapped,
            Err(e) => {
                failure = Some(e);
                true
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(match summary.reason {
        StopReason::Trapped => EscapeOutcome::Escaped(summary.n_events),
        StopReason::Budget => EscapeOutcome::Censored,
        StopReason::Frozen => EscapeOutcome::Frozen,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeScanConfig {
    pub lambda_grid: Vec<f64>,
    pub samples_per_lambda: u64,
    pub trap: Option<TrapSpec>,
    /// Template; `rule.lambda` is replaced by each grid value and `seed` is
    /// the master seed.
    pub sim: SimParams,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl EscapeScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(invalid("lambda_grid", "must not be empty"));
        }
        if self.lambda_grid.iter().any(|l| *l == 0.0 || !l.is_finite()) {
            return Err(invalid("lambda_grid", "values must be finite and nonzero"));
        }
        if self.samples_per_lambda == 0 {
            return Err(invalid("samples_per_lambda", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        self.sim.validate()?;
        for &lambda in &self.lambda_grid {
            let rule = TwistRule::new(self.sim.rule.family, lambda);
            check_trap_consistency(&rule, &self.trap_for(&rule)?)?;
        }
        Ok(())
    }

    fn trap_for(&self, rule: &TwistRule) -> Result<TrapSpec> {
        self.trap
            .or_else(|| TrapSpec::default_for(rule))
            .ok_or_else(|| invalid("trap", format!("no default trap for {rule}")))
    }
}

/// Exact per-λ accumulator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EscapePartial {
    /// `λ` as raw bits so equality is exact.
    pub lambda_bits: u64,
    pub n_samples: u64,
    pub censored: u64,
    pub frozen: u64,
    pub anomalies: u64,
    pub sum_tau: u128,
    pub sum_tau_sq: u128,
    pub histogram: Vec<u64>,
    /// Sorted uncensored escape times.
    pub taus: Vec<u64>,
}

impl EscapePartial {
    pub fn empty(lambda: f64) -> Self {
        Self {
            lambda_bits: lambda.to_bits(),
            n_samples: 0,
            censored: 0,
            frozen: 0,
            anomalies: 0,
            sum_tau: 0,
            sum_tau_sq: 0,
            histogram: vec![0; HISTOGRAM_BINS],
            taus: Vec::new(),
        }
    }

    pub fn lambda(&self) -> f64 {
        f64::from_bits(self.lambda_bits)
    }

    pub fn record(mut self, outcome: Result<EscapeOutcome>) -> Self {
        self.n_samples += 1;
        match outcome {
            Ok(EscapeOutcome::Escaped(tau)) => {
                self.sum_tau += tau as u128;
                self.sum_tau_sq += (tau as u128) * (tau as u128);
                let bin = (64 - (tau + 1).leading_zeros() - 1) as usize;
                self.histogram[bin.min(HISTOGRAM_BINS - 1)] += 1;
                let at = self.taus.partition_point(|&t| t < tau);
                self.taus.insert(at, tau);
            }
            Ok(EscapeOutcome::Censored) => self.censored += 1,
            Ok(EscapeOutcome::Frozen) => self.frozen += 1,
            Err(_) => self.anomalies += 1,
        }
        self
    }

    pub fn uncensored(&self) -> u64 {
        self.taus.len() as u64
    }
}

impl Partial for EscapePartial {
    fn merge(mut self, other: Self) -> Result<Self> {
        if self.lambda_bits != other.lambda_bits {
            return Err(Error::MergeMismatch(format!(
                "lambda {} vs {}",
                self.lambda(),
                other.lambda()
            )));
        }
        self.n_samples += other.n_samples;
        self.censored += other.censored;
        self.frozen += other.frozen;
        self.anomalies += other.anomalies;
        self.sum_tau += other.sum_tau;
        self.sum_tau_sq += other.sum_tau_sq;
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        let mut merged = Vec::with_capacity(self.taus.len() + other.taus.len());
        let (mut i, mut j) = (0, 0);
        while i < self.taus.len() && j < other.taus.len() {
            if self.taus[i] <= other.taus[j] {
                merged.push(self.taus[i]);
                i += 1;
            } else {
                merged.push(other.taus[j]);
                j += 1;
            }
        }
        merged.extend_from_slice(&self.taus[i..]);
        merged.extend_from_slice(&other.taus[j..]);
        self.taus = merged;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeStats {
    pub lambda: f64,
    pub n_samples: u64,
    pub n_uncensored: u64,
    /// Mean over uncensored trajectories, in collisions.
    pub mean_tau: f64,
    pub stderr: f64,
    pub censored_count: u64,
    pub frozen_count: u64,
    pub anomalies: u64,
    pub histogram: Vec<u64>,
    /// Kolmogorov–Smirnov distance between the uncensored `τ` and an
    /// exponential law with the same mean.
    pub ks_exponential: f64,
}

impl EscapeStats {
    pub fn censored_fraction(&self) -> f64 {
        self.censored_count as f64 / self.n_samples.max(1) as f64
    }
}

impl From<&EscapePartial> for EscapeStats {
    fn from(p: &EscapePartial) -> Self {
        let n = p.uncensored();
        let (mean, stderr) = if n == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let nf = n as f64;
            let mean = p.sum_tau as f64 / nf;
            // Integer-exact numerator of the sample variance.
            let num = (n as u128 * p.sum_tau_sq).saturating_sub(p.sum_tau * p.sum_tau);
            let var = if n > 1 { num as f64 / (nf * (nf - 1.0)) } else { 0.0 };
            (mean, (var / nf).sqrt())
        };
        EscapeStats {
            lambda: p.lambda(),
            n_samples: p.n_samples,
            n_uncensored: n,
            mean_tau: mean,
            stderr,
            censored_count: p.censored,
            frozen_count: p.frozen,
            anomalies: p.anomalies,
            histogram: p.histogram.clone(),
            ks_exponential: ks_exponential(&p.taus, mean),
        }
    }
}

/// KS distance of sorted samples from `Exp(mean)`.
pub fn ks_exponential(sorted: &[u64], mean: f64) -> f64 {
    if sorted.is_empty() || !(mean > 0.0) {
        return f64::NAN;
    }
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let cdf = 1.0 - (-(t as f64) / mean).exp();
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (cdf - lo).abs().max((hi - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// Partial statistics for grid point `point` over samples `range`.
pub fn escape_partial(cfg: &EscapeScanConfig, point: usize, range: std::ops::Range<u64>) -> Result<EscapePartial> {
    let lambda = *cfg
        .lambda_grid
        .get(point)
        .ok_or_else(|| invalid("point", "outside the lambda grid"))?;
    let rule = TwistRule::new(cfg.sim.rule.family, lambda);
    let trap = cfg.trap_for(&rule)?;
    let params = SimParams {
        rule,
        ..cfg.sim.clone()
    };
    let mut acc = EscapePartial::empty(lambda);
    for sample in range {
        let mut rng = trajectory_rng(cfg.sim.seed, point, sample);
        acc = acc.record(escape_time(&params, &trap, &mut rng));
    }
    Ok(acc)
}

/// Per-λ escape statistics. Trajectory failures are counted as anomalies
/// rather than aborting the scan.
pub fn escape_scan(cfg: &EscapeScanConfig) -> Result<Vec<EscapeStats>> {
    cfg.validate()?;
    cfg.lambda_grid
        .iter()
        .enumerate()
        .map(|(point, &lambda)| {
            let empty = EscapePartial::empty(lambda);
            let merged = run_partitioned(cfg.samples_per_lambda, cfg.workers, &empty, |sample| {
                escape_partial(cfg, point, sample..sample + 1)
                    .unwrap_or_else(|_| EscapePartial::empty(lambda).record(Err(Error::Degenerate("setup".into()))))
            })?;
            Ok(EscapeStats::from(&merged))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::merge_partials;

    fn cfg(grid: Vec<f64>, samples: u64, workers: usize) -> EscapeScanConfig {
        let mut sim = SimParams::new(2, 0.1, TwistRule::tan_center(0.1));
        sim.seed = 11;
        sim.max_events = 1_000_000;
        EscapeScanConfig {
            lambda_grid: grid,
            samples_per_lambda: samples,
            trap: None,
            sim,
            workers,
        }
    }

    #[test]
    fn escape_time_is_deterministic() {
        let params = SimParams::new(2, 0.1, TwistRule::tan_center(0.1));
        let a = escape_time(&params, &TrapSpec::U0, &mut trajectory_rng(5, 0, 0)).unwrap();
        let b = escape_time(&params, &TrapSpec::U0, &mut trajectory_rng(5, 0, 0)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(a, EscapeOutcome::Escaped(_)));
    }

    #[test]
    fn inconsistent_trap_rejected() {
        let params = SimParams::new(2, 0.1, TwistRule::tan_center(-0.1));
        let r = escape_time(&params, &TrapSpec::U0, &mut trajectory_rng(5, 0, 0));
        assert!(matches!(r, Err(Error::InvalidParam { .. })));
    }

    #[test]
    fn tiny_budget_censors() {
        let mut params = SimParams::new(2, 0.1, TwistRule::tan_center(0.01));
        params.max_events = 1;
        let mut censored = 0;
        for s in 0..20 {
            if escape_time(&params, &TrapSpec::U0, &mut trajectory_rng(1, 0, s)).unwrap() == EscapeOutcome::Censored {
                censored += 1;
            }
        }
        assert!(censored > 0);
    }

    #[test]
    fn scan_single_sample_and_worker_independence() {
        let one = escape_scan(&cfg(vec![0.2], 1, 1)).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].n_samples, 1);

        let a = escape_scan(&cfg(vec![0.2, 0.1], 24, 1)).unwrap();
        let b = escape_scan(&cfg(vec![0.2, 0.1], 24, 5)).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert!(a[0].mean_tau < a[1].mean_tau);
    }

    #[test]
    fn partial_merge_laws() {
        let c = cfg(vec![0.2], 12, 1);
        let p1 = escape_partial(&c, 0, 0..4).unwrap();
        let p2 = escape_partial(&c, 0, 4..9).unwrap();
        let p3 = escape_partial(&c, 0, 9..12).unwrap();
        let whole = escape_partial(&c, 0, 0..12).unwrap();
        let left = p1.clone().merge(p2.clone()).unwrap().merge(p3.clone()).unwrap();
        let right = p1.clone().merge(p2.clone().merge(p3.clone()).unwrap()).unwrap();
        assert_eq!(left, whole);
        assert_eq!(right, whole);
        assert_eq!(p2.clone().merge(p1.clone()).unwrap(), p1.clone().merge(p2).unwrap());
        assert_eq!(p1.clone().merge(EscapePartial::empty(0.2)).unwrap(), p1);
        assert!(p1.merge(EscapePartial::empty(0.3)).is_err());
        assert_eq!(merge_partials(vec![whole.clone()]).unwrap(), Some(whole));
    }

    #[test]
    fn stats_formulae() {
        let mut p = EscapePartial::empty(0.1);
        for t in [0u64, 1, 2, 3, 7] {
            p = p.record(Ok(EscapeOutcome::Escaped(t)));
        }
        p = p.record(Ok(EscapeOutcome::Censored));
        let s = EscapeStats::from(&p);
        assert_eq!(s.mean_tau, 13.0 / 5.0);
        let var = [0.0f64, 1.0, 2.0, 3.0, 7.0]
            .iter()
            .map(|t| (t - 2.6) * (t - 2.6))
            .sum::<f64>()
            / 4.0;
        assert!((s.stderr - (var / 5.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.censored_count, 1);
        assert_eq!(s.histogram[..4], [1, 2, 1, 1]);
        assert!((s.censored_fraction() - 1.0 / 6.0).abs() < 1e-15);
        assert!(ks_exponential(&[], 1.0).is_nan());
    }
}
