//! Monte Carlo experiments built on the engine and the trap detectors.
//!
//! Every trajectory draws from its own ChaCha8 stream, addressed by the
//! master seed, the parameter index and the sample index, so results do not
//! depend on how trajectories are spread over workers. Per-trajectory
//! statistics are kept in integer (or fixed-point) accumulators whose merge
//! is exactly associative and commutative.

pub mod drift;
pub mod escape;
pub mod fit;
pub mod sstar;
pub mod trajectory;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};

pub use drift::{drift_curve, DriftConfig, DriftCurve, DriftPartial};
pub use escape::{escape_scan, escape_time, EscapeOutcome, EscapePartial, EscapeScanConfig, EscapeStats};
pub use fit::{fit_points, fit_scaling, FitModel, FitResult};
pub use sstar::{sstar_decay, SStarDecay, SStarDecayConfig};
pub use trajectory::{simulate, SimulateReport};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "TWISTGAS_WORKERS";

/// RNG for sample `sample` of parameter point `point` under `master`.
pub fn trajectory_rng(master: u64, point: usize, sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((point as u64) << 40) ^ sample);
    rng
}

/// Worker count from [`WORKERS_ENV`], falling back to the available
/// parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Statistics that can be combined across disjoint sets of trajectories.
pub trait Partial: Sized + Send {
    /// Combines two partials of the same experiment.
    fn merge(self, other: Self) -> Result<Self>;
}

/// Folds partials left to right. With exact accumulators the result does not
/// depend on the order or grouping of the inputs.
pub fn merge_partials<P: Partial>(parts: impl IntoIterator<Item = P>) -> Result<Option<P>> {
    let mut acc: Option<P> = None;
    for p in parts {
        acc = Some(match acc {
            None => p,
            Some(a) => a.merge(p)?,
        });
    }
    Ok(acc)
}

/// Splits `0..n` into `workers` contiguous ranges, maps each index with `f`
/// and merges per worker, then across workers.
pub(crate) fn run_partitioned<P, F>(n: u64, workers: usize, empty: &P, f: F) -> Result<P>
where
    P: Partial + Clone + Sync,
    F: Fn(u64) -> P + Sync + Send,
{
    if workers == 0 {
        return Err(invalid("workers", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let chunk = n.div_ceil(workers as u64).max(1);
    let ranges: Vec<(u64, u64)> = (0..workers as u64)
        .map(|w| (w * chunk, ((w + 1) * chunk).min(n)))
        .filter(|(lo, hi)| lo < hi)
        .collect();
    let per_worker: Vec<Result<P>> = pool.install(|| {
        ranges
            .par_iter()
            .map(|&(lo, hi)| {
                let mut acc = empty.clone();
                for i in lo..hi {
                    acc = acc.merge(f(i))?;
                }
                Ok(acc)
            })
            .collect()
    });
    let mut acc = empty.clone();
    for p in per_worker {
        acc = acc.merge(p?)?;
    }
    Ok(acc)
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub(crate) fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[derive(Clone, Debug, PartialEq)]
    struct Count(u64, Vec<u64>);

    impl Partial for Count {
        fn merge(mut self, other: Self) -> Result<Self> {
            self.0 += other.0;
            self.1.extend(other.1);
            self.1.sort_unstable();
            Ok(self)
        }
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = trajectory_rng(7, 0, 0).random();
        let b: u64 = trajectory_rng(7, 0, 1).random();
        let c: u64 = trajectory_rng(7, 1, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, trajectory_rng(7, 0, 0).random::<u64>());
    }

    #[test]
    fn partitioning_is_worker_independent() {
        let empty = Count(0, vec![]);
        let f = |i: u64| Count(i * i, vec![trajectory_rng(3, 0, i).random::<u64>() % 1000]);
        let one = run_partitioned(37, 1, &empty, f).unwrap();
        for w in [2, 3, 8, 64] {
            assert_eq!(run_partitioned(37, w, &empty, f).unwrap(), one);
        }
        assert!(run_partitioned(3, 0, &empty, f).is_err());
    }

    #[test]
    fn merge_partials_folds() {
        assert_eq!(merge_partials(Vec::<Count>::new()).unwrap(), None);
        let m = merge_partials(vec![Count(1, vec![3]), Count(2, vec![1])]).unwrap();
        assert_eq!(m, Some(Count(3, vec![1, 3])));
    }

    #[test]
    fn slope() {
        assert_eq!(ols_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]), Some(2.0));
        assert_eq!(ols_slope(&[1.0, 1.0], &[1.0, 3.0]), None);
    }
}
