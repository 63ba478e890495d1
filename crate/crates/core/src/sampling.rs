//! Configuration sampling over the integer precision lattice.
//!
//! [`lhs_configs`] draws space-filling samples by Latin Hypercube: per
//! dimension the integer range `[lo, hi]` is split into `n_samples`
//! near-equal contiguous runs, the run order is permuted independently per
//! dimension, and one integer is drawn uniformly inside each run.
//! [`uniform_configs`] draws i.i.d. uniform configurations, used to augment
//! training batches with unlabeled samples.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flexnum::{PrecisionSpec, MAX_MANTISSA_BITS, MIN_MANTISSA_BITS};

/// Per-variable mantissa bit-widths; one sample's independent variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionConfig(Vec<u32>);

impl PrecisionConfig {
    /// Validates every entry against the global `[2, 52]` bounds.
    pub fn new(precisions: Vec<u32>) -> Result<Self> {
        for &p in &precisions {
            if !(MIN_MANTISSA_BITS..=MAX_MANTISSA_BITS).contains(&p) {
                return Err(Error::InvalidPrecision(p));
            }
        }
        Ok(Self(precisions))
    }

    /// All variables at reference precision.
    pub fn all_max(n_var: usize) -> Self {
        Self(vec![MAX_MANTISSA_BITS; n_var])
    }

    pub fn precisions(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spec(&self, var: usize) -> PrecisionSpec {
        PrecisionSpec::new(self.0[var]).expect("entries validated at construction")
    }

    /// Feature view: precisions as reals.
    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&p| f64::from(p)).collect()
    }
}

fn check_range(n_var: usize, n_samples: usize, lo: u32, hi: u32) -> Result<()> {
    if n_var == 0 {
        return Err(Error::InvalidArgument("n_var must be >= 1".into()));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be >= 1".into()));
    }
    if lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "empty precision range [{lo}, {hi}]"
        )));
    }
    if lo < MIN_MANTISSA_BITS || hi > MAX_MANTISSA_BITS {
        return Err(Error::InvalidArgument(format!(
            "precision range [{lo}, {hi}] outside [{MIN_MANTISSA_BITS}, {MAX_MANTISSA_BITS}]"
        )));
    }
    Ok(())
}

/// Integer bounds (inclusive) of stratum `s` out of `n` over `[lo, hi]`.
///
/// Runs are the fair division `[lo + ceil(s*W/n), lo + ceil((s+1)*W/n) - 1]`
/// with `W = hi - lo + 1`, so two strata over `[2, 52]` are `[2, 27]` and
/// `[28, 52]`. For `n <= W` every run is non-empty; for `n > W` some runs
/// collapse (see [`lhs_saturated`]) and the sampler clamps them to a single
/// repeated integer.
pub fn stratum_bounds(lo: u32, hi: u32, n: usize, s: usize) -> (u32, u32) {
    let w = u64::from(hi - lo + 1);
    let n = n as u64;
    let a = lo + ((s as u64 * w).div_ceil(n)) as u32;
    let b = lo + (((s as u64 + 1) * w).div_ceil(n)) as u32;
    let b = b.saturating_sub(1).max(a);
    (a.min(hi), b.min(hi))
}

/// True when `n_samples` exceeds the number of distinct integers in range,
/// so stratification cannot be collision-free.
pub fn lhs_saturated(n_samples: usize, lo: u32, hi: u32) -> bool {
    n_samples as u64 > u64::from(hi - lo + 1)
}

/// Latin Hypercube Sampling over the integer precision lattice.
///
/// Per dimension, the `n_samples` values occupy the `n_samples` strata of
/// `[lo, hi]` exactly once, with stratum order permuted independently per
/// dimension. Deterministic for a fixed seed.
pub fn lhs_configs(
    n_var: usize,
    n_samples: usize,
    lo: u32,
    hi: u32,
    seed: u64,
) -> Result<Vec<PrecisionConfig>> {
    check_range(n_var, n_samples, lo, hi)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(n_var);
    for _ in 0..n_var {
        let mut strata: Vec<usize> = (0..n_samples).collect();
        strata.shuffle(&mut rng);
        let column = strata
            .into_iter()
            .map(|s| {
                let (a, b) = stratum_bounds(lo, hi, n_samples, s);
                rng.random_range(a..=b)
            })
            .collect();
        columns.push(column);
    }
    Ok((0..n_samples)
        .map(|i| PrecisionConfig(columns.iter().map(|col| col[i]).collect()))
        .collect())
}

/// I.i.d. uniform integer configurations, one coordinate at a time in
/// sample-major order. Deterministic for a fixed seed.
pub fn uniform_configs(
    n_var: usize,
    n_samples: usize,
    lo: u32,
    hi: u32,
    seed: u64,
) -> Result<Vec<PrecisionConfig>> {
    check_range(n_var, n_samples, lo, hi)?;
    let mut rng = StdRng::seed_from_u64(seed);
    Ok((0..n_samples)
        .map(|_| PrecisionConfig((0..n_var).map(|_| rng.random_range(lo..=hi)).collect()))
        .collect())
}

/// Single uniform draw from an existing generator; the batch-level
/// augmentation path in training uses this to stay on one seeded stream.
pub fn uniform_config_from(rng: &mut StdRng, n_var: usize, lo: u32, hi: u32) -> PrecisionConfig {
    PrecisionConfig((0..n_var).map(|_| rng.random_range(lo..=hi)).collect())
}
