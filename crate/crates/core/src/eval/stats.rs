//! Paired bootstrap significance test and Bonferroni adjustment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;
pub const DEFAULT_BOOTSTRAP_SAMPLES: usize = 10_000;

/// Two-sided paired bootstrap p-value for `mean(a) - mean(b)`.
///
/// Each of the `samples` replicates draws `n` query indices with replacement
/// (`gen_range(0..n)` from a ChaCha8 stream seeded with `seed`, replicate by
/// replicate). `p = min(1, 2 * min(P(delta* <= 0), P(delta* >= 0)))`.
pub fn paired_bootstrap(a: &[f64], b: &[f64], samples: usize, seed: u64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::InvalidParam("paired bootstrap needs at least 2 queries".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidParam("bootstrap sample count must be positive".into()));
    }
    let n = a.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut at_most_zero, mut at_least_zero) = (0usize, 0usize);
    for _ in 0..samples {
        let (mut sa, mut sb) = (0.0f64, 0.0f64);
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            sa += a[i];
            sb += b[i];
        }
        let delta = sa / n as f64 - sb / n as f64;
        if delta <= 0.0 {
            at_most_zero += 1;
        }
        if delta >= 0.0 {
            at_least_zero += 1;
        }
    }
    let tail = at_most_zero.min(at_least_zero) as f64 / samples as f64;
    Ok((2.0 * tail).min(1.0))
}

/// Multiplies each p-value by `m`, clipped at 1.
pub fn bonferroni(p_values: &[f64], m: usize) -> Result<Vec<f64>> {
    if p_values.is_empty() || m < p_values.len() {
        return Err(Error::InvalidParam(format!(
            "bonferroni needs 1 <= |p| <= m, got |p| = {} and m = {m}",
            p_values.len()
        )));
    }
    Ok(p_values.iter().map(|p| (p * m as f64).min(1.0)).collect())
}

pub fn is_significant(adjusted_p: f64) -> bool {
    adjusted_p < SIGNIFICANCE_LEVEL
}
