//! Past-only running standardization via Welford's recurrence.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Variance floor added inside the square root. With an empty state
/// (count = 0, mean = 0, variance = 0) the first output is exactly
/// `x / sqrt(EPS)`.
pub const STANDARDIZE_EPS: f64 = 1e-8;

/// Per-dimension running mean and sum of squared deviations.
///
/// `standardize` transforms with the statistics accumulated so far and only
/// then folds the new observation in, so outputs never depend on future
/// examples. Variance is `sum_sq_dev / max(count, 1)`.
#[derive(Debug, Clone)]
pub struct Standardizer<S> {
    count: u64,
    mean: Vec<S>,
    sum_sq_dev: Vec<S>,
}

impl<S: Scalar> Standardizer<S> {
    pub fn new(dim: usize) -> Self {
        Standardizer {
            count: 0,
            mean: vec![S::zero(); dim],
            sum_sq_dev: vec![S::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[S] {
        &self.mean
    }

    /// Componentwise variance under the current state.
    pub fn variance(&self) -> Vec<S> {
        let denom = S::from_f64(self.count.max(1) as f64);
        self.sum_sq_dev.iter().map(|&s| s / denom).collect()
    }

    /// Transform `x` with the pre-update statistics.
    pub fn transform(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimMismatch {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        let eps = S::from_f64(STANDARDIZE_EPS);
        let denom = S::from_f64(self.count.max(1) as f64);
        Ok(x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let var = self.sum_sq_dev[i] / denom;
                (xi - self.mean[i]) / (var + eps).sqrt()
            })
            .collect())
    }

    /// Fold `x` into the running statistics (Welford's update).
    pub fn update(&mut self, x: &[S]) -> Result<()> {
        if x.len() != self.mean.len() {
            return Err(Error::DimMismatch {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        self.count += 1;
        let n = S::from_f64(self.count as f64);
        for (i, &xi) in x.iter().enumerate() {
            let delta = xi - self.mean[i];
            self.mean[i] += delta / n;
            self.sum_sq_dev[i] += delta * (xi - self.mean[i]);
        }
        Ok(())
    }

    /// Transform with the state before `x`, then fold `x` in.
    pub fn standardize(&mut self, x: &[S]) -> Result<Vec<S>> {
        let out = self.transform(x)?;
        self.update(x)?;
        Ok(out)
    }
}
