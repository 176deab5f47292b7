//! Cumulative drift diagnostics for synthetic regime lists.
//!
//! The per-boundary divergence is total variation distance between the joint
//! distributions of consecutive regimes, estimated by Monte Carlo: with
//! `m = (p + q) / 2`, `TV(P, Q) = 0.5 * E_{x~M}[ |p(x) - q(x)| / m(x) ]`.
//! Within a segment the distribution does not change, so segments contribute
//! nothing; the budget is the sum over boundaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stream::RegimeSpec;

/// Monte-Carlo total variation distance between two regime generators,
/// deterministic in `seed`.
pub fn tv_distance_mc<S: Scalar>(
    p: &RegimeSpec<S>,
    q: &RegimeSpec<S>,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Config("sample count must be positive".into()));
    }
    if p.dim() != q.dim() {
        return Err(Error::DimMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    if p.class_count() != q.class_count() {
        return Err(Error::Config(
            "regimes must share the class count".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0f64;
    for _ in 0..samples {
        // Sample (x, y) from the mixture M = (P + Q) / 2.
        let (x, y) = if rng.random::<bool>() {
            p.sample(&mut rng)
        } else {
            q.sample(&mut rng)
        };
        let pd = p.joint_density(&x, y)?;
        let qd = q.joint_density(&x, y)?;
        let m = 0.5 * (pd + qd);
        if m > 0.0 {
            acc += (pd - qd).abs() / m;
        }
    }
    Ok(0.5 * acc / samples as f64)
}

/// Sum of per-boundary total variation distances over a regime list.
/// Every boundary reuses the same seed, so the budget is exactly additive
/// over concatenations sharing a boundary regime.
pub fn drift_budget<S: Scalar>(
    regimes: &[RegimeSpec<S>],
    samples_per_estimate: usize,
    seed: u64,
) -> Result<f64> {
    if regimes.is_empty() {
        return Err(Error::Config("at least one regime required".into()));
    }
    if samples_per_estimate == 0 {
        return Err(Error::Config("sample count must be positive".into()));
    }
    let mut total = 0.0;
    for pair in regimes.windows(2) {
        total += tv_distance_mc(&pair[0], &pair[1], samples_per_estimate, seed)?;
    }
    Ok(total)
}
