//! Scalar abstraction over the floating-point types the library supports.
//!
//! All numeric code in this crate is generic over [`Scalar`], which is
//! implemented for `f32` and `f64`. Concrete type aliases for the common
//! instantiations live at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, NumAssignOps};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar usable for model parameters, features and weights.
pub trait Scalar:
    Float
    + NumAssignOps
    + Serialize
    + DeserializeOwned
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64` (used for constants and tolerances).
    fn from_f64(v: f64) -> Self;

    /// Widening conversion to `f64` (used when reporting metrics).
    fn as_f64(self) -> f64;

    /// Draw a sample from `U[lo, hi)`.
    fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;

    /// Draw a sample from the standard normal distribution.
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

macro_rules! impl_scalar {
    ($($t:ty)*) => {$(
        impl Scalar for $t {
            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
                rng.random_range(lo..hi)
            }

            #[inline]
            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }
        }
    )*};
}

impl_scalar!(f32 f64);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let v = f64::sample_uniform(&mut rng, -0.5, 0.5);
            assert!((-0.5..0.5).contains(&v));
        }
    }

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f32::from_f64(1.5).as_f64(), 1.5);
        assert_eq!(f64::from_f64(-2.25), -2.25);
    }
}
