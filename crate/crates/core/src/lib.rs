//! Retrieval-augmented memory for online learning.
//!
//! An online one-hidden-layer MLP whose per-step SGD update can be augmented
//! with gradients from nearest-neighbour examples retrieved out of a
//! fixed-capacity FIFO memory, either naively (`ram_naive`) or through time,
//! similarity and gradient gates (`ram_gated`). The crate also provides the
//! prequential evaluation harness, synthetic piecewise-stationary stream
//! generators with a Bayes oracle, and drift diagnostics used by the `ramol`
//! command-line tool.
//!
//! All numeric code is generic over the [`Scalar`] type (`f32` or `f64`);
//! the `*32`/`*64` aliases below pin the common instantiations.

pub mod error;
pub mod eval;
pub mod learner;
pub mod memory;
pub mod model;
pub mod scalar;
pub mod stream;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f32` instantiations of the main types.
pub type Example32 = stream::Example<f32>;
pub type MlpParams32 = model::MlpParams<f32>;
pub type Buffer32 = memory::Buffer<f32>;
pub type LearnerConfig32 = learner::LearnerConfig<f32>;
pub type Learner32 = learner::Learner<f32>;

/// `f64` instantiations of the main types (used by the CLI).
pub type Example64 = stream::Example<f64>;
pub type MlpParams64 = model::MlpParams<f64>;
pub type Buffer64 = memory::Buffer<f64>;
pub type LearnerConfig64 = learner::LearnerConfig<f64>;
pub type Learner64 = learner::Learner<f64>;
