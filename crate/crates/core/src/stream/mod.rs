//! Example sources: CSV files and synthetic piecewise-stationary generators,
//! plus past-only running standardization and drift diagnostics.
//!
//! Streams deliver examples in strict temporal order. Nothing in this module
//! looks ahead: the standardized value of example `t` is a function of raw
//! examples `0..=t` only.

mod csv_source;
mod drift;
mod standardize;
mod synthetic;

pub use csv_source::{open_csv_stream, CsvSchema, CsvStream};
pub use drift::{drift_budget, tv_distance_mc};
pub use standardize::{Standardizer, STANDARDIZE_EPS};
pub use synthetic::{
    gen_piecewise_stream, load_regimes_toml, parse_regimes_toml, ClassModel, GaussComponent,
    PiecewiseStream, RegimeSchedule, RegimeSpec,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One observation from a stream: features, class label, time index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example<S> {
    pub features: Vec<S>,
    pub label: usize,
    pub step: u64,
}

/// A fully materialised stream with its dimensions.
#[derive(Debug, Clone)]
pub struct StreamData<S> {
    pub dim: usize,
    pub classes: usize,
    pub examples: Vec<Example<S>>,
}

impl<S: Scalar> StreamData<S> {
    /// Validate dimensions, label range and step ordering.
    pub fn new(dim: usize, classes: usize, examples: Vec<Example<S>>) -> Result<Self> {
        let mut prev_step = None;
        for ex in &examples {
            if ex.features.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: ex.features.len(),
                });
            }
            if ex.label >= classes {
                return Err(Error::LabelOutOfRange {
                    label: ex.label,
                    classes,
                });
            }
            if let Some(prev) = prev_step {
                if ex.step <= prev {
                    return Err(Error::Data(format!(
                        "steps must strictly increase (saw {} after {prev})",
                        ex.step
                    )));
                }
            }
            prev_step = Some(ex.step);
        }
        Ok(StreamData {
            dim,
            classes,
            examples,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}
