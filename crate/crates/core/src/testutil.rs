//! Shared fixtures for unit tests.

use crate::stream::{ClassModel, GaussComponent, RegimeSpec};

/// Two unit-variance Gaussian classes at `-sep/2` and `+sep/2` in 1D with
/// equal priors.
pub fn two_class_regime(id: &str, length: usize, sep: f64) -> RegimeSpec<f64> {
    RegimeSpec::new(
        id,
        length,
        vec![
            ClassModel {
                prior: 0.5,
                components: vec![GaussComponent {
                    weight: 1.0,
                    mean: vec![-sep / 2.0],
                    var: vec![1.0],
                }],
            },
            ClassModel {
                prior: 0.5,
                components: vec![GaussComponent {
                    weight: 1.0,
                    mean: vec![sep / 2.0],
                    var: vec![1.0],
                }],
            },
        ],
    )
    .unwrap()
}

/// Two-dimensional variant where class means sit at `(-sep/2, 0)` and
/// `(sep/2, 0)` with the given shared variance.
pub fn two_class_regime_2d(id: &str, length: usize, sep: f64, var: f64) -> RegimeSpec<f64> {
    RegimeSpec::new(
        id,
        length,
        vec![
            ClassModel {
                prior: 0.5,
                components: vec![GaussComponent {
                    weight: 1.0,
                    mean: vec![-sep / 2.0, 0.0],
                    var: vec![var, var],
                }],
            },
            ClassModel {
                prior: 0.5,
                components: vec![GaussComponent {
                    weight: 1.0,
                    mean: vec![sep / 2.0, 0.0],
                    var: vec![var, var],
                }],
            },
        ],
    )
    .unwrap()
}
