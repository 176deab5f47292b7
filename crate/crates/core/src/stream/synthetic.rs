//! Piecewise-stationary synthetic streams.
//!
//! Each regime draws labelled examples from per-class mixtures of
//! axis-aligned Gaussians with explicit class priors, so the Bayes-optimal
//! prediction and class-conditional densities are computable in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stream::{Example, StreamData};

/// One axis-aligned Gaussian mixture component.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussComponent<S> {
    pub weight: S,
    pub mean: Vec<S>,
    /// Per-dimension variances (diagonal covariance).
    pub var: Vec<S>,
}

/// Class prior plus its conditional mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel<S> {
    pub prior: S,
    pub components: Vec<GaussComponent<S>>,
}

/// A stationary segment: how long it lasts and how it generates data.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSpec<S> {
    pub id: String,
    pub length: usize,
    pub classes: Vec<ClassModel<S>>,
}

const SUM_TOL: f64 = 1e-6;

impl<S: Scalar> RegimeSpec<S> {
    /// Validate and construct. Priors and component weights must each sum to
    /// one; variances must be positive; all components must share one
    /// dimension.
    pub fn new(id: impl Into<String>, length: usize, classes: Vec<ClassModel<S>>) -> Result<Self> {
        let spec = RegimeSpec {
            id: id.into(),
            length,
            classes,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::SpecFile(format!("regime {}: zero length", self.id)));
        }
        if self.classes.is_empty() {
            return Err(Error::SpecFile(format!("regime {}: no classes", self.id)));
        }
        let dim = self
            .classes
            .first()
            .and_then(|c| c.components.first())
            .map(|c| c.mean.len())
            .ok_or_else(|| Error::SpecFile(format!("regime {}: no components", self.id)))?;
        if dim == 0 {
            return Err(Error::SpecFile(format!("regime {}: zero dimension", self.id)));
        }
        let prior_sum: f64 = self.classes.iter().map(|c| c.prior.as_f64()).sum();
        if (prior_sum - 1.0).abs() > SUM_TOL {
            return Err(Error::SpecFile(format!(
                "regime {}: class priors sum to {prior_sum}",
                self.id
            )));
        }
        for (ci, class) in self.classes.iter().enumerate() {
            if class.prior.as_f64() < 0.0 {
                return Err(Error::SpecFile(format!(
                    "regime {}: negative prior for class {ci}",
                    self.id
                )));
            }
            if class.components.is_empty() {
                return Err(Error::SpecFile(format!(
                    "regime {}: class {ci} has no components",
                    self.id
                )));
            }
            let w_sum: f64 = class.components.iter().map(|c| c.weight.as_f64()).sum();
            if (w_sum - 1.0).abs() > SUM_TOL {
                return Err(Error::SpecFile(format!(
                    "regime {}: class {ci} component weights sum to {w_sum}",
                    self.id
                )));
            }
            for comp in &class.components {
                if comp.mean.len() != dim || comp.var.len() != dim {
                    return Err(Error::SpecFile(format!(
                        "regime {}: inconsistent dimensions in class {ci}",
                        self.id
                    )));
                }
                if comp.weight.as_f64() < 0.0 {
                    return Err(Error::SpecFile(format!(
                        "regime {}: negative component weight in class {ci}",
                        self.id
                    )));
                }
                if comp.var.iter().any(|v| v.as_f64() <= 0.0) {
                    return Err(Error::SpecFile(format!(
                        "regime {}: nonpositive variance in class {ci}",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.classes[0].components[0].mean.len()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Draw one labelled example.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<S>, usize) {
        let y = pick_index(rng, self.classes.iter().map(|c| c.prior));
        let class = &self.classes[y];
        let k = pick_index(rng, class.components.iter().map(|c| c.weight));
        let comp = &class.components[k];
        let x = comp
            .mean
            .iter()
            .zip(&comp.var)
            .map(|(&m, &v)| m + v.sqrt() * S::sample_standard_normal(rng))
            .collect();
        (x, y)
    }

    /// Log of the class-conditional density `log p(x | y)`, computed in f64.
    pub fn log_class_conditional(&self, y: usize, x: &[S]) -> Result<f64> {
        if y >= self.classes.len() {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes: self.classes.len(),
            });
        }
        if x.len() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let parts: Vec<f64> = self.classes[y]
            .components
            .iter()
            .map(|comp| {
                let mut lp = comp.weight.as_f64().ln();
                for ((&xi, &m), &v) in x.iter().zip(&comp.mean).zip(&comp.var) {
                    let (xi, m, v) = (xi.as_f64(), m.as_f64(), v.as_f64());
                    lp += -0.5 * ((xi - m) * (xi - m) / v + v.ln() + LN_2PI);
                }
                lp
            })
            .collect();
        Ok(log_sum_exp(&parts))
    }

    /// Joint density `p(x, y) = prior_y * p(x | y)` in linear space. Extreme
    /// log-densities underflow to zero, which is the desired behaviour for
    /// numerically disjoint supports.
    pub fn joint_density(&self, x: &[S], y: usize) -> Result<f64> {
        let prior = self.classes[y].prior.as_f64();
        Ok(prior * self.log_class_conditional(y, x)?.exp())
    }

    /// Bayes-optimal class under this regime: `argmax_c prior_c p(x | c)`,
    /// ties broken by the lowest class index.
    pub fn bayes_predict(&self, x: &[S]) -> Result<usize> {
        let scores = self.bayes_scores(x)?;
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        Ok(best)
    }

    /// Posterior `p(y | x)` as a normalised distribution.
    pub fn bayes_posterior(&self, x: &[S]) -> Result<Vec<f64>> {
        let scores = self.bayes_scores(x)?;
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut out: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
        let total: f64 = out.iter().sum();
        for v in &mut out {
            *v /= total;
        }
        Ok(out)
    }

    fn bayes_scores(&self, x: &[S]) -> Result<Vec<f64>> {
        self.classes
            .iter()
            .enumerate()
            .map(|(c, class)| {
                Ok(class.prior.as_f64().ln() + self.log_class_conditional(c, x)?)
            })
            .collect()
    }
}

const LN_2PI: f64 = 1.8378770664093453;

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn pick_index<S: Scalar, R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = S>) -> usize {
    let u = S::sample_uniform(rng, S::zero(), S::one());
    let mut acc = S::zero();
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Maps global step indices to regime indices.
#[derive(Debug, Clone)]
pub struct RegimeSchedule {
    /// First step of each regime.
    starts: Vec<u64>,
    total: u64,
}

impl RegimeSchedule {
    pub fn new<S: Scalar>(regimes: &[RegimeSpec<S>]) -> Self {
        let mut starts = Vec::with_capacity(regimes.len());
        let mut acc = 0u64;
        for r in regimes {
            starts.push(acc);
            acc += r.length as u64;
        }
        RegimeSchedule { starts, total: acc }
    }

    pub fn total_steps(&self) -> u64 {
        self.total
    }

    pub fn start_of(&self, regime_idx: usize) -> u64 {
        self.starts[regime_idx]
    }

    /// Regime index active at `step`, or `None` past the end of the stream.
    pub fn regime_index_at(&self, step: u64) -> Option<usize> {
        if step >= self.total {
            return None;
        }
        match self.starts.binary_search(&step) {
            Ok(i) => Some(i),
            Err(i) => Some(i - 1),
        }
    }
}

/// Deterministic piecewise-stationary example source.
pub struct PiecewiseStream<S> {
    regimes: Vec<RegimeSpec<S>>,
    rng: ChaCha8Rng,
    regime_idx: usize,
    emitted_in_regime: usize,
    step: u64,
}

/// Concatenate the regimes into one stream, i.i.d. within each segment.
/// Identical `(regimes, seed)` pairs produce bit-identical streams.
pub fn gen_piecewise_stream<S: Scalar>(
    regimes: Vec<RegimeSpec<S>>,
    seed: u64,
) -> Result<PiecewiseStream<S>> {
    if regimes.is_empty() {
        return Err(Error::SpecFile("at least one regime required".into()));
    }
    let dim = regimes[0].dim();
    let classes = regimes[0].class_count();
    for r in &regimes {
        r.validate()?;
        if r.dim() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                got: r.dim(),
            });
        }
        if r.class_count() != classes {
            return Err(Error::SpecFile(format!(
                "regime {} has {} classes, expected {classes}",
                r.id,
                r.class_count()
            )));
        }
    }
    Ok(PiecewiseStream {
        regimes,
        rng: ChaCha8Rng::seed_from_u64(seed),
        regime_idx: 0,
        emitted_in_regime: 0,
        step: 0,
    })
}

impl<S: Scalar> PiecewiseStream<S> {
    pub fn dim(&self) -> usize {
        self.regimes[0].dim()
    }

    pub fn classes(&self) -> usize {
        self.regimes[0].class_count()
    }

    pub fn schedule(&self) -> RegimeSchedule {
        RegimeSchedule::new(&self.regimes)
    }

    pub fn regimes(&self) -> &[RegimeSpec<S>] {
        &self.regimes
    }

    pub fn collect_data(self) -> Result<StreamData<S>> {
        let dim = self.dim();
        let classes = self.classes();
        let examples: Vec<Example<S>> = self.collect();
        StreamData::new(dim, classes, examples)
    }
}

impl<S: Scalar> Iterator for PiecewiseStream<S> {
    type Item = Example<S>;

    fn next(&mut self) -> Option<Self::Item> {
        while self.regime_idx < self.regimes.len() {
            if self.emitted_in_regime >= self.regimes[self.regime_idx].length {
                self.regime_idx += 1;
                self.emitted_in_regime = 0;
                continue;
            }
            let (features, label) = self.regimes[self.regime_idx].sample(&mut self.rng);
            let step = self.step;
            self.step += 1;
            self.emitted_in_regime += 1;
            return Some(Example {
                features,
                label,
                step,
            });
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Declarative spec file (TOML)
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegimeFileToml {
    regime: Vec<RegimeToml>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegimeToml {
    id: Option<String>,
    length: usize,
    class: Vec<ClassToml>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassToml {
    prior: f64,
    component: Vec<ComponentToml>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentToml {
    weight: Option<f64>,
    mean: Vec<f64>,
    var: Option<Vec<f64>>,
}

/// Parse a regime list from the documented TOML grammar. Class priors and
/// component weights are normalised to sum to one.
pub fn parse_regimes_toml<S: Scalar>(text: &str) -> Result<Vec<RegimeSpec<S>>> {
    let file: RegimeFileToml =
        toml::from_str(text).map_err(|e| Error::SpecFile(e.to_string()))?;
    if file.regime.is_empty() {
        return Err(Error::SpecFile("spec lists no regimes".into()));
    }
    file.regime
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let id = r.id.unwrap_or_else(|| format!("regime{i}"));
            let prior_sum: f64 = r.class.iter().map(|c| c.prior).sum();
            if prior_sum <= 0.0 {
                return Err(Error::SpecFile(format!("regime {id}: priors sum to 0")));
            }
            let classes = r
                .class
                .into_iter()
                .map(|c| {
                    let w_sum: f64 = c.component.iter().map(|k| k.weight.unwrap_or(1.0)).sum();
                    if w_sum <= 0.0 {
                        return Err(Error::SpecFile(format!(
                            "regime {id}: component weights sum to 0"
                        )));
                    }
                    let components = c
                        .component
                        .into_iter()
                        .map(|k| {
                            let dim = k.mean.len();
                            GaussComponent {
                                weight: S::from_f64(k.weight.unwrap_or(1.0) / w_sum),
                                mean: k.mean.iter().map(|&v| S::from_f64(v)).collect(),
                                var: k
                                    .var
                                    .unwrap_or_else(|| vec![1.0; dim])
                                    .iter()
                                    .map(|&v| S::from_f64(v))
                                    .collect(),
                            }
                        })
                        .collect();
                    Ok(ClassModel {
                        prior: S::from_f64(c.prior / prior_sum),
                        components,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            RegimeSpec::new(id, r.length, classes)
        })
        .collect()
}

/// Load and parse a TOML regime spec from disk.
pub fn load_regimes_toml<S: Scalar>(path: impl AsRef<std::path::Path>) -> Result<Vec<RegimeSpec<S>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_regimes_toml(&text)
}
