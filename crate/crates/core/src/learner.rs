//! Per-step learning strategies: a plain online MLP baseline and the two
//! memory variants (naive replay and gated replay), plus the ablation
//! switches of the gated variant.
//!
//! Every step runs the same four stages: forward pass and prediction (before
//! any update), neighbour retrieval, one SGD step on the variant's weighted
//! batch, and insertion of the pre-update embedding into the buffer.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::{Buffer, MemoryEntry, NeighbourSet};
use crate::model::{
    argmax_lowest_tie, cross_entropy, init_params, Activation, MlpParams, WeightedExample,
};
use crate::scalar::Scalar;
use crate::stream::{Example, Standardizer};

/// Learning strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Baseline,
    RamNaive,
    RamGated,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "ram_naive" => Ok(Variant::RamNaive),
            "ram_gated" => Ok(Variant::RamGated),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Baseline => write!(f, "baseline"),
            Variant::RamNaive => write!(f, "ram_naive"),
            Variant::RamGated => write!(f, "ram_gated"),
        }
    }
}

/// Switches that remove one gate each from the gated variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationFlags {
    /// Drop the time window.
    pub no_time: bool,
    /// Skip similarity weighting and gating; neighbours get uniform weights.
    pub no_sim: bool,
    /// Drop the gradient down-weighting: the current example keeps weight 1
    /// and each surviving neighbour contributes its full normalised weight.
    pub no_decay: bool,
}

impl AblationFlags {
    pub fn any(&self) -> bool {
        self.no_time || self.no_sim || self.no_decay
    }
}

/// All hyperparameters of a learner. `seed` drives both parameter
/// initialisation and nothing else; streams carry their own seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnerConfig<S> {
    pub variant: Variant,
    /// Buffer capacity B.
    pub buffer_capacity: usize,
    /// Neighbour count K.
    pub k: usize,
    /// Time window H in steps; `None` disables the window.
    pub horizon: Option<u64>,
    /// Similarity temperature.
    pub tau: S,
    /// When set, the temperature becomes the running median of past
    /// neighbour distances instead of the fixed `tau`.
    pub adaptive_tau: bool,
    /// Similarity-gate fraction in [0, 1].
    pub rho: S,
    /// Total neighbour weight of the gated loss, in [0, 1].
    pub alpha: S,
    /// Neighbour weight of the naive loss, >= 0.
    pub beta: S,
    pub lr: S,
    /// Optional 1/sqrt(t) learning-rate decay.
    pub lr_decay: bool,
    pub hidden_dim: usize,
    pub activation: Activation,
    pub seed: u64,
    pub ablation: AblationFlags,
    /// Past-only running standardization of inputs.
    pub standardize: bool,
    /// Re-normalise surviving weights after the similarity gate.
    pub renormalize_after_gate: bool,
}

impl<S: Scalar> LearnerConfig<S> {
    /// Documented defaults. The time window is enabled for the gated variant
    /// only; the naive variant retrieves from the whole buffer.
    pub fn new(variant: Variant) -> Self {
        LearnerConfig {
            variant,
            buffer_capacity: 500,
            k: 5,
            horizon: match variant {
                Variant::RamGated => Some(2000),
                _ => None,
            },
            tau: S::one(),
            adaptive_tau: false,
            rho: S::from_f64(0.1),
            alpha: S::from_f64(0.5),
            beta: S::one(),
            lr: S::from_f64(0.01),
            lr_decay: false,
            hidden_dim: 64,
            activation: Activation::Relu,
            seed: 0,
            ablation: AblationFlags::default(),
            standardize: true,
            renormalize_after_gate: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.buffer_capacity == 0 {
            return Err(Error::Config("buffer capacity must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be positive".into()));
        }
        let lr = self.lr.as_f64();
        if !(lr.is_finite() && lr > 0.0) {
            return Err(Error::Config("lr must be positive".into()));
        }
        if self.tau.as_f64() <= 0.0 {
            return Err(Error::Config("tau must be positive".into()));
        }
        let rho = self.rho.as_f64();
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Config("rho must lie in [0, 1]".into()));
        }
        let alpha = self.alpha.as_f64();
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config("alpha must lie in [0, 1]".into()));
        }
        if self.beta.as_f64() < 0.0 {
            return Err(Error::Config("beta must be nonnegative".into()));
        }
        if self.ablation.any() && self.variant != Variant::RamGated {
            return Err(Error::Config(
                "ablation flags are only valid with the ram_gated variant".into(),
            ));
        }
        Ok(())
    }

    /// Identifier of everything except the seed; used to refuse aggregation
    /// across differing configurations.
    pub fn fingerprint(&self) -> String {
        format!(
            "{}|B{}|K{}|H{:?}|tau{}|ad{}|rho{}|a{}|b{}|lr{}|dec{}|hid{}|{}|abl{}{}{}|std{}|renorm{}",
            self.variant,
            self.buffer_capacity,
            self.k,
            self.horizon,
            self.tau,
            self.adaptive_tau,
            self.rho,
            self.alpha,
            self.beta,
            self.lr,
            self.lr_decay,
            self.hidden_dim,
            self.activation,
            u8::from(self.ablation.no_time),
            u8::from(self.ablation.no_sim),
            u8::from(self.ablation.no_decay),
            self.standardize,
            self.renormalize_after_gate,
        )
    }
}

/// Retrieval and weighting settings after ablation flags are folded in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRetrieval<S> {
    pub horizon: Option<u64>,
    pub use_similarity: bool,
    pub rho: S,
    pub no_decay: bool,
}

/// Resolve the gated variant's retrieval parameters under its ablation flags.
pub fn apply_ablation<S: Scalar>(cfg: &LearnerConfig<S>) -> Result<EffectiveRetrieval<S>> {
    if cfg.variant != Variant::RamGated {
        return Err(Error::Config(
            "ablation resolution applies to the ram_gated variant only".into(),
        ));
    }
    Ok(EffectiveRetrieval {
        horizon: if cfg.ablation.no_time { None } else { cfg.horizon },
        use_similarity: !cfg.ablation.no_sim,
        rho: cfg.rho,
        no_decay: cfg.ablation.no_decay,
    })
}

/// Weighted batch of the naive replay loss: the current example with weight 1
/// plus each neighbour with weight `beta / |N|`.
pub fn naive_batch<S: Scalar>(
    x: &[S],
    y: usize,
    ns: NeighbourSet<S>,
    beta: S,
) -> Vec<WeightedExample<S>> {
    let mut batch = Vec::with_capacity(1 + ns.len());
    batch.push(WeightedExample {
        x: x.to_vec(),
        y,
        weight: S::one(),
    });
    if !ns.is_empty() {
        let share = beta / S::from_f64(ns.len() as f64);
        for item in &ns.items {
            batch.push(WeightedExample {
                x: item.entry.x.clone(),
                y: item.entry.y,
                weight: share,
            });
        }
    }
    batch
}

/// Weighted batch of the gated loss: current weight `1/(1+alpha)` and
/// neighbour weights `alpha * w_j / (1+alpha)`. With no surviving neighbours
/// the batch falls back to the plain baseline update (current weight 1, not
/// the down-scaled `1/(1+alpha)`). With `no_decay` the prefactor disappears:
/// current weight 1 and neighbour weights `w_j`.
pub fn gated_batch<S: Scalar>(
    x: &[S],
    y: usize,
    ns: NeighbourSet<S>,
    alpha: S,
    no_decay: bool,
) -> Result<Vec<WeightedExample<S>>> {
    if ns.is_empty() {
        return Ok(vec![WeightedExample {
            x: x.to_vec(),
            y,
            weight: S::one(),
        }]);
    }
    let (current_w, neighbour_scale) = if no_decay {
        (S::one(), S::one())
    } else {
        let denom = S::one() + alpha;
        (S::one() / denom, alpha / denom)
    };
    let mut batch = Vec::with_capacity(1 + ns.len());
    batch.push(WeightedExample {
        x: x.to_vec(),
        y,
        weight: current_w,
    });
    for item in &ns.items {
        let w = item.w.ok_or(Error::Data(
            "gated batch requires filled neighbour weights".into(),
        ))?;
        batch.push(WeightedExample {
            x: item.entry.x.clone(),
            y: item.entry.y,
            weight: neighbour_scale * w,
        });
    }
    Ok(batch)
}

/// What one prequential step produced.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Class predicted before the update.
    pub prediction: usize,
    /// `prediction == label`.
    pub correct: bool,
    /// Cross-entropy of the pre-update prediction on the current example.
    pub loss: f64,
    /// Whether this variant queried a nonempty buffer this step.
    pub retrieval_attempted: bool,
    pub n_retrieved: usize,
    pub n_after_gates: usize,
    /// Retrieved neighbours sharing the current label (before gating).
    pub label_matches_retrieved: usize,
    /// Used neighbours sharing the current label (after gating).
    pub label_matches_used: usize,
}

/// Online learner state: parameters, memory, standardizer and step counter.
pub struct Learner<S> {
    cfg: LearnerConfig<S>,
    effective: Option<EffectiveRetrieval<S>>,
    params: MlpParams<S>,
    buffer: Buffer<S>,
    standardizer: Standardizer<S>,
    classes: usize,
    step: u64,
    neighbour_dists: VecDeque<f64>,
}

const TAU_HISTORY_CAP: usize = 4096;

impl<S: Scalar> Learner<S> {
    pub fn new(cfg: LearnerConfig<S>, dim: usize, classes: usize) -> Result<Self> {
        cfg.validate()?;
        if classes < 2 {
            return Err(Error::Config("need at least two classes".into()));
        }
        let params = init_params(dim, cfg.hidden_dim, classes, cfg.seed, cfg.activation)?;
        let buffer = Buffer::new(cfg.buffer_capacity, dim, cfg.hidden_dim)?;
        let effective = match cfg.variant {
            Variant::RamGated => Some(apply_ablation(&cfg)?),
            _ => None,
        };
        Ok(Learner {
            effective,
            params,
            buffer,
            standardizer: Standardizer::new(dim),
            classes,
            step: 0,
            neighbour_dists: VecDeque::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &LearnerConfig<S> {
        &self.cfg
    }

    pub fn params(&self) -> &MlpParams<S> {
        &self.params
    }

    pub fn buffer(&self) -> &Buffer<S> {
        &self.buffer
    }

    pub fn steps_processed(&self) -> u64 {
        self.step
    }

    fn lr_now(&self) -> S {
        if self.cfg.lr_decay {
            self.cfg.lr / S::from_f64(((self.step + 1) as f64).sqrt())
        } else {
            self.cfg.lr
        }
    }

    fn tau_now(&self) -> S {
        if self.cfg.adaptive_tau && !self.neighbour_dists.is_empty() {
            let mut dists: Vec<f64> = self.neighbour_dists.iter().copied().collect();
            let mid = dists.len() / 2;
            let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
            let median = *median;
            if median > 0.0 {
                return S::from_f64(median);
            }
        }
        self.cfg.tau
    }

    fn record_distances(&mut self, ns: &NeighbourSet<S>) {
        if !self.cfg.adaptive_tau {
            return;
        }
        for item in &ns.items {
            if self.neighbour_dists.len() == TAU_HISTORY_CAP {
                self.neighbour_dists.pop_front();
            }
            self.neighbour_dists.push_back(item.d.as_f64());
        }
    }

    /// Process one example: predict, retrieve, update, memorise.
    pub fn step(&mut self, example: &Example<S>) -> Result<StepOutcome> {
        if example.label >= self.classes {
            return Err(Error::LabelOutOfRange {
                label: example.label,
                classes: self.classes,
            });
        }
        let x = if self.cfg.standardize {
            self.standardizer.standardize(&example.features)?
        } else {
            example.features.clone()
        };

        // Stage 1: forward pass; the prediction is recorded before any update.
        let fwd = self.params.forward(&x)?;
        let prediction = argmax_lowest_tie(&fwd.probs);
        let correct = prediction == example.label;
        let loss = cross_entropy(&fwd.probs, example.label)?.as_f64();

        // Stage 2: retrieval.
        let retrieval_attempted = self.cfg.variant != Variant::Baseline && !self.buffer.is_empty();
        let mut n_retrieved = 0;
        let mut n_after_gates = 0;
        let mut label_matches_retrieved = 0;
        let mut label_matches_used = 0;

        let batch = match self.cfg.variant {
            Variant::Baseline => vec![WeightedExample {
                x: x.clone(),
                y: example.label,
                weight: S::one(),
            }],
            Variant::RamNaive => {
                let ns = self
                    .buffer
                    .retrieve(&fwd.h, self.step, self.cfg.k, self.cfg.horizon)?;
                n_retrieved = ns.len();
                label_matches_retrieved = ns.label_matches(example.label);
                n_after_gates = n_retrieved;
                label_matches_used = label_matches_retrieved;
                self.record_distances(&ns);
                naive_batch(&x, example.label, ns, self.cfg.beta)
            }
            Variant::RamGated => {
                let eff = self.effective.expect("set for gated in new()");
                let mut ns = self
                    .buffer
                    .retrieve(&fwd.h, self.step, self.cfg.k, eff.horizon)?;
                n_retrieved = ns.len();
                label_matches_retrieved = ns.label_matches(example.label);
                if !ns.is_empty() {
                    if eff.use_similarity {
                        let tau = self.tau_now();
                        self.record_distances(&ns);
                        ns.fill_similarity_weights(tau)?;
                        ns = ns.apply_similarity_gate(eff.rho, self.cfg.renormalize_after_gate)?;
                    } else {
                        self.record_distances(&ns);
                        ns.fill_uniform_weights();
                    }
                }
                n_after_gates = ns.len();
                label_matches_used = ns.label_matches(example.label);
                gated_batch(&x, example.label, ns, self.cfg.alpha, eff.no_decay)?
            }
        };

        // Stage 3: one SGD step on the weighted batch.
        let grads = self.params.weighted_grad(&batch)?;
        self.params = self.params.sgd_step(&grads, self.lr_now())?;

        // Stage 4: memorise the pre-update embedding.
        self.buffer.insert(MemoryEntry {
            x,
            y: example.label,
            h: fwd.h,
            t: self.step,
        })?;
        self.step += 1;

        Ok(StepOutcome {
            prediction,
            correct,
            loss,
            retrieval_attempted,
            n_retrieved,
            n_after_gates,
            label_matches_retrieved,
            label_matches_used,
        })
    }
}
