//! One-hidden-layer MLP with softmax output and cross-entropy loss.
//!
//! The hidden activation doubles as the embedding used for neighbour
//! retrieval, so [`forward`](MlpParams::forward) always returns it alongside
//! the class probabilities. Gradients are computed analytically for weighted
//! multi-example batches; there is no autograd involved.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hidden-layer activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Activation::Relu => write!(f, "relu"),
            Activation::Tanh => write!(f, "tanh"),
        }
    }
}

/// Parameters of the one-hidden-layer network.
///
/// Weight matrices are stored row-major: `w1` is `hidden_dim x input_dim`,
/// `w2` is `classes x hidden_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<S> {
    input_dim: usize,
    hidden_dim: usize,
    classes: usize,
    activation: Activation,
    pub w1: Vec<S>,
    pub b1: Vec<S>,
    pub w2: Vec<S>,
    pub b2: Vec<S>,
}

/// Output of a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardResult<S> {
    /// Hidden activation; also the retrieval embedding.
    pub h: Vec<S>,
    pub logits: Vec<S>,
    pub probs: Vec<S>,
}

/// Gradients with the same shapes as [`MlpParams`].
#[derive(Debug, Clone)]
pub struct Gradients<S> {
    pub w1: Vec<S>,
    pub b1: Vec<S>,
    pub w2: Vec<S>,
    pub b2: Vec<S>,
}

/// One example of a weighted training batch.
#[derive(Debug, Clone)]
pub struct WeightedExample<S> {
    pub x: Vec<S>,
    pub y: usize,
    pub weight: S,
}

/// Probabilities are clamped to this floor before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Glorot-uniform initialisation with zero biases, deterministic in `seed`.
pub fn init_params<S: Scalar>(
    input_dim: usize,
    hidden_dim: usize,
    classes: usize,
    seed: u64,
    activation: Activation,
) -> Result<MlpParams<S>> {
    if input_dim == 0 || hidden_dim == 0 || classes == 0 {
        return Err(Error::Config(
            "network dimensions must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layer = |fan_in: usize, fan_out: usize, n: usize, rng: &mut ChaCha8Rng| {
        let s = S::from_f64((6.0 / (fan_in + fan_out) as f64).sqrt());
        (0..n).map(|_| S::sample_uniform(rng, -s, s)).collect::<Vec<S>>()
    };
    let w1 = layer(input_dim, hidden_dim, hidden_dim * input_dim, &mut rng);
    let w2 = layer(hidden_dim, classes, classes * hidden_dim, &mut rng);
    Ok(MlpParams {
        input_dim,
        hidden_dim,
        classes,
        activation,
        w1,
        b1: vec![S::zero(); hidden_dim],
        w2,
        b2: vec![S::zero(); classes],
    })
}

/// Max-subtracted softmax; safe for arbitrarily large finite logits.
pub fn softmax<S: Scalar>(logits: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); logits.len()];
    softmax_into(logits, &mut out);
    out
}

fn softmax_into<S: Scalar>(logits: &[S], out: &mut [S]) {
    let max = logits
        .iter()
        .copied()
        .fold(S::neg_infinity(), |a, b| if b > a { b } else { a });
    let mut sum = S::zero();
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for v in out {
        *v /= sum;
    }
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax_lowest_tie<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Cross-entropy `-log(probs[y])`, with `probs[y]` floored at [`PROB_FLOOR`].
pub fn cross_entropy<S: Scalar>(probs: &[S], y: usize) -> Result<S> {
    if y >= probs.len() {
        return Err(Error::LabelOutOfRange {
            label: y,
            classes: probs.len(),
        });
    }
    let floor = S::from_f64(PROB_FLOOR);
    let p = if probs[y] > floor { probs[y] } else { floor };
    Ok(-p.ln())
}

impl<S: Scalar> MlpParams<S> {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Forward pass: `h = act(W1 x + b1)`, `logits = W2 h + b2`,
    /// `probs = softmax(logits)`.
    pub fn forward(&self, x: &[S]) -> Result<ForwardResult<S>> {
        if x.len() != self.input_dim {
            return Err(Error::DimMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model input"));
        }
        let mut h = vec![S::zero(); self.hidden_dim];
        let mut logits = vec![S::zero(); self.classes];
        self.forward_into(x, &mut h, &mut logits);
        let probs = softmax(&logits);
        Ok(ForwardResult { h, logits, probs })
    }

    /// Forward pass into caller-provided buffers (hot path; no allocation,
    /// no validation).
    fn forward_into(&self, x: &[S], h: &mut [S], logits: &mut [S]) {
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
            let mut a = self.b1[j];
            for (w, xi) in row.iter().zip(x) {
                a += *w * *xi;
            }
            *hj = match self.activation {
                Activation::Relu => {
                    if a > S::zero() {
                        a
                    } else {
                        S::zero()
                    }
                }
                Activation::Tanh => a.tanh(),
            };
        }
        for (c, zc) in logits.iter_mut().enumerate() {
            let row = &self.w2[c * self.hidden_dim..(c + 1) * self.hidden_dim];
            let mut z = self.b2[c];
            for (w, hj) in row.iter().zip(h.iter()) {
                z += *w * *hj;
            }
            *zc = z;
        }
    }

    /// Exact gradient of `sum_k weight_k * ce(forward(x_k), y_k)` w.r.t. all
    /// parameters. Zero-weight examples are skipped entirely, so they
    /// contribute nothing, bit for bit.
    pub fn weighted_grad(&self, batch: &[WeightedExample<S>]) -> Result<Gradients<S>> {
        let mut g = Gradients {
            w1: vec![S::zero(); self.w1.len()],
            b1: vec![S::zero(); self.b1.len()],
            w2: vec![S::zero(); self.w2.len()],
            b2: vec![S::zero(); self.b2.len()],
        };
        // Buffers shared across the batch.
        let mut h = vec![S::zero(); self.hidden_dim];
        let mut logits = vec![S::zero(); self.classes];
        let mut dz = vec![S::zero(); self.classes];
        for ex in batch {
            if ex.weight == S::zero() {
                continue;
            }
            if ex.y >= self.classes {
                return Err(Error::LabelOutOfRange {
                    label: ex.y,
                    classes: self.classes,
                });
            }
            if ex.x.len() != self.input_dim {
                return Err(Error::DimMismatch {
                    expected: self.input_dim,
                    got: ex.x.len(),
                });
            }
            self.forward_into(&ex.x, &mut h, &mut logits);
            // d loss / d logits = (probs - onehot(y)) * weight
            softmax_into(&logits, &mut dz);
            dz[ex.y] -= S::one();
            for v in &mut dz {
                *v *= ex.weight;
            }
            // Output layer.
            for (c, &dzc) in dz.iter().enumerate() {
                g.b2[c] += dzc;
                let row = &mut g.w2[c * self.hidden_dim..(c + 1) * self.hidden_dim];
                for (gw, hj) in row.iter_mut().zip(h.iter()) {
                    *gw += dzc * *hj;
                }
            }
            // Backprop into the hidden layer. The activation derivative is
            // recoverable from h alone for both relu and tanh.
            for (j, &hj) in h.iter().enumerate() {
                let mut dh = S::zero();
                for (c, &dzc) in dz.iter().enumerate() {
                    dh += self.w2[c * self.hidden_dim + j] * dzc;
                }
                let da = match self.activation {
                    Activation::Relu => {
                        if hj > S::zero() {
                            dh
                        } else {
                            S::zero()
                        }
                    }
                    Activation::Tanh => dh * (S::one() - hj * hj),
                };
                g.b1[j] += da;
                let row = &mut g.w1[j * self.input_dim..(j + 1) * self.input_dim];
                for (gw, xi) in row.iter_mut().zip(&ex.x) {
                    *gw += da * *xi;
                }
            }
        }
        Ok(g)
    }

    /// One SGD step: `params - lr * grads`. Errors if any gradient is
    /// non-finite.
    pub fn sgd_step(&self, grads: &Gradients<S>, lr: S) -> Result<MlpParams<S>> {
        let finite = |v: &[S]| v.iter().all(|g| g.is_finite());
        if !(finite(&grads.w1) && finite(&grads.b1) && finite(&grads.w2) && finite(&grads.b2)) {
            return Err(Error::NonFinite("gradients"));
        }
        let apply = |p: &[S], g: &[S]| -> Vec<S> {
            p.iter().zip(g).map(|(&p, &g)| p - lr * g).collect()
        };
        Ok(MlpParams {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            classes: self.classes,
            activation: self.activation,
            w1: apply(&self.w1, &grads.w1),
            b1: apply(&self.b1, &grads.b1),
            w2: apply(&self.w2, &grads.w2),
            b2: apply(&self.b2, &grads.b2),
        })
    }

    /// Versioned JSON snapshot of shapes plus row-major values.
    pub fn to_json(&self) -> String {
        let snap = ParamsSnapshot {
            version: SNAPSHOT_VERSION,
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            classes: self.classes,
            activation: self.activation,
            w1: &self.w1,
            b1: &self.b1,
            w2: &self.w2,
            b2: &self.b2,
        };
        serde_json::to_string(&snap).expect("snapshot serialization cannot fail")
    }

    /// Restore a snapshot produced by [`to_json`](Self::to_json).
    pub fn from_json(text: &str) -> Result<Self> {
        let snap: OwnedParamsSnapshot<S> = serde_json::from_str(text)
            .map_err(|e| Error::Data(format!("bad parameter snapshot: {e}")))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::Data(format!(
                "unsupported snapshot version {}",
                snap.version
            )));
        }
        if snap.w1.len() != snap.hidden_dim * snap.input_dim
            || snap.b1.len() != snap.hidden_dim
            || snap.w2.len() != snap.classes * snap.hidden_dim
            || snap.b2.len() != snap.classes
        {
            return Err(Error::Data("snapshot shape mismatch".into()));
        }
        Ok(MlpParams {
            input_dim: snap.input_dim,
            hidden_dim: snap.hidden_dim,
            classes: snap.classes,
            activation: snap.activation,
            w1: snap.w1,
            b1: snap.b1,
            w2: snap.w2,
            b2: snap.b2,
        })
    }

    /// Exact equality of all parameter values, used by the reduction-identity
    /// checks.
    pub fn bits_eq(&self, other: &Self) -> bool {
        self.w1 == other.w1 && self.b1 == other.b1 && self.w2 == other.w2 && self.b2 == other.b2
    }
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize)]
struct ParamsSnapshot<'a, S> {
    version: u32,
    input_dim: usize,
    hidden_dim: usize,
    classes: usize,
    activation: Activation,
    w1: &'a [S],
    b1: &'a [S],
    w2: &'a [S],
    b2: &'a [S],
}

#[derive(Deserialize)]
struct OwnedParamsSnapshot<S> {
    version: u32,
    input_dim: usize,
    hidden_dim: usize,
    classes: usize,
    activation: Activation,
    w1: Vec<S>,
    b1: Vec<S>,
    w2: Vec<S>,
    b2: Vec<S>,
}
