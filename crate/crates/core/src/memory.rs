//! Fixed-capacity FIFO memory with exact nearest-neighbour retrieval.
//!
//! The buffer stores `(x, y, h, t)` entries in insertion order and evicts the
//! single oldest entry when full. Retrieval is an exact linear scan over the
//! eligible entries (those within the optional time window), `O(B * dim)` per
//! query; embeddings are frozen at insertion time and never recomputed.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One stored observation: input, label, embedding and insertion step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry<S> {
    pub x: Vec<S>,
    pub y: usize,
    pub h: Vec<S>,
    pub t: u64,
}

/// FIFO buffer of capacity `B`; oldest entry first.
///
/// Embeddings are mirrored into a flat ring (`flat`, one `embed_dim` slot
/// per entry) so the retrieval scan sweeps contiguous memory. The slot of
/// the i-th oldest entry is `(head + i) % capacity`.
#[derive(Debug, Clone)]
pub struct Buffer<S> {
    capacity: usize,
    input_dim: usize,
    embed_dim: usize,
    entries: VecDeque<Arc<MemoryEntry<S>>>,
    flat: Vec<S>,
    head: usize,
}

/// One retrieved neighbour. `s` and `w` stay unset until
/// [`NeighbourSet::fill_similarity_weights`] runs. Entries are shared with
/// the buffer, so retrieval never copies the stored vectors.
#[derive(Debug, Clone)]
pub struct Neighbour<S> {
    pub entry: Arc<MemoryEntry<S>>,
    /// Euclidean distance in embedding space.
    pub d: S,
    /// Similarity `exp(-d / tau)`.
    pub s: Option<S>,
    /// Normalised weight.
    pub w: Option<S>,
}

/// Retrieved neighbours ordered by nondecreasing distance.
#[derive(Debug, Clone, Default)]
pub struct NeighbourSet<S> {
    pub items: Vec<Neighbour<S>>,
}

impl<S: Scalar> Buffer<S> {
    pub fn new(capacity: usize, input_dim: usize, embed_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("buffer capacity must be positive".into()));
        }
        Ok(Buffer {
            capacity,
            input_dim,
            embed_dim,
            entries: VecDeque::with_capacity(capacity),
            flat: vec![S::zero(); capacity * embed_dim],
            head: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries oldest-first.
    pub fn iter(&self) -> impl Iterator<Item = &MemoryEntry<S>> {
        self.entries.iter().map(|e| e.as_ref())
    }

    pub fn oldest_step(&self) -> Option<u64> {
        self.entries.front().map(|e| e.t)
    }

    /// Append `entry`, evicting the single oldest entry when over capacity.
    /// Timestamps must be strictly increasing.
    pub fn insert(&mut self, entry: MemoryEntry<S>) -> Result<()> {
        if entry.x.len() != self.input_dim {
            return Err(Error::DimMismatch {
                expected: self.input_dim,
                got: entry.x.len(),
            });
        }
        if entry.h.len() != self.embed_dim {
            return Err(Error::DimMismatch {
                expected: self.embed_dim,
                got: entry.h.len(),
            });
        }
        if let Some(back) = self.entries.back() {
            if entry.t <= back.t {
                return Err(Error::Data(format!(
                    "insertion step {} not after latest stored step {}",
                    entry.t, back.t
                )));
            }
        }
        let slot = if self.entries.len() == self.capacity {
            self.entries.pop_front();
            let evicted = self.head;
            self.head = (self.head + 1) % self.capacity;
            evicted
        } else {
            (self.head + self.entries.len()) % self.capacity
        };
        self.flat[slot * self.embed_dim..(slot + 1) * self.embed_dim].copy_from_slice(&entry.h);
        self.entries.push_back(Arc::new(entry));
        Ok(())
    }

    /// Exact K-nearest-neighbour search in embedding space.
    ///
    /// Candidates are entries with `t_now - t <= window` when a window is
    /// given, all entries otherwise. Distance ties break toward the more
    /// recent entry. An empty buffer, or one with no eligible candidate,
    /// yields an empty set.
    pub fn retrieve(
        &self,
        h_query: &[S],
        t_now: u64,
        k: usize,
        window: Option<u64>,
    ) -> Result<NeighbourSet<S>> {
        if h_query.len() != self.embed_dim {
            return Err(Error::DimMismatch {
                expected: self.embed_dim,
                got: h_query.len(),
            });
        }
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        // Linear scan with a small insertion-sorted top-k list, kept ordered
        // by (squared distance asc, step desc). Squared distances preserve
        // the ordering and the tie rule; the square root is taken only for
        // the k winners. Timestamps increase with storage order, so the
        // window-eligible entries are a suffix.
        let first_eligible = match window {
            Some(h) => {
                let mut lo = 0;
                let mut hi = self.entries.len();
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if t_now.saturating_sub(self.entries[mid].t) > h {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
            None => 0,
        };
        let mut best: Vec<(S, u64, usize)> = Vec::with_capacity(k);
        let beats = |a: &(S, u64, usize), b: &(S, u64, usize)| a.0 < b.0 || (a.0 == b.0 && a.1 > b.1);
        let mut slot = (self.head + first_eligible) % self.capacity;
        for idx in first_eligible..self.entries.len() {
            let stored = &self.flat[slot * self.embed_dim..(slot + 1) * self.embed_dim];
            slot += 1;
            if slot == self.capacity {
                slot = 0;
            }
            let cand = (
                squared_distance(h_query, stored),
                self.entries[idx].t,
                idx,
            );
            if best.len() == k {
                if !beats(&cand, &best[k - 1]) {
                    continue;
                }
                best.pop();
            }
            let pos = best.partition_point(|b| beats(b, &cand));
            best.insert(pos, cand);
        }
        let items = best
            .into_iter()
            .map(|(sq, _, idx)| Neighbour {
                entry: Arc::clone(&self.entries[idx]),
                d: sq.sqrt(),
                s: None,
                w: None,
            })
            .collect();
        Ok(NeighbourSet { items })
    }

    /// Versioned JSON snapshot for inspection and debugging.
    pub fn snapshot_json(&self) -> String {
        let snap = BufferSnapshot {
            version: SNAPSHOT_VERSION,
            capacity: self.capacity,
            input_dim: self.input_dim,
            embed_dim: self.embed_dim,
            entries: self.entries.iter().map(|e| (**e).clone()).collect(),
        };
        serde_json::to_string(&snap).expect("snapshot serialization cannot fail")
    }
}

/// Squared Euclidean distance, unrolled into four independent accumulators
/// so the scan pipelines well; this is the per-step `O(B * dim)` hot loop.
fn squared_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [S::zero(); 4];
    let (a4, a_rest) = a.split_at(a.len() - a.len() % 4);
    let (b4, b_rest) = b.split_at(a4.len());
    for (ca, cb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        for lane in 0..4 {
            let diff = ca[lane] - cb[lane];
            acc[lane] += diff * diff;
        }
    }
    let mut sq = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a_rest.iter().zip(b_rest) {
        let diff = *x - *y;
        sq += diff * diff;
    }
    sq
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BufferSnapshot<S> {
    version: u32,
    capacity: usize,
    input_dim: usize,
    embed_dim: usize,
    entries: Vec<MemoryEntry<S>>,
}

impl<S: Scalar> NeighbourSet<S> {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Fill `s = exp(-d / tau)` and `w = s / sum(s)`. Errors on an empty set.
    ///
    /// The normalised weights are computed with the minimum distance
    /// subtracted inside the exponent, which cancels in the ratio but keeps
    /// the normalisation well defined when every raw similarity underflows.
    pub fn fill_similarity_weights(&mut self, tau: S) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::Data("similarity weights on empty neighbour set".into()));
        }
        if tau <= S::zero() {
            return Err(Error::Config("tau must be positive".into()));
        }
        let d_min = self
            .items
            .iter()
            .map(|i| i.d)
            .fold(S::infinity(), |a, b| if b < a { b } else { a });
        let mut total = S::zero();
        let mut shifted = Vec::with_capacity(self.items.len());
        for item in &mut self.items {
            item.s = Some((-item.d / tau).exp());
            let e = (-(item.d - d_min) / tau).exp();
            shifted.push(e);
            total += e;
        }
        for (item, e) in self.items.iter_mut().zip(shifted) {
            item.w = Some(e / total);
        }
        Ok(())
    }

    /// Assign each neighbour the uniform weight `1 / n` (similarity skipped).
    pub fn fill_uniform_weights(&mut self) {
        let n = S::from_f64(self.items.len() as f64);
        for item in &mut self.items {
            item.s = None;
            item.w = Some(S::one() / n);
        }
    }

    /// Drop neighbours whose weight falls below `rho * max(w)`. The
    /// maximum-weight neighbour always survives. Surviving weights are
    /// re-normalised to sum to one when `renormalize` is set, otherwise kept
    /// as-is.
    pub fn apply_similarity_gate(mut self, rho: S, renormalize: bool) -> Result<NeighbourSet<S>> {
        if rho < S::zero() || rho > S::one() {
            return Err(Error::Config("rho must lie in [0, 1]".into()));
        }
        if self.items.is_empty() {
            return Ok(self);
        }
        let w_max = self
            .items
            .iter()
            .map(|i| i.w.ok_or(Error::Data("gate before weights filled".into())))
            .try_fold(S::zero(), |acc, w| w.map(|w| if w > acc { w } else { acc }))?;
        let cutoff = rho * w_max;
        self.items.retain(|i| i.w.expect("checked above") >= cutoff);
        if renormalize {
            let total = self
                .items
                .iter()
                .map(|i| i.w.expect("checked above"))
                .fold(S::zero(), |a, b| a + b);
            for item in &mut self.items {
                item.w = Some(item.w.expect("checked above") / total);
            }
        }
        Ok(self)
    }

    /// Count of neighbours whose stored label matches `y`.
    pub fn label_matches(&self, y: usize) -> usize {
        self.items.iter().filter(|i| i.entry.y == y).count()
    }
}
