//! Exact top-N retrieval by LM-biased dot product.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::matrix::EmbeddingMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredHit {
    pub reply_id: usize,
    /// `raw_dot + beta * lm_bias[reply_id]`.
    pub score: f64,
    pub raw_dot: f64,
}

/// Brute-force index over the reply matrix. Immutable once built.
#[derive(Debug, Clone)]
pub struct RetrievalIndex {
    matrix: EmbeddingMatrix,
    lm_bias: Vec<f64>,
    beta: f64,
}

/// `f32` dot product accumulated in `f64` over eight fixed lanes.
///
/// The lane split is fixed, so the result is the same on every call and
/// every thread.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            lanes[l] += x[l] as f64 * y[l] as f64;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += *x as f64 * *y as f64;
    }
    ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail
}

/// Descending score, then ascending id.
fn rank_order(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

impl RetrievalIndex {
    pub fn new(matrix: EmbeddingMatrix, lm_bias: Vec<f64>, beta: f64) -> Result<Self> {
        if matrix.rows() != lm_bias.len() {
            return Err(Error::LengthMismatch { what: "lm_bias", expected: matrix.rows(), actual: lm_bias.len() });
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!("beta {beta} must be finite and >= 0")));
        }
        Ok(Self { matrix, lm_bias, beta })
    }

    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn matrix(&self) -> &EmbeddingMatrix {
        &self.matrix
    }

    pub fn lm_bias(&self) -> &[f64] {
        &self.lm_bias
    }

    /// Unbiased dot product of `query` with every reply, in reply-id order.
    pub fn raw_scores(&self, query: &[f32]) -> Result<Vec<f64>> {
        if query.len() != self.matrix.dim() {
            return Err(Error::DimMismatch { expected: self.matrix.dim(), actual: query.len() });
        }
        Ok(self.matrix.iter_rows().map(|row| dot(query, row)).collect())
    }

    /// Picks the `n` best hits from precomputed raw scores.
    ///
    /// Lets one scan serve both the biased shortlist and the unbiased
    /// simulation set.
    pub fn select(&self, raw: &[f64], n: usize, use_bias: bool) -> Result<Vec<ScoredHit>> {
        if n == 0 {
            return Err(Error::ZeroCount);
        }
        if raw.len() != self.len() {
            return Err(Error::LengthMismatch { what: "raw scores", expected: self.len(), actual: raw.len() });
        }
        let biased = |id: usize| raw[id] + self.beta * self.lm_bias[id];
        let mut keyed: Vec<(f64, usize)> =
            (0..raw.len()).map(|id| (if use_bias { biased(id) } else { raw[id] }, id)).collect();
        if n < keyed.len() {
            keyed.select_nth_unstable_by(n - 1, rank_order);
            keyed.truncate(n);
        }
        keyed.sort_unstable_by(rank_order);
        Ok(keyed.into_iter().map(|(_, id)| ScoredHit { reply_id: id, score: biased(id), raw_dot: raw[id] }).collect())
    }

    /// The `n` highest-scoring replies, best first; ties go to the smaller id.
    /// Returns the whole pool when `n` exceeds it.
    pub fn top_n(&self, query: &[f32], n: usize, use_bias: bool) -> Result<Vec<ScoredHit>> {
        if n == 0 {
            return Err(Error::ZeroCount);
        }
        let raw = self.raw_scores(query)?;
        self.select(&raw, n, use_bias)
    }
}
