//! Randomized row embeddings: dense sign matrices and sparse OSNAP-style
//! column embeddings.
//!
//! An embedding is a seeded linear map `J` with `input_dim` rows and
//! `output_dim` columns applied on the right of row vectors (`r ↦ rJ`). All
//! entries derive from the seed and the entry coordinates, so the same
//! parameters always reproduce the same matrix without storing it. Small
//! maps are materialized once at construction for speed; the on-the-fly path
//! is used above `MATERIALIZE_LIMIT` entries and produces bit-identical
//! results.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, domain};

/// Entry-count threshold below which the map is materialized eagerly.
const MATERIALIZE_LIMIT: usize = 1 << 16;

/// Structure of the random map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedKind {
    /// Every entry is an independent sign scaled by `1/√output_dim`.
    DenseJl,
    /// Each *column* carries exactly `sparsity` nonzeros `±1/√sparsity` at
    /// seeded distinct positions.
    Osnap {
        sparsity: usize,
    },
}

/// A seeded embedding `J : input_dim × output_dim`.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub kind: EmbedKind,
    pub input_dim: usize,
    pub output_dim: usize,
    pub seed: u64,
    table: Option<Matrix>,
}

/// Default per-column sparsity of the sparse embedding.
pub const DEFAULT_OSNAP_SPARSITY: usize = 8;

impl Embedding {
    /// Dense sign embedding.
    pub fn dense_jl(input_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        if output_dim == 0 {
            return Err(Error::InvalidParameter("output_dim must be ≥ 1"));
        }
        Ok(Self::finish(EmbedKind::DenseJl, input_dim, output_dim, seed))
    }

    /// Sparse column embedding; `sparsity` is clamped to `input_dim`.
    pub fn osnap(input_dim: usize, output_dim: usize, sparsity: usize, seed: u64) -> Result<Self> {
        if output_dim == 0 {
            return Err(Error::InvalidParameter("output_dim must be ≥ 1"));
        }
        if sparsity == 0 {
            return Err(Error::InvalidParameter("sparsity must be ≥ 1"));
        }
        let s = sparsity.min(input_dim.max(1));
        Ok(Self::finish(EmbedKind::Osnap { sparsity: s }, input_dim, output_dim, seed))
    }

    fn finish(kind: EmbedKind, input_dim: usize, output_dim: usize, seed: u64) -> Self {
        let mut e = Embedding { kind, input_dim, output_dim, seed, table: None };
        if input_dim * output_dim <= MATERIALIZE_LIMIT {
            e.table = Some(e.build());
        }
        e
    }

    /// The full map as a matrix (always available; built on demand when the
    /// map was too large to cache).
    pub fn materialize(&self) -> Matrix {
        match &self.table {
            Some(t) => t.clone(),
            None => self.build(),
        }
    }

    fn build(&self) -> Matrix {
        let (n, d) = (self.input_dim, self.output_dim);
        let mut j = Matrix::zeros(n, d);
        match self.kind {
            EmbedKind::DenseJl => {
                let scale = 1.0 / sqrt(d as f64);
                for i in 0..n {
                    for c in 0..d {
                        let sign = if rng::bits(self.seed, domain::EMBED_DENSE, i as u64, c as u64) & 1 == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        j.set(i, c, sign * scale);
                    }
                }
            }
            EmbedKind::Osnap { sparsity } => {
                let scale = 1.0 / sqrt(sparsity as f64);
                for c in 0..d {
                    for (pos, sign) in column_support(self.seed, n, c, sparsity) {
                        j.set(pos, c, sign * scale);
                    }
                }
            }
        }
        j
    }

    /// Apply on the right: `r ↦ rJ`.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: r.len() });
        }
        if let Some(j) = &self.table {
            let mut y = vec![0.0; self.output_dim];
            for (i, &ri) in r.iter().enumerate() {
                if ri == 0.0 {
                    continue;
                }
                let jrow = j.row(i);
                for (yc, &jv) in y.iter_mut().zip(jrow) {
                    *yc += ri * jv;
                }
            }
            return Ok(y);
        }
        // On-the-fly path for maps too large to cache. Terms are combined
        // in the same order and with the same per-term scaling as the
        // cached path, so both produce bit-identical output.
        let (n, d) = (self.input_dim, self.output_dim);
        let mut y = vec![0.0; d];
        match self.kind {
            EmbedKind::DenseJl => {
                let scale = 1.0 / sqrt(d as f64);
                for (i, &ri) in r.iter().enumerate().take(n) {
                    if ri == 0.0 {
                        continue;
                    }
                    for (c, yc) in y.iter_mut().enumerate() {
                        let sign = if rng::bits(self.seed, domain::EMBED_DENSE, i as u64, c as u64) & 1 == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        *yc += ri * (sign * scale);
                    }
                }
            }
            EmbedKind::Osnap { sparsity } => {
                let scale = 1.0 / sqrt(sparsity as f64);
                for c in 0..d {
                    let mut support = column_support(self.seed, n, c, sparsity);
                    support.sort_unstable_by_key(|&(pos, _)| pos);
                    let mut acc = 0.0;
                    for (pos, sign) in support {
                        if r[pos] == 0.0 {
                            continue;
                        }
                        acc += r[pos] * (sign * scale);
                    }
                    y[c] = acc;
                }
            }
        }
        Ok(y)
    }
}

/// The seeded support of sparse column `c`: `sparsity` distinct positions in
/// `0..n`, each with a sign. Positions are drawn by rejection with an
/// incrementing counter, so the set is a pure function of `(seed, c)`.
fn column_support(seed: u64, n: usize, c: usize, sparsity: usize) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(sparsity);
    let mut ctr = 0u64;
    while out.len() < sparsity.min(n) {
        let word = rng::bits(seed, domain::EMBED_SPARSE, c as u64, ctr);
        ctr += 1;
        let pos = (word % n as u64) as usize;
        if out.iter().any(|&(p, _)| p == pos) {
            continue;
        }
        let sign = if word >> 63 == 0 { 1.0 } else { -1.0 };
        out.push((pos, sign));
    }
    out
}
