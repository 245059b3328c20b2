//! Sliding-window rank-`k` projection-cost-preserving sampling.
//!
//! A row sample `M` of the window matrix `A` is *projection-cost
//! preserving* at rank `k` when every rank-`k` orthogonal projection `P`
//! satisfies
//!
//! ```text
//! (1−ε)·‖A − AP‖_F² ≤ ‖M − MP‖_F² ≤ (1+ε)·‖A − AP‖_F²,
//! ```
//!
//! so any downstream low-rank computation can run on `M` instead of `A`.
//! Plain spectral sampling is not enough for this: rows must be kept by
//! their *ridge* leverage scores, regularized by (an estimate of) the
//! rank-`k` tail mass of the suffix they belong to.
//!
//! Two cooperating structures implement this:
//!
//! * [`ResidualEstimator`] — maintains a constant-factor estimate `ζ` of
//!   `‖X − X_k‖_F²` for every suffix `X` of the window. It embeds each row
//!   through a sparse (or dense) random sign map into `d = k + ⌈log₂W⌉ + 8`
//!   columns and feeds it to an inner [`RowSampler`] at accuracy `1/2`; the
//!   estimate for a cut is one-eighth of the rank-`k` tail of the kept
//!   embedded suffix. The returned `ζ` satisfies `ζ ≤ exact ≤ 8ζ` with high
//!   probability.
//! * [`PcpSampler`] — the row sample itself. Every arrival is appended
//!   unsampled; each older row at time `t_j` is then re-tested exactly like
//!   [`RowSampler`] but with ridge weight `λ = ζ(t_j)`, which prunes rows
//!   whose energy is dwarfed by the tail mass of everything after them.

use alloc::vec::Vec;

use crate::embed::{EmbedKind, Embedding, DEFAULT_OSNAP_SPARSITY};
use crate::error::{Error, Result};
use crate::factor::gram_tail;
use crate::matrix::Matrix;
use crate::rng::{self, domain};
use crate::sampler::{RowSampler, SampledRow, SamplerConfig};
use crate::scores::RidgeScorer;

/// Accuracy of the inner spectral sketch behind the residual estimator; a
/// constant-factor estimate is all the sampler needs.
pub const ESTIMATOR_ETA: f64 = 0.5;

/// Constant-factor estimator of the rank-`k` tail mass
/// `‖X − X_k‖_F²` of every window suffix `X`, in embedded space.
#[derive(Debug, Clone)]
pub struct ResidualEstimator {
    dim: usize,
    rank: usize,
    embed: Embedding,
    inner: RowSampler,
    time: i64,
}

impl ResidualEstimator {
    /// Estimator for `dim`-column rows over a window of `window` rows at
    /// rank `rank`. `kind` picks the embedding family; the output dimension
    /// is fixed at `rank + ⌈log₂ window⌉ + 8`.
    pub fn new(dim: usize, window: usize, rank: usize, seed: u64, kind: EmbedKind) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidParameter("rank must be ≥ 1"));
        }
        let d = embed_dim(window, rank);
        let embed = match kind {
            EmbedKind::DenseJl => Embedding::dense_jl(dim, d, seed ^ 0x9e37_79b9_7f4a_7c15)?,
            EmbedKind::Osnap { sparsity } => {
                Embedding::osnap(dim, d, sparsity, seed ^ 0x9e37_79b9_7f4a_7c15)?
            }
        };
        let inner_cfg = SamplerConfig::new(d, window, ESTIMATOR_ETA, seed ^ 0x5851_f42d_4c95_7f2d)?;
        Ok(ResidualEstimator {
            dim,
            rank,
            embed,
            inner: RowSampler::new(inner_cfg),
            time: i64::MIN,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of columns rows are embedded into.
    pub fn embedded_dim(&self) -> usize {
        self.embed.output_dim
    }

    /// Embed and ingest the row arriving at time `t`.
    pub fn ingest(&mut self, r: &[f64], t: i64) -> Result<()> {
        if r.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: r.len() });
        }
        let y = self.embed.apply(r)?;
        self.inner.ingest(&y, t)?;
        self.time = t;
        Ok(())
    }

    /// Tail estimate `ζ` for the suffix starting at the latest kept time
    /// `≤ cut` (the whole window when every kept time is later). Zero when
    /// nothing is stored.
    pub fn tail_estimate(&mut self, cut: i64) -> f64 {
        self.tail_estimates(&[cut])[0]
    }

    /// Tail estimates for several cuts at once. `cuts` may be in any order;
    /// internally the suffix Gram is grown once from newest to oldest, so
    /// the cost is one small eigendecomposition per distinct cut.
    pub fn tail_estimates(&mut self, cuts: &[i64]) -> Vec<f64> {
        self.inner.flush();
        let rows = self.inner.rows();
        let m = rows.len();
        let d = self.embed.output_dim;
        if m == 0 || cuts.is_empty() {
            return alloc::vec![0.0; cuts.len()];
        }
        // Row index each cut maps to: the latest kept row at-or-before the
        // cut, else the very first row.
        let start_index = |cut: i64| -> usize {
            rows.partition_point(|r| r.time <= cut).saturating_sub(1)
        };
        let mut order: Vec<usize> = (0..cuts.len()).collect();
        order.sort_unstable_by_key(|&i| core::cmp::Reverse(start_index(cuts[i])));
        let mut out = alloc::vec![0.0; cuts.len()];
        let mut gram = Matrix::zeros(d, d);
        let mut ptr = m;
        for oi in order {
            let start = start_index(cuts[oi]);
            while ptr > start {
                ptr -= 1;
                gram.add_outer(&rows[ptr].row, 1.0);
            }
            out[oi] = gram_tail(&gram, self.rank) / 8.0;
        }
        out
    }

    /// The inner sketch of the full window (diagnostics and tests).
    pub fn inner_sketch(&mut self) -> Matrix {
        self.inner.sketch()
    }

    /// Kept embedded rows (diagnostics and tests).
    pub fn inner_rows(&self) -> &[SampledRow] {
        self.inner.rows()
    }
}

/// Output dimension of the estimator embedding: `rank + ⌈log₂ window⌉ + 8`.
pub fn embed_dim(window: usize, rank: usize) -> usize {
    let log2w = if window <= 1 {
        0
    } else {
        (usize::BITS - (window - 1).leading_zeros()) as usize
    };
    rank + log2w + 8
}

/// Sliding-window projection-cost-preserving row sampler.
#[derive(Debug, Clone)]
pub struct PcpSampler {
    cfg: SamplerConfig,
    rank: usize,
    est: ResidualEstimator,
    rows: Vec<SampledRow>,
    time: i64,
    batch: usize,
    since_walk: usize,
}

impl PcpSampler {
    /// Sampler for `dim`-column rows, window `window`, target rank `rank`,
    /// accuracy `eps`. Uses the sparse embedding with column sparsity
    /// `min(8, dim)` for the residual estimator.
    pub fn new(dim: usize, window: usize, rank: usize, eps: f64, seed: u64) -> Result<Self> {
        let kind = EmbedKind::Osnap { sparsity: DEFAULT_OSNAP_SPARSITY.min(dim.max(1)) };
        Self::with_embedding(dim, window, rank, eps, seed, kind)
    }

    /// Same, with an explicit embedding family for the estimator.
    pub fn with_embedding(
        dim: usize,
        window: usize,
        rank: usize,
        eps: f64,
        seed: u64,
        kind: EmbedKind,
    ) -> Result<Self> {
        let cfg = SamplerConfig::new(dim, window, eps, seed)?;
        let est = ResidualEstimator::new(dim, window, rank, seed, kind)?;
        Ok(PcpSampler {
            cfg,
            rank,
            est,
            rows: Vec::new(),
            time: i64::MIN,
            batch: 1,
            since_walk: 0,
        })
    }

    /// Amortize the re-sampling walk over batches of `batch` arrivals
    /// (rows are still stored immediately; queries flush first).
    pub fn with_batch(mut self, batch: usize) -> Result<Self> {
        if batch == 0 {
            return Err(Error::InvalidParameter("batch must be ≥ 1"));
        }
        self.batch = batch;
        Ok(self)
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Ingest the row arriving at time `t` (strictly increasing): advance
    /// the residual estimator, append the row unsampled, re-test all older
    /// rows with their per-suffix ridge weights, and expire the window.
    pub fn ingest(&mut self, r: &[f64], t: i64) -> Result<()> {
        if r.len() != self.cfg.dim {
            return Err(Error::DimensionMismatch { expected: self.cfg.dim, got: r.len() });
        }
        if !r.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if t <= self.time {
            return Err(Error::NonMonotoneTime);
        }
        self.time = t;
        self.est.ingest(r, t)?;
        self.rows.push(SampledRow::new(r.to_vec(), t));
        self.since_walk += 1;
        if self.since_walk >= self.batch {
            self.walk();
        }
        self.expire();
        Ok(())
    }

    /// Run any deferred re-sampling walk.
    pub fn flush(&mut self) {
        if self.since_walk > 0 && self.rows.len() > 1 {
            self.walk();
        }
        self.since_walk = 0;
    }

    /// Newest-to-oldest re-test of all rows older than the latest arrival.
    /// Row `j` is scored with ridge weight `λ_j = ζ(t_j)` — the estimated
    /// rank-`k` tail mass of the window suffix starting at `t_j` — against
    /// the kept rows after it, and survives with probability
    /// `min(q_j / p_j, 1)` for `q_j = min(2c·score, 1)`.
    fn walk(&mut self) {
        self.since_walk = 0;
        let len = self.rows.len();
        if len <= 1 {
            return;
        }
        let newest = len - 1;
        let cuts: Vec<i64> = self.rows[..newest].iter().map(|r| r.time).collect();
        let zetas = self.est.tail_estimates(&cuts);
        let mut gtail = Matrix::zeros(self.cfg.dim, self.cfg.dim);
        gtail.add_outer(&self.rows[newest].row, 1.0);
        let mut kept_older: Vec<SampledRow> = Vec::new();
        for j in (0..newest).rev() {
            let mut g = gtail.clone();
            g.add_outer(&self.rows[j].row, 1.0);
            let score = match RidgeScorer::new(&g, zetas[j]) {
                Ok(s) => s.quad(&self.rows[j].row).min(1.0),
                Err(_) => 0.0,
            };
            let q = (2.0 * self.cfg.c * score).min(1.0);
            let keep_p = (q / self.rows[j].prob).min(1.0);
            let u = rng::unit(
                self.cfg.seed,
                domain::PCP_KEEP,
                rng::coord(self.rows[j].time),
                rng::coord(self.time),
            );
            if u < keep_p {
                let mut kept = self.rows[j].clone();
                if q < kept.prob {
                    let f = libm::sqrt(kept.prob / q);
                    for v in &mut kept.row {
                        *v *= f;
                    }
                    kept.prob = q;
                }
                gtail.add_outer(&kept.row, 1.0);
                kept_older.push(kept);
            }
        }
        kept_older.reverse();
        kept_older.push(self.rows[newest].clone());
        self.rows = kept_older;
    }

    /// Drop rows that have slid out of the window `[t−W+1, t]`.
    fn expire(&mut self) {
        let boundary = self.time - self.cfg.window as i64 + 1;
        while self.rows.first().is_some_and(|r| r.time < boundary) {
            self.rows.remove(0);
        }
    }

    /// The projection-cost-preserving sample `M` (rescaled kept window
    /// rows); zero-row matrix when empty.
    pub fn sample(&mut self) -> Matrix {
        self.flush();
        let mut m = Matrix::zeros(0, self.cfg.dim);
        for r in &self.rows {
            m.push_row(&r.row).unwrap();
        }
        m
    }

    /// Surviving rows, oldest first (diagnostics and tests).
    pub fn rows(&self) -> &[SampledRow] {
        &self.rows
    }

    /// Tail estimate for a cut, from the live estimator.
    pub fn tail_estimate(&mut self, cut: i64) -> f64 {
        self.est.tail_estimate(cut)
    }

    /// Latest ingested timestamp (`i64::MIN` before the first row).
    pub fn current_time(&self) -> i64 {
        self.time
    }
}
