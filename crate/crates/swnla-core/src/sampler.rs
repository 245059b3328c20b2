//! Randomized sliding-window spectral sketch via reverse-online
//! ridge-leverage row sampling.
//!
//! The sketch keeps a small set of rescaled window rows. Every arrival is
//! appended unsampled, then all *previously* stored rows are re-tested from
//! newest to oldest: row `m` survives a pass with probability proportional
//! to its self-inclusive ridge score against the Gram of the kept rows that
//! arrived after it,
//!
//! ```text
//! score(m) = min( m · (G_tail + mᵀm + λI)† · mᵀ , 1 ),
//! ```
//!
//! and a surviving row is rescaled so that its outer product stays unbiased
//! (`row = original/√p` where `p` is the cumulative keep probability). Rows
//! whose score keeps shrinking as newer data accumulates are eventually
//! discarded, which is what lets the sketch forget the pre-window past
//! gracefully instead of subtracting it. Expiry then drops rows that have
//! slid out of the window entirely.
//!
//! The stacked kept rows `M` satisfy `(1−ε)·AᵀA ⪯ MᵀM ⪯ (1+ε)·AᵀA` for the
//! exact window Gram with high probability, using
//! `O((n/ε²)·log n·log(n/ε))` stored rows.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{norm_sq, Matrix};
use crate::rng::{self, domain};
use crate::scores::{self, RidgeScorer};

/// Above this stored-row count, walk scores come from embedded shadow rows
/// instead of full-dimension Grams (performance only; the factor-2 score
/// slack is absorbed by the oversampling constant).
pub const EXACT_SCORE_LIMIT: usize = 512;

/// Output dimension of the score-estimation embedding.
pub const BATCH_EMBED_DIM: usize = 64;

/// A stored row together with its cumulative keep probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRow {
    /// The row, rescaled by `1/√prob` relative to the original.
    pub row: Vec<f64>,
    /// Cumulative keep probability in `(0, 1]`.
    pub prob: f64,
    /// Arrival time.
    pub time: i64,
    /// Euclidean norm of the original (pre-scaling) row.
    pub raw_norm: f64,
}

impl SampledRow {
    /// Wrap a fresh arrival: kept with probability 1, unscaled.
    pub fn new(row: Vec<f64>, time: i64) -> Self {
        let raw_norm = libm::sqrt(norm_sq(&row));
        SampledRow { row, prob: 1.0, time, raw_norm }
    }
}

/// Shared sampler parameters. The oversampling budget is
/// `c = alpha_os·ln(n)/ε²` with `alpha_os = 12·p` for the smallest `p ≥ 1`
/// with `W < n^p`; rows are kept with probability `min(2c·score, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Row dimension.
    pub dim: usize,
    /// Sliding-window length in rows.
    pub window: usize,
    /// Relative spectral accuracy, in `(0, 1)`. The stored-row bound is
    /// analyzed for small `eps`; larger values still run and simply keep
    /// fewer rows.
    pub eps: f64,
    /// Smallest exponent `p ≥ 1` with `window < dim^p`.
    pub p_exponent: f64,
    /// Oversampling constant `12·p_exponent`.
    pub alpha_os: f64,
    /// Derived keep-probability budget `alpha_os·ln(dim)/eps²`, floored at 1.
    pub c: f64,
    /// Ridge weight added to every score Gram (0 for the pure spectral
    /// sketch; low-rank callers pass their tail mass here).
    pub lambda: f64,
    /// Base RNG seed; every keep decision is keyed by
    /// `(seed, row time, pass time)` and is replayable.
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(dim: usize, window: usize, eps: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be ≥ 1"));
        }
        if window == 0 {
            return Err(Error::InvalidParameter("window must be ≥ 1"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter("eps must be in (0,1)"));
        }
        let ln_n = libm::log((dim.max(2)) as f64);
        let p_exponent = (libm::log((window + 1) as f64) / ln_n).max(1.0);
        let alpha_os = 12.0 * p_exponent;
        let c = (alpha_os * ln_n / (eps * eps)).max(1.0);
        Ok(SamplerConfig {
            dim,
            window,
            eps,
            p_exponent,
            alpha_os,
            c,
            lambda: 0.0,
            seed,
        })
    }

    /// Use a fixed ridge weight for every score (default 0).
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be finite and ≥ 0"));
        }
        self.lambda = lambda;
        Ok(self)
    }
}

/// One sampling pass over `rows`: each row is scored against
/// `full-input Gram + gram_tail + λI` with `λ = delta/eps`, then kept
/// independently with probability `min(q/p, 1)` for `q = min(2c·score, 1)`,
/// and rescaled so its cumulative probability becomes `min(q, p)`.
///
/// `pass` salts the per-row keep draws; repeated calls with the same
/// `(cfg.seed, row times, pass)` replay identically.
pub fn downsample_rows(
    rows: &[SampledRow],
    gram_tail: &Matrix,
    cfg: &SamplerConfig,
    delta: f64,
    pass: i64,
) -> Result<Vec<SampledRow>> {
    if gram_tail.rows() != cfg.dim || gram_tail.cols() != cfg.dim {
        return Err(Error::DimensionMismatch { expected: cfg.dim, got: gram_tail.rows() });
    }
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let lambda = if delta == 0.0 { 0.0 } else { delta / cfg.eps };
    let mut gram = gram_tail.clone();
    for r in rows {
        if r.row.len() != cfg.dim {
            return Err(Error::DimensionMismatch { expected: cfg.dim, got: r.row.len() });
        }
        gram.add_outer(&r.row, 1.0);
    }
    let scorer = RidgeScorer::new(&gram, lambda)?;
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let score = scorer.quad(&r.row).min(1.0);
        let q = (2.0 * cfg.c * score).min(1.0);
        let keep_p = (q / r.prob).min(1.0);
        let u = rng::unit(cfg.seed, domain::SAMPLER_KEEP, rng::coord(r.time), rng::coord(pass));
        if u < keep_p {
            let mut kept = r.clone();
            if q < kept.prob {
                let f = libm::sqrt(kept.prob / q);
                for v in &mut kept.row {
                    *v *= f;
                }
                kept.prob = q;
            }
            out.push(kept);
        }
    }
    Ok(out)
}

/// Per-row reverse-online ridge scores of the stored rows, estimated
/// through a dense random embedding of dimension [`BATCH_EMBED_DIM`].
/// Estimates are within a factor 2 of the exact suffix-Gram scores; callers
/// absorb the slack by oversampling.
pub fn batched_reverse_scores(rows: &[SampledRow], cfg: &SamplerConfig) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let embed = crate::embed::Embedding::dense_jl(cfg.dim, BATCH_EMBED_DIM, cfg.seed ^ 0x9e37_79b9)?;
    let mut shadow = Matrix::zeros(0, BATCH_EMBED_DIM);
    for r in rows {
        shadow.push_row(&embed.apply(&r.row)?)?;
    }
    scores::reverse_online_ridge_scores(&shadow, cfg.lambda)
}

/// Randomized sliding-window spectral sketch.
///
/// `ingest` appends the arrival, re-tests all older stored rows against the
/// growing kept-suffix Gram (newest first), and expires rows that left the
/// window. `sketch` stacks the surviving rescaled rows.
#[derive(Debug, Clone)]
pub struct RowSampler {
    cfg: SamplerConfig,
    rows: Vec<SampledRow>,
    time: i64,
    batch: usize,
    since_walk: usize,
}

impl RowSampler {
    /// Per-arrival maintenance (batch size 1).
    pub fn new(cfg: SamplerConfig) -> Self {
        RowSampler { cfg, rows: Vec::new(), time: i64::MIN, batch: 1, since_walk: 0 }
    }

    /// Amortize the re-sampling walk over batches of `batch` arrivals.
    /// Arrivals are still stored immediately; only the walk is deferred,
    /// and queries flush it first.
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

    /// Ingest the row arriving at time `t` (strictly increasing).
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

    /// Re-test all rows older than the newest arrival, newest first. The
    /// kept-suffix Gram starts from the newest row (which is never
    /// down-sampled on its own arrival) and accumulates survivors.
    fn walk(&mut self) {
        self.since_walk = 0;
        let len = self.rows.len();
        if len <= 1 {
            return;
        }
        let newest = len - 1;
        let use_shadow = len > EXACT_SCORE_LIMIT && self.cfg.dim > BATCH_EMBED_DIM;
        if use_shadow {
            self.walk_embedded(newest);
            return;
        }
        let mut gtail = Matrix::zeros(self.cfg.dim, self.cfg.dim);
        gtail.add_outer(&self.rows[newest].row, 1.0);
        let mut keep = Vec::with_capacity(len);
        // Walk indices newest-1 .. 0; removals are deferred to one rebuild.
        let mut kept_older: Vec<SampledRow> = Vec::new();
        for j in (0..newest).rev() {
            let mut g = gtail.clone();
            g.add_outer(&self.rows[j].row, 1.0);
            // The Gram is symmetric PSD by construction, so scoring cannot
            // fail; fall back to "discard" on numerical breakdown.
            let score = match RidgeScorer::new(&g, self.cfg.lambda) {
                Ok(s) => s.quad(&self.rows[j].row).min(1.0),
                Err(_) => 0.0,
            };
            let q = (2.0 * self.cfg.c * score).min(1.0);
            let keep_p = (q / self.rows[j].prob).min(1.0);
            let u = rng::unit(
                self.cfg.seed,
                domain::SAMPLER_KEEP,
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
        keep.extend(kept_older);
        keep.push(self.rows[newest].clone());
        self.rows = keep;
    }

    /// Same walk, but scores come from embedded shadow rows so per-row work
    /// is independent of the ambient dimension.
    fn walk_embedded(&mut self, newest: usize) {
        let embed = match crate::embed::Embedding::dense_jl(
            self.cfg.dim,
            BATCH_EMBED_DIM,
            self.cfg.seed ^ 0x9e37_79b9,
        ) {
            Ok(e) => e,
            Err(_) => return,
        };
        let shadow: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| embed.apply(&r.row).unwrap_or_else(|_| alloc::vec![0.0; BATCH_EMBED_DIM]))
            .collect();
        let mut gtail = Matrix::zeros(BATCH_EMBED_DIM, BATCH_EMBED_DIM);
        gtail.add_outer(&shadow[newest], 1.0);
        let mut kept_older: Vec<SampledRow> = Vec::new();
        for j in (0..newest).rev() {
            let mut g = gtail.clone();
            g.add_outer(&shadow[j], 1.0);
            let score = match RidgeScorer::new(&g, self.cfg.lambda) {
                Ok(s) => s.quad(&shadow[j]).min(1.0),
                Err(_) => 0.0,
            };
            let q = (2.0 * self.cfg.c * score).min(1.0);
            let keep_p = (q / self.rows[j].prob).min(1.0);
            let u = rng::unit(
                self.cfg.seed,
                domain::SAMPLER_KEEP,
                rng::coord(self.rows[j].time),
                rng::coord(self.time),
            );
            if u < keep_p {
                let mut kept = self.rows[j].clone();
                let mut srow = shadow[j].clone();
                if q < kept.prob {
                    let f = libm::sqrt(kept.prob / q);
                    for v in &mut kept.row {
                        *v *= f;
                    }
                    for v in &mut srow {
                        *v *= f;
                    }
                    kept.prob = q;
                }
                gtail.add_outer(&srow, 1.0);
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

    /// Stacked surviving rescaled rows `M` with
    /// `(1−ε)AᵀA ⪯ MᵀM ⪯ (1+ε)AᵀA` w.h.p.; zero-row matrix when empty.
    pub fn sketch(&mut self) -> Matrix {
        self.flush();
        self.stack(i64::MIN)
    }

    /// Stacked surviving rows with `time ≥ cut` — the same guarantee holds
    /// against the exact Gram of that suffix.
    pub fn suffix_sketch(&mut self, cut: i64) -> Matrix {
        self.flush();
        self.stack(cut)
    }

    fn stack(&self, cut: i64) -> Matrix {
        let mut m = Matrix::zeros(0, self.cfg.dim);
        for r in &self.rows {
            if r.time >= cut {
                // Row length was validated at ingest.
                m.push_row(&r.row).unwrap();
            }
        }
        m
    }

    /// Surviving rows, oldest first (diagnostics and tests).
    pub fn rows(&self) -> &[SampledRow] {
        &self.rows
    }

    /// Latest ingested timestamp (`i64::MIN` before the first row).
    pub fn current_time(&self) -> i64 {
        self.time
    }

    /// Serialize the flushed state (config, time, rows) — little-endian.
    pub fn to_bytes(&mut self) -> Vec<u8> {
        self.flush();
        let mut out = Vec::new();
        out.extend_from_slice(b"SWSAMP1\0");
        out.extend_from_slice(&(self.cfg.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.cfg.window as u64).to_le_bytes());
        out.extend_from_slice(&self.cfg.eps.to_le_bytes());
        out.extend_from_slice(&self.cfg.lambda.to_le_bytes());
        out.extend_from_slice(&self.cfg.seed.to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        out.extend_from_slice(&(self.rows.len() as u64).to_le_bytes());
        for r in &self.rows {
            out.extend_from_slice(&r.prob.to_le_bytes());
            out.extend_from_slice(&r.time.to_le_bytes());
            out.extend_from_slice(&r.raw_norm.to_le_bytes());
            for v in &r.row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Reconstruct from [`Self::to_bytes`] output (batch size resets to 1).
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let need = |ok: bool| if ok { Ok(()) } else { Err(Error::Corrupt("truncated")) };
        let mut pos = 0usize;
        need(bytes.len() >= 8)?;
        if &bytes[..8] != b"SWSAMP1\0" {
            return Err(Error::Corrupt("bad magic"));
        }
        pos += 8;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            if *pos + n > bytes.len() {
                return Err(Error::Corrupt("truncated"));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let dim = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let window = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
        let eps = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let lambda = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let seed = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let time = i64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let count = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
        let cfg = SamplerConfig::new(dim, window, eps, seed)?.with_lambda(lambda)?;
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let prob = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            let rt = i64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            let raw_norm = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            let mut row = Vec::with_capacity(dim);
            for _ in 0..dim {
                row.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
            }
            rows.push(SampledRow { row, prob, time: rt, raw_norm });
        }
        let mut s = RowSampler::new(cfg);
        s.time = time;
        s.rows = rows;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::psd_dominates;
    use alloc::vec;

    fn exact_window_gram(rows: &[Vec<f64>], t: usize, w: usize, n: usize) -> Matrix {
        let lo = (t + 1).saturating_sub(w);
        let mut g = Matrix::zeros(n, n);
        for r in &rows[lo..=t] {
            g.add_outer(r, 1.0);
        }
        g
    }

    #[test]
    fn empty_input_downsamples_to_empty() {
        let cfg = SamplerConfig::new(3, 8, 0.2, 7).unwrap();
        let out = downsample_rows(&[], &Matrix::zeros(3, 3), &cfg, 0.0, 0).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn single_row_with_zero_tail_is_always_kept_unchanged() {
        // Self-inclusive score of a lone row is 1, so q = min(2c, 1) = 1.
        let cfg = SamplerConfig::new(3, 8, 0.2, 7).unwrap();
        let r = SampledRow::new(vec![0.5, -1.0, 2.0], 4);
        for seed in 0..50 {
            let mut c = cfg.clone();
            c.seed = seed;
            let out = downsample_rows(&[r.clone()], &Matrix::zeros(3, 3), &c, 0.0, 1).unwrap();
            assert_eq!(out.len(), 1);
            assert_eq!(out[0].row, r.row);
            assert_eq!(out[0].prob, 1.0);
        }
    }

    #[test]
    fn keep_frequency_matches_computed_probability() {
        // Diagonal instance so the keep probabilities have closed forms:
        // rows e₁, 2e₂, e₃/2 against tail 40·I give scores 1/41, 4/44,
        // 0.25/40.25 and q = min(2c·score, 1). 20k seeded trials must land
        // within 3 binomial standard deviations of each q.
        let cfg = SamplerConfig::new(3, 2, 0.9, 0).unwrap();
        let rows = [
            SampledRow::new(vec![1.0, 0.0, 0.0], 10),
            SampledRow::new(vec![0.0, 2.0, 0.0], 11),
            SampledRow::new(vec![0.0, 0.0, 0.5], 12),
        ];
        let mut tail = Matrix::zeros(3, 3);
        tail.add_diag(40.0);
        let q: Vec<f64> = [1.0 / 41.0, 4.0 / 44.0, 0.25 / 40.25]
            .iter()
            .map(|s| (2.0 * cfg.c * s).min(1.0))
            .collect();
        assert!(q[0] < 1.0 && q[1] == 1.0 && q[2] < 1.0, "q = {q:?}");

        let trials = 20_000u64;
        let mut kept = [0u64; 3];
        for seed in 0..trials {
            let mut c = cfg.clone();
            c.seed = seed;
            let out = downsample_rows(&rows, &tail, &c, 0.0, 3).unwrap();
            for k in &out {
                let idx = (k.time - 10) as usize;
                kept[idx] += 1;
                // Surviving copies must report their cumulative probability.
                assert!((k.prob - q[idx].min(1.0)).abs() < 1e-12);
            }
        }
        for i in 0..3 {
            let freq = kept[i] as f64 / trials as f64;
            let sigma = libm::sqrt(q[i] * (1.0 - q[i]) / trials as f64);
            assert!(
                (freq - q[i]).abs() <= 3.0 * sigma + 1e-12,
                "row {i}: freq {freq} vs q {} (σ={sigma})",
                q[i]
            );
        }
    }

    #[test]
    fn rescaled_row_restores_unbiased_outer_product() {
        // A row kept at probability q is stored as row/√q, so prob·outer of
        // the stored row equals the original outer product.
        let cfg = SamplerConfig::new(2, 2, 0.9, 0).unwrap();
        let rows = [SampledRow::new(vec![3.0, -1.0], 5)];
        let mut tail = Matrix::zeros(2, 2);
        tail.add_diag(500.0);
        let mut seen = false;
        for seed in 0..200 {
            let mut c = cfg.clone();
            c.seed = seed;
            let out = downsample_rows(&rows, &tail, &c, 0.0, 9).unwrap();
            if let Some(k) = out.first() {
                seen = true;
                assert!(k.prob < 1.0);
                let back: Vec<f64> = k.row.iter().map(|v| v * libm::sqrt(k.prob)).collect();
                assert!((back[0] - 3.0).abs() < 1e-12 && (back[1] + 1.0).abs() < 1e-12);
                assert_eq!(k.raw_norm, libm::sqrt(10.0));
            }
        }
        assert!(seen, "no trial kept the row");
    }

    #[test]
    fn newest_row_is_present_with_probability_one_after_ingest() {
        let cfg = SamplerConfig::new(3, 16, 0.2, 42).unwrap();
        let mut s = RowSampler::new(cfg);
        for t in 0..20i64 {
            let x = t as f64;
            s.ingest(&[libm::sin(x), libm::cos(2.0 * x), 0.3 * x], t).unwrap();
            let last = s.rows().last().unwrap();
            assert_eq!(last.time, t);
            assert_eq!(last.prob, 1.0);
        }
    }

    #[test]
    fn all_zero_stream_keeps_zero_gram() {
        let cfg = SamplerConfig::new(2, 8, 0.2, 1).unwrap();
        let mut s = RowSampler::new(cfg);
        for t in 0..12 {
            s.ingest(&[0.0, 0.0], t).unwrap();
        }
        let m = s.sketch();
        assert_eq!(m.gram().frobenius_sq(), 0.0);
        for r in s.rows() {
            assert!(norm_sq(&r.row) == 0.0);
        }
    }

    #[test]
    fn distinct_basis_directions_are_all_kept_at_probability_one() {
        // Each row is novel relative to everything after it, so its
        // self-inclusive score is 1 and q = 1: deterministic keeps.
        let n = 4;
        let cfg = SamplerConfig::new(n, 16, 0.1, 9).unwrap();
        let mut s = RowSampler::new(cfg);
        for t in 0..n {
            let mut r = vec![0.0; n];
            r[t] = (t + 1) as f64;
            s.ingest(&r, t as i64).unwrap();
        }
        assert_eq!(s.rows().len(), n);
        for (t, r) in s.rows().iter().enumerate() {
            assert_eq!(r.prob, 1.0);
            assert_eq!(r.row[t], (t + 1) as f64);
        }
    }

    #[test]
    fn expired_rows_are_dropped() {
        let cfg = SamplerConfig::new(2, 4, 0.2, 3).unwrap();
        let mut s = RowSampler::new(cfg);
        for t in 0..10i64 {
            s.ingest(&[1.0, t as f64 * 0.1], t).unwrap();
            for r in s.rows() {
                assert!(r.time >= t - 3);
            }
        }
    }

    #[test]
    fn sketch_gram_sandwiches_window_gram_on_random_streams() {
        // Randomized guarantee: demand ≥ 90% of seeds succeed at every step.
        let n = 4;
        let w = 32;
        let eps = 0.2;
        let mut ok = 0;
        let seeds = 30u64;
        for seed in 0..seeds {
            let cfg = SamplerConfig::new(n, w, eps, seed).unwrap();
            let mut s = RowSampler::new(cfg);
            let mut rows: Vec<Vec<f64>> = vec![];
            let mut good = true;
            for t in 0..60usize {
                let mut r = vec![0.0; n];
                for (c, v) in r.iter_mut().enumerate() {
                    let (g, _) = rng::gauss_pair(seed, domain::GENERATE, t as u64, c as u64);
                    *v = g;
                }
                rows.push(r.clone());
                s.ingest(&r, t as i64).unwrap();
                let m = s.sketch();
                let g = m.gram();
                let exact = exact_window_gram(&rows, t, w, n);
                let lo = psd_dominates(&exact.scale(1.0 - eps), &g, 1e-7).unwrap();
                let hi = psd_dominates(&g, &exact.scale(1.0 + eps), 1e-7).unwrap();
                if !(lo && hi) {
                    good = false;
                    break;
                }
            }
            if good {
                ok += 1;
            }
        }
        assert!(ok * 10 >= seeds * 9, "only {ok}/{seeds} seeds passed");
    }

    #[test]
    fn stored_row_count_stays_logarithmic() {
        let n = 4;
        let eps = 0.2f64;
        let w = 64;
        let mut worst = 0usize;
        for seed in 0..10u64 {
            let cfg = SamplerConfig::new(n, w, eps, seed).unwrap();
            let mut s = RowSampler::new(cfg);
            for t in 0..128usize {
                let mut r = vec![0.0; n];
                for (c, v) in r.iter_mut().enumerate() {
                    let (g, _) = rng::gauss_pair(seed, domain::GENERATE, t as u64, c as u64);
                    *v = g;
                }
                s.ingest(&r, t as i64).unwrap();
                worst = worst.max(s.rows().len());
            }
        }
        let nf = n as f64;
        let bound = 40.0 * (nf / (eps * eps)) * libm::log(nf) * libm::log(nf / eps);
        assert!((worst as f64) <= bound, "worst {worst} vs bound {bound}");
    }

    #[test]
    fn replay_with_same_seed_is_identical() {
        let run = |seed: u64| {
            let cfg = SamplerConfig::new(3, 16, 0.25, seed).unwrap();
            let mut s = RowSampler::new(cfg);
            for t in 0..40usize {
                let mut r = vec![0.0; 3];
                for (c, v) in r.iter_mut().enumerate() {
                    let (g, _) = rng::gauss_pair(seed, domain::GENERATE, t as u64, c as u64);
                    *v = g;
                }
                s.ingest(&r, t as i64).unwrap();
            }
            s
        };
        let a = run(5);
        let b = run(5);
        assert_eq!(a.rows(), b.rows());
        let c = run(6);
        assert!(a.rows() != c.rows());
    }

    #[test]
    fn batched_walk_still_sandwiches() {
        let n = 3;
        let w = 24;
        let eps = 0.25;
        let mut ok = 0;
        for seed in 0..20u64 {
            let cfg = SamplerConfig::new(n, w, eps, seed).unwrap();
            let mut s = RowSampler::new(cfg).with_batch(8).unwrap();
            let mut rows: Vec<Vec<f64>> = vec![];
            let mut good = true;
            for t in 0..48usize {
                let mut r = vec![0.0; n];
                for (c, v) in r.iter_mut().enumerate() {
                    let (g, _) = rng::gauss_pair(seed, domain::GENERATE, t as u64, c as u64);
                    *v = g;
                }
                rows.push(r.clone());
                s.ingest(&r, t as i64).unwrap();
                // Query on a stride co-prime with the batch so some flushes
                // land mid-batch and some right after a walk.
                if t % 5 == 4 || t == 47 {
                    let g = s.sketch().gram();
                    let exact = exact_window_gram(&rows, t, w, n);
                    if !(psd_dominates(&exact.scale(1.0 - eps), &g, 1e-7).unwrap()
                        && psd_dominates(&g, &exact.scale(1.0 + eps), 1e-7).unwrap())
                    {
                        good = false;
                        break;
                    }
                }
            }
            if good {
                ok += 1;
            }
        }
        assert!(ok >= 18, "only {ok}/20 seeds passed");
    }

    #[test]
    fn surviving_probabilities_respect_oracle_score_bounds() {
        // Long duplicate run: the exact reverse-online score of the j-th
        // kept duplicate is ≈ 1/(later duplicates), so cumulative keep
        // probabilities must straddle c·score (lower) and 2(1+6ε)c·score
        // (upper), both clamped at 1.
        let n = 2;
        let w = 256;
        let eps = 0.99;
        let mut pass = 0;
        let seeds = 20u64;
        for seed in 0..seeds {
            let cfg = SamplerConfig::new(n, w, eps, seed).unwrap();
            let c = cfg.c;
            let mut s = RowSampler::new(cfg);
            let mut rows: Vec<Vec<f64>> = vec![];
            for t in 0..w {
                let r = vec![1.0, 0.0];
                rows.push(r.clone());
                s.ingest(&r, t as i64).unwrap();
            }
            // Exact reverse-online scores over the true window rows.
            let exact = Matrix::from_rows(&rows, n).unwrap();
            let oracle = scores::reverse_online_ridge_scores(&exact, 0.0).unwrap();
            let mut good = true;
            for r in s.rows() {
                let l = oracle[r.time as usize];
                let lo = (c * l).min(1.0);
                let hi = (2.0 * (1.0 + 6.0 * eps) * c * l).min(1.0);
                if !(r.prob >= lo * (1.0 - 1e-9) && r.prob <= hi * (1.0 + 1e-9)) {
                    good = false;
                }
            }
            if good {
                pass += 1;
            }
        }
        assert!(pass * 10 >= seeds * 9, "only {pass}/{seeds} seeds passed");
    }

    #[test]
    fn batched_score_estimates_stay_within_factor_two() {
        let n = 5;
        let cfg = SamplerConfig::new(n, 16, 0.2, 0).unwrap();
        for seed in 0..200u64 {
            let mut cfg = cfg.clone();
            cfg.seed = seed;
            let mut rows = Vec::new();
            let mut stack: Vec<Vec<f64>> = Vec::new();
            for t in 0..6usize {
                let mut r = vec![0.0; n];
                for (c, v) in r.iter_mut().enumerate() {
                    let (g, _) = rng::gauss_pair(seed, domain::GENERATE, t as u64, c as u64);
                    *v = g;
                }
                stack.push(r.clone());
                rows.push(SampledRow::new(r, t as i64));
            }
            let exact =
                scores::reverse_online_ridge_scores(&Matrix::from_rows(&stack, n).unwrap(), 0.0)
                    .unwrap();
            let est = batched_reverse_scores(&rows, &cfg).unwrap();
            for (e, x) in est.iter().zip(&exact) {
                assert!(*e >= 0.5 * x - 1e-9 && *e <= 2.0 * x + 1e-9, "est {e} vs exact {x}");
            }
        }
    }

    #[test]
    fn batched_scores_handle_edge_rows() {
        let cfg = SamplerConfig::new(3, 8, 0.2, 11).unwrap();
        let one = [SampledRow::new(vec![2.0, 0.0, 1.0], 0)];
        assert!((batched_reverse_scores(&one, &cfg).unwrap()[0] - 1.0).abs() < 1e-9);
        let zero = [SampledRow::new(vec![0.0; 3], 0), SampledRow::new(vec![1.0, 0.0, 0.0], 1)];
        let est = batched_reverse_scores(&zero, &cfg).unwrap();
        assert_eq!(est[0], 0.0);
    }

    #[test]
    fn serialization_round_trips_and_resumes_identically() {
        let cfg = SamplerConfig::new(3, 16, 0.3, 77).unwrap();
        let mut s = RowSampler::new(cfg);
        let row = |t: usize| {
            let mut r = vec![0.0; 3];
            for (c, v) in r.iter_mut().enumerate() {
                let (g, _) = rng::gauss_pair(77, domain::GENERATE, t as u64, c as u64);
                *v = g;
            }
            r
        };
        for t in 0..30usize {
            s.ingest(&row(t), t as i64).unwrap();
        }
        let bytes = s.to_bytes();
        let mut back = RowSampler::from_bytes(&bytes).unwrap();
        assert_eq!(s.rows(), back.rows());
        for t in 30..45usize {
            s.ingest(&row(t), t as i64).unwrap();
            back.ingest(&row(t), t as i64).unwrap();
        }
        assert_eq!(s.rows(), back.rows());
    }

    #[test]
    fn rejects_bad_parameters_and_inputs() {
        assert!(SamplerConfig::new(0, 8, 0.2, 0).is_err());
        assert!(SamplerConfig::new(3, 0, 0.2, 0).is_err());
        assert!(SamplerConfig::new(3, 8, 0.0, 0).is_err());
        assert!(SamplerConfig::new(3, 8, 1.0, 0).is_err());
        let cfg = SamplerConfig::new(3, 8, 0.2, 0).unwrap();
        let mut s = RowSampler::new(cfg);
        assert!(s.ingest(&[1.0], 0).is_err());
        s.ingest(&[1.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(s.ingest(&[1.0, 0.0, 0.0], 0), Err(Error::NonMonotoneTime));
    }
}
