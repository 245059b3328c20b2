//! Entrywise ℓ1 subspace approximation over sliding windows.
//!
//! The ℓ2 machinery elsewhere in this crate preserves `‖Ax‖₂`; this module
//! preserves `‖Ax‖₁`. The pieces:
//!
//! - [`L1Basis`]: a well-conditioned basis `U` for the column space of a
//!   matrix `A = U·S`, built by QR-style orthonormalization followed by
//!   iterative ellipsoidal rounding of the `‖Qx‖₁` unit ball. The measured
//!   conditioning constants `α = ‖U‖₁` and `β ≥ max_x ‖x‖_∞/‖Ux‖₁` feed
//!   the sampling caps — looser constants only oversample.
//! - [`L1Sampler`]: a streaming row sampler. On each arrival it recomputes
//!   the basis of its kept rows plus the newcomer, keeps prior row `i` with
//!   probability `min(τ_i/p_i, 1)` where `τ_i = min(r₁r₂·w_i/‖U‖₁, 1)`,
//!   and rescales survivors by `1/p_i` (ℓ1 scaling, not `1/√p`) at query
//!   time. `r₁ = 32αβ/ε²·(n·ln(12/ε) + ln(2/δ))` and `r₂ = nαβ`.
//! - [`L1Sliding`]: the window driver. It runs a deterministic spectral
//!   chain at the refined accuracy `ε′ = √ε/(3nᶜ)` purely for its retained
//!   timestamps, spawns one sampler (at accuracy `ε/3`) per arrival, and
//!   deletes samplers whose timestamp leaves the chain; queries answer from
//!   the sampler at the oldest retained timestamp. Inputs must be integer
//!   rows with entries in `[−nᶜ, nᶜ]` — that integrality is what lets a
//!   relative ℓ1 change force a relative ℓ2 change (see
//!   [`l1_l2_bridge_holds`]) and hence lets an ℓ2 chain decide which
//!   timestamps matter for ℓ1.
//! - [`quantize_rows`]: reduces unbounded real inputs to the integer
//!   regime by scaling to `[−nᶜ, nᶜ]` and rounding to the nearest integer,
//!   at an additive cost of `‖A‖_∞·‖v‖₁/nᶜ` plus the sketch's relative
//!   error.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factor::{svd, sym_eigen};
use crate::matrix::{l1_norm, norm_sq, Matrix};
use crate::rng::{self, domain};
use crate::sampler::SampledRow;
use crate::spectral::SpectralHistogram;

/// Cap on ellipsoidal-rounding sweeps when building a basis.
const ROUNDING_MAX_ITERS: usize = 50;
/// Stop rounding once `‖U‖₁` moves by less than this relative amount.
const ROUNDING_STALL: f64 = 0.05;
/// Random probes (beyond the coordinate vectors) used to measure `β`.
const BETA_PROBES: usize = 64;
/// Safety factor applied to the probe-measured `β`; it widens the caps.
const BETA_SLACK: f64 = 2.0;
/// Fixed seed for the deterministic `β` probes.
const BETA_PROBE_SEED: u64 = 0x6c1e_77ab_3d0f_9e21;

/// Sum of absolute values of all entries.
pub fn entrywise_l1(m: &Matrix) -> f64 {
    m.data().iter().map(|v| v.abs()).sum()
}

/// A well-conditioned basis `U` for the column space of some `A`, with the
/// change of basis `S` such that `U·S = A`, and measured conditioning
/// constants: `alpha = ‖U‖₁` and `beta` an upper bound (with slack) on
/// `‖x‖_∞/‖Ux‖₁` over nonzero `x`.
#[derive(Debug, Clone)]
pub struct L1Basis {
    u: Matrix,
    change: Matrix,
    alpha: f64,
    beta: f64,
}

/// Symmetric PSD square root and inverse square root, with eigenvalues
/// floored relative to the largest to keep the inverse finite.
fn psd_sqrt_pair(m: &Matrix) -> (Matrix, Matrix) {
    let n = m.rows();
    let (evals, vecs) = sym_eigen(m);
    let floor = evals.first().copied().unwrap_or(0.0).max(0.0) * 1e-14;
    let mut g = Matrix::zeros(n, n);
    let mut ginv = Matrix::zeros(n, n);
    let mut col = alloc::vec![0.0; n];
    for (j, lam) in evals.iter().enumerate() {
        let lam = lam.max(floor);
        if lam <= 0.0 {
            continue;
        }
        for (i, c) in col.iter_mut().enumerate() {
            *c = vecs.get(i, j);
        }
        let s = libm::sqrt(lam);
        g.add_outer(&col, s);
        ginv.add_outer(&col, 1.0 / s);
    }
    (g, ginv)
}

impl L1Basis {
    /// Build a basis for the column space of `a` (rows are observations).
    /// Fails on an empty or rank-zero input.
    pub fn compute(a: &Matrix) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::Empty);
        }
        let f = svd(a);
        let top = f.s.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return Err(Error::InvalidParameter("input has rank zero"));
        }
        let rank = f.s.iter().filter(|s| **s > top * 1e-12).count();

        // Orthonormal start: U = Q, S = diag(σ)·Vᵀ, so U·S = A.
        let mut u = Matrix::zeros(a.rows(), rank);
        for i in 0..a.rows() {
            for j in 0..rank {
                u.set(i, j, f.u.get(i, j));
            }
        }
        let mut change = Matrix::zeros(rank, a.cols());
        for j in 0..rank {
            for c in 0..a.cols() {
                change.set(j, c, f.s[j] * f.vt.get(j, c));
            }
        }

        // Ellipsoidal rounding: reweight by ℓ1 row norms, then normalize by
        // the symmetric square root of the reweighted Gram. Each step
        // shrinks ‖U‖₁ toward a balanced basis; stop when it stalls.
        let mut prev = entrywise_l1(&u);
        for _ in 0..ROUNDING_MAX_ITERS {
            let wmax = (0..u.rows()).map(|i| l1_norm(u.row(i))).fold(0.0, f64::max);
            let mut gram = Matrix::zeros(rank, rank);
            for i in 0..u.rows() {
                let w = l1_norm(u.row(i)).max(wmax * 1e-12);
                if w > 0.0 {
                    gram.add_outer(u.row(i), 1.0 / w);
                }
            }
            let (g, ginv) = psd_sqrt_pair(&gram);
            u = u.matmul(&ginv)?;
            change = g.matmul(&change)?;
            let cur = entrywise_l1(&u);
            let stalled = (cur - prev).abs() <= ROUNDING_STALL * prev;
            prev = cur;
            if stalled {
                break;
            }
        }

        let alpha = entrywise_l1(&u);
        // Measure β on the coordinate vectors plus fixed random probes; the
        // slack multiplier covers directions the probes miss.
        let mut beta_raw = 0.0f64;
        let mut probe = alloc::vec![0.0; rank];
        for j in 0..rank + BETA_PROBES {
            for (c, v) in probe.iter_mut().enumerate() {
                *v = if j < rank {
                    if c == j { 1.0 } else { 0.0 }
                } else {
                    rng::gauss_pair(BETA_PROBE_SEED, domain::GENERATE, j as u64, c as u64).0
                };
            }
            let image = l1_norm(&u.matvec(&probe)?);
            let linf = probe.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if image > 0.0 {
                beta_raw = beta_raw.max(linf / image);
            }
        }
        Ok(L1Basis { u, change, alpha, beta: beta_raw * BETA_SLACK })
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    /// `S` with `U·S` reproducing the input.
    pub fn change_of_basis(&self) -> &Matrix {
        &self.change
    }

    /// `‖U‖₁` (entrywise).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Measured bound on `‖x‖_∞/‖Ux‖₁`, including slack.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Per-row ℓ1 norms of `U` — the ℓ1 leverage scores.
    pub fn leverage_scores(&self) -> Vec<f64> {
        (0..self.u.rows()).map(|i| l1_norm(self.u.row(i))).collect()
    }
}

/// Streaming ℓ1 row sampler: keeps a subset of the rows seen so far whose
/// `1/p`-rescaled stack preserves `‖·x‖₁` for every `x`.
#[derive(Debug, Clone)]
pub struct L1Sampler {
    dim: usize,
    eps: f64,
    delta: f64,
    seed: u64,
    rows: Vec<SampledRow>,
    time: i64,
}

impl L1Sampler {
    /// `eps ∈ (0,1)`, `delta ∈ (0,1)`.
    pub fn new(dim: usize, eps: f64, delta: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be ≥ 1"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter("eps must be in (0,1)"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter("delta must be in (0,1)"));
        }
        Ok(L1Sampler { dim, eps, delta, seed, rows: Vec::new(), time: i64::MIN })
    }

    /// Oversampling caps `(r₁, r₂)` for a basis with the given constants.
    pub fn caps(&self, basis: &L1Basis) -> (f64, f64) {
        let ab = basis.alpha() * basis.beta();
        let n = self.dim as f64;
        let r1 = 32.0 * ab / (self.eps * self.eps)
            * (n * libm::log(12.0 / self.eps) + libm::log(2.0 / self.delta));
        let r2 = n * ab;
        (r1, r2)
    }

    /// Ingest the row arriving at time `t`: downsample every previously
    /// kept row against the basis of kept∘new, then keep the new row with
    /// probability 1.
    pub fn ingest(&mut self, r: &[f64], t: i64) -> Result<()> {
        if r.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: r.len() });
        }
        if !r.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if t <= self.time {
            return Err(Error::NonMonotoneTime);
        }
        self.time = t;

        let mut stack = Matrix::zeros(0, self.dim);
        for kept in &self.rows {
            stack.push_row(&kept.row)?;
        }
        stack.push_row(r)?;
        if stack.frobenius_sq() == 0.0 {
            // Nothing to weigh against: zero rows never change any ‖·x‖₁,
            // so keep them all verbatim.
            self.rows.push(SampledRow::new(r.to_vec(), t));
            return Ok(());
        }

        let basis = L1Basis::compute(&stack)?;
        let scores = basis.leverage_scores();
        let total = basis.alpha();
        let (r1, r2) = self.caps(&basis);
        let cap = r1 * r2;

        let prior = core::mem::take(&mut self.rows);
        for (i, mut kept) in prior.into_iter().enumerate() {
            let tau = (cap * scores[i] / total).min(1.0);
            let q = (tau / kept.prob).min(1.0);
            let u = rng::unit(self.seed, domain::L1_KEEP, rng::coord(kept.time), rng::coord(t));
            if u < q {
                kept.prob *= q;
                self.rows.push(kept);
            }
        }
        self.rows.push(SampledRow::new(r.to_vec(), t));
        Ok(())
    }

    /// Kept rows rescaled by `1/p` — the ℓ1-preserving sample.
    pub fn result(&self) -> Matrix {
        let mut m = Matrix::zeros(0, self.dim);
        let mut buf = alloc::vec![0.0; self.dim];
        for kept in &self.rows {
            for (b, v) in buf.iter_mut().zip(&kept.row) {
                *b = v / kept.prob;
            }
            m.push_row(&buf).unwrap();
        }
        m
    }

    pub fn rows(&self) -> &[SampledRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Reject entries that are not finite integers within `[−bound, bound]`.
fn require_integer_entries(r: &[f64], bound: f64) -> Result<()> {
    for &v in r {
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        if v != libm::round(v) || v.abs() > bound {
            return Err(Error::EntryOutOfRange);
        }
    }
    Ok(())
}

/// Sliding-window ℓ1 approximation for integer streams with entries in
/// `[−nᶜ, nᶜ]`.
#[derive(Debug, Clone)]
pub struct L1Sliding {
    dim: usize,
    window: usize,
    c_exp: u32,
    eps: f64,
    seed: u64,
    spectral: SpectralHistogram,
    samplers: Vec<(i64, L1Sampler)>,
}

impl L1Sliding {
    /// `dim ≤ 5` and `c_exp ≤ 2`: the per-query space grows like
    /// `n^{4+2c}/ε^{5/2}`, so only tiny configurations are practical.
    pub fn new(dim: usize, window: usize, eps: f64, c_exp: u32, seed: u64) -> Result<Self> {
        if dim == 0 || dim > 5 {
            return Err(Error::InvalidParameter("dim must be in 1..=5"));
        }
        if !(1..=2).contains(&c_exp) {
            return Err(Error::InvalidParameter("c_exp must be 1 or 2"));
        }
        if window == 0 {
            return Err(Error::InvalidParameter("window must be ≥ 1"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter("eps must be in (0,1)"));
        }
        let bound = libm::pow(dim as f64, c_exp as f64);
        let refined = libm::sqrt(eps) / (3.0 * bound);
        let spectral = SpectralHistogram::new(dim, window, refined)?;
        Ok(L1Sliding { dim, window, c_exp, eps, seed, spectral, samplers: Vec::new() })
    }

    /// Largest admissible entry magnitude, `nᶜ`.
    pub fn entry_bound(&self) -> f64 {
        libm::pow(self.dim as f64, self.c_exp as f64)
    }

    /// Accuracy `ε′ = √ε/(3nᶜ)` of the timestamp-retention chain.
    pub fn spectral_eps(&self) -> f64 {
        self.spectral.eps()
    }

    /// Ingest one integer row. Every live sampler sees the row, a fresh
    /// sampler is spawned at `t`, and samplers whose timestamp dropped out
    /// of the retention chain are deleted.
    pub fn ingest(&mut self, r: &[f64], t: i64) -> Result<()> {
        if r.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: r.len() });
        }
        require_integer_entries(r, self.entry_bound())?;
        self.spectral.ingest(r, t)?;
        for (_, sampler) in &mut self.samplers {
            sampler.ingest(r, t)?;
        }
        // δ = 1/W³ (clamped for the degenerate one-row window).
        let delta = libm::pow(self.window as f64, -3.0).min(0.5);
        let salt = (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut fresh = L1Sampler::new(self.dim, self.eps / 3.0, delta, self.seed ^ salt)?;
        fresh.ingest(r, t)?;
        self.samplers.push((t, fresh));

        let retained = self.spectral.start_times();
        self.samplers.retain(|(ts, _)| retained.binary_search(ts).is_ok());
        debug_assert_eq!(self.samplers.len(), retained.len());
        Ok(())
    }

    /// The ℓ1 sample of (a slight superset of) the current window: the
    /// result of the sampler at the oldest retained timestamp.
    pub fn query(&self) -> Result<Matrix> {
        match self.samplers.first() {
            Some((_, sampler)) => Ok(sampler.result()),
            None => Err(Error::Empty),
        }
    }

    /// Spawn times of the live samplers (ascending).
    pub fn sampler_times(&self) -> Vec<i64> {
        self.samplers.iter().map(|(t, _)| *t).collect()
    }

    /// Timestamps currently retained by the chain (ascending).
    pub fn retained_times(&self) -> &[i64] {
        self.spectral.start_times()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Round arbitrary real rows onto the integer grid `[−nᶜ, nᶜ]`: scale so
/// the largest magnitude maps to `nᶜ`, round to the nearest integer, and
/// return the rounded rows plus the grid step `q = ‖A‖_∞/nᶜ` (so `q·out`
/// approximates the input; each entry moves by at most `q/2`).
pub fn quantize_rows(rows: &[Vec<f64>], c_exp: u32) -> Result<(Vec<Vec<f64>>, f64)> {
    let Some(first) = rows.first() else {
        return Err(Error::Empty);
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    let mut max_abs = 0.0f64;
    for r in rows {
        if r.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
        for &v in r {
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            max_abs = max_abs.max(v.abs());
        }
    }
    if max_abs == 0.0 {
        return Ok((rows.to_vec(), 1.0));
    }
    let bound = libm::pow(n as f64, c_exp as f64);
    let quantum = max_abs / bound;
    let out = rows
        .iter()
        .map(|r| r.iter().map(|v| libm::round(v / quantum)).collect())
        .collect();
    Ok((out, quantum))
}

/// The integer-lattice bridge from ℓ1 growth to ℓ2 growth: for integer
/// matrices `A`, `B` and an integer vector `x` (entries within `±nᶜ`),
/// whenever `‖Bx‖₁ ≥ ε‖Ax‖₁` it must follow that
/// `‖Bx‖₂ ≥ (√ε/nᶜ)·‖Ax‖₂`. Returns whether the implication holds (it is
/// vacuously true when the hypothesis fails). The chain behind it needs
/// `|(Ax)_i| ≤ n^{2c}`, which the caller's entry bounds should ensure.
pub fn l1_l2_bridge_holds(
    a: &Matrix,
    b: &Matrix,
    x: &[f64],
    eps: f64,
    c_exp: u32,
) -> Result<bool> {
    if a.cols() != x.len() || b.cols() != x.len() {
        return Err(Error::DimensionMismatch { expected: a.cols(), got: x.len() });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive"));
    }
    let n = x.len();
    let bound = libm::pow(n as f64, c_exp as f64);
    for i in 0..a.rows() {
        require_integer_entries(a.row(i), bound)?;
    }
    for i in 0..b.rows() {
        require_integer_entries(b.row(i), bound)?;
    }
    require_integer_entries(x, bound)?;

    let ax = a.matvec(x)?;
    let bx = b.matvec(x)?;
    if l1_norm(&bx) < eps * l1_norm(&ax) {
        return Ok(true);
    }
    let lhs = libm::sqrt(norm_sq(&bx));
    let rhs = libm::sqrt(eps) / bound * libm::sqrt(norm_sq(&ax));
    Ok(lhs + 1e-12 * (1.0 + rhs) >= rhs)
}
