//! Online (irrevocable) rank-`k` projection-cost-preserving row sampling.
//!
//! Rows arrive one at a time over the *whole* stream — no window, and no
//! second chances: each row is kept or dropped on arrival and never
//! revisited. Row `a_t` is kept with probability
//!
//! ```text
//! p_t = min( 2c · a_t (Ã_{t−1}ᵀÃ_{t−1} + a_tᵀa_t + λ̃_t I)† a_tᵀ , 1 ),
//! ```
//!
//! where `Ã_{t−1}` stacks the rescaled rows kept so far and `λ̃_t` is half a
//! factor-2 estimate of the current rank-`k` tail mass per direction,
//! `‖A_t − (A_t)_k‖_F² / k` — so `λ̃_t ∈ [λ_t/4, λ_t]` whenever the
//! estimator honors its contract. Kept rows are appended as `a_t/√p_t`.
//! The kept matrix is a `(1±ε)` rank-`k` projection-cost-preserving sample
//! of the stream using `O((k/ε²)·log²‖A‖_F·log d)` rows.
//!
//! The tail estimate comes from a [`ResidualSketch`]: either an exact
//! oracle (stores the full prefix — for tests), or a frequent-directions
//! sketch of `2k+4` rows whose shrinkage makes the estimate one-sided:
//! `estimate ∈ [tail, (1 + k/(k+4))·tail]`, comfortably within factor 2.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factor::{best_rank_k_residual, singular_values};
use crate::matrix::{norm_sq, Matrix};
use crate::rng::{self, domain};
use crate::sampler::SampledRow;
use crate::scores::RidgeScorer;

/// How the rank-`k` tail mass of the stream prefix is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMode {
    /// Store the entire prefix and compute the tail exactly (test oracle;
    /// memory grows with the stream).
    Exact,
    /// Frequent-directions sketch of `2k+4` rows (production default;
    /// constant memory).
    FrequentDirections,
}

/// Streaming estimator of `‖A − A_k‖_F² / k` for the growing prefix `A`.
#[derive(Debug, Clone)]
pub struct ResidualSketch {
    mode: ResidualMode,
    dim: usize,
    rank: usize,
    /// Exact running `‖A‖_F²` (both modes track it; it is cheap and makes
    /// the frequent-directions estimate one-sided).
    total_fro: f64,
    /// Full prefix (exact mode only).
    prefix: Matrix,
    /// Sketch rows (frequent-directions mode only), at most `2k+4`.
    bank: Matrix,
}

impl ResidualSketch {
    pub fn new(dim: usize, rank: usize, mode: ResidualMode) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be ≥ 1"));
        }
        if rank == 0 {
            return Err(Error::InvalidParameter("rank must be ≥ 1"));
        }
        Ok(ResidualSketch {
            mode,
            dim,
            rank,
            total_fro: 0.0,
            prefix: Matrix::zeros(0, dim),
            bank: Matrix::zeros(0, dim),
        })
    }

    /// Number of sketch rows kept in frequent-directions mode.
    pub fn bank_capacity(&self) -> usize {
        2 * self.rank + 4
    }

    pub fn update(&mut self, r: &[f64]) -> Result<()> {
        if r.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: r.len() });
        }
        self.total_fro += norm_sq(r);
        match self.mode {
            ResidualMode::Exact => self.prefix.push_row(r)?,
            ResidualMode::FrequentDirections => {
                if self.bank.rows() == self.bank_capacity() {
                    self.shrink();
                }
                self.bank.push_row(r)?;
            }
        }
        Ok(())
    }

    /// Replace the full bank by `ℓ−1` directions with squared singular
    /// values reduced by the smallest one. The cumulative reduction is what
    /// bounds the sketch's underestimate of the top-`k` energy.
    fn shrink(&mut self) {
        let f = crate::factor::svd(&self.bank);
        let l = self.bank.rows();
        let delta = f.s.get(l - 1).map(|s| s * s).unwrap_or(0.0);
        let mut next = Matrix::zeros(0, self.dim);
        for i in 0..f.s.len().min(l - 1) {
            let s2 = (f.s[i] * f.s[i] - delta).max(0.0);
            if s2 <= 0.0 {
                continue;
            }
            let w = libm::sqrt(s2);
            let row: Vec<f64> = (0..self.dim).map(|c| w * f.vt.get(i, c)).collect();
            next.push_row(&row).unwrap();
        }
        self.bank = next;
    }

    /// Estimated `‖A − A_k‖_F² / k`. Exact mode returns the true value;
    /// frequent-directions mode returns
    /// `(‖A‖_F² − ‖B_k‖_F²)/k ∈ [true, (1 + k/(k+4))·true]`.
    pub fn query(&self) -> f64 {
        let tail = match self.mode {
            ResidualMode::Exact => best_rank_k_residual(&self.prefix, self.rank),
            ResidualMode::FrequentDirections => {
                let s = singular_values(&self.bank);
                let topk: f64 = s.iter().take(self.rank).map(|x| x * x).sum();
                (self.total_fro - topk).max(0.0)
            }
        };
        tail / self.rank as f64
    }
}

/// Irrevocable low-rank row sampler over an unbounded stream.
#[derive(Debug, Clone)]
pub struct OnlineLra {
    dim: usize,
    rank: usize,
    eps: f64,
    /// Stream-length exponent: valid for streams of at most `dim^alpha`
    /// rows (it only enters the oversampling constant logarithmically).
    alpha: f64,
    c: f64,
    seed: u64,
    residual: ResidualSketch,
    kept: Vec<SampledRow>,
    gram: Matrix,
    lambda: f64,
    time: i64,
}

impl OnlineLra {
    /// `eps ∈ (0, 1/2]`, `alpha ≥ 1`; the keep-probability budget is
    /// `c = 6·alpha·ln(dim)/eps²`. Uses the frequent-directions residual
    /// estimator; see [`Self::with_exact_residual`] for the test oracle.
    pub fn new(dim: usize, rank: usize, eps: f64, alpha: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be ≥ 1"));
        }
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::InvalidParameter("eps must be in (0, 1/2]"));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be ≥ 1"));
        }
        let c = (6.0 * alpha * libm::log(dim.max(2) as f64) / (eps * eps)).max(1.0);
        Ok(OnlineLra {
            dim,
            rank,
            eps,
            alpha,
            c,
            seed,
            residual: ResidualSketch::new(dim, rank, ResidualMode::FrequentDirections)?,
            kept: Vec::new(),
            gram: Matrix::zeros(dim, dim),
            lambda: 0.0,
            time: i64::MIN,
        })
    }

    /// Switch the residual estimator to the exact oracle (only sensible
    /// before the first ingest).
    pub fn with_exact_residual(mut self) -> Result<Self> {
        self.residual = ResidualSketch::new(self.dim, self.rank, ResidualMode::Exact)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Oversampling budget `c`.
    pub fn budget(&self) -> f64 {
        self.c
    }

    /// Ridge weight `λ̃` used for the most recent arrival.
    pub fn lambda_estimate(&self) -> f64 {
        self.lambda
    }

    /// Ingest the row arriving at time `t` (strictly increasing). The
    /// decision is final: kept rows are appended and never revisited.
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
        self.residual.update(r)?;
        self.lambda = 0.5 * self.residual.query();
        let mut g = self.gram.clone();
        g.add_outer(r, 1.0);
        let score = RidgeScorer::new(&g, self.lambda)?.quad(r).min(1.0);
        let p = (2.0 * self.c * score).min(1.0);
        let u = rng::unit(self.seed, domain::ONLINE_KEEP, rng::coord(t), 0);
        if u < p {
            let mut kept = SampledRow::new(r.to_vec(), t);
            kept.prob = p;
            if p < 1.0 {
                let f = 1.0 / libm::sqrt(p);
                for v in &mut kept.row {
                    *v *= f;
                }
            }
            self.gram.add_outer(&kept.row, 1.0);
            self.kept.push(kept);
        }
        Ok(())
    }

    /// The kept rescaled rows `Ã` — a `(1±ε)` rank-`k`
    /// projection-cost-preserving sample of the full stream; zero-row
    /// matrix when nothing was kept.
    pub fn result(&self) -> Matrix {
        let mut m = Matrix::zeros(0, self.dim);
        for r in &self.kept {
            m.push_row(&r.row).unwrap();
        }
        m
    }

    /// Kept rows with their probabilities, in arrival order.
    pub fn kept(&self) -> &[SampledRow] {
        &self.kept
    }

    /// Gram matrix of the kept rescaled rows.
    pub fn kept_gram(&self) -> &Matrix {
        &self.gram
    }
}
