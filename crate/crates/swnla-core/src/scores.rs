//! PSD ordering, pseudoinverse, and the leverage-score family.
//!
//! The sketches all revolve around quadratic forms `r (G + λI)† rᵀ` against
//! a Gram matrix `G` — plain leverage scores (`λ = 0`), ridge leverage
//! scores (`λ > 0`), their *online* variants (each row scored against the
//! Gram of the rows before it), and *reverse-online* variants (scored
//! against the rows at-or-after it, which is the right notion when old rows
//! expire from a window). This module computes all of them from one
//! primitive, [`RidgeScorer`], which eigendecomposes `G` once and then
//! scores any number of rows cheaply.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::factor::{svd, sym_eigen};
use crate::matrix::{dot, norm_sq, Matrix};

/// Relative projection-residual threshold below which a row counts as lying
/// inside the span of a Gram matrix.
const NOVELTY_TOL: f64 = 1e-9;

/// Loewner-order test: does `x ⪯ y` hold, i.e. is `y − x` positive
/// semidefinite within tolerance?
///
/// The test computes `λ_min(y − x)` by symmetric eigendecomposition (never
/// Cholesky — the difference is routinely indefinite) and accepts when it is
/// `≥ −tol·scale`, where `scale = 1 + |tr x| + |tr y|` ties the tolerance to
/// the magnitude of the operands. Exactly equal spectra therefore count as
/// dominated.
pub fn psd_dominates(x: &Matrix, y: &Matrix, tol: f64) -> Result<bool> {
    if x.rows() != x.cols() || y.rows() != y.cols() {
        return Err(Error::DimensionMismatch { expected: x.rows(), got: x.cols() });
    }
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch { expected: x.rows(), got: y.rows() });
    }
    let scale = 1.0 + x.trace().abs() + y.trace().abs();
    if x.asymmetry() > tol * scale || y.asymmetry() > tol * scale {
        return Err(Error::NotSymmetric);
    }
    let d = y.sub(x)?;
    let (evals, _) = sym_eigen(&d);
    let lambda_min = evals.last().copied().unwrap_or(0.0);
    Ok(lambda_min >= -tol * scale)
}

/// Moore–Penrose pseudoinverse via SVD.
///
/// Singular values below `σ_max · max(rows, cols) · ε_machine` are treated
/// as zero — the standard cutoff, and a necessity here because downsampled
/// Grams are near-singular by construction.
pub fn pseudoinverse(m: &Matrix) -> Matrix {
    let f = svd(m);
    let smax = f.s.first().copied().unwrap_or(0.0);
    let cutoff = smax * (m.rows().max(m.cols()) as f64) * f64::EPSILON;
    let inv: Vec<f64> = f.s.iter().map(|&s| if s > cutoff { 1.0 / s } else { 0.0 }).collect();
    // M† = V · Σ† · Uᵀ
    f.vt.transpose().matmul(&Matrix::diag(&inv)).unwrap().matmul(&f.u.transpose()).unwrap()
}

/// Precomputed spectral form of `(G + λI)†` for scoring rows against a Gram
/// matrix `G`.
pub struct RidgeScorer {
    evecs: Matrix,
    evals: Vec<f64>,
    lambda: f64,
    cutoff: f64,
}

impl RidgeScorer {
    /// Eigendecompose `gram` once; `lambda ≥ 0` is added to every
    /// eigenvalue when scoring.
    pub fn new(gram: &Matrix, lambda: f64) -> Result<Self> {
        if lambda < 0.0 {
            return Err(Error::InvalidParameter("lambda must be nonnegative"));
        }
        let (evals, evecs) = sym_eigen(gram);
        let top = evals.first().copied().unwrap_or(0.0).max(0.0) + lambda;
        let cutoff = top * (gram.rows() as f64) * f64::EPSILON;
        Ok(RidgeScorer { evecs, evals, lambda, cutoff })
    }

    /// Quadratic form `r (G + λI)† rᵀ`: components on eigendirections whose
    /// shifted eigenvalue falls below the rank cutoff contribute nothing
    /// (pseudoinverse semantics).
    pub fn quad(&self, r: &[f64]) -> f64 {
        let n = self.evals.len();
        debug_assert_eq!(r.len(), n);
        let mut acc = 0.0;
        for i in 0..n {
            let ev = self.evals[i].max(0.0) + self.lambda;
            if ev <= self.cutoff || ev == 0.0 {
                continue;
            }
            let mut c = 0.0;
            for k in 0..n {
                c += self.evecs.get(k, i) * r[k];
            }
            acc += c * c / ev;
        }
        acc
    }

    /// Squared norm of the component of `r` outside the numerical range of
    /// `G` (eigendirections below the rank cutoff). Zero when `λ > 0`
    /// because the shift makes every direction live.
    pub fn range_residual_sq(&self, r: &[f64]) -> f64 {
        let n = self.evals.len();
        let mut inside = 0.0;
        for i in 0..n {
            let ev = self.evals[i].max(0.0) + self.lambda;
            if ev <= self.cutoff || ev == 0.0 {
                continue;
            }
            let mut c = 0.0;
            for k in 0..n {
                c += self.evecs.get(k, i) * r[k];
            }
            inside += c * c;
        }
        (norm_sq(r) - inside).max(0.0)
    }
}

/// λ-ridge leverage scores of every row of `r`: value `i` is
/// `r_i (RᵀR + λI)† r_iᵀ`, capped at 1 when `cap` is set.
pub fn ridge_leverage_scores(r: &Matrix, lambda: f64, cap: bool) -> Result<Vec<f64>> {
    let scorer = RidgeScorer::new(&r.gram(), lambda)?;
    Ok((0..r.rows())
        .map(|i| {
            let s = scorer.quad(r.row(i));
            if cap { s.min(1.0) } else { s }
        })
        .collect())
}

/// Plain leverage scores (`λ = 0`); their sum equals the rank of `r`.
pub fn leverage_scores(r: &Matrix, cap: bool) -> Result<Vec<f64>> {
    ridge_leverage_scores(r, 0.0, cap)
}

/// Online λ-ridge leverage scores: row `i` is scored against the Gram of
/// the prefix — rows `0..i` (`inclusive = false`) or `0..=i`
/// (`inclusive = true`).
///
/// For `λ = 0` in the exclusive variant, a row with a component outside the
/// span of its prefix (projection residual above `1e−9·‖r_i‖`) scores 1:
/// a novel direction is maximally important, even though the bare
/// pseudoinverse formula would discard the out-of-span component.
pub fn online_ridge_scores(
    r: &Matrix,
    lambda: f64,
    inclusive: bool,
    cap: bool,
) -> Result<Vec<f64>> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter("lambda must be nonnegative"));
    }
    let n = r.cols();
    let mut gram = Matrix::zeros(n, n);
    let mut out = Vec::with_capacity(r.rows());
    for i in 0..r.rows() {
        let row = r.row(i);
        if inclusive {
            gram.add_outer(row, 1.0);
        }
        let scorer = RidgeScorer::new(&gram, lambda)?;
        let mut s = scorer.quad(row);
        if !inclusive && lambda == 0.0 {
            let res_sq = scorer.range_residual_sq(row);
            let nrm_sq = norm_sq(row);
            if res_sq > NOVELTY_TOL * NOVELTY_TOL * nrm_sq && nrm_sq > 0.0 {
                s = 1.0;
            }
        }
        if cap {
            s = s.min(1.0);
        }
        out.push(s);
        if !inclusive {
            gram.add_outer(row, 1.0);
        }
    }
    Ok(out)
}

/// Reverse-online λ-ridge leverage scores: row `i` scored against the Gram
/// of rows `i..m` (itself and everything after it), capped at 1, reported
/// in original row order. Equivalent to the inclusive online scores of the
/// row-reversed matrix.
///
/// When the matrix is wide (fewer rows than columns) the scores are
/// computed on the row side instead, via the kernel identity
/// `S(SᵀS+λI)† Sᵀ = (SSᵀ)·(SSᵀ+λI)†` applied to each suffix `S` — same
/// values, but every eigendecomposition is of suffix-count size rather than
/// column-count size.
pub fn reverse_online_ridge_scores(r: &Matrix, lambda: f64) -> Result<Vec<f64>> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter("lambda must be nonnegative"));
    }
    let m = r.rows();
    if m == 0 {
        return Ok(Vec::new());
    }
    if r.cols() <= m {
        let rows: Vec<Vec<f64>> = (0..m).rev().map(|i| r.row(i).to_vec()).collect();
        let reversed = Matrix::from_rows(&rows, r.cols())?;
        let mut scores = online_ridge_scores(&reversed, lambda, true, true)?;
        scores.reverse();
        return Ok(scores);
    }
    // Row-side path. Full outer Gram once; each suffix Gram is a trailing
    // principal submatrix with the scored row at local index 0.
    let mut outer = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let d = dot(r.row(i), r.row(j));
            outer.set(i, j, d);
            outer.set(j, i, d);
        }
    }
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let k = m - i;
        let mut g = Matrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                g.set(a, b, outer.get(i + a, i + b));
            }
        }
        let (evals, evecs) = sym_eigen(&g);
        let top = evals.first().copied().unwrap_or(0.0).max(0.0);
        let cutoff = top * (k as f64) * f64::EPSILON;
        let mut s = 0.0;
        for j in 0..k {
            let ev = evals[j].max(0.0);
            if ev <= cutoff || ev == 0.0 {
                continue;
            }
            let v0 = evecs.get(0, j);
            s += v0 * v0 * ev / (ev + lambda);
        }
        out.push(s.min(1.0));
    }
    Ok(out)
}
