//! Symmetric eigendecomposition and SVD by Jacobi rotations.
//!
//! At desk scale (sides ≤ a few dozen) cyclic Jacobi is simple, free of
//! external dependencies, and — unlike Cholesky-based tricks — happy with
//! indefinite and rank-deficient inputs, which the sketches produce all the
//! time (differences of Grams, downsampled row sets). Jacobi is also among
//! the most accurate dense methods for small spectra, which matters because
//! the tests compare against 1e−8-grade tolerances.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::matrix::Matrix;

/// Relative off-diagonal mass at which a Jacobi sweep is declared converged.
const JACOBI_TOL: f64 = 1e-15;
/// Hard cap on sweeps; cyclic Jacobi on these sizes converges in < 15.
const MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a symmetric matrix: `a = V · diag(w) · Vᵀ`.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// the columns of the returned matrix. The input is symmetrized as
/// `(a + aᵀ)/2` first, so tiny asymmetries from accumulated arithmetic do
/// not leak into the spectrum.
pub fn sym_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    debug_assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    // Work on the symmetrized copy.
    let mut m = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    let mut v = Matrix::identity(n);
    let fro: f64 = m.iter().map(|x| x * x).sum::<f64>();
    let thresh_sq = JACOBI_TOL * JACOBI_TOL * fro.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let mut off_sq = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sq += m[p * n + q] * m[p * n + q];
            }
        }
        if off_sq * 2.0 <= thresh_sq {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // Classic stable rotation: tan of the half-angle via theta.
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                // Update rows/cols p and q of the symmetric working copy.
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                // Accumulate the rotation into the eigenvector matrix.
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].partial_cmp(&m[i * n + i]).unwrap());
    let evals: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (newc, &oldc) in order.iter().enumerate() {
        for r in 0..n {
            vecs.set(r, newc, v.get(r, oldc));
        }
    }
    (evals, vecs)
}

/// Thin singular value decomposition `a = U · diag(s) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors, `rows × r` where `r = min(rows, cols)`.
    pub u: Matrix,
    /// Singular values, descending, length `r`.
    pub s: Vec<f64>,
    /// Right singular vectors transposed, `r × cols`.
    pub vt: Matrix,
}

/// One-sided Jacobi SVD.
///
/// Orthogonalizes column pairs of a working copy until every pair is
/// numerically orthogonal; column norms are then the singular values. For
/// wide inputs the problem is transposed first and the factors swapped back.
pub fn svd(a: &Matrix) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Svd { u: Matrix::zeros(m, 0), s: Vec::new(), vt: Matrix::zeros(0, n) };
    }
    if m < n {
        let t = svd(&a.transpose());
        return Svd { u: t.vt.transpose(), s: t.s, vt: t.u.transpose() };
    }

    // Columns of `b` start as columns of `a` and are rotated in place.
    let mut b = a.clone();
    let mut v = Matrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for k in 0..m {
                    let bp = b.get(k, p);
                    let bq = b.get(k, q);
                    app += bp * bp;
                    aqq += bq * bq;
                    apq += bp * bq;
                }
                // Columns p, q count as orthogonal once the cosine of their
                // angle drops below the sweep tolerance.
                if apq * apq <= JACOBI_TOL * JACOBI_TOL * app * aqq + f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..m {
                    let bp = b.get(k, p);
                    let bq = b.get(k, q);
                    b.set(k, p, c * bp - s * bq);
                    b.set(k, q, s * bp + c * bq);
                }
                for k in 0..n {
                    let vp = v.get(k, p);
                    let vq = v.get(k, q);
                    v.set(k, p, c * vp - s * vq);
                    v.set(k, q, s * vp + c * vq);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Singular values are the column norms of the rotated copy.
    let mut svals: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let mut nsq = 0.0;
            for k in 0..m {
                nsq += b.get(k, j) * b.get(k, j);
            }
            (sqrt(nsq), j)
        })
        .collect();
    svals.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut u = Matrix::zeros(m, n);
    let mut vt = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (newc, &(sv, oldc)) in svals.iter().enumerate() {
        s.push(sv);
        if sv > 0.0 {
            for k in 0..m {
                u.set(k, newc, b.get(k, oldc) / sv);
            }
        }
        for k in 0..n {
            vt.set(newc, k, v.get(k, oldc));
        }
    }
    Svd { u, s, vt }
}

/// Singular values of `a`, descending.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    svd(a).s
}

/// Squared distance to the best rank-`k` approximation,
/// `min_{rank(X)≤k} ‖a−X‖_F² = Σ_{i>k} σ_i²`.
///
/// Computed from the spectrum of the smaller Gram matrix; values are clamped
/// at zero so rounding noise never produces a negative residual.
pub fn best_rank_k_residual(a: &Matrix, k: usize) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let g = if a.cols() <= a.rows() { a.gram() } else { a.transpose().gram() };
    gram_tail(&g, k)
}

/// Same as [`best_rank_k_residual`] but starting from a precomputed Gram
/// matrix (`AᵀA`): sum of all but the `k` largest eigenvalues, clamped ≥ 0.
pub fn gram_tail(gram: &Matrix, k: usize) -> f64 {
    let (evals, _) = sym_eigen(gram);
    evals.iter().skip(k).map(|v| v.max(0.0)).sum()
}

/// Determinant of a symmetric matrix, as the product of its eigenvalues.
pub fn det_sym(a: &Matrix) -> f64 {
    let (evals, _) = sym_eigen(a);
    evals.iter().product()
}
