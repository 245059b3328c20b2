//! Randomized structural invariants. Every property here is deterministic
//! given its inputs (no with-high-probability claims), so any failure is a
//! real bug, not sampling noise: guarantees of the deterministic sketches,
//! algebraic identities of the score machinery, and the bookkeeping rules
//! (window membership, ordering, replay) every sampler must uphold for
//! *every* seed.

use std::collections::VecDeque;

use proptest::prelude::*;
use swnla_core::cov::CovSketch;
use swnla_core::embed::Embedding;
use swnla_core::l1::quantize_rows;
use swnla_core::matrix::{norm_sq, Matrix};
use swnla_core::online::OnlineLra;
use swnla_core::pcp::PcpSampler;
use swnla_core::rng;
use swnla_core::sampler::{RowSampler, SamplerConfig};
use swnla_core::scores::{online_ridge_scores, pseudoinverse, psd_dominates, RidgeScorer};
use swnla_core::smooth::SmoothHistogram;
use swnla_core::spectral::SpectralHistogram;

const PSD_TOL: f64 = 1e-8;

fn matrix_from(rows: &[Vec<f64>]) -> Matrix {
    let n = rows[0].len();
    let mut m = Matrix::zeros(0, n);
    for r in rows {
        m.push_row(r).unwrap();
    }
    m
}

/// Exact Gram of the last `window` rows.
fn window_gram(rows: &[Vec<f64>], upto: usize, window: usize) -> Matrix {
    let n = rows[0].len();
    let lo = (upto + 1).saturating_sub(window);
    let mut g = Matrix::zeros(n, n);
    for r in &rows[lo..=upto] {
        g.add_outer(r, 1.0);
    }
    g
}

/// Rows of bounded dimension and length, entries in `[-10, 10]`.
fn stream(max_dim: usize, max_len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_dim).prop_flat_map(move |n| {
        proptest::collection::vec(proptest::collection::vec(-10.0..10.0f64, n), 1..=max_len)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectral_query_brackets_the_window_gram_at_every_step(
        rows in stream(4, 24),
        window in 2usize..=10,
        eps in 0.1f64..0.7,
    ) {
        let n = rows[0].len();
        let mut h = SpectralHistogram::new(n, window, eps).unwrap();
        for (t, r) in rows.iter().enumerate() {
            h.ingest(r, t as i64).unwrap();
            let exact = window_gram(&rows, t, window);
            let (g, _) = h.query();
            prop_assert!(psd_dominates(&g.scale(1.0 - eps), &exact, PSD_TOL).unwrap());
            prop_assert!(psd_dominates(&exact, &g, PSD_TOL).unwrap());
            let times = h.start_times();
            prop_assert!(times.windows(2).all(|w| w[0] < w[1]), "chain times must increase");
        }
    }

    #[test]
    fn spectral_histogram_replays_identically(
        rows in stream(3, 16),
        window in 2usize..=8,
    ) {
        let n = rows[0].len();
        let mut a = SpectralHistogram::new(n, window, 0.25).unwrap();
        let mut b = SpectralHistogram::new(n, window, 0.25).unwrap();
        for (t, r) in rows.iter().enumerate() {
            a.ingest(r, t as i64).unwrap();
            b.ingest(r, t as i64).unwrap();
        }
        prop_assert_eq!(a.query().0, b.query().0);
        prop_assert_eq!(a.start_times(), b.start_times());
    }

    #[test]
    fn determinant_factors_through_exclusive_scores_in_any_order(
        (rows, order) in stream(3, 9).prop_flat_map(|rows| {
            let idx: Vec<usize> = (0..rows.len()).collect();
            (Just(rows), Just(idx).prop_shuffle())
        }),
        lambda in prop_oneof![Just(0.1), Just(1.0), Just(10.0)],
    ) {
        let n = rows[0].len();
        let a = matrix_from(&rows);
        let mut g = a.gram();
        g.add_diag(lambda);
        let det = swnla_core::factor::det_sym(&g);
        let product = |m: &Matrix| -> f64 {
            online_ridge_scores(m, lambda, false, false)
                .unwrap()
                .iter()
                .map(|u| 1.0 + u)
                .product::<f64>()
                * lambda.powi(n as i32)
        };
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-300);
        prop_assert!(rel(det, product(&a)) <= 1e-8);

        // Row order must not matter: same determinant, same score product.
        let permuted: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
        prop_assert!(rel(product(&a), product(&matrix_from(&permuted))) <= 1e-8);
    }

    #[test]
    fn ridge_scores_never_grow_when_a_row_is_added(
        rows in stream(4, 8).prop_filter("need 2+ rows", |r| r.len() >= 2),
        lambda in 0.01f64..10.0,
    ) {
        let (extra, base) = rows.split_last().unwrap();
        let small = matrix_from(base).gram();
        let mut big = small.clone();
        big.add_outer(extra, 1.0);
        let lo = RidgeScorer::new(&small, lambda).unwrap();
        let hi = RidgeScorer::new(&big, lambda).unwrap();
        for r in base {
            prop_assert!(hi.quad(r) <= lo.quad(r) + 1e-9, "scores must be monotone in the Gram");
        }
    }

    #[test]
    fn leverage_scores_sum_to_the_rank(
        base in stream(4, 6),
        dup in proptest::collection::vec(0usize..6, 0..4),
    ) {
        // Duplicated rows force rank deficiency without changing the rank.
        let mut rows = base.clone();
        for &d in &dup {
            rows.push(base[d % base.len()].clone());
        }
        let a = matrix_from(&rows);
        let svals = swnla_core::factor::singular_values(&a);
        let cutoff = svals[0] * 1e-8;
        let rank = svals.iter().filter(|&&s| s > cutoff).count();
        if rank == 0 {
            return Ok(());
        }
        let scorer = RidgeScorer::new(&a.gram(), 0.0).unwrap();
        let sum: f64 = rows.iter().map(|r| scorer.quad(r)).sum();
        prop_assert!((sum - rank as f64).abs() <= 1e-6 * rank as f64);
    }

    #[test]
    fn pseudoinverse_satisfies_all_moore_penrose_identities(
        base in stream(5, 7),
        dup in proptest::collection::vec(0usize..7, 0..3),
    ) {
        let mut rows = base.clone();
        for &d in &dup {
            rows.push(base[d % base.len()].clone());
        }
        let m = matrix_from(&rows);
        let p = pseudoinverse(&m);
        let tol = 1e-8 * (1.0 + m.frobenius_sq().sqrt());
        let close = |x: &Matrix, y: &Matrix| x.sub(y).unwrap().frobenius_sq().sqrt() <= tol;
        let mp = m.matmul(&p).unwrap();
        let pm = p.matmul(&m).unwrap();
        prop_assert!(close(&mp.matmul(&m).unwrap(), &m));
        prop_assert!(close(&pm.matmul(&p).unwrap(), &p));
        prop_assert!(close(&mp.transpose(), &mp));
        prop_assert!(close(&pm.transpose(), &pm));
    }

    #[test]
    fn adding_a_psd_term_preserves_loewner_order_and_inverts_it_for_pinv(
        (rows, v) in stream(3, 6).prop_flat_map(|rows| {
            let n = rows[0].len();
            (Just(rows), proptest::collection::vec(-3.0..3.0f64, n))
        }),
        shift in 0.1f64..1.0,
    ) {
        let mut b = matrix_from(&rows).gram();
        b.add_diag(shift); // full rank
        let mut a = b.clone();
        a.add_outer(&v, 1.0);
        prop_assert!(psd_dominates(&b, &a, PSD_TOL).unwrap(), "B ⪯ B + vvᵀ");
        // Equal (trivial) kernels, so inversion flips the order: A† ⪯ B†.
        prop_assert!(psd_dominates(&pseudoinverse(&a), &pseudoinverse(&b), 1e-6).unwrap());
    }

    #[test]
    fn smooth_histogram_brackets_the_window_mass(
        masses in proptest::collection::vec(0.0..10.0f64, 1..40),
        window in 1usize..=12,
    ) {
        let mut h = SmoothHistogram::frobenius(window);
        let mut ring: VecDeque<f64> = VecDeque::new();
        for (t, &m) in masses.iter().enumerate() {
            h.ingest(m, t as i64).unwrap();
            ring.push_back(m);
            if ring.len() > window {
                ring.pop_front();
            }
            let exact: f64 = ring.iter().sum();
            let (q, _) = h.query();
            let tol = 1e-9 * (1.0 + q);
            prop_assert!(exact <= q + tol && exact >= q / 2.0 - tol);
        }
    }

    #[test]
    fn row_samplers_keep_the_newest_row_and_only_window_times(
        rows in stream(4, 30),
        window in 2usize..=10,
        seed in any::<u64>(),
        eps in 0.1f64..0.9,
    ) {
        let n = rows[0].len();
        let mut s = RowSampler::new(SamplerConfig::new(n, window, eps, seed).unwrap());
        let mut p = PcpSampler::new(n, window, 1, eps, seed).unwrap();
        for (t, r) in rows.iter().enumerate() {
            let t = t as i64;
            s.ingest(r, t).unwrap();
            p.ingest(r, t).unwrap();
            for stored in [s.rows(), p.rows()] {
                let last = stored.last().expect("newest row always kept");
                prop_assert_eq!(last.time, t);
                prop_assert_eq!(last.prob, 1.0);
                prop_assert!(stored.windows(2).all(|w| w[0].time < w[1].time));
                prop_assert!(stored.iter().all(|r| r.time > t - window as i64));
                prop_assert!(stored.iter().all(|r| r.prob > 0.0 && r.prob <= 1.0));
            }
        }
    }

    #[test]
    fn row_sampler_replays_identically(
        rows in stream(3, 20),
        seed in any::<u64>(),
    ) {
        let n = rows[0].len();
        let cfg = SamplerConfig::new(n, 8, 0.3, seed).unwrap();
        let mut a = RowSampler::new(cfg.clone());
        let mut b = RowSampler::new(cfg);
        for (t, r) in rows.iter().enumerate() {
            a.ingest(r, t as i64).unwrap();
            b.ingest(r, t as i64).unwrap();
        }
        prop_assert_eq!(a.rows(), b.rows());
    }

    #[test]
    fn online_sample_is_append_only_for_every_seed(
        rows in stream(4, 25),
        seed in any::<u64>(),
        eps in 0.05f64..0.5,
    ) {
        let n = rows[0].len();
        let mut lra = OnlineLra::new(n, 1, eps, 1.5, seed).unwrap();
        let mut prev: Vec<(i64, f64)> = Vec::new();
        for (t, r) in rows.iter().enumerate() {
            lra.ingest(r, t as i64).unwrap();
            let now: Vec<(i64, f64)> = lra.kept().iter().map(|k| (k.time, k.prob)).collect();
            prop_assert!(now.len() >= prev.len(), "kept rows can never be dropped");
            prop_assert_eq!(&now[..prev.len()], &prev[..], "kept rows can never change");
            prev = now;
        }
    }

    #[test]
    fn covariance_sketch_tracks_only_window_rows_and_replays(
        rows in stream(4, 30),
        window in 2usize..=10,
        seed in any::<u64>(),
    ) {
        let n = rows[0].len();
        let mut a = CovSketch::new(n, window, 0.4, seed).unwrap();
        let mut b = CovSketch::new(n, window, 0.4, seed).unwrap();
        for (t, r) in rows.iter().enumerate() {
            let t = t as i64;
            a.ingest(r, t).unwrap();
            b.ingest(r, t).unwrap();
            prop_assert!(a.tracked_rows().iter().all(|(r, _)| r.time > t - window as i64));
            let masses = a.bucket_masses();
            prop_assert!(masses.windows(2).all(|w| w[0] >= w[1] - 1e-12 * w[0].abs()),
                "suffix masses must be non-increasing");
        }
        prop_assert_eq!(a.query(), b.query());
    }

    #[test]
    fn quantized_rows_are_bounded_integers_within_half_a_step(
        rows in stream(4, 10),
        c_exp in 1u32..=2,
    ) {
        let (out, q) = quantize_rows(&rows, c_exp).unwrap();
        let bound = (rows[0].len() as f64).powi(c_exp as i32);
        for (orig, quant) in rows.iter().zip(&out) {
            for (&o, &v) in orig.iter().zip(quant) {
                prop_assert!(v == v.round(), "entries must land on the integer grid");
                prop_assert!(v.abs() <= bound + 0.5);
                prop_assert!((q * v - o).abs() <= q / 2.0 + 1e-12 * o.abs());
            }
        }
    }

    #[test]
    fn embeddings_are_linear_maps(
        x in proptest::collection::vec(-5.0..5.0f64, 1..=6),
        y_seed in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let n = x.len();
        let y: Vec<f64> = (0..n)
            .map(|j| rng::gauss_pair(y_seed, rng::domain::GENERATE, 0, j as u64).0)
            .collect();
        for e in [
            Embedding::dense_jl(n, 5, 77).unwrap(),
            Embedding::osnap(n, 5, 3, 77).unwrap(),
        ] {
            let combo: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
            let lhs = e.apply(&combo).unwrap();
            let ex = e.apply(&x).unwrap();
            let ey = e.apply(&y).unwrap();
            let scale = 1.0 + norm_sq(&lhs).sqrt();
            for ((l, xv), yv) in lhs.iter().zip(&ex).zip(&ey) {
                prop_assert!((l - (a * xv + b * yv)).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn osnap_columns_have_bounded_support(
        n in 1usize..=12,
        d in 1usize..=10,
        sparsity in 1usize..=6,
        seed in any::<u64>(),
    ) {
        let e = Embedding::osnap(n, d, sparsity, seed).unwrap();
        let s = sparsity.min(n);
        let j = e.materialize();
        let expected_mag = 1.0 / (s as f64).sqrt();
        for c in 0..d {
            let nnz = (0..n).filter(|&i| j.get(i, c) != 0.0).count();
            prop_assert!(nnz <= s, "column support exceeds the sparsity budget");
            for i in 0..n {
                let v = j.get(i, c);
                prop_assert!(v == 0.0 || (v.abs() - expected_mag).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn seeded_draws_are_pure_functions_of_their_coordinates(
        seed in any::<u64>(),
        dom in any::<u64>(),
        a in any::<u64>(),
        b in any::<u64>(),
        t1 in any::<i64>(),
        t2 in any::<i64>(),
    ) {
        let u = rng::unit(seed, dom, a, b);
        prop_assert!((0.0..1.0).contains(&u));
        prop_assert_eq!(u, rng::unit(seed, dom, a, b));
        prop_assert_eq!(rng::bits(seed, dom, a, b), rng::bits(seed, dom, a, b));
        let (g1, g2) = rng::gauss_pair(seed, dom, a, b);
        prop_assert!(g1.is_finite() && g2.is_finite());
        if t1 != t2 {
            prop_assert_ne!(rng::coord(t1), rng::coord(t2), "time keys must not collide");
        }
    }
}
