//! Generic smooth-histogram maintenance for additive window statistics.
//!
//! A smooth histogram tracks a nonnegative, suffix-additive quantity (here:
//! the squared Frobenius norm of the window rows — each arriving row
//! contributes its squared norm) over a sliding window of `W` arrivals using
//! `O(log)` checkpoints instead of `W` values. Checkpoint `i` stores the
//! exact running total `g_i` of everything that arrived at or after its
//! start time `x_i`. Structure maintained after every arrival:
//!
//! * starts are strictly increasing; totals are strictly decreasing;
//! * `x_1 ≤ t−W+1 < x_2` — the first checkpoint covers the window (possibly
//!   with some expired surplus), the second is strictly inside it;
//! * two checkpoints that sandwich a third within a factor `(1−β/2)` are
//!   merged by deleting everything strictly between them.
//!
//! The first checkpoint's total `q` then brackets the exact window value
//! `v` as `(1−α)·q ≤ v ≤ q`; with the defaults `α = β = 1/2` this is the
//! 2-approximation the covariance sketch needs.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default smoothness parameters: a 2-approximation.
pub const DEFAULT_ALPHA: f64 = 0.5;
/// See [`DEFAULT_ALPHA`].
pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
struct Checkpoint {
    /// Arrival time this checkpoint starts at.
    start: i64,
    /// Exact total mass of arrivals in `[start, now]`.
    g: f64,
}

/// Smooth histogram over a sliding window of `W` arrivals.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothHistogram {
    alpha: f64,
    beta: f64,
    window: usize,
    time: i64,
    idx: Vec<Checkpoint>,
    /// Extremes seen, for the checkpoint-count self-check.
    max_g: f64,
    min_mass: f64,
}

impl SmoothHistogram {
    /// `alpha`, `beta` in `(0, 1]` with `beta ≤ 2·alpha`; `window ≥ 1`.
    pub fn new(alpha: f64, beta: f64, window: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || alpha == 0.0 {
            return Err(Error::InvalidParameter("alpha must be in (0,1]"));
        }
        if !(0.0..=1.0).contains(&beta) || beta == 0.0 || beta > 2.0 * alpha {
            return Err(Error::InvalidParameter("beta must be in (0,1] with beta ≤ 2·alpha"));
        }
        if window == 0 {
            return Err(Error::InvalidParameter("window must be ≥ 1"));
        }
        Ok(SmoothHistogram {
            alpha,
            beta,
            window,
            time: i64::MIN,
            idx: Vec::new(),
            max_g: 0.0,
            min_mass: f64::INFINITY,
        })
    }

    /// The 2-approximation instance used for squared Frobenius tracking.
    pub fn frobenius(window: usize) -> Self {
        Self::new(DEFAULT_ALPHA, DEFAULT_BETA, window).unwrap()
    }

    /// Ingest the additive mass of the arrival at time `t` (for the
    /// Frobenius instance: the row's squared norm). Times must be strictly
    /// increasing; masses must be nonnegative and finite.
    pub fn ingest(&mut self, mass: f64, t: i64) -> Result<()> {
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::InvalidParameter("mass must be nonnegative and finite"));
        }
        if t <= self.time && !self.idx.is_empty() {
            return Err(Error::NonMonotoneTime);
        }
        self.time = t;
        for cp in &mut self.idx {
            cp.g += mass;
        }
        self.idx.push(Checkpoint { start: t, g: mass });
        if mass > 0.0 {
            self.min_mass = self.min_mass.min(mass);
        }
        self.max_g = self.max_g.max(self.idx[0].g);
        self.merge();
        self.expire();
        debug_assert!(self.idx.len() <= self.checkpoint_cap());
        Ok(())
    }

    /// Delete checkpoints sandwiched within a `(1−β/2)` factor: for each
    /// `i`, find the largest `j > i` with `g_j ≥ (1−β/2)·g_i` and drop
    /// everything strictly between them.
    fn merge(&mut self) {
        let thr = 1.0 - self.beta / 2.0;
        let mut i = 0;
        while i + 2 < self.idx.len() {
            let bound = thr * self.idx[i].g;
            let mut j = i + 1;
            for k in (i + 1)..self.idx.len() {
                if self.idx[k].g >= bound {
                    j = k;
                }
            }
            if j > i + 1 {
                self.idx.drain(i + 1..j);
            }
            i += 1;
        }
    }

    /// Drop leading checkpoints while the *second* one already covers the
    /// whole window; the survivor straddles the window boundary.
    fn expire(&mut self) {
        let boundary = self.time - self.window as i64 + 1;
        while self.idx.len() >= 2 && self.idx[1].start <= boundary {
            self.idx.remove(0);
        }
    }

    /// Current estimate of the window total, with an emptiness flag:
    /// `(0.0, true)` before any arrival. The exact window value `v`
    /// satisfies `(1−α)·estimate ≤ v ≤ estimate`.
    pub fn query(&self) -> (f64, bool) {
        match self.idx.first() {
            Some(cp) => (cp.g, false),
            None => (0.0, true),
        }
    }

    /// Number of live checkpoints.
    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    /// Structural self-check bound on the checkpoint count: consecutive
    /// retained totals separated by more than one arrival decay by at least
    /// `(1−β/2)`, so the count is logarithmic in the total-to-smallest-mass
    /// ratio (plus slack for the boundary pair and zero-mass runs).
    pub fn checkpoint_cap(&self) -> usize {
        if self.max_g <= 0.0 || !self.min_mass.is_finite() {
            // All-zero streams never merge-delete, but they also never
            // violate the window: at most W live checkpoints plus boundary.
            return self.window + 2;
        }
        let ratio = (self.max_g / self.min_mass).max(2.0);
        let levels = libm::log(ratio) / -libm::log(1.0 - self.beta / 2.0);
        2 * (libm::ceil(levels) as usize + 2) + 2
    }

    /// Start time of each live checkpoint (diagnostics and tests).
    pub fn starts(&self) -> Vec<i64> {
        self.idx.iter().map(|c| c.start).collect()
    }

    /// Running totals of each live checkpoint (diagnostics and tests).
    pub fn totals(&self) -> Vec<f64> {
        self.idx.iter().map(|c| c.g).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_arrival_creates_a_single_checkpoint() {
        let mut h = SmoothHistogram::frobenius(10);
        h.ingest(4.0, 1).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.query(), (4.0, false));
    }

    #[test]
    fn empty_histogram_reports_empty() {
        let h = SmoothHistogram::frobenius(10);
        assert_eq!(h.query(), (0.0, true));
    }

    #[test]
    fn constant_unit_stream_is_two_approximated() {
        // 100 arrivals of mass 1, window 10: exact window value is 10 and
        // the estimate must stay within a factor 2 above it.
        let mut h = SmoothHistogram::frobenius(10);
        for t in 1..=100 {
            h.ingest(1.0, t).unwrap();
            let exact = (t.min(10)) as f64;
            let (q, empty) = h.query();
            assert!(!empty);
            assert!(exact <= q + 1e-12, "t={t}: exact {exact} > estimate {q}");
            assert!(q * 0.5 <= exact + 1e-12, "t={t}: estimate {q} not within 2× of {exact}");
        }
    }

    #[test]
    fn structural_invariants_hold_on_a_varied_stream() {
        let mut h = SmoothHistogram::frobenius(16);
        let masses = [0.1, 3.0, 0.0, 7.5, 0.2, 0.2, 9.0, 1.0, 0.0, 4.4];
        for (i, chunk) in (0..60).zip(masses.iter().cycle()) {
            h.ingest(*chunk, i + 1).unwrap();
            let starts = h.starts();
            let totals = h.totals();
            // Starts strictly increasing, totals non-increasing.
            for w in starts.windows(2) {
                assert!(w[0] < w[1]);
            }
            for w in totals.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
            // Boundary: first start covers the window, second does not.
            let boundary = (i + 1) - 16 + 1;
            if starts.len() >= 2 {
                assert!(starts[1] > boundary);
            }
            if i + 1 >= 16 {
                assert!(starts[0] <= boundary);
            }
            // Merge invariant: totals two apart are separated by > (1−β/2)
            // unless the pair is adjacent in time.
            for k in 0..totals.len().saturating_sub(2) {
                assert!(
                    totals[k + 2] < (1.0 - 0.25) * totals[k] + 1e-12,
                    "step {}: g[{k}]={} g[{}]={}",
                    i + 1,
                    totals[k],
                    k + 2,
                    totals[k + 2]
                );
            }
            assert!(h.len() <= h.checkpoint_cap());
        }
    }

    #[test]
    fn all_zero_stream_queries_zero() {
        let mut h = SmoothHistogram::frobenius(8);
        for t in 1..=30 {
            h.ingest(0.0, t).unwrap();
        }
        assert_eq!(h.query(), (0.0, false));
    }

    #[test]
    fn replaying_the_same_stream_reproduces_identical_state() {
        let build = || {
            let mut h = SmoothHistogram::frobenius(12);
            for t in 1..=50 {
                let m = ((t * 7919) % 13) as f64 * 0.5;
                h.ingest(m, t).unwrap();
            }
            h
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn rejects_negative_mass_and_non_monotone_time() {
        let mut h = SmoothHistogram::frobenius(4);
        h.ingest(1.0, 5).unwrap();
        assert!(h.ingest(-1.0, 6).is_err());
        assert_eq!(h.ingest(1.0, 5), Err(Error::NonMonotoneTime));
    }
}
