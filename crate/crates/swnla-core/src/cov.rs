//! Sliding-window covariance (Gram) approximation by squared-norm row
//! sampling.
//!
//! The sketch keeps a short list of *buckets*, each holding a start
//! timestamp `t_j`, the exact suffix mass `g_j = Σ_{k≥t_j} ‖r_k‖²`
//! (additive, never decremented), and a few sampled rows. On every arrival
//! each stored row is downsampled by the relative Frobenius change
//! `old g/new g`, and buckets are merged once a later one reaches half the
//! mass of an earlier one — so the `g_j` form a halving ladder whose head
//! is a deterministic 2-approximation of the window mass. The net effect
//! is the bookkeeping identity maintained exactly at all times:
//!
//! ```text
//! p(row) = c · ‖row‖² / g(bucket containing it),   c = 18/ε²,
//! ```
//!
//! which keeps every in-window row with probability at least
//! `(9/ε²)·‖row‖²/‖window‖_F²`. Querying stacks the surviving in-window
//! rows scaled by `1/√min(p,1)`; the result `B` satisfies
//! `‖AᵀA − BᵀB‖_F ≤ ε‖A‖_F²` with probability ≥ 2/3.
//!
//! The bits variant rounds every entry to a signed power of `(1+ε/6)` at
//! ingest (so entries compress to small exponents) and runs the sampler at
//! inner accuracy `ε/8`; the two errors compose back to `ε` against the
//! unrounded window.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{norm_sq, Matrix};
use crate::rng::{self, domain};
use crate::sampler::SampledRow;

/// Row storage format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovMode {
    /// Store rows as given.
    Words,
    /// Round entries to signed powers of `(1+ε/6)` before storing.
    Bits,
}

/// Round `v` to the nearest signed power of `(1+eps/6)`; zero stays zero.
/// The relative error is at most `eps/12` per entry.
pub fn round_entry(v: f64, eps: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let base = 1.0 + eps / 6.0;
    let m = libm::round(libm::log(v.abs()) / libm::log(base));
    let mag = libm::pow(base, m);
    if v < 0.0 {
        -mag
    } else {
        mag
    }
}

#[derive(Debug, Clone)]
struct Bucket {
    start: i64,
    /// Exact `Σ ‖r_k‖²` over every arrival since `start` — including rows
    /// that were dropped by sampling or left the window.
    g: f64,
    rows: Vec<SampledRow>,
}

/// Sliding-window covariance sketch.
#[derive(Debug, Clone)]
pub struct CovSketch {
    dim: usize,
    window: usize,
    eps: f64,
    mode: CovMode,
    /// Oversampling constant: `18/ε²` on the sampling accuracy (which is
    /// `ε/8` in bits mode).
    c: f64,
    seed: u64,
    buckets: Vec<Bucket>,
    time: i64,
}

const SERIAL_MAGIC: &[u8; 8] = b"SWCOV1\0\0";
/// High bit distinguishes merge-time coin flips from arrival-time ones.
const COMPRESS_DRAW: u64 = 1 << 63;

impl CovSketch {
    /// Plain (words-mode) sketch: `eps ∈ (0,1)`, rows stored as given,
    /// `c = 18/ε²`.
    pub fn new(dim: usize, window: usize, eps: f64, seed: u64) -> Result<Self> {
        Self::build(dim, window, eps, seed, CovMode::Words)
    }

    /// Bits-mode sketch: entries rounded to powers of `(1+ε/6)` at ingest,
    /// sampler run at inner accuracy `ε/8`.
    pub fn new_bits(dim: usize, window: usize, eps: f64, seed: u64) -> Result<Self> {
        Self::build(dim, window, eps, seed, CovMode::Bits)
    }

    fn build(dim: usize, window: usize, eps: f64, seed: u64, mode: CovMode) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be ≥ 1"));
        }
        if window == 0 {
            return Err(Error::InvalidParameter("window must be ≥ 1"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter("eps must be in (0,1)"));
        }
        let sampling_eps = match mode {
            CovMode::Words => eps,
            CovMode::Bits => eps / 8.0,
        };
        let c = 18.0 / (sampling_eps * sampling_eps);
        Ok(CovSketch { dim, window, eps, mode, c, seed, buckets: Vec::new(), time: i64::MIN })
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

    pub fn mode(&self) -> CovMode {
        self.mode
    }

    /// Oversampling constant `c` actually in force.
    pub fn oversample(&self) -> f64 {
        self.c
    }

    pub fn current_time(&self) -> i64 {
        self.time
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn bucket_starts(&self) -> Vec<i64> {
        self.buckets.iter().map(|b| b.start).collect()
    }

    /// Suffix masses `g_j`, one per bucket (non-increasing).
    pub fn bucket_masses(&self) -> Vec<f64> {
        self.buckets.iter().map(|b| b.g).collect()
    }

    /// Stored rows with their bucket mass, oldest first: `(row, g_bucket)`.
    pub fn tracked_rows(&self) -> Vec<(&SampledRow, f64)> {
        let mut out = Vec::new();
        for b in &self.buckets {
            for r in &b.rows {
                out.push((r, b.g));
            }
        }
        out
    }

    /// Ingest the row arriving at time `t` (strictly increasing):
    /// downsample all stored rows by the mass-ratio rule, append the new
    /// row as a singleton bucket with `p = c`, merge buckets on the
    /// halving rule, then expire.
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

        let stored: Vec<f64> = match self.mode {
            CovMode::Words => r.to_vec(),
            CovMode::Bits => r.iter().map(|v| round_entry(*v, self.eps)).collect(),
        };
        let mass = norm_sq(&stored);

        // Downsample every stored row by the relative Frobenius change of
        // its bucket; survivors take the reduced probability.
        for bucket in &mut self.buckets {
            let old = bucket.g;
            bucket.g += mass;
            let ratio = if bucket.g > 0.0 { old / bucket.g } else { 1.0 };
            let (seed, time) = (self.seed, t);
            bucket.rows.retain_mut(|row| {
                let q = ratio * row.prob;
                let keep_p = q / row.prob.min(1.0);
                let keep = keep_p >= 1.0
                    || rng::unit(seed, domain::COV_KEEP, rng::coord(row.time), rng::coord(time))
                        < keep_p;
                if keep {
                    row.prob = q;
                }
                keep
            });
        }

        let mut newest = SampledRow::new(stored, t);
        newest.prob = self.c;
        self.buckets.push(Bucket { start: t, g: mass, rows: alloc::vec![newest] });

        self.compress(t);
        self.expire(t);
        Ok(())
    }

    /// Merge rule: whenever some bucket at distance ≥ 2 still holds at
    /// least half the mass of bucket `i`, the buckets strictly between are
    /// deleted; their rows are downsampled by `g_bucket/g_i` and folded
    /// into bucket `i` (whose `g` now governs them, keeping
    /// `p = c·‖r‖²/g` exact). Bucket masses never change here, so the
    /// merge structure is deterministic regardless of coin flips.
    fn compress(&mut self, t: i64) {
        let mut merge_salt = 0u64;
        'restart: loop {
            let s = self.buckets.len();
            let mut i = 0;
            while i + 2 < s {
                let gi = self.buckets[i].g;
                let mut j = i;
                for k in i + 1..s {
                    if self.buckets[k].g >= 0.5 * gi {
                        j = k;
                    }
                }
                if j > i + 1 {
                    let drained: Vec<Bucket> = self.buckets.drain(i + 1..j).collect();
                    for dead in drained {
                        let ratio = if gi > 0.0 { dead.g / gi } else { 1.0 };
                        merge_salt += 1;
                        for mut row in dead.rows {
                            let q = ratio * row.prob;
                            let keep_p = q / row.prob.min(1.0);
                            let draw = rng::coord(t) ^ COMPRESS_DRAW ^ merge_salt;
                            let keep = keep_p >= 1.0
                                || rng::unit(
                                    self.seed,
                                    domain::COV_KEEP,
                                    rng::coord(row.time),
                                    draw,
                                ) < keep_p;
                            if keep {
                                row.prob = q;
                                self.buckets[i].rows.push(row);
                            }
                        }
                    }
                    continue 'restart;
                }
                i += 1;
            }
            return;
        }
    }

    /// Two phases: drop out-of-window rows from the oldest bucket, then
    /// delete the oldest bucket entirely while the next one already covers
    /// the window.
    fn expire(&mut self, t: i64) {
        let cutoff = t - self.window as i64 + 1;
        loop {
            if let Some(first) = self.buckets.first_mut() {
                first.rows.retain(|row| row.time >= cutoff);
            }
            if self.buckets.len() >= 2 && self.buckets[1].start <= cutoff {
                self.buckets.remove(0);
                continue;
            }
            return;
        }
    }

    /// Surviving rows scaled by `1/√min(p,1)` — `BᵀB` estimates the Gram
    /// of the window. Empty sketch gives a `0×n` matrix.
    pub fn query(&self) -> Matrix {
        let mut m = Matrix::zeros(0, self.dim);
        let mut buf = alloc::vec![0.0; self.dim];
        for bucket in &self.buckets {
            for row in &bucket.rows {
                let scale = 1.0 / libm::sqrt(row.prob.min(1.0));
                for (b, v) in buf.iter_mut().zip(&row.row) {
                    *b = v * scale;
                }
                m.push_row(&buf).unwrap();
            }
        }
        m
    }

    /// Serialize the full sketch state. Words mode writes raw `f64`
    /// entries; bits mode writes each entry as a sign/zero tag plus the
    /// signed 16-bit exponent of `(1+ε/6)`.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(SERIAL_MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.push(match self.mode {
            CovMode::Words => 0,
            CovMode::Bits => 1,
        });
        out.extend_from_slice(&(self.window as u64).to_le_bytes());
        out.extend_from_slice(&self.eps.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        out.extend_from_slice(&(self.buckets.len() as u32).to_le_bytes());
        let base = 1.0 + self.eps / 6.0;
        for bucket in &self.buckets {
            out.extend_from_slice(&bucket.start.to_le_bytes());
            out.extend_from_slice(&bucket.g.to_le_bytes());
            out.extend_from_slice(&(bucket.rows.len() as u32).to_le_bytes());
            for row in &bucket.rows {
                out.extend_from_slice(&row.prob.to_le_bytes());
                out.extend_from_slice(&row.time.to_le_bytes());
                for &v in &row.row {
                    match self.mode {
                        CovMode::Words => out.extend_from_slice(&v.to_le_bytes()),
                        CovMode::Bits => {
                            if v == 0.0 {
                                out.push(0);
                                out.extend_from_slice(&0i16.to_le_bytes());
                            } else {
                                let m = libm::round(libm::log(v.abs()) / libm::log(base));
                                if m < i16::MIN as f64 || m > i16::MAX as f64 {
                                    return Err(Error::InvalidParameter(
                                        "entry exponent exceeds 16 bits",
                                    ));
                                }
                                out.push(if v < 0.0 { 2 } else { 1 });
                                out.extend_from_slice(&(m as i16).to_le_bytes());
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, at: 0 };
        if cur.take(8)? != SERIAL_MAGIC {
            return Err(Error::Corrupt("bad magic"));
        }
        let dim = cur.u32()? as usize;
        let mode = match cur.u8()? {
            0 => CovMode::Words,
            1 => CovMode::Bits,
            _ => return Err(Error::Corrupt("bad mode tag")),
        };
        let window = cur.u64()? as usize;
        let eps = cur.f64()?;
        let seed = cur.u64()?;
        let time = cur.i64()?;
        let nbuckets = cur.u32()? as usize;
        let mut sketch = Self::build(dim, window, eps, seed, mode)?;
        sketch.time = time;
        let base = 1.0 + eps / 6.0;
        for _ in 0..nbuckets {
            let start = cur.i64()?;
            let g = cur.f64()?;
            if !g.is_finite() || g < 0.0 {
                return Err(Error::Corrupt("bad bucket mass"));
            }
            let nrows = cur.u32()? as usize;
            let mut rows = Vec::with_capacity(nrows);
            for _ in 0..nrows {
                let prob = cur.f64()?;
                let rt = cur.i64()?;
                if !(prob > 0.0 && prob.is_finite()) {
                    return Err(Error::Corrupt("bad row probability"));
                }
                let mut row = Vec::with_capacity(dim);
                for _ in 0..dim {
                    let v = match mode {
                        CovMode::Words => cur.f64()?,
                        CovMode::Bits => {
                            let tag = cur.u8()?;
                            let m = cur.i16()?;
                            match tag {
                                0 => 0.0,
                                1 => libm::pow(base, m as f64),
                                2 => -libm::pow(base, m as f64),
                                _ => return Err(Error::Corrupt("bad entry tag")),
                            }
                        }
                    };
                    if !v.is_finite() {
                        return Err(Error::Corrupt("non-finite entry"));
                    }
                    row.push(v);
                }
                let mut stored = SampledRow::new(row, rt);
                stored.prob = prob;
                rows.push(stored);
            }
            sketch.buckets.push(Bucket { start, g, rows });
        }
        if cur.at != bytes.len() {
            return Err(Error::Corrupt("trailing bytes"));
        }
        Ok(sketch)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::Corrupt("truncated input"));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn i16(&mut self) -> Result<i16> {
        Ok(i16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
