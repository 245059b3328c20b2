//! Deterministic sliding-window spectral approximation.
//!
//! The histogram stores a short chain of Gram matrices `S_1 ⪰ S_2 ⪰ … ⪰ S_s`
//! with start times `t_1 < … < t_s`; `S_i` is exactly the Gram of the rows
//! that arrived in `[t_i, now]`. Three maintenance steps run per arrival:
//!
//! * **update** — add `rᵀr` to every stored Gram and append the singleton
//!   Gram of the new row;
//! * **compress** — whenever some later `S_j` still `(1−ε)`-dominates an
//!   earlier `S_i` (`S_j ⪰ (1−ε)·S_i`), the matrices strictly between them
//!   carry no information worth `ε` and are deleted. The scan runs from the
//!   oldest index upward and restarts after every deletion;
//! * **expire** — the oldest Gram is dropped once the *second* start time
//!   already covers the window, so `t_1 ≤ now−W+1 < t_2` at all times.
//!
//! The front Gram `G = S_1` then sandwiches the exact window Gram:
//! `(1−ε)·G ⪯ AᵀA ⪯ G`. Everything is deterministic — no sampling — and the
//! chain length stays `O((n/ε)·log(spectral range))`.
//!
//! For heavy streams the three steps can be amortized: with a batch size
//! `B > 1`, arrivals accumulate and the maintenance walk runs once per `B`
//! rows (queries flush first, so results never lag behind ingested data).

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scores::psd_dominates;

/// Internal Loewner-comparison tolerance (relative to operand traces).
const PSD_TOL: f64 = 1e-9;

/// Magic bytes of the serialized state layout.
const STATE_MAGIC: &[u8; 8] = b"SWSPEC1\0";

/// Deterministic spectral histogram over a sliding window of `W` rows.
#[derive(Debug, Clone)]
pub struct SpectralHistogram {
    dim: usize,
    eps: f64,
    window: usize,
    batch: usize,
    time: i64,
    mats: Vec<Matrix>,
    times: Vec<i64>,
    pending: Vec<(Vec<f64>, i64)>,
}

impl SpectralHistogram {
    /// `dim ≥ 1`, `window ≥ 1`, `eps ∈ (0, 1)`. Rows are processed one by
    /// one (batch size 1).
    pub fn new(dim: usize, window: usize, eps: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be ≥ 1"));
        }
        if window == 0 {
            return Err(Error::InvalidParameter("window must be ≥ 1"));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter("eps must be in (0,1)"));
        }
        Ok(SpectralHistogram {
            dim,
            eps,
            window,
            batch: 1,
            time: i64::MIN,
            mats: Vec::new(),
            times: Vec::new(),
            pending: Vec::new(),
        })
    }

    /// Amortize maintenance over batches of `batch` rows (1 = per-row). The
    /// default heavy-stream batch is `⌈n²/ε⌉·(1+⌊log₂ n⌋)` rows.
    pub fn with_batch(mut self, batch: usize) -> Result<Self> {
        if batch == 0 {
            return Err(Error::InvalidParameter("batch must be ≥ 1"));
        }
        self.batch = batch;
        Ok(self)
    }

    /// The default amortization batch for this dimension and accuracy.
    pub fn default_batch(dim: usize, eps: f64) -> usize {
        let n2e = libm::ceil((dim * dim) as f64 / eps) as usize;
        let log2n = (usize::BITS - 1 - dim.leading_zeros().min(usize::BITS - 1)) as usize;
        n2e * (1 + log2n)
    }

    /// Ingest the row arriving at time `t` (strictly increasing).
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
        self.pending.push((r.to_vec(), t));
        if self.pending.len() >= self.batch {
            self.flush();
        }
        Ok(())
    }

    /// Run any deferred maintenance so the stored chain reflects every
    /// ingested row.
    pub fn flush(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let rows = core::mem::take(&mut self.pending);
        for (r, t) in rows {
            for m in &mut self.mats {
                m.add_outer(&r, 1.0);
            }
            let mut s = Matrix::zeros(self.dim, self.dim);
            s.add_outer(&r, 1.0);
            self.mats.push(s);
            self.times.push(t);
        }
        self.compress();
        self.expire();
    }

    /// Delete every matrix strictly between an index pair `(i, j)` with
    /// `S_j ⪰ (1−ε)·S_i`; ascending scan with restart after each deletion.
    fn compress(&mut self) {
        'restart: loop {
            let s = self.mats.len();
            let mut i = 0;
            while i + 2 < s {
                let floor = self.mats[i].scale(1.0 - self.eps);
                // Largest j > i still dominating the (1−ε)-scaled S_i.
                let mut j = i + 1;
                for k in (i + 1)..s {
                    // Loewner comparison of PSD Grams cannot error here:
                    // shapes match and operands are symmetric by build.
                    if psd_dominates(&floor, &self.mats[k], PSD_TOL).unwrap_or(false) {
                        j = k;
                    }
                }
                if j > i + 1 {
                    self.mats.drain(i + 1..j);
                    self.times.drain(i + 1..j);
                    continue 'restart;
                }
                i += 1;
            }
            break;
        }
    }

    /// Drop the front Gram while the second start time already covers the
    /// window `[now−W+1, now]`.
    fn expire(&mut self) {
        let boundary = self.time - self.window as i64 + 1;
        while self.times.len() >= 2 && self.times[1] <= boundary {
            self.mats.remove(0);
            self.times.remove(0);
        }
    }

    /// The window-Gram proxy `G = S_1`, satisfying
    /// `(1−ε)·G ⪯ AᵀA ⪯ G` for the exact window Gram `AᵀA`. Flushes any
    /// deferred batch first. Returns the zero matrix plus an emptiness flag
    /// before the first row.
    pub fn query(&mut self) -> (Matrix, bool) {
        self.flush();
        match self.mats.first() {
            Some(m) => (m.clone(), false),
            None => (Matrix::zeros(self.dim, self.dim), true),
        }
    }

    /// Number of stored Grams (after any pending batch is flushed this is
    /// the chain length `s`).
    pub fn chain_len(&self) -> usize {
        self.mats.len()
    }

    /// Start times of the stored Grams.
    pub fn start_times(&self) -> &[i64] {
        &self.times
    }

    /// Stored Grams, oldest first.
    pub fn grams(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Latest ingested timestamp (`i64::MIN` before the first row).
    pub fn current_time(&self) -> i64 {
        self.time
    }

    /// Serialize the flushed state: magic, `dim`, chain length, `eps`,
    /// window, current time, start times, then the Grams row-major — all
    /// integers and floats little-endian.
    pub fn to_bytes(&mut self) -> Vec<u8> {
        self.flush();
        let mut out = Vec::new();
        out.extend_from_slice(STATE_MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.mats.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.eps.to_le_bytes());
        out.extend_from_slice(&(self.window as u64).to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        for t in &self.times {
            out.extend_from_slice(&t.to_le_bytes());
        }
        for m in &self.mats {
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Reconstruct from [`Self::to_bytes`] output (batch size resets to 1).
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { buf: bytes, pos: 0 };
        if cur.take(8)? != STATE_MAGIC.as_slice() {
            return Err(Error::Corrupt("bad magic"));
        }
        let dim = cur.u32()? as usize;
        let s = cur.u32()? as usize;
        let eps = cur.f64()?;
        let window = cur.u64()? as usize;
        let time = cur.i64()?;
        let mut times = Vec::with_capacity(s);
        for _ in 0..s {
            times.push(cur.i64()?);
        }
        let mut mats = Vec::with_capacity(s);
        for _ in 0..s {
            let mut data = Vec::with_capacity(dim * dim);
            for _ in 0..dim * dim {
                data.push(cur.f64()?);
            }
            mats.push(Matrix::from_vec(dim, dim, data)?);
        }
        let mut h = SpectralHistogram::new(dim, window, eps)?;
        h.time = time;
        h.times = times;
        h.mats = mats;
        Ok(h)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Corrupt("truncated"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
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
