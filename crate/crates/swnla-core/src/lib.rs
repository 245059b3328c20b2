//! Sliding-window numerical linear algebra over row streams.
//!
//! A stream of rows `r_1, r_2, …` arrives one at a time and queries concern
//! only the window of the most recent `W` rows. The sketches in this crate
//! answer those queries in space far below `W` rows:
//!
//! * [`spectral::SpectralHistogram`] — deterministic `(1±ε)` spectral
//!   approximation of the window Gram matrix `AᵀA`.
//! * [`sampler::RowSampler`] — randomized spectral approximation that keeps a
//!   set of rescaled sampled rows.
//! * [`pcp::PcpSampler`] — rank-`k` projection-cost-preserving row sample of
//!   the window.
//! * [`online::OnlineLra`] — irrevocable (online) low-rank row sampling over
//!   the whole stream.
//! * [`l1::L1Sliding`] — ℓ1 spectral approximation for integer-bounded
//!   streams.
//! * [`cov::CovSketch`] — covariance (`AᵀA`) approximation by squared-norm
//!   row sampling, with an optional low-bit entry encoding.
//! * [`smooth::SmoothHistogram`] — the generic smooth-histogram scaffolding
//!   used to track the window's squared Frobenius norm.
//!
//! The crate is `no_std` (with `alloc`); all floating-point transcendentals
//! come from [`libm`]. Every random decision is derived from a seed plus the
//! coordinates of the decision (row time, ingest time), so runs replay
//! exactly and trials parallelize without shared RNG state.

#![no_std]

extern crate alloc;

pub mod cov;
pub mod embed;
pub mod error;
pub mod factor;
pub mod l1;
pub mod matrix;
pub mod online;
pub mod pcp;
pub mod rng;
pub mod sampler;
pub mod scores;
pub mod smooth;
pub mod spectral;

pub use error::Error;
pub use matrix::Matrix;
