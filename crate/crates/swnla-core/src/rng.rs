//! Replay-deterministic randomness.
//!
//! Every random decision in the crate — a Bernoulli keep-test, an embedding
//! sign, a generated stream entry — is produced by a *one-shot* ChaCha8
//! stream keyed by `(seed, domain, a, b)`, where `a` and `b` are the
//! coordinates of the decision (typically a row timestamp and an ingest
//! timestamp). Consequences:
//!
//! * identical seeds and configs replay bit-identically, regardless of
//!   evaluation order;
//! * parallel trials never contend on shared RNG state;
//! * re-testing the same row at the same ingest step (as the re-sampling
//!   passes do on every arrival) draws *fresh* randomness whenever either
//!   coordinate differs, and the *same* randomness when both coincide.
//!
//! ChaCha8 is deliberate: key-schedule setup is trivial, so constructing a
//! fresh cipher per decision costs about as much as one block of output.

use rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Decision domains. Distinct constants guarantee that two different kinds
/// of decision never consume the same underlying stream even if their
/// coordinates collide.
pub mod domain {
    /// Dense embedding entry signs.
    pub const EMBED_DENSE: u64 = 1;
    /// Sparse embedding nonzero positions and signs (per output column).
    pub const EMBED_SPARSE: u64 = 2;
    /// Keep/discard tests in the windowed spectral row sampler.
    pub const SAMPLER_KEEP: u64 = 3;
    /// Keep/discard tests in the windowed rank-k sampler.
    pub const PCP_KEEP: u64 = 4;
    /// Keep/discard tests in the online (irrevocable) sampler.
    pub const ONLINE_KEEP: u64 = 5;
    /// Keep/discard tests in the covariance sampler.
    pub const COV_KEEP: u64 = 6;
    /// Keep/discard tests in the ℓ1 samplers.
    pub const L1_KEEP: u64 = 7;
    /// Stream generators (harness crate).
    pub const GENERATE: u64 = 8;
}

fn cipher(seed: u64, dom: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&dom.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Raw 64 random bits for the decision `(seed, dom, a, b)`.
pub fn bits(seed: u64, dom: u64, a: u64, b: u64) -> u64 {
    cipher(seed, dom, a, b).next_u64()
}

/// Uniform draw in `[0, 1)` for the decision `(seed, dom, a, b)`.
pub fn unit(seed: u64, dom: u64, a: u64, b: u64) -> f64 {
    u64_to_unit(bits(seed, dom, a, b))
}

/// A pair of independent standard Gaussians for the decision coordinates,
/// via Box–Muller on two uniforms from the same one-shot stream.
pub fn gauss_pair(seed: u64, dom: u64, a: u64, b: u64) -> (f64, f64) {
    let mut c = cipher(seed, dom, a, b);
    // Reject u1 == 0 so the logarithm stays finite.
    let mut u1 = u64_to_unit(c.next_u64());
    while u1 <= 0.0 {
        u1 = u64_to_unit(c.next_u64());
    }
    let u2 = u64_to_unit(c.next_u64());
    let r = libm::sqrt(-2.0 * libm::log(u1));
    let phi = 2.0 * core::f64::consts::PI * u2;
    (r * libm::cos(phi), r * libm::sin(phi))
}

/// Map 64 random bits to `[0, 1)` using the top 53 bits.
#[inline]
fn u64_to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Convenience: reinterpret a signed timestamp as a key coordinate.
#[inline]
pub fn coord(t: i64) -> u64 {
    t as u64
}
