//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha20 (`rand_chacha`),
//! seeded with `ChaCha20Rng::seed_from_u64(seed)` and switched to a numbered
//! stream with `set_stream`. Stream 0 of an evaluation seed assigns ground
//! truths; stream `i + 1` drives the decoding session of item `i`; stream
//! `u64::MAX` draws per-item option-shuffle seeds. A single `generate` call
//! uses stream 0.
//!
//! Uniform reals take the top 53 bits of one `next_u64` draw, so a sampled
//! token depends only on the ChaCha20 keystream and the documented sampler
//! arithmetic.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type SessionRng = ChaCha20Rng;

pub fn stream_rng(seed: u64, stream: u64) -> SessionRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from `[0, 1)` with 53 bits of resolution.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exactly uniform draw from `0..4`: the top two bits of one `next_u64`.
pub fn quarter(rng: &mut impl RngCore) -> usize {
    (rng.next_u64() >> 62) as usize
}
