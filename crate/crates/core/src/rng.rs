//! Deterministic random streams.
//!
//! Every random draw in this crate comes from ChaCha20 seeded with a `u64`.
//! Independent streams (Monte Carlo trials, per-session generators) share a
//! seed and differ in the ChaCha stream id, so results never depend on
//! scheduling order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type DetRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> DetRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> DetRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A fresh seed from the operating system's entropy source.
pub fn entropy_seed() -> u64 {
    rand::rng().random()
}

/// `len` random bytes from the thread-local CSPRNG, hex encoded.
pub fn random_hex(len: usize) -> String {
    let mut buf = vec![0u8; len];
    rand::rng().fill_bytes(&mut buf);
    hex::encode(buf)
}
