//! Hash-split random streams.
//!
//! Every random quantity is addressed by `(master_seed, stream, block)`. The
//! triple is mixed with SplitMix64 into a ChaCha8 key, so a given block is
//! reproducible no matter which worker generates it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::C64;

/// Stream identifiers used by the channel model and the samplers.
pub mod streams {
    pub const AP_USER: u64 = 1;
    pub const RIS_USER: u64 = 2;
    pub const AP_RIS: u64 = 3;
    pub const EVE: u64 = 4;
    pub const PHASE_INIT: u64 = 5;
    pub const TEST: u64 = 99;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes several words into one 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut state = 0x6A09_E667_F3BC_C908;
    let mut out = 0;
    for &p in parts {
        state ^= p;
        out = splitmix64(&mut state);
    }
    out
}

/// Generator for block `block` of stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut state = seed ^ stream.rotate_left(21) ^ block.rotate_left(42);
    let mut key = [0u8; 32];
    // fold all three words in so that (a, b, c) and permutations differ
    let mut mix = derive_seed(&[seed, stream, block]);
    for chunk in key.chunks_mut(8) {
        state ^= mix;
        mix = splitmix64(&mut state);
        chunk.copy_from_slice(&mix.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Circularly-symmetric complex Gaussian with unit variance.
#[inline]
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Uniform phase on `[0, 2π)` as a unit-modulus complex number.
pub fn unit_phase<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    C64::from_polar(1.0, theta)
}
