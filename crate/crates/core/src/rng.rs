//! Seed derivation and the generator every randomized sketch draws from.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The pseudo-random generator behind every randomized sketch.
pub type SketchRng = ChaCha8Rng;

/// Name recorded alongside reports so runs can be reproduced exactly.
pub const GENERATOR_NAME: &str = "chacha8";

pub fn rng_from_seed(seed: u64) -> SketchRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser: a bijective 64-bit mixer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `value` into `state`; order-sensitive.
#[inline]
pub fn mix(state: u64, value: u64) -> u64 {
    splitmix64(state ^ splitmix64(value))
}

/// 64-bit FNV-1a, used to fold names into seeds.
pub fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Per-trial seed. Adding or removing an algorithm never changes another's seeds.
pub fn trial_seed(master: u64, algorithm: &str, ell: usize, trial: usize) -> u64 {
    let s = mix(master, fnv1a(algorithm));
    let s = mix(s, ell as u64);
    mix(s, trial as u64)
}

/// Derives an independent sub-seed for a named purpose inside one sketch.
pub fn sub_seed(seed: u64, purpose: &str) -> u64 {
    mix(seed, fnv1a(purpose))
}

/// Maps 64 random bits to a uniform double in `[0, 1)`.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
