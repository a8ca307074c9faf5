//! Splittable seed derivation.
//!
//! Every random stream in the crate is keyed by a path of integers hashed
//! down from a master seed, so the stream a work unit sees depends only on
//! its identity and never on the order in which units are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep unrelated consumers of the same master seed apart.
pub mod tag {
    pub const FOLDS: u64 = 0x464f_4c44;
    pub const ITERATION: u64 = 0x4954_4552;
    pub const FOLD_RESAMPLE: u64 = 0x5253_4d50;
    pub const MODEL: u64 = 0x4d4f_444c;
    pub const SHAP: u64 = 0x5348_4150;
    pub const SYNTH: u64 = 0x5359_4e54;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and a path of stream identifiers.
pub fn derive(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(parent), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_for(parent: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(parent, path))
}
