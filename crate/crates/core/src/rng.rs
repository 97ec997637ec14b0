//! Keyed random substreams.
//!
//! Every trial draws from its own generator, seeded from a hash of
//! `(seed, stream, index)`. Results therefore depend only on those keys and
//! never on how trials are split across workers.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type TrialRng = Xoshiro256PlusPlus;

/// Stream id reserved for CDF sampling; SNR grid points use their index.
pub const CDF_STREAM: u64 = u64::MAX;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for trial `index` of `stream` under the global `seed`.
#[inline]
pub fn substream(seed: u64, stream: u64, index: u64) -> TrialRng {
    let key = splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index);
    Xoshiro256PlusPlus::seed_from_u64(key)
}
