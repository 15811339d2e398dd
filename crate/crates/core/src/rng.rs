//! Seeding conventions.
//!
//! Every random stream in the crate is a `ChaCha8Rng` (a counter-based
//! generator with a platform independent output sequence). Independent
//! streams for subsamples, replicates and restarts are obtained from a master
//! seed with [`derive_seed`], so any stream can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `stream`-th child of `master`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix64(mix64(master ^ 0x9e37_79b9_7f4a_7c15).wrapping_add(mix64(stream.wrapping_add(1))))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_streams_are_distinct_and_stable() {
        let a = derive_seed(7, 0);
        let b = derive_seed(7, 1);
        let c = derive_seed(8, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, 0));
        let x: u64 = rng_from_seed(a).random();
        let y: u64 = rng_from_seed(a).random();
        assert_eq!(x, y);
    }
}
