//! Seed derivation.
//!
//! Every random field of a generated object draws from its own ChaCha8
//! stream keyed by `(seed, tag)`. Adding a new field with a new tag never
//! shifts the values drawn for existing fields.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Mixes a parent seed with an integer key (e.g. an instance ordinal).
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ key.rotate_left(17))
}

/// Independent generator for the field named `tag`.
pub fn substream(seed: u64, tag: &str) -> StreamRng {
    StreamRng::seed_from_u64(splitmix64(derive_seed(seed, fnv1a(tag))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u32> = substream(7, "edges").sample_iter(rand::distributions::Standard).take(4).collect();
        let b: Vec<u32> = substream(7, "edges").sample_iter(rand::distributions::Standard).take(4).collect();
        let c: Vec<u32> = substream(7, "scenarios").sample_iter(rand::distributions::Standard).take(4).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }

    #[test]
    fn stream_values_are_pinned() {
        // Guards against silent changes to the derivation; instances on disk
        // depend on it.
        let mut rng = substream(42, "first_stage_cost");
        let v: u64 = rng.gen();
        let mut again = substream(42, "first_stage_cost");
        assert_eq!(v, again.gen::<u64>());
        assert_eq!(v, 18_256_236_180_793_947_934);
    }
}
