//! Seed keying for reproducible random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose key is
//! derived from the top-level seed plus a purpose tag, and whose stream
//! number is the Monte Carlo run index. Two runs with different indices never
//! share a stream, and a run can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into the key so that unrelated consumers never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Climate = 1,
    Random = 2,
    Recovery = 3,
    Clustering = 4,
    Synthetic = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of tags into a single 64-bit key.
pub fn derive_key(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Random stream for `(seed, purpose, extra tags, run_index)`.
pub fn substream(seed: u64, purpose: Purpose, tags: &[u64], run_index: u64) -> ChaCha8Rng {
    let mut all = Vec::with_capacity(tags.len() + 1);
    all.push(purpose as u64);
    all.extend_from_slice(tags);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_key(seed, &all));
    rng.set_stream(run_index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(substream(7, Purpose::Climate, &[], 3), |r, _| Some(r.random()))
            .collect();
        let b: Vec<u64> = (0..4)
            .map(|_| 0)
            .scan(substream(7, Purpose::Climate, &[], 3), |r, _| Some(r.random()))
            .collect();
        assert_eq!(a, b);
        let mut other = substream(7, Purpose::Climate, &[], 4);
        assert_ne!(a[0], other.random::<u64>());
        let mut purpose = substream(7, Purpose::Recovery, &[], 3);
        assert_ne!(a[0], purpose.random::<u64>());
    }
}
