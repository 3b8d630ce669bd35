//! Seed derivation. Every random stage draws from its own ChaCha stream so
//! that any single cell of an experiment can be reproduced in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stage tags used when deriving sub-seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Generate = 1,
    Attack = 2,
    Partition = 3,
    Directions = 4,
    Augment = 5,
    Lepski = 6,
    Isometry = 7,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a master seed and a list of coordinates.
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(master), |h, &p| splitmix(h ^ splitmix(p)))
}

/// Seed for one experiment cell: `hash(master, N, trial, stage)`.
pub fn cell_seed(master: u64, n: usize, trial: usize, stage: Stage) -> u64 {
    derive(master, &[n as u64, trial as u64, stage as u64])
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Counter-based stream `index` of `seed`; independent of how many other
/// streams have been consumed.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut r = Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn derivation_is_order_sensitive_and_stable() {
        assert_eq!(derive(7, &[1, 2]), derive(7, &[1, 2]));
        assert_ne!(derive(7, &[1, 2]), derive(7, &[2, 1]));
        assert_ne!(cell_seed(1, 100, 0, Stage::Generate), cell_seed(1, 100, 0, Stage::Attack));
    }

    #[test]
    fn streams_are_distinct() {
        let a: u64 = stream(3, 0).random();
        let b: u64 = stream(3, 1).random();
        assert_ne!(a, b);
        let a2: u64 = stream(3, 0).random();
        assert_eq!(a, a2);
    }
}
