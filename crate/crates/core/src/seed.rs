//! Per-component random streams derived from one 64-bit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The independent consumers of randomness in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedLabel {
    Referee,
    Source,
    Alice,
    Bob,
}

impl SeedLabel {
    fn stream(self) -> u64 {
        match self {
            SeedLabel::Referee => 1,
            SeedLabel::Source => 2,
            SeedLabel::Alice => 3,
            SeedLabel::Bob => 4,
        }
    }
}

/// ChaCha stream for one component. Same seed and label give the same stream
/// in every process.
pub fn component_rng(seed: u64, label: SeedLabel) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label.stream());
    rng
}

/// Derives a child seed, e.g. one per cycle size in a sweep.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
