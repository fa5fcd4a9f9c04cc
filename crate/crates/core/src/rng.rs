//! Counter-based random streams.
//!
//! Every random draw in a simulation comes from a ChaCha8 stream selected by
//! `(seed, index, purpose)`: the key is expanded from the seed and the 64-bit
//! stream id packs the purpose tag into the top 16 bits and the index into the
//! low 48. A stream depends only on its coordinates, never on how many values
//! other streams consumed, so serial and parallel executions agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum Purpose {
    LocalOscillatorInit = 1,
    LocalOscillator = 2,
    DetectPlus = 3,
    DetectMinus = 4,
    Test = 0xffff,
}

const INDEX_BITS: u32 = 48;

/// Random stream for `(seed, index, purpose)`.
///
/// # Panics
///
/// If `index` does not fit in 48 bits.
pub fn stream(seed: u64, index: u64, purpose: Purpose) -> ChaCha8Rng {
    assert!(index < 1 << INDEX_BITS, "stream index {index} exceeds 48 bits");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << INDEX_BITS) | index);
    rng
}
