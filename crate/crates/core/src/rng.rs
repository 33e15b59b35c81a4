//! Counter-based random streams. Every consumer derives its stream from the
//! run seed and a fixed stream id, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Well-known stream ids.
pub mod streams {
    pub const NONDIV_SAMPLES: u64 = 1;
    pub const GAP_SEARCH: u64 = 2;
    pub const TEST_FIXTURES: u64 = 3;
}

/// Independent stream `id` of the generator seeded with `seed`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Stream `id`, advanced to block `chunk` of `words_per_chunk` 32-bit
/// words. Chunks can then be generated in any order or in parallel.
pub fn chunk_stream(seed: u64, id: u64, chunk: u64, words_per_chunk: u64) -> ChaCha8Rng {
    let mut rng = stream(seed, id);
    rng.set_word_pos(chunk as u128 * words_per_chunk as u128);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn chunks_match_sequential_draws() {
        let mut seq = stream(7, 1);
        let all: Vec<u32> = (0..64).map(|_| seq.next_u32()).collect();
        let mut c = chunk_stream(7, 1, 2, 16);
        let part: Vec<u32> = (0..16).map(|_| c.next_u32()).collect();
        assert_eq!(part, all[32..48]);
    }
}
