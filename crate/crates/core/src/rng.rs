//! Counter-derived random streams.
//!
//! Every block of paths draws from its own ChaCha stream keyed by
//! `(seed, block index)`, so results do not depend on how blocks are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of paths simulated per independent random stream.
pub const BLOCK_PATHS: usize = 1024;

pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives a child seed from a master seed and integer coordinates
/// (e.g. the row and column of a table cell).
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Splits `n_paths` into `(block index, paths in block)` pairs.
pub fn blocks(n_paths: usize) -> Vec<(u64, usize)> {
    (0..n_paths.div_ceil(BLOCK_PATHS))
        .map(|b| {
            let len = BLOCK_PATHS.min(n_paths - b * BLOCK_PATHS);
            (b as u64, len)
        })
        .collect()
}
