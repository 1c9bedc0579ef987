//! Seed splitting: every trial and stream gets a seed that depends only on
//! the master seed and its own coordinates, so any trial can be rerun alone.

/// The SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `master` one SplitMix64 round at a time.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Seed of trial `trial` for streams with batch size `batch`. Independent of
/// the window and tracker so those are compared on identical streams.
pub fn trial_seed(master: u64, trial: usize, batch: usize) -> u64 {
    derive_seed(master, &[trial as u64, batch as u64])
}
