//! Deterministic derivation of independent child seeds.
//!
//! Every random stream in the pipeline (excitation synthesis, per-channel
//! sensor noise, per-cycle Monte Carlo draws) gets its own seed derived from a
//! base seed, a purpose tag, and an index. Derivation is a pure function of
//! those three values, so runs are reproducible across platforms and the same
//! base seed never feeds two different streams with identical state.

/// SplitMix64 permutation step.
fn splitmix(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base`, folding in a purpose tag and an index.
pub fn derive_seed(base: u64, tag: &str, index: u64) -> u64 {
    let mut state = splitmix(base);
    for &byte in tag.as_bytes() {
        state = splitmix(state ^ u64::from(byte));
    }
    splitmix(state ^ index)
}
