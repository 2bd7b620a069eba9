//! Seed derivation for the independent random streams of one run.

/// Derives a sub-seed for stream `stream` from a base seed, splitmix64-style.
/// Distinct streams from one base seed are decorrelated, and the mapping is
/// stable so replays reproduce every draw.
pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
