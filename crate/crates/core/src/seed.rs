//! Sub-seed derivation for independent Monte Carlo tasks.

/// Derives a task seed from a master seed, a stream tag and a task index.
///
/// Uses the SplitMix64 finalizer; the mapping is fixed so outputs do not
/// depend on scheduling order.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        ^ mix(stream.wrapping_add(0x9E37_79B9_7F4A_7C15))
        ^ mix(index.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(1));
    z = mix(z);
    z
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
