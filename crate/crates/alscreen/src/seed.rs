//! Deterministic seed derivation.
//!
//! Every random stream in the crate is derived from a single experiment seed
//! through this module, so that subsystems never share or reuse a stream and
//! the whole pipeline is reproducible from one integer.

/// splitmix64 finalizer; good avalanche, stable across platforms.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a sequence of integer parts.
pub fn derive(base: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix(base);
    for &p in parts {
        h = splitmix(h ^ p);
    }
    h
}

/// Fold a string tag into a 64-bit value (FNV-1a) for use as a `derive` part.
pub fn tag(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// FNV-1a over arbitrary bytes; used for content digests (schema hashes,
/// model digests) where a stable, dependency-free 64-bit fingerprint is
/// enough.
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
