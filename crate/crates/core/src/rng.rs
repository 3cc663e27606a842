//! Deterministic random streams.
//!
//! Every replica owns one [`Stream`]. Its seed is derived from the master
//! seed, a cell identifier and the replica index by [`split_seed`]:
//!
//! ```text
//! split(master, cell, i) = mix(mix(mix(master) ^ cell) ^ mix(i + 0x9E3779B97F4A7C15))
//! mix(z): z += 0x9E3779B97F4A7C15
//!         z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!         z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!         z ^ (z >> 31)
//! ```
//!
//! `mix` is the SplitMix64 output function (all arithmetic wrapping). The
//! resulting 64-bit seed initialises a xoshiro256++ generator through
//! `SeedableRng::seed_from_u64`. Cell identifiers are the first eight bytes
//! (little-endian) of the SHA-256 digest of the cell key string.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use sha2::{Digest, Sha256};

/// Pseudorandom generator used for all simulation streams.
pub type Stream = Xoshiro256PlusPlus;

/// Identity string embedded in every output file.
pub const RNG_IDENTITY: &str =
    "xoshiro256++ (rand_xoshiro 0.7, seed_from_u64); seeds split by splitmix64 chain over (master, sha256(cell)[..8], replica)";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn split_seed(master: u64, cell: u64, replica: u64) -> u64 {
    mix(mix(mix(master) ^ cell) ^ mix(replica.wrapping_add(GOLDEN_GAMMA)))
}

/// Hashes a cell key (for example `"alpha=0.5,d=2,dist=gaussian(d=2),n=1000"`).
pub fn cell_id(key: &str) -> u64 {
    let digest = Sha256::digest(key.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

pub fn replica_stream(master: u64, cell: u64, replica: u64) -> Stream {
    stream(split_seed(master, cell, replica))
}
