//! Seed derivation. Every random stream in a run is derived from the single
//! global seed with [`derive_seed`], so subsystems never share a stream and
//! adding a consumer does not perturb the others.

/// Named streams. Values are part of the reproducibility contract.
pub mod stream {
    pub const SCENE: u64 = 1;
    pub const EPISODE: u64 = 2;
    pub const GRASP_PROPOSALS: u64 = 3;
    pub const RENDER: u64 = 4;
    pub const DETECTOR: u64 = 5;
    pub const RANSAC: u64 = 6;
    pub const ITEM_PLACEMENT: u64 = 7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(parent) ^ stream)`, applied once per tag.
pub fn derive_seed(parent: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(parent, |acc, &tag| splitmix64(splitmix64(acc) ^ tag))
}
