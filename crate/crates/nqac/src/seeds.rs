//! Deterministic seed fan-out.
//!
//! A single master seed derives independent child streams for instances,
//! embeddings, programming cycles and reads. The derivation is a fixed
//! splitmix64 chain over the master seed and a list of tag words, so child
//! seeds are stable across platforms and worker counts.

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Child seed for the stream identified by `tags` under `master`.
pub fn child_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &t in tags {
        state = splitmix64(state ^ t);
    }
    state
}

/// Stream tags used by the experiment harness.
pub mod tag {
    pub const INSTANCE: u64 = 0x01;
    pub const EMBEDDING: u64 = 0x02;
    pub const CYCLE: u64 = 0x03;
    pub const READ: u64 = 0x04;
    pub const TIE: u64 = 0x05;
    pub const SAMPLE: u64 = 0x06;
}
