//! Reproducible random streams for simulation replications.
//!
//! Every replication gets its own ChaCha8 stream: the generator is seeded
//! from `splitmix64(master_seed ^ fnv1a64(cell_key))` and the ChaCha stream
//! id is the replication index. Streams are therefore independent of the
//! order or thread in which replications run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for all simulation draws.
pub type SimRng = ChaCha8Rng;

/// Identity of the stream derivation; changing it changes every table.
pub const RNG_ALGORITHM: &str = "chacha8/splitmix64-fnv1a64/stream=replication";

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn stream(master_seed: u64, cell_key: &str, replication: u64) -> SimRng {
    let seed = splitmix64(master_seed ^ fnv1a64(cell_key.as_bytes()));
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}
