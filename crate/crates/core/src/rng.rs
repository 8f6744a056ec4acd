//! Replayable random streams.
//!
//! Every random draw in the toolkit comes from a ChaCha8 stream addressed by
//! `(seed, domain, stream)`. The domain separates unrelated uses of the same
//! user seed; the stream id encodes the row, query index, or node the draws
//! belong to. Streams are independent of evaluation order, so generation can
//! run in parallel and still replay bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags mixed into the key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    PowerLaw = 1,
    Noise = 2,
    QuerySample = 3,
    Layer = 4,
    KsSeeds = 5,
    FixedEntry = 6,
    Sample = 7,
    KMeans = 8,
    NnDescent = 9,
    Partition = 10,
    Shuffle = 11,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn stream(seed: u64, domain: Domain, stream_id: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(domain as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream_id);
    rng
}

/// Uniform draw from the open interval (0, 1).
pub fn open_unit(rng: &mut impl rand::RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}
