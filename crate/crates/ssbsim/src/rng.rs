//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! 64-bit seed derived with [`mix`]. `mix` folds a base seed, a domain tag
//! and a list of counters through the SplitMix64 finalizer, so any
//! (seed, purpose, index...) tuple names exactly one stream. Reimplementing
//! the generators elsewhere only requires ChaCha8 (IETF variant, as in
//! `rand_chacha`), `seed_from_u64` expansion, and the mixing below.
//!
//! Keying streams by counters instead of drawing from one sequential stream
//! keeps results independent of evaluation order, so parallel and serial
//! runs produce identical bytes.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags for the crate's independent stream families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    ClusterCenters,
    ClusterMembers,
    BackgroundUes,
    IndoorShuffle,
    Shadowing,
    LosDraw,
    PoolBuild,
    NetInit,
    ActionSampling,
    RandomCodebook,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::ClusterCenters => 0x01,
            StreamKind::ClusterMembers => 0x02,
            StreamKind::BackgroundUes => 0x03,
            StreamKind::IndoorShuffle => 0x04,
            StreamKind::Shadowing => 0x05,
            StreamKind::LosDraw => 0x06,
            StreamKind::PoolBuild => 0x07,
            StreamKind::NetInit => 0x08,
            StreamKind::ActionSampling => 0x09,
            StreamKind::RandomCodebook => 0x0a,
        }
    }
}

/// SplitMix64 finalizer: the standard 64-bit avalanche permutation.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a stream seed from a base seed, a domain tag, and counters.
///
/// Each counter is absorbed by one SplitMix64 round, so distinct tuples
/// give unrelated seeds.
pub fn mix(seed: u64, kind: StreamKind, counters: &[u64]) -> u64 {
    let mut z = splitmix64(seed ^ kind.tag().wrapping_mul(0xa076_1d64_78bd_642f));
    for &c in counters {
        z = splitmix64(z ^ c);
    }
    z
}

/// ChaCha8 stream for the given (seed, kind, counters) tuple.
pub fn stream(seed: u64, kind: StreamKind, counters: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, kind, counters))
}
