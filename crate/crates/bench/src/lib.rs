//! Shared fixtures for the criterion benchmarks.

use canopy_core::network::Network;
use canopy_core::rng::SplitMix64;

/// Seeded random graph of `components` connected blocks with `per_block`
/// vertices each: a spanning path per block plus `extra` random chords.
pub fn blocky_network(components: usize, per_block: usize, extra: usize, seed: u64) -> Network {
    let mut rng = SplitMix64::new(seed);
    let n = components * per_block;
    let mut edges = Vec::new();
    for b in 0..components {
        let base = b * per_block;
        for k in 1..per_block {
            edges.push((base + k - 1, base + k));
        }
        for _ in 0..extra {
            let i = base + rng.below(per_block);
            let j = base + rng.below(per_block);
            if i != j {
                edges.push((i.min(j), i.max(j)));
            }
        }
    }
    Network::from_edge_list(n, &edges).expect("valid synthetic network")
}
