//! Seeded generators for the randomized verification suites.
//!
//! The CLI and the test suites share these so that "100 random relations"
//! means the same 100 relations everywhere. The generator is a fixed
//! splitmix64 stream, independent of any external RNG crate, so output never
//! shifts under dependency upgrades.

use std::collections::BTreeSet;

use crate::relations::SurjectiveRelation;

/// Deterministic 64-bit generator (splitmix64).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform-enough draw in `[0, bound)`; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }
}

/// Vertex names used by generated relations: `v0`, `v1`, ...
fn vertex_name(i: usize) -> String {
    format!("v{i}")
}

/// Generate a surjective relation with between 1 and `max_vertices`
/// vertices. Edges are drawn at random and then repaired so every vertex
/// has at least one successor and one predecessor; repair choices come from
/// the same stream, so the result is a pure function of the seed.
pub fn random_surjective_relation(seed: u64, max_vertices: usize) -> SurjectiveRelation<String> {
    assert!(max_vertices >= 1);
    let mut rng = SplitMix64::new(seed);
    let n = 1 + rng.below(max_vertices as u64) as usize;
    let vertices: Vec<String> = (0..n).map(vertex_name).collect();
    let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
    for a in &vertices {
        for b in &vertices {
            if rng.chance(3, 10) {
                edges.insert((a.clone(), b.clone()));
            }
        }
    }
    for a in &vertices {
        if !edges.iter().any(|(x, _)| x == a) {
            let b = vertices[rng.below(n as u64) as usize].clone();
            edges.insert((a.clone(), b));
        }
    }
    for b in &vertices {
        if !edges.iter().any(|(_, y)| y == b) {
            let a = vertices[rng.below(n as u64) as usize].clone();
            edges.insert((a, b.clone()));
        }
    }
    SurjectiveRelation::new(vertices, edges).expect("repaired relation is surjective")
}

/// A random edge of a relation, drawn from its sorted edge list.
pub fn random_edge(
    rng: &mut SplitMix64,
    relation: &SurjectiveRelation<String>,
) -> (String, String) {
    let edges: Vec<_> = relation.edges().iter().cloned().collect();
    edges[rng.below(edges.len() as u64) as usize].clone()
}
