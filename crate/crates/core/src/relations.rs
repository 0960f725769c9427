//! Finite surjective relations and total maps between finite sets.
//!
//! A surjective relation on a finite vertex set is a set of ordered edges
//! that hits every vertex in both coordinates. It is the finite stand-in for
//! a homeomorphism: a map between vertex sets is equivariant when the exact
//! image of one relation equals the other.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Vertex labels are opaque: any ordered, clonable type works. Edge sets are
/// stored deduplicated in sorted order so output is deterministic.
pub trait Label: Ord + Clone + fmt::Debug {}

impl<T: Ord + Clone + fmt::Debug> Label for T {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outgoing,
    Incoming,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Outgoing => write!(f, "outgoing"),
            Direction::Incoming => write!(f, "incoming"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelationError {
    #[error("relation is not surjective: vertex {vertex} has no {direction} edge")]
    NotSurjective { direction: Direction, vertex: String },
    #[error("edge ({from}, {to}) uses a vertex outside the vertex set")]
    UnknownVertex { from: String, to: String },
    #[error("map domain does not match the relation vertex set")]
    DomainMismatch,
    #[error("map is not surjective onto its codomain")]
    NotSurjectiveMap,
    #[error("map image contains {0}, which is outside the declared codomain")]
    ImageOutsideCodomain(String),
    #[error("maps are not composable: inner codomain differs from outer domain")]
    NotComposable,
}

/// A finite set with a relation that is surjective in both coordinates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SurjectiveRelation<V: Label> {
    vertices: BTreeSet<V>,
    edges: BTreeSet<(V, V)>,
}

impl<V: Label> SurjectiveRelation<V> {
    /// Validate and build a relation. Vertices missing an outgoing or
    /// incoming edge are rejected, as are edges with unknown endpoints.
    pub fn new(
        vertices: impl IntoIterator<Item = V>,
        edges: impl IntoIterator<Item = (V, V)>,
    ) -> Result<Self, RelationError> {
        let vertices: BTreeSet<V> = vertices.into_iter().collect();
        let edges: BTreeSet<(V, V)> = edges.into_iter().collect();
        // First coordinates come out of the sorted edge set already sorted;
        // second coordinates get one sort. Everything else is linear merges
        // against the sorted vertex set, which keeps validation cheap for
        // the multi-million-edge tower levels.
        let mut froms: Vec<&V> = Vec::new();
        for (a, _) in &edges {
            if froms.last() != Some(&a) {
                froms.push(a);
            }
        }
        let mut tos: Vec<&V> = edges.iter().map(|(_, b)| b).collect();
        tos.sort_unstable();
        tos.dedup();
        // Unknown endpoints first: every endpoint must appear among the
        // vertices (merge of two sorted lists).
        for covered in [&froms, &tos] {
            let mut vit = vertices.iter().peekable();
            for c in covered.iter() {
                while vit.peek().is_some_and(|v| *v < *c) {
                    vit.next();
                }
                if !vit.peek().is_some_and(|v| *v == *c) {
                    let bad: &V = c;
                    let (a, b) = edges
                        .iter()
                        .find(|(a, b)| a == bad || b == bad)
                        .expect("endpoint came from an edge");
                    return Err(RelationError::UnknownVertex {
                        from: format!("{a:?}"),
                        to: format!("{b:?}"),
                    });
                }
            }
        }
        // Then surjectivity: every vertex must appear on both sides.
        for (covered, direction) in [(&froms, Direction::Outgoing), (&tos, Direction::Incoming)] {
            let mut endpoints = covered.iter().peekable();
            for v in &vertices {
                if endpoints.peek().is_some_and(|c| **c == v) {
                    endpoints.next();
                } else {
                    return Err(RelationError::NotSurjective {
                        direction,
                        vertex: format!("{v:?}"),
                    });
                }
            }
        }
        Ok(SurjectiveRelation { vertices, edges })
    }

    /// Assemble without validation. The caller must guarantee surjectivity
    /// and that every endpoint is a vertex; used for disjoint unions of
    /// already-validated relations, where both properties are inherited.
    pub(crate) fn from_parts_unchecked(
        vertices: BTreeSet<V>,
        edges: BTreeSet<(V, V)>,
    ) -> SurjectiveRelation<V> {
        SurjectiveRelation { vertices, edges }
    }

    pub fn vertices(&self) -> &BTreeSet<V> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeSet<(V, V)> {
        &self.edges
    }

    pub fn contains_edge(&self, a: &V, b: &V) -> bool {
        self.edges.contains(&(a.clone(), b.clone()))
    }

    /// The reverse relation: every edge with its coordinates swapped.
    /// Surjectivity in one direction becomes surjectivity in the other.
    pub fn reverse(&self) -> SurjectiveRelation<V> {
        SurjectiveRelation {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
        }
    }

    /// True when every vertex has exactly one successor and exactly one
    /// predecessor, i.e. the relation is the graph of a bijection.
    pub fn is_map(&self) -> bool {
        let mut out_count: BTreeMap<&V, usize> = BTreeMap::new();
        let mut in_count: BTreeMap<&V, usize> = BTreeMap::new();
        for (a, b) in &self.edges {
            *out_count.entry(a).or_insert(0) += 1;
            *in_count.entry(b).or_insert(0) += 1;
        }
        self.vertices
            .iter()
            .all(|v| out_count.get(v) == Some(&1) && in_count.get(v) == Some(&1))
    }
}

/// A total function between finite sets, stored as an explicit assignment
/// together with its codomain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMap<A: Label, B: Label> {
    assignment: BTreeMap<A, B>,
    codomain: BTreeSet<B>,
}

impl<A: Label, B: Label> FiniteMap<A, B> {
    /// Build a map with an explicit codomain. Every assigned image must lie
    /// inside it.
    pub fn new(
        assignment: BTreeMap<A, B>,
        codomain: BTreeSet<B>,
    ) -> Result<Self, RelationError> {
        let codomain_slice: Vec<&B> = codomain.iter().collect();
        for b in assignment.values() {
            if codomain_slice.binary_search(&b).is_err() {
                return Err(RelationError::ImageOutsideCodomain(format!("{b:?}")));
            }
        }
        drop(codomain_slice);
        Ok(FiniteMap {
            assignment,
            codomain,
        })
    }

    /// Assemble without the image check; the caller must guarantee every
    /// assigned value lies in the codomain.
    pub(crate) fn from_parts_unchecked(
        assignment: BTreeMap<A, B>,
        codomain: BTreeSet<B>,
    ) -> FiniteMap<A, B> {
        FiniteMap {
            assignment,
            codomain,
        }
    }

    /// Build a map whose codomain is exactly its image, hence surjective.
    pub fn onto_image(assignment: BTreeMap<A, B>) -> Self {
        let codomain = assignment.values().cloned().collect();
        FiniteMap {
            assignment,
            codomain,
        }
    }

    pub fn identity(domain: impl IntoIterator<Item = A>) -> FiniteMap<A, A> {
        let assignment: BTreeMap<A, A> =
            domain.into_iter().map(|a| (a.clone(), a)).collect();
        FiniteMap::onto_image(assignment)
    }

    pub fn apply(&self, a: &A) -> Option<&B> {
        self.assignment.get(a)
    }

    pub fn assignment(&self) -> &BTreeMap<A, B> {
        &self.assignment
    }

    pub fn domain(&self) -> impl Iterator<Item = &A> {
        self.assignment.keys()
    }

    pub fn codomain(&self) -> &BTreeSet<B> {
        &self.codomain
    }

    pub fn is_surjective(&self) -> bool {
        let image: BTreeSet<&B> = self.assignment.values().collect();
        self.codomain.iter().all(|b| image.contains(b))
    }

    /// `outer` after `self`; the codomain of `self` must equal the domain of
    /// `outer`.
    pub fn compose<C: Label>(
        &self,
        outer: &FiniteMap<B, C>,
    ) -> Result<FiniteMap<A, C>, RelationError> {
        let outer_domain: BTreeSet<&B> = outer.assignment.keys().collect();
        if self.codomain.len() != outer_domain.len()
            || !self.codomain.iter().all(|b| outer_domain.contains(b))
        {
            return Err(RelationError::NotComposable);
        }
        let assignment = self
            .assignment
            .iter()
            .map(|(a, b)| {
                let c = outer.apply(b).ok_or(RelationError::NotComposable)?;
                Ok((a.clone(), c.clone()))
            })
            .collect::<Result<BTreeMap<A, C>, RelationError>>()?;
        FiniteMap::new(assignment, outer.codomain.clone())
    }
}

/// The exact image of a relation under a surjective map: the edge set
/// `{(f(a), f(b))}`. The image of a surjective relation under a surjective
/// map is again surjective.
pub fn image_under<A: Label, B: Label>(
    map: &FiniteMap<A, B>,
    r1: &SurjectiveRelation<A>,
) -> Result<SurjectiveRelation<B>, RelationError> {
    // A flat sorted view of the assignment: both validation and the edge
    // sweep run as merges and binary searches over contiguous memory, which
    // matters for the multi-million-point tower levels.
    let entries: Vec<(&A, &B)> = map.assignment().iter().collect();
    if entries.len() != r1.vertices().len()
        || !entries
            .iter()
            .zip(r1.vertices())
            .all(|((a, _), v)| *a == v)
    {
        return Err(RelationError::DomainMismatch);
    }
    if !map.is_surjective() {
        return Err(RelationError::NotSurjectiveMap);
    }
    let lookup = |key: &A| -> Result<&B, RelationError> {
        entries
            .binary_search_by(|(k, _)| k.cmp(&key))
            .map(|i| entries[i].1)
            .map_err(|_| RelationError::DomainMismatch)
    };
    // Edges iterate sorted by first coordinate, so that side advances
    // through the entries sequentially; only the second coordinate needs a
    // search. Duplicate image edges are dropped before cloning.
    let mut mapped: Vec<(&B, &B)> = Vec::with_capacity(r1.edges().len());
    let mut from_idx = 0usize;
    for (a, b) in r1.edges() {
        while from_idx < entries.len() && entries[from_idx].0 < a {
            from_idx += 1;
        }
        let fa = match entries.get(from_idx) {
            Some((k, v)) if *k == a => *v,
            _ => return Err(RelationError::DomainMismatch),
        };
        mapped.push((fa, lookup(b)?));
    }
    mapped.sort_unstable();
    mapped.dedup();
    let edges: BTreeSet<(B, B)> = mapped
        .into_iter()
        .map(|(x, y)| (x.clone(), y.clone()))
        .collect();
    SurjectiveRelation::new(map.codomain().iter().cloned(), edges)
}

/// True when the exact image of `r1` under `map` equals `r2` as a set of
/// edges (both inclusions). A map whose image is a proper subset is simply
/// not equivariant, so no surjectivity is demanded up front.
pub fn is_equivariant<A: Label, B: Label>(
    map: &FiniteMap<A, B>,
    r1: &SurjectiveRelation<A>,
    r2: &SurjectiveRelation<B>,
) -> Result<bool, RelationError> {
    if map.codomain() != r2.vertices() {
        return Err(RelationError::DomainMismatch);
    }
    let domain: BTreeSet<&A> = map.assignment().keys().collect();
    if domain.len() != r1.vertices().len() || !r1.vertices().iter().all(|v| domain.contains(v)) {
        return Err(RelationError::DomainMismatch);
    }
    let image: BTreeSet<(B, B)> = r1
        .edges()
        .iter()
        .map(|(a, b)| {
            let fa = map.apply(a).expect("domain checked");
            let fb = map.apply(b).expect("domain checked");
            (fa.clone(), fb.clone())
        })
        .collect();
    Ok(&image == r2.edges())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_surjective_relation, SplitMix64};
    use proptest::prelude::*;

    fn rel(vertices: &[&str], edges: &[(&str, &str)]) -> SurjectiveRelation<String> {
        SurjectiveRelation::new(
            vertices.iter().map(|s| s.to_string()),
            edges
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string())),
        )
        .unwrap()
    }

    fn map_of(pairs: &[(&str, &str)]) -> FiniteMap<String, String> {
        FiniteMap::onto_image(
            pairs
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
    }

    #[test]
    fn fixed_point_relation() {
        let r = rel(&["a"], &[("a", "a")]);
        assert_eq!(r.edges().len(), 1);
        assert!(r.is_map());
    }

    #[test]
    fn two_vertex_relation_is_valid() {
        let r = rel(&["a", "b"], &[("a", "b"), ("b", "a"), ("b", "b")]);
        // Both projections hit both vertices; check by enumeration.
        for v in ["a", "b"] {
            assert!(r.edges().iter().any(|(x, _)| x == v));
            assert!(r.edges().iter().any(|(_, y)| y == v));
        }
    }

    #[test]
    fn missing_successor_rejected() {
        let err = SurjectiveRelation::new(
            ["a".to_string(), "b".to_string()],
            [
                ("a".to_string(), "b".to_string()),
                ("a".to_string(), "a".to_string()),
            ],
        )
        .unwrap_err();
        assert_eq!(
            err,
            RelationError::NotSurjective {
                direction: Direction::Outgoing,
                vertex: "\"b\"".to_string(),
            }
        );
    }

    #[test]
    fn dangling_edge_rejected() {
        let err = SurjectiveRelation::new(
            ["a".to_string()],
            [("a".to_string(), "z".to_string())],
        )
        .unwrap_err();
        assert!(matches!(err, RelationError::UnknownVertex { .. }));
    }

    #[test]
    fn reverse_swaps_coordinates() {
        let r = rel(&["a"], &[("a", "a")]);
        assert_eq!(r.reverse(), r);
        let r = rel(&["a", "b"], &[("a", "b"), ("b", "a"), ("b", "b")]);
        let rev = r.reverse();
        assert!(rev.contains_edge(&"b".to_string(), &"a".to_string()));
        assert!(rev.contains_edge(&"a".to_string(), &"b".to_string()));
        assert!(rev.contains_edge(&"b".to_string(), &"b".to_string()));
        assert_eq!(rev.edges().len(), 3);
    }

    #[test]
    fn reverse_is_an_involution_on_random_relations() {
        for seed in 0..50u64 {
            let r = random_surjective_relation(seed, 8);
            assert_eq!(r.reverse().reverse(), r);
        }
    }

    #[test]
    fn image_under_identity() {
        let r = rel(&["a", "b"], &[("a", "b"), ("b", "a"), ("b", "b")]);
        let id = FiniteMap::<String, String>::identity(r.vertices().iter().cloned());
        assert_eq!(image_under(&id, &r).unwrap(), r);
    }

    #[test]
    fn image_collapses_four_cycle_to_two_cycle() {
        let r = rel(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")],
        );
        // Collapse opposite vertices in pairs: a,c -> x and b,d -> y.
        let phi = map_of(&[("a", "x"), ("b", "y"), ("c", "x"), ("d", "y")]);
        let image = image_under(&phi, &r).unwrap();
        let expected = rel(&["x", "y"], &[("x", "y"), ("y", "x")]);
        assert_eq!(image, expected);
    }

    #[test]
    fn image_commutes_with_reverse_on_random_relations() {
        for seed in 0..50u64 {
            let r = random_surjective_relation(seed, 6);
            // A random collapse map built from the same seed stream.
            let mut rng = SplitMix64::new(seed ^ 0x9e37);
            let targets = ["x", "y", "z"];
            let assignment: std::collections::BTreeMap<String, String> = r
                .vertices()
                .iter()
                .map(|v| {
                    let t = targets[(rng.next_u64() % targets.len() as u64) as usize];
                    (v.clone(), t.to_string())
                })
                .collect();
            let phi = FiniteMap::onto_image(assignment);
            let lhs = image_under(&phi, &r.reverse()).unwrap();
            let rhs = image_under(&phi, &r).unwrap().reverse();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn image_of_surjective_is_surjective() {
        // Implicit in the constructor, but exercise it across random inputs.
        for seed in 0..50u64 {
            let r = random_surjective_relation(seed, 7);
            let phi = FiniteMap::onto_image(
                r.vertices()
                    .iter()
                    .map(|v| (v.clone(), "w".to_string()))
                    .collect(),
            );
            assert!(image_under(&phi, &r).is_ok());
        }
    }

    #[test]
    fn image_composition() {
        for seed in 0..20u64 {
            let r = random_surjective_relation(seed, 6);
            let mut rng = SplitMix64::new(seed.wrapping_mul(31));
            let mids = ["m0", "m1", "m2"];
            let phi = FiniteMap::onto_image(
                r.vertices()
                    .iter()
                    .map(|v| {
                        let t = mids[(rng.next_u64() % 3) as usize];
                        (v.clone(), t.to_string())
                    })
                    .collect(),
            );
            let rho = FiniteMap::onto_image(
                phi.codomain()
                    .iter()
                    .map(|m| (m.clone(), format!("t{}", &m[1..])))
                    .collect(),
            );
            let composed = phi.compose(&rho).unwrap();
            let lhs = image_under(&composed, &r).unwrap();
            let rhs = image_under(&rho, &image_under(&phi, &r).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn equivariance_identity() {
        let r = rel(&["a", "b"], &[("a", "b"), ("b", "a")]);
        let id = FiniteMap::<String, String>::identity(r.vertices().iter().cloned());
        assert!(is_equivariant(&id, &r, &r).unwrap());
    }

    #[test]
    fn collapsing_two_cycle_to_fixed_point_is_equivariant() {
        let two_cycle = rel(&["a", "b"], &[("a", "b"), ("b", "a")]);
        let fixed = rel(&["p"], &[("p", "p")]);
        let phi = map_of(&[("a", "p"), ("b", "p")]);
        // Two edges map onto the single loop.
        assert!(is_equivariant(&phi, &two_cycle, &fixed).unwrap());
    }

    #[test]
    fn fixed_point_into_two_cycle_is_not_equivariant() {
        let fixed = rel(&["p"], &[("p", "p")]);
        let two_cycle = rel(&["a", "b"], &[("a", "b"), ("b", "a")]);
        let phi = FiniteMap::new(
            [("p".to_string(), "a".to_string())].into_iter().collect(),
            two_cycle.vertices().clone(),
        )
        .unwrap();
        // The image is the single loop (a, a): a proper subset misses both
        // target edges, so the map is not equivariant.
        assert_eq!(is_equivariant(&phi, &fixed, &two_cycle), Ok(false));
    }

    #[test]
    fn is_map_on_cycles() {
        let c = rel(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]);
        assert!(c.is_map());
        let two = rel(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "a"), ("c", "d"), ("d", "c")],
        );
        assert!(two.is_map());
        let branching = rel(&["a", "b"], &[("a", "b"), ("b", "a"), ("b", "b")]);
        assert!(!branching.is_map());
    }

    proptest! {
        #[test]
        fn prop_reverse_involution(seed in 0u64..500) {
            let r = random_surjective_relation(seed, 9);
            prop_assert_eq!(r.reverse().reverse(), r);
        }

        #[test]
        fn prop_reverse_preserves_surjectivity(seed in 0u64..200) {
            let r = random_surjective_relation(seed, 9);
            let rev = r.reverse();
            prop_assert!(SurjectiveRelation::new(
                rev.vertices().iter().cloned(),
                rev.edges().iter().cloned()
            ).is_ok());
        }
    }
}
