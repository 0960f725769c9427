//! Representation of finite surjective relations by disjoint unions of
//! finite spirals.
//!
//! Any edge of a surjective relation extends to a bi-infinite walk that is
//! eventually periodic in both directions: walk forward picking the least
//! successor until a vertex repeats and loop there, and likewise backward.
//! Such a [`Chain`] maps a spiral onto its realized edge set exactly:
//! wandering points trace the middle, the end cycles wrap the two loops.
//! Finitely many chains cover every edge, giving a [`SpiralModel`]: a
//! disjoint union of spirals with an equivariant assignment whose image is
//! the whole relation.

use std::collections::{BTreeMap, BTreeSet};

use ibig::{ubig, UBig};
use thiserror::Error;

use crate::adding_machine::factorial;
use crate::relations::{image_under, FiniteMap, Label, SurjectiveRelation};
use crate::spirals::{build_finite_spiral, project_point, FiniteSpiral, SpiralPoint, SpiralPointKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepresentationError {
    #[error("edge ({0}, {1}) is not in the relation")]
    EdgeNotInRelation(String, String),
    #[error("chain segment breaks the relation at {0}")]
    BrokenChain(String),
    #[error("cycle lists must be nonempty")]
    EmptyCycle,
    #[error("duplicate spiral id {0}")]
    DuplicateSpiralId(u32),
    #[error("assignment is not total on the model points")]
    PartialAssignment,
    #[error("deepening must not lower a spiral level (id {id}: {from} -> {to})")]
    ShallowDeepening { id: u32, from: usize, to: usize },
}

/// Sorted successor/predecessor lists for deterministic walks.
struct Adjacency<V: Label> {
    succ: BTreeMap<V, Vec<V>>,
    pred: BTreeMap<V, Vec<V>>,
}

impl<V: Label> Adjacency<V> {
    fn of(relation: &SurjectiveRelation<V>) -> Self {
        let mut succ: BTreeMap<V, Vec<V>> = BTreeMap::new();
        let mut pred: BTreeMap<V, Vec<V>> = BTreeMap::new();
        for (a, b) in relation.edges() {
            succ.entry(a.clone()).or_default().push(b.clone());
            pred.entry(b.clone()).or_default().push(a.clone());
        }
        // Edge sets iterate sorted, so the lists arrive sorted.
        Adjacency { succ, pred }
    }

    fn least_successor(&self, v: &V) -> &V {
        &self.succ[v][0]
    }

    fn least_predecessor(&self, v: &V) -> &V {
        &self.pred[v][0]
    }
}

/// A bi-infinite walk through a relation, eventually periodic both ways.
///
/// The walk repeats `head_cycle` at all sufficiently negative positions,
/// passes through `middle` once, and repeats `tail_cycle` from `tail_start`
/// on. The alignment offsets pin the walk to absolute positions so that the
/// edge the chain was grown from sits at positions 0 and 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain<V: Label> {
    head_cycle: Vec<V>,
    middle: Vec<V>,
    tail_cycle: Vec<V>,
    /// Position at which `head_cycle[0]` occurs (head repeats with its
    /// length as period at every position below `middle_start`).
    head_start: i64,
    /// First position not governed by the head cycle.
    middle_start: i64,
    /// First position governed by the tail cycle.
    tail_start: i64,
    target: SurjectiveRelation<V>,
}

impl<V: Label> Chain<V> {
    /// Assemble a chain from explicit segments, laid out with the middle at
    /// positions `0..middle.len()`. Every consecutive pair (including the
    /// cyclic wraps and the junctions between segments) must be an edge.
    pub fn new(
        head_cycle: Vec<V>,
        middle: Vec<V>,
        tail_cycle: Vec<V>,
        target: SurjectiveRelation<V>,
    ) -> Result<Chain<V>, RepresentationError> {
        if head_cycle.is_empty() || tail_cycle.is_empty() {
            return Err(RepresentationError::EmptyCycle);
        }
        let chain = Chain {
            head_start: -(head_cycle.len() as i64),
            middle_start: 0,
            tail_start: middle.len() as i64,
            head_cycle,
            middle,
            tail_cycle,
            target,
        };
        chain.validate()?;
        Ok(chain)
    }

    pub fn head_cycle(&self) -> &[V] {
        &self.head_cycle
    }

    pub fn middle(&self) -> &[V] {
        &self.middle
    }

    pub fn tail_cycle(&self) -> &[V] {
        &self.tail_cycle
    }

    pub fn target(&self) -> &SurjectiveRelation<V> {
        &self.target
    }

    pub fn tail_start(&self) -> i64 {
        self.tail_start
    }

    pub fn middle_start(&self) -> i64 {
        self.middle_start
    }

    /// The vertex the walk visits at an absolute position.
    pub fn realize(&self, pos: i64) -> &V {
        if pos >= self.tail_start {
            let lt = self.tail_cycle.len() as i64;
            &self.tail_cycle[((pos - self.tail_start).rem_euclid(lt)) as usize]
        } else if pos >= self.middle_start {
            &self.middle[(pos - self.middle_start) as usize]
        } else {
            let lh = self.head_cycle.len() as i64;
            &self.head_cycle[((pos - self.head_start).rem_euclid(lh)) as usize]
        }
    }

    /// The window that exhibits every distinct consecutive pair the walk
    /// realizes: two head blocks, the middle, two tail blocks.
    fn witness_window(&self) -> (i64, i64) {
        let lh = self.head_cycle.len() as i64;
        let lt = self.tail_cycle.len() as i64;
        (self.middle_start - 2 * lh, self.tail_start + 2 * lt)
    }

    /// All distinct consecutive pairs the bi-infinite walk realizes.
    pub fn covered_pairs(&self) -> BTreeSet<(V, V)> {
        let (lo, hi) = self.witness_window();
        (lo..hi)
            .map(|x| (self.realize(x).clone(), self.realize(x + 1).clone()))
            .collect()
    }

    fn validate(&self) -> Result<(), RepresentationError> {
        for (a, b) in self.covered_pairs() {
            if !self.target.contains_edge(&a, &b) {
                return Err(RepresentationError::BrokenChain(format!("({a:?}, {b:?})")));
            }
        }
        Ok(())
    }
}

/// Extend an edge to an eventually periodic bi-infinite walk. Forward from
/// the edge head, always the least successor, looping at the first repeat;
/// backward from the edge tail likewise. The starting edge sits at positions
/// 0 and 1.
pub fn extend_edge_to_chain<V: Label>(
    relation: &SurjectiveRelation<V>,
    edge: (V, V),
) -> Result<Chain<V>, RepresentationError> {
    let (a0, a1) = edge;
    if !relation.contains_edge(&a0, &a1) {
        return Err(RepresentationError::EdgeNotInRelation(
            format!("{a0:?}"),
            format!("{a1:?}"),
        ));
    }
    let adj = Adjacency::of(relation);

    // Forward: positions 0, 1, 2, ...; the repeat scan excludes position 0
    // so the loop is found within the walked portion.
    let mut forward: Vec<V> = vec![a0.clone(), a1.clone()];
    let tail_first: usize;
    loop {
        let next = adj.least_successor(forward.last().unwrap()).clone();
        if let Some(i) = forward.iter().skip(1).position(|v| *v == next) {
            tail_first = i + 1;
            break;
        }
        forward.push(next);
    }
    let tail_cycle: Vec<V> = forward[tail_first..].to_vec();
    let tail_start = tail_first as i64;

    // Backward: walk[j] sits at position -j; the repeat scan includes
    // position 0, so the starting vertex itself can close the loop.
    let mut backward: Vec<V> = vec![a0.clone()];
    let loop_index: usize;
    loop {
        let prev = adj.least_predecessor(backward.last().unwrap()).clone();
        if let Some(j) = backward.iter().position(|v| *v == prev) {
            loop_index = j;
            break;
        }
        backward.push(prev);
    }
    // The discovered loop, read in walk order: the repeated vertex sits at
    // position -(len), then the walk continues rightward up to -(loop_index+1).
    let mut head_cycle: Vec<V> = Vec::with_capacity(backward.len() - loop_index);
    head_cycle.push(backward[loop_index].clone());
    for idx in ((loop_index + 1)..backward.len()).rev() {
        head_cycle.push(backward[idx].clone());
    }
    let head_start = -(backward.len() as i64);
    let middle_start = 1 - loop_index as i64;

    let mut middle: Vec<V> = Vec::new();
    if loop_index >= 1 {
        for idx in (1..loop_index).rev() {
            middle.push(backward[idx].clone());
        }
        middle.push(a0.clone());
    }
    middle.extend_from_slice(&forward[1..tail_first]);

    let chain = Chain {
        head_cycle,
        middle,
        tail_cycle,
        head_start,
        middle_start,
        tail_start,
        target: relation.clone(),
    };
    chain.validate()?;
    debug_assert_eq!(chain.realize(0), &a0);
    debug_assert_eq!(chain.realize(1), &a1);
    Ok(chain)
}

/// Enough chains to cover every edge of the relation: walk the edges in
/// sorted order and grow a chain from each edge not yet realized.
pub fn cover_relation<V: Label>(relation: &SurjectiveRelation<V>) -> Vec<Chain<V>> {
    let mut covered: BTreeSet<(V, V)> = BTreeSet::new();
    let mut chains = Vec::new();
    for edge in relation.edges() {
        if covered.contains(edge) {
            continue;
        }
        let chain = extend_edge_to_chain(relation, edge.clone())
            .expect("edges come from the relation itself");
        covered.extend(chain.covered_pairs());
        chains.push(chain);
    }
    chains
}

fn divides(d: usize, f: &UBig) -> bool {
    f % UBig::from(d) == ubig!(0)
}

/// The least spiral level whose factorial absorbs both cycle lengths and
/// whose wandering window clears the aperiodic part of the chain.
fn minimal_level<V: Label>(chain: &Chain<V>) -> usize {
    let lh = chain.head_cycle.len();
    let lt = chain.tail_cycle.len();
    let bound = [
        lh.max(lt),
        (chain.tail_start + 1).max(1) as usize,
        (lh as i64 - chain.middle_start + 1).max(1) as usize,
    ]
    .into_iter()
    .max()
    .unwrap();
    'scan: for m in 1..=bound {
        let fact = factorial(m);
        if !divides(lh, &fact) || !divides(lt, &fact) {
            continue;
        }
        // Tail-periodic at every position >= m - 1.
        for x in (m as i64 - 1)..chain.tail_start {
            if chain.realize(x + lt as i64) != chain.realize(x) {
                continue 'scan;
            }
        }
        // Head-periodic at every position <= -m.
        let lo = chain.middle_start - lh as i64;
        let hi = -(m as i64);
        for x in lo..=hi {
            if chain.realize(x + lh as i64) != chain.realize(x) {
                continue 'scan;
            }
        }
        return m;
    }
    unreachable!("the scan bound satisfies all three conditions")
}

/// Map a finite spiral onto the chain: wandering points trace the walk,
/// the end cycles read the walk's periodic ends. Returns the level together
/// with the map; the image is exactly the chain's realized edge set.
pub fn chain_to_spiral_map<V: Label>(chain: &Chain<V>) -> (usize, FiniteMap<SpiralPoint, V>) {
    let m = minimal_level(chain);
    // A level-m spiral has 2*m! + 2m - 1 points; walks long enough to push
    // past this bound would exhaust memory before producing anything.
    assert!(
        m <= 12,
        "chain needs a level-{m} spiral (2*{m}! points); refusing to materialize"
    );
    let spiral = build_finite_spiral(m, m).expect("level within its own cap");
    let fact_i64 = i64::try_from(&factorial(m)).expect("m <= 20 fits");
    let m_i64 = m as i64;
    let assignment: BTreeMap<SpiralPoint, V> = spiral
        .points()
        .iter()
        .map(|p| {
            let pos = match p.kind() {
                SpiralPointKind::Origin => unreachable!("m >= 1"),
                SpiralPointKind::Wandering(x) => *x,
                SpiralPointKind::Periodic(end, t) => {
                    let value = i64::try_from(t.value()).expect("residue below m!");
                    match end {
                        // Smallest representative >= m - 1.
                        crate::spirals::End::Plus => {
                            m_i64 - 1 + (value - (m_i64 - 1)).rem_euclid(fact_i64)
                        }
                        // Largest representative <= -m.
                        crate::spirals::End::Minus => {
                            -m_i64 - (-m_i64 - value).rem_euclid(fact_i64)
                        }
                    }
                }
            };
            (p.clone(), chain.realize(pos).clone())
        })
        .collect();
    (m, FiniteMap::onto_image(assignment))
}

pub type SpiralId = u32;

/// One spiral of a model, carrying its identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpiral {
    pub id: SpiralId,
    pub spiral: FiniteSpiral,
}

/// A point of a model: a spiral id paired with a point of that spiral.
pub type ModelPoint = (SpiralId, SpiralPoint);

/// A finite disjoint union of finite spirals together with an assignment
/// onto a target relation. The defining property: the exact image of the
/// union relation under the assignment equals the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpiralModel<V: Label> {
    spirals: Vec<ModelSpiral>,
    assignment: FiniteMap<ModelPoint, V>,
    target: SurjectiveRelation<V>,
}

impl<V: Label> SpiralModel<V> {
    pub fn new(
        spirals: Vec<ModelSpiral>,
        assignment: FiniteMap<ModelPoint, V>,
        target: SurjectiveRelation<V>,
    ) -> Result<SpiralModel<V>, RepresentationError> {
        let mut ids = BTreeSet::new();
        for s in &spirals {
            if !ids.insert(s.id) {
                return Err(RepresentationError::DuplicateSpiralId(s.id));
            }
        }
        for s in &spirals {
            for p in s.spiral.points() {
                if assignment.apply(&(s.id, p.clone())).is_none() {
                    return Err(RepresentationError::PartialAssignment);
                }
            }
        }
        let point_count: usize = spirals.iter().map(|s| s.spiral.points().len()).sum();
        if assignment.assignment().len() != point_count {
            return Err(RepresentationError::PartialAssignment);
        }
        Ok(SpiralModel {
            spirals,
            assignment,
            target,
        })
    }

    pub fn spirals(&self) -> &[ModelSpiral] {
        &self.spirals
    }

    pub fn spiral(&self, id: SpiralId) -> Option<&ModelSpiral> {
        self.spirals.iter().find(|s| s.id == id)
    }

    pub fn assignment(&self) -> &FiniteMap<ModelPoint, V> {
        &self.assignment
    }

    pub fn target(&self) -> &SurjectiveRelation<V> {
        &self.target
    }

    /// The disjoint union of the member spirals' relations, over id-tagged
    /// points.
    pub fn union_relation(&self) -> SurjectiveRelation<ModelPoint> {
        let mut vertices: Vec<ModelPoint> = Vec::new();
        let mut edges: Vec<(ModelPoint, ModelPoint)> = Vec::new();
        for s in &self.spirals {
            for p in s.spiral.points() {
                vertices.push((s.id, p.clone()));
            }
            for (a, b) in s.spiral.relation().edges() {
                edges.push(((s.id, a.clone()), (s.id, b.clone())));
            }
        }
        // Disjoint id-tagged copies of validated spiral relations.
        SurjectiveRelation::from_parts_unchecked(
            vertices.into_iter().collect(),
            edges.into_iter().collect(),
        )
    }

    /// The assignment restricted to one spiral, with its image as codomain.
    pub fn spiral_map(&self, id: SpiralId) -> FiniteMap<SpiralPoint, V> {
        let spiral = &self.spiral(id).expect("known id").spiral;
        let assignment: BTreeMap<SpiralPoint, V> = spiral
            .points()
            .iter()
            .map(|p| {
                (
                    p.clone(),
                    self.assignment
                        .apply(&(id, p.clone()))
                        .expect("assignment is total")
                        .clone(),
                )
            })
            .collect();
        FiniteMap::onto_image(assignment)
    }

    /// The edge image contributed by one spiral.
    pub fn spiral_edge_image(&self, id: SpiralId) -> BTreeSet<(V, V)> {
        let spiral = &self.spiral(id).expect("known id").spiral;
        spiral
            .relation()
            .edges()
            .iter()
            .map(|(a, b)| {
                (
                    self.assignment.apply(&(id, a.clone())).unwrap().clone(),
                    self.assignment.apply(&(id, b.clone())).unwrap().clone(),
                )
            })
            .collect()
    }

    /// True when the exact image of the union relation equals the target.
    pub fn image_is_exact(&self) -> bool {
        match image_under(&self.assignment, &self.union_relation()) {
            Ok(image) => image.edges() == self.target.edges(),
            Err(_) => false,
        }
    }

    /// Replace spirals by deeper ones, composing the assignment with the
    /// canonical projection. Levels may only grow.
    pub fn deepen(
        &self,
        new_levels: &BTreeMap<SpiralId, usize>,
    ) -> Result<SpiralModel<V>, RepresentationError> {
        let mut spirals = Vec::with_capacity(self.spirals.len());
        let mut assignment: BTreeMap<ModelPoint, V> = BTreeMap::new();
        for s in &self.spirals {
            let old_level = s.spiral.level();
            let new_level = new_levels.get(&s.id).copied().unwrap_or(old_level);
            if new_level < old_level {
                return Err(RepresentationError::ShallowDeepening {
                    id: s.id,
                    from: old_level,
                    to: new_level,
                });
            }
            if new_level == old_level {
                for p in s.spiral.points() {
                    assignment.insert(
                        (s.id, p.clone()),
                        self.assignment.apply(&(s.id, p.clone())).unwrap().clone(),
                    );
                }
                spirals.push(s.clone());
                continue;
            }
            let deeper = build_finite_spiral(new_level, new_level).expect("own cap");
            for p in deeper.points() {
                let shallow = project_point(p, old_level);
                assignment.insert(
                    (s.id, p.clone()),
                    self.assignment.apply(&(s.id, shallow)).unwrap().clone(),
                );
            }
            spirals.push(ModelSpiral {
                id: s.id,
                spiral: deeper,
            });
        }
        let assignment = FiniteMap::new(assignment, self.assignment.codomain().clone())
            .expect("images unchanged");
        SpiralModel::new(spirals, assignment, self.target.clone())
    }
}

/// Represent a relation by spirals: one chain per uncovered edge, one spiral
/// per chain. The union of the per-spiral edge images is the relation,
/// exactly.
pub fn represent_relation<V: Label>(relation: &SurjectiveRelation<V>) -> SpiralModel<V> {
    let chains = cover_relation(relation);
    let mut spirals = Vec::with_capacity(chains.len());
    let mut assignment: BTreeMap<ModelPoint, V> = BTreeMap::new();
    for (i, chain) in chains.iter().enumerate() {
        let id = i as SpiralId;
        let (m, map) = chain_to_spiral_map(chain);
        let spiral = build_finite_spiral(m, m).expect("level within its own cap");
        for (p, v) in map.assignment() {
            assignment.insert((id, p.clone()), v.clone());
        }
        spirals.push(ModelSpiral { id, spiral });
    }
    let assignment = FiniteMap::new(assignment, relation.vertices().clone())
        .expect("images are target vertices");
    SpiralModel::new(spirals, assignment, relation.clone()).expect("construction is total")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_edge, random_surjective_relation, SplitMix64};
    use crate::spirals::End;

    fn rel(vertices: &[&str], edges: &[(&str, &str)]) -> SurjectiveRelation<String> {
        SurjectiveRelation::new(
            vertices.iter().map(|s| s.to_string()),
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string())),
        )
        .unwrap()
    }

    fn s(x: &str) -> String {
        x.to_string()
    }

    #[test]
    fn fixed_point_chain() {
        let r = rel(&["a"], &[("a", "a")]);
        let c = extend_edge_to_chain(&r, (s("a"), s("a"))).unwrap();
        assert_eq!(c.head_cycle(), &[s("a")]);
        assert_eq!(c.middle(), &[] as &[String]);
        assert_eq!(c.tail_cycle(), &[s("a")]);
        assert_eq!(c.realize(0), "a");
    }

    #[test]
    fn three_edge_chain_folds_both_ways() {
        let r = rel(&["a", "b"], &[("a", "b"), ("b", "a"), ("b", "b")]);
        let c = extend_edge_to_chain(&r, (s("a"), s("b"))).unwrap();
        // Forward from b: least successor a, then b repeats.
        assert_eq!(c.tail_cycle(), &[s("b"), s("a")]);
        // Backward from a: predecessor b, then a repeats.
        assert_eq!(c.head_cycle(), &[s("a"), s("b")]);
        assert_eq!(c.middle(), &[] as &[String]);
        assert_eq!(c.realize(0), "a");
        assert_eq!(c.realize(1), "b");
    }

    #[test]
    fn realized_window_is_edge_valid() {
        for seed in 0..100u64 {
            let r = random_surjective_relation(seed, 8);
            let mut rng = SplitMix64::new(seed ^ 0xabcd);
            let edge = random_edge(&mut rng, &r);
            let c = extend_edge_to_chain(&r, edge.clone()).unwrap();
            assert_eq!(c.realize(0), &edge.0);
            assert_eq!(c.realize(1), &edge.1);
            for x in -20..20i64 {
                assert!(
                    r.contains_edge(c.realize(x), c.realize(x + 1)),
                    "seed {seed} position {x}"
                );
            }
        }
    }

    #[test]
    fn single_cycle_needs_one_chain() {
        let r = rel(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]);
        let chains = cover_relation(&r);
        assert_eq!(chains.len(), 1);
    }

    #[test]
    fn complete_relation_is_covered_edge_by_edge() {
        let r = rel(&["a", "b"], &[("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")]);
        let chains = cover_relation(&r);
        let mut covered = BTreeSet::new();
        for c in &chains {
            covered.extend(c.covered_pairs());
        }
        for e in r.edges() {
            assert!(covered.contains(e));
        }
        assert!(chains.len() <= r.edges().len());
    }

    #[test]
    fn chain_count_is_bounded_by_edges() {
        for seed in 0..50u64 {
            let r = random_surjective_relation(seed, 8);
            assert!(cover_relation(&r).len() <= r.edges().len());
        }
    }

    #[test]
    fn fixed_point_spiral_map_lands_at_level_one() {
        let r = rel(&["a"], &[("a", "a")]);
        let c = extend_edge_to_chain(&r, (s("a"), s("a"))).unwrap();
        let (m, map) = chain_to_spiral_map(&c);
        assert_eq!(m, 1);
        assert_eq!(map.assignment().len(), 3);
        assert!(map.assignment().values().all(|v| v == "a"));
    }

    #[test]
    fn window_conditions_force_level_three() {
        // Head and tail cycles of length 2 with a two-step middle: 2 | 2!,
        // but the middle only clears the wandering window at level 3.
        let r = rel(
            &["a", "b", "c", "d", "e", "f"],
            &[
                ("a", "b"),
                ("b", "a"),
                ("b", "c"),
                ("c", "d"),
                ("d", "e"),
                ("e", "f"),
                ("f", "e"),
            ],
        );
        let c = Chain::new(
            vec![s("a"), s("b")],
            vec![s("c"), s("d")],
            vec![s("e"), s("f")],
            r,
        )
        .unwrap();
        let (m, _) = chain_to_spiral_map(&c);
        assert_eq!(m, 3);
    }

    #[test]
    fn periodic_images_are_residue_consistent() {
        // Every periodic point's image must agree with the walk at every
        // congruent position inside the periodic regime.
        for seed in 0..100u64 {
            let r = random_surjective_relation(seed, 6);
            let mut rng = SplitMix64::new(seed ^ 0x77);
            let edge = random_edge(&mut rng, &r);
            let c = extend_edge_to_chain(&r, edge).unwrap();
            let (m, map) = chain_to_spiral_map(&c);
            let fact = i64::try_from(&factorial(m)).unwrap();
            for (p, v) in map.assignment() {
                if let SpiralPointKind::Periodic(end, t) = p.kind() {
                    let t = i64::try_from(t.value()).unwrap();
                    for rep in 0..3i64 {
                        let pos = match end {
                            End::Plus => m as i64 - 1 + (t - (m as i64 - 1)).rem_euclid(fact) + rep * fact,
                            End::Minus => -(m as i64) - (-(m as i64) - t).rem_euclid(fact) - rep * fact,
                        };
                        assert_eq!(c.realize(pos), v, "seed {seed} point {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn spiral_map_image_is_the_chain_edge_set() {
        for seed in 0..30u64 {
            let r = random_surjective_relation(seed, 6);
            let mut rng = SplitMix64::new(seed ^ 0x3333);
            let edge = random_edge(&mut rng, &r);
            let c = extend_edge_to_chain(&r, edge).unwrap();
            let (m, map) = chain_to_spiral_map(&c);
            let spiral = build_finite_spiral(m, m).unwrap();
            let image: BTreeSet<(String, String)> = spiral
                .relation()
                .edges()
                .iter()
                .map(|(a, b)| {
                    (
                        map.apply(a).unwrap().clone(),
                        map.apply(b).unwrap().clone(),
                    )
                })
                .collect();
            assert_eq!(image, c.covered_pairs(), "seed {seed}");
            for e in &image {
                assert!(r.edges().contains(e));
            }
        }
    }

    #[test]
    fn representing_a_fixed_point() {
        let r = rel(&["a"], &[("a", "a")]);
        let model = represent_relation(&r);
        assert_eq!(model.spirals().len(), 1);
        assert!(model.image_is_exact());
    }

    #[test]
    fn representing_a_spiral_relation_reconstructs_it() {
        // The level-2 spiral's own relation, relabeled through strings.
        let spiral = build_finite_spiral(2, 6).unwrap();
        let vertices: Vec<String> = spiral.points().iter().map(|p| p.to_string()).collect();
        let edges: Vec<(String, String)> = spiral
            .relation()
            .edges()
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let r = SurjectiveRelation::new(vertices, edges).unwrap();
        let model = represent_relation(&r);
        assert!(model.image_is_exact());
    }

    #[test]
    fn random_relations_are_represented_exactly() {
        for seed in 0..25u64 {
            let r = random_surjective_relation(seed, 8);
            let model = represent_relation(&r);
            assert!(model.image_is_exact(), "seed {seed}");
            // Soundness: each spiral's contribution stays inside the target.
            for spiral in model.spirals() {
                for e in model.spiral_edge_image(spiral.id) {
                    assert!(r.edges().contains(&e), "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn union_relation_is_surjective_on_model_points() {
        let r = rel(&["a", "b"], &[("a", "b"), ("b", "a"), ("b", "b")]);
        let model = represent_relation(&r);
        let union = model.union_relation();
        assert_eq!(
            union.vertices().len(),
            model
                .spirals()
                .iter()
                .map(|s| s.spiral.points().len())
                .sum::<usize>()
        );
    }

    #[test]
    fn representation_is_deterministic() {
        for seed in [0u64, 7, 19] {
            let r = random_surjective_relation(seed, 8);
            assert_eq!(represent_relation(&r), represent_relation(&r));
        }
    }

    #[test]
    fn deepening_preserves_exactness() {
        let r = rel(&["a", "b"], &[("a", "b"), ("b", "a"), ("b", "b")]);
        let model = represent_relation(&r);
        let targets: BTreeMap<SpiralId, usize> = model
            .spirals()
            .iter()
            .map(|s| (s.id, s.spiral.level() + 2))
            .collect();
        let deeper = model.deepen(&targets).unwrap();
        assert!(deeper.image_is_exact());
        for s in deeper.spirals() {
            assert_eq!(s.spiral.level(), targets[&s.id]);
        }
        // Lowering is refused.
        let bad: BTreeMap<SpiralId, usize> =
            model.spirals().iter().map(|s| (s.id, 0)).collect();
        assert!(model.deepen(&bad).is_err());
    }
}
