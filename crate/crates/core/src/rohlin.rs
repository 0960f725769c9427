//! A locally compact group of block-structured permutations of the
//! naturals, at finite precision.
//!
//! Fix a partition of the naturals into blocks `J_1, J_2, ...` of strictly
//! increasing size and write `J^n` for the union of the first `n`. The group
//! element sets `K_n` consist of the permutations that preserve every block
//! beyond `n`; the basic neighborhoods `K(π)` pin the restriction to `J^n`.
//! An *exchanger* swaps `J^n` with an injected copy inside a deeper block;
//! conjugating by it moves between any two neighborhoods, which is the whole
//! conjugacy mechanism. An element whose blocks carry ever more cycles of
//! every length contains a copy of every finite permutation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::sampling::SplitMix64;

/// Elements of the naturals, starting at 1.
pub type Point = u32;

/// Default deepest block index scanned when searching for copies of a
/// permutation. Absence within the bound is reported as a value, distinct
/// from proven absence.
pub const DEFAULT_SCAN_BOUND: usize = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RohlinError {
    #[error("block index {0} is outside this structure")]
    BlockIndexOutOfRange(usize),
    #[error("block sizes must be strictly increasing and positive")]
    NotStrictlyIncreasing,
    #[error("the permutation does not preserve the initial segment of depth {0}")]
    NotInvariant(usize),
    #[error("ground set is not an initial block union of this structure")]
    NotAnInitialSegment,
    #[error("ground sets do not match")]
    GroundMismatch,
    #[error("images must form a permutation of the ground set")]
    NotAPermutation,
    #[error("injection is not injective")]
    NotInjective,
    #[error("injection image must lie inside a single deeper block")]
    ImageOutsideBlock,
    #[error("conjugation by a blockwise-defined element is not supported")]
    UnsupportedVariantCombination,
    #[error("the transitive candidate requires the canonical block structure")]
    WrongStructure,
    #[error("internal verification failed: {0}")]
    InternalVerificationFailed(String),
    #[error("cannot parse cycle notation: {0}")]
    BadCycleNotation(String),
    #[error("point {0} is not in the ground set")]
    UnknownPoint(Point),
    #[error("point {0} appears twice")]
    DuplicatePoint(Point),
}

/// A partition of the naturals into finite blocks of strictly increasing
/// size. The canonical structure has `|J_i| = i·i·(i+1)/2`, so block `i`
/// holds exactly `i` cycles of each length `1..=i` when layered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JStructure {
    sizes: SizeRule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum SizeRule {
    Canonical,
    Custom(Vec<usize>),
}

impl JStructure {
    pub fn canonical() -> JStructure {
        JStructure {
            sizes: SizeRule::Canonical,
        }
    }

    /// A structure from explicit sizes; must be strictly increasing.
    pub fn from_sizes(sizes: Vec<usize>) -> Result<JStructure, RohlinError> {
        if sizes.is_empty() || sizes[0] == 0 {
            return Err(RohlinError::NotStrictlyIncreasing);
        }
        if sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RohlinError::NotStrictlyIncreasing);
        }
        Ok(JStructure {
            sizes: SizeRule::Custom(sizes),
        })
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self.sizes, SizeRule::Canonical)
    }

    /// `|J_i|`, blocks counted from 1.
    pub fn block_size(&self, i: usize) -> Result<usize, RohlinError> {
        if i == 0 {
            return Err(RohlinError::BlockIndexOutOfRange(0));
        }
        match &self.sizes {
            SizeRule::Canonical => Ok(i * i * (i + 1) / 2),
            SizeRule::Custom(sizes) => sizes
                .get(i - 1)
                .copied()
                .ok_or(RohlinError::BlockIndexOutOfRange(i)),
        }
    }

    /// `|J^j|`, the size of the union of the first `j` blocks.
    pub fn cumulative(&self, j: usize) -> Result<usize, RohlinError> {
        let mut total = 0;
        for i in 1..=j {
            total += self.block_size(i)?;
        }
        Ok(total)
    }

    /// The block `J_i` as an inclusive point range.
    pub fn block_range(&self, i: usize) -> Result<(Point, Point), RohlinError> {
        let before = self.cumulative(i - 1)?;
        let size = self.block_size(i)?;
        Ok(((before + 1) as Point, (before + size) as Point))
    }

    /// The index of the block containing a point.
    pub fn block_of(&self, p: Point) -> Result<usize, RohlinError> {
        let mut i = 1;
        loop {
            let (lo, hi) = self.block_range(i)?;
            if p >= lo && p <= hi {
                return Ok(i);
            }
            i += 1;
        }
    }

    /// The points of `J^j` in order.
    pub fn initial_segment(&self, j: usize) -> Result<Vec<Point>, RohlinError> {
        Ok((1..=self.cumulative(j)? as Point).collect())
    }

    /// The depth `n` with `|J^n|` equal to the given size, if any.
    pub fn depth_for_size(&self, size: usize) -> Option<usize> {
        let mut total = 0;
        let mut i = 0;
        while total < size {
            i += 1;
            total += self.block_size(i).ok()?;
        }
        (total == size).then_some(i)
    }
}

/// A permutation of an explicit finite set of points.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FinitePermutation {
    points: Vec<Point>,
    images: Vec<Point>,
}

impl FinitePermutation {
    pub fn identity(points: impl IntoIterator<Item = Point>) -> FinitePermutation {
        let points: Vec<Point> = {
            let set: BTreeSet<Point> = points.into_iter().collect();
            set.into_iter().collect()
        };
        FinitePermutation {
            images: points.clone(),
            points,
        }
    }

    /// Build from parallel point/image lists.
    pub fn from_images(
        points: Vec<Point>,
        images: Vec<Point>,
    ) -> Result<FinitePermutation, RohlinError> {
        if points.len() != images.len() {
            return Err(RohlinError::GroundMismatch);
        }
        let (points, images) = if points.windows(2).all(|w| w[0] < w[1]) {
            (points, images)
        } else {
            // Store sorted by point for canonical form.
            let mut pairs: Vec<(Point, Point)> = points.into_iter().zip(images).collect();
            pairs.sort();
            if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(RohlinError::NotAPermutation);
            }
            (
                pairs.iter().map(|(p, _)| *p).collect(),
                pairs.iter().map(|(_, q)| *q).collect(),
            )
        };
        let mut sorted_images = images.clone();
        sorted_images.sort_unstable();
        if sorted_images != points {
            return Err(RohlinError::NotAPermutation);
        }
        Ok(FinitePermutation { points, images })
    }

    /// Build from disjoint cycles over a ground set; fixed points may be
    /// omitted from the cycles.
    pub fn from_cycles(
        ground: impl IntoIterator<Item = Point>,
        cycles: &[Vec<Point>],
    ) -> Result<FinitePermutation, RohlinError> {
        let ground: BTreeSet<Point> = ground.into_iter().collect();
        let mut map: BTreeMap<Point, Point> = ground.iter().map(|p| (*p, *p)).collect();
        let mut seen: BTreeSet<Point> = BTreeSet::new();
        for cycle in cycles {
            for (idx, p) in cycle.iter().enumerate() {
                if !ground.contains(p) {
                    return Err(RohlinError::UnknownPoint(*p));
                }
                if !seen.insert(*p) {
                    return Err(RohlinError::DuplicatePoint(*p));
                }
                let q = cycle[(idx + 1) % cycle.len()];
                map.insert(*p, q);
            }
        }
        FinitePermutation::from_images(map.keys().copied().collect(), map.values().copied().collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn apply(&self, p: Point) -> Option<Point> {
        let idx = self.points.binary_search(&p).ok()?;
        Some(self.images[idx])
    }

    pub fn inverse(&self) -> FinitePermutation {
        let mut pairs: Vec<(Point, Point)> = self
            .images
            .iter()
            .copied()
            .zip(self.points.iter().copied())
            .collect();
        pairs.sort();
        FinitePermutation {
            points: pairs.iter().map(|(p, _)| *p).collect(),
            images: pairs.iter().map(|(_, q)| *q).collect(),
        }
    }

    /// `self` after `inner` (apply `inner` first), on a shared ground set.
    pub fn compose(&self, inner: &FinitePermutation) -> Result<FinitePermutation, RohlinError> {
        if self.points != inner.points {
            return Err(RohlinError::GroundMismatch);
        }
        let images = inner
            .images
            .iter()
            .map(|q| self.apply(*q).expect("same ground"))
            .collect();
        FinitePermutation::from_images(self.points.clone(), images)
    }

    pub fn is_identity(&self) -> bool {
        self.points == self.images
    }

    /// Restriction to a subset; the subset must be invariant.
    pub fn restrict_to(
        &self,
        subset: impl IntoIterator<Item = Point>,
    ) -> Result<FinitePermutation, RohlinError> {
        let subset: BTreeSet<Point> = subset.into_iter().collect();
        let mut points = Vec::with_capacity(subset.len());
        let mut images = Vec::with_capacity(subset.len());
        for p in &subset {
            let q = self.apply(*p).ok_or(RohlinError::UnknownPoint(*p))?;
            if !subset.contains(&q) {
                return Err(RohlinError::NotInvariant(subset.len()));
            }
            points.push(*p);
            images.push(q);
        }
        FinitePermutation::from_images(points, images)
    }

    /// The disjoint cycles, each rotated to start at its least element,
    /// sorted by least element. Fixed points are included.
    pub fn cycles(&self) -> Vec<Vec<Point>> {
        let mut seen: BTreeSet<Point> = BTreeSet::new();
        let mut out = Vec::new();
        for p in &self.points {
            if seen.contains(p) {
                continue;
            }
            let mut cycle = vec![*p];
            seen.insert(*p);
            let mut q = self.apply(*p).unwrap();
            while q != *p {
                cycle.push(q);
                seen.insert(q);
                q = self.apply(q).unwrap();
            }
            out.push(cycle);
        }
        out
    }

    /// The multiset of cycle lengths, as a length -> count map.
    pub fn cycle_type(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for cycle in self.cycles() {
            *out.entry(cycle.len()).or_insert(0) += 1;
        }
        out
    }

    /// Parse parenthesized cycle notation over a ground set, e.g.
    /// `(1 2)(3 4 5)`; `()` is the identity.
    pub fn parse_cycles(
        text: &str,
        ground: impl IntoIterator<Item = Point>,
    ) -> Result<FinitePermutation, RohlinError> {
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "()" || trimmed == "id" {
            return Ok(FinitePermutation::identity(ground));
        }
        let mut cycles: Vec<Vec<Point>> = Vec::new();
        let mut rest = trimmed;
        while !rest.is_empty() {
            let open = rest
                .find('(')
                .ok_or_else(|| RohlinError::BadCycleNotation(rest.to_string()))?;
            if !rest[..open].trim().is_empty() {
                return Err(RohlinError::BadCycleNotation(rest.to_string()));
            }
            let close = rest
                .find(')')
                .ok_or_else(|| RohlinError::BadCycleNotation(rest.to_string()))?;
            if close < open {
                return Err(RohlinError::BadCycleNotation(rest.to_string()));
            }
            let inner = &rest[open + 1..close];
            let cycle = inner
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<Point>()
                        .map_err(|_| RohlinError::BadCycleNotation(tok.to_string()))
                })
                .collect::<Result<Vec<Point>, _>>()?;
            if !cycle.is_empty() {
                cycles.push(cycle);
            }
            rest = &rest[close + 1..];
        }
        FinitePermutation::from_cycles(ground, &cycles)
    }
}

impl fmt::Display for FinitePermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let moved: Vec<Vec<Point>> = self
            .cycles()
            .into_iter()
            .filter(|c| c.len() > 1)
            .collect();
        if moved.is_empty() {
            return write!(f, "()");
        }
        for cycle in moved {
            let body: Vec<String> = cycle.iter().map(|p| p.to_string()).collect();
            write!(f, "({})", body.join(" "))?;
        }
        Ok(())
    }
}

/// Every permutation of a ground set, in lexicographic image order. Only
/// sensible for small grounds; the sweep suites use it up to 7 points.
pub fn all_permutations_of(ground: &[Point]) -> Vec<FinitePermutation> {
    let mut images: Vec<Point> = ground.to_vec();
    let mut out = Vec::new();
    // Heap's algorithm, collecting every arrangement.
    fn heaps(k: usize, arr: &mut Vec<Point>, ground: &[Point], out: &mut Vec<FinitePermutation>) {
        if k <= 1 {
            out.push(
                FinitePermutation::from_images(ground.to_vec(), arr.clone())
                    .expect("arrangement is a permutation"),
            );
            return;
        }
        for i in 0..k {
            heaps(k - 1, arr, ground, out);
            if k.is_multiple_of(2) {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }
    let len = images.len();
    if len == 0 {
        return vec![FinitePermutation::identity([])];
    }
    heaps(len, &mut images, ground, &mut out);
    out.sort();
    out.dedup();
    out
}

/// The rule generating block permutations beyond the explicit head of a
/// blockwise element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRule {
    /// Every block fixed pointwise.
    Identity,
    /// Block `J_i` carries `i` disjoint cycles of each length `1..=i`,
    /// laid out consecutively. Exact for the canonical sizes.
    LayeredCycles,
}

impl BlockRule {
    fn eval(self, structure: &JStructure, i: usize) -> Result<Vec<Point>, RohlinError> {
        let (lo, hi) = structure.block_range(i)?;
        match self {
            BlockRule::Identity => Ok((lo..=hi).collect()),
            BlockRule::LayeredCycles => {
                let mut images: Vec<Point> = (lo..=hi).collect();
                let size = (hi - lo + 1) as usize;
                if size != i * i * (i + 1) / 2 {
                    return Err(RohlinError::WrongStructure);
                }
                let mut offset = 0usize;
                for len in 1..=i {
                    for _ in 0..i {
                        // One cycle on the next `len` consecutive points.
                        for j in 0..len {
                            images[offset + j] = lo + ((offset + (j + 1) % len) as Point);
                        }
                        offset += len;
                    }
                }
                Ok(images)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    /// Finitely supported: an explicit permutation of `J^depth`, identity
    /// beyond. The claimed level records the membership `K_level`.
    Finite {
        level: usize,
        depth: usize,
        table: Vec<Point>,
    },
    /// A head permutation of `J^head_depth` plus a rule for every deeper
    /// block, evaluated on demand.
    Blockwise {
        head_depth: usize,
        head: Vec<Point>,
        rule: BlockRule,
    },
}

/// An element of the block-structured permutation group.
///
/// Block permutations generated by a rule are memoized; the cache sits
/// behind a mutex so concurrent readers see identical results with a single
/// writer per block.
#[derive(Debug, Clone)]
pub struct StructuredPermutation {
    structure: JStructure,
    repr: Repr,
    memo: Arc<Mutex<BTreeMap<usize, Arc<Vec<Point>>>>>,
}

/// The table with trailing fixed points removed, for action comparison.
fn trim_fixed_tail(table: &[Point]) -> &[Point] {
    let mut end = table.len();
    while end > 0 && table[end - 1] == end as Point {
        end -= 1;
    }
    &table[..end]
}

impl PartialEq for StructuredPermutation {
    /// Equality of the underlying permutations of the naturals; the stated
    /// membership level is metadata, not identity.
    fn eq(&self, other: &Self) -> bool {
        if self.structure != other.structure {
            return false;
        }
        match (&self.repr, &other.repr) {
            (Repr::Finite { table: t1, .. }, Repr::Finite { table: t2, .. }) => {
                trim_fixed_tail(t1) == trim_fixed_tail(t2)
            }
            (
                Repr::Blockwise {
                    head_depth: d1,
                    head: h1,
                    rule: r1,
                },
                Repr::Blockwise {
                    head_depth: d2,
                    head: h2,
                    rule: r2,
                },
            ) => d1 == d2 && h1 == h2 && r1 == r2,
            _ => false,
        }
    }
}

impl Eq for StructuredPermutation {}

impl StructuredPermutation {
    pub fn identity(structure: JStructure) -> StructuredPermutation {
        StructuredPermutation {
            structure,
            repr: Repr::Finite {
                level: 1,
                depth: 0,
                table: Vec::new(),
            },
            memo: Arc::new(Mutex::new(BTreeMap::new())),
        }
    }

    /// A finitely supported element from an explicit table over an initial
    /// segment. The table length must be `|J^depth|` for some depth; the
    /// element must lie in `K_level`.
    pub fn from_table(
        structure: JStructure,
        level: usize,
        table: Vec<Point>,
    ) -> Result<StructuredPermutation, RohlinError> {
        if level == 0 {
            return Err(RohlinError::BlockIndexOutOfRange(0));
        }
        let depth = structure
            .depth_for_size(table.len())
            .ok_or(RohlinError::NotAnInitialSegment)?;
        let mut seen = vec![false; table.len()];
        for q in &table {
            let idx = (*q as usize).wrapping_sub(1);
            if idx >= table.len() || seen[idx] {
                return Err(RohlinError::NotAPermutation);
            }
            seen[idx] = true;
        }
        let out = StructuredPermutation {
            structure,
            repr: Repr::Finite {
                level,
                depth,
                table,
            },
            memo: Arc::new(Mutex::new(BTreeMap::new())),
        };
        if !out.is_in_k(level)? {
            return Err(RohlinError::NotInvariant(level));
        }
        Ok(out)
    }

    /// A blockwise element: an explicit head over `J^head_depth`, a rule
    /// beyond.
    pub fn blockwise(
        structure: JStructure,
        head: Vec<Point>,
        rule: BlockRule,
    ) -> Result<StructuredPermutation, RohlinError> {
        let head_depth = structure
            .depth_for_size(head.len())
            .ok_or(RohlinError::NotAnInitialSegment)?;
        if !head.is_empty() {
            let ground: Vec<Point> = (1..=head.len() as Point).collect();
            FinitePermutation::from_images(ground, head.clone())?;
        }
        Ok(StructuredPermutation {
            structure,
            repr: Repr::Blockwise {
                head_depth,
                head,
                rule,
            },
            memo: Arc::new(Mutex::new(BTreeMap::new())),
        })
    }

    pub fn structure(&self) -> &JStructure {
        &self.structure
    }

    pub fn is_finitely_supported(&self) -> bool {
        matches!(self.repr, Repr::Finite { .. })
    }

    /// The `K_n` membership recorded or implied by the representation.
    pub fn stated_level(&self) -> usize {
        match &self.repr {
            Repr::Finite { level, .. } => *level,
            Repr::Blockwise { head_depth, .. } => (*head_depth).max(1),
        }
    }

    fn block_perm(&self, i: usize) -> Result<Arc<Vec<Point>>, RohlinError> {
        let rule = match &self.repr {
            Repr::Blockwise { rule, .. } => *rule,
            Repr::Finite { .. } => BlockRule::Identity,
        };
        let mut memo = self.memo.lock().expect("memo lock");
        if let Some(cached) = memo.get(&i) {
            return Ok(cached.clone());
        }
        let computed = Arc::new(rule.eval(&self.structure, i)?);
        memo.insert(i, computed.clone());
        Ok(computed)
    }

    /// The image of a point.
    pub fn apply(&self, p: Point) -> Result<Point, RohlinError> {
        match &self.repr {
            Repr::Finite { table, .. } => {
                if (p as usize) <= table.len() {
                    Ok(table[(p - 1) as usize])
                } else {
                    Ok(p)
                }
            }
            Repr::Blockwise {
                head_depth, head, ..
            } => {
                if (p as usize) <= head.len() {
                    return Ok(head[(p - 1) as usize]);
                }
                let i = self.structure.block_of(p)?;
                debug_assert!(i > *head_depth);
                let (lo, _) = self.structure.block_range(i)?;
                let perm = self.block_perm(i)?;
                Ok(perm[(p - lo) as usize])
            }
        }
    }

    /// Restriction to `J^m`; fails if the element moves a point across the
    /// `J^m` boundary.
    pub fn restrict(&self, m: usize) -> Result<FinitePermutation, RohlinError> {
        let ground = self.structure.initial_segment(m)?;
        let size = ground.len() as Point;
        let mut images = Vec::with_capacity(ground.len());
        for p in &ground {
            let q = self.apply(*p)?;
            if q > size {
                return Err(RohlinError::NotInvariant(m));
            }
            images.push(q);
        }
        FinitePermutation::from_images(ground, images)
    }

    /// Membership in `K_n`: the element preserves `J^n` and every deeper
    /// block setwise.
    pub fn is_in_k(&self, n: usize) -> Result<bool, RohlinError> {
        if n == 0 {
            return Ok(false);
        }
        match &self.repr {
            Repr::Finite { depth, table, .. } => {
                let boundary = self.structure.cumulative(n)? as Point;
                for (idx, q) in table.iter().enumerate() {
                    let p = (idx + 1) as Point;
                    if (p <= boundary) != (*q <= boundary) {
                        return Ok(false);
                    }
                }
                for i in (n + 1)..=*depth {
                    let (lo, hi) = self.structure.block_range(i)?;
                    for p in lo..=hi {
                        let q = table[(p - 1) as usize];
                        if q < lo || q > hi {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            Repr::Blockwise {
                head_depth, head, ..
            } => {
                if n >= *head_depth {
                    return Ok(true);
                }
                let boundary = self.structure.cumulative(n)? as Point;
                for (idx, q) in head.iter().enumerate() {
                    let p = (idx + 1) as Point;
                    if (p <= boundary) != (*q <= boundary) {
                        return Ok(false);
                    }
                }
                for i in (n + 1)..=*head_depth {
                    let (lo, hi) = self.structure.block_range(i)?;
                    for p in lo..=hi {
                        let q = head[(p - 1) as usize];
                        if q < lo || q > hi {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
        }
    }
}

impl fmt::Display for StructuredPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Finite { table, level, .. } => {
                if table.is_empty() {
                    return write!(f, "() [in K_{level}]");
                }
                let ground: Vec<Point> = (1..=table.len() as Point).collect();
                let perm = FinitePermutation::from_images(ground, table.clone())
                    .expect("validated at construction");
                write!(f, "{perm} [identity beyond {}, in K_{level}]", table.len())
            }
            Repr::Blockwise {
                head_depth, rule, ..
            } => {
                let rule_name = match rule {
                    BlockRule::Identity => "identity blocks",
                    BlockRule::LayeredCycles => "layered cycles per block",
                };
                write!(f, "blockwise element [head depth {head_depth}, {rule_name}]")
            }
        }
    }
}

/// Membership in the basic neighborhood `K(π)`: the element lies in `K_n`
/// for the depth `n` of `π`'s ground set and restricts to `π` there.
pub fn in_neighborhood(a: &StructuredPermutation, pi: &FinitePermutation) -> bool {
    let Some(n) = depth_of_ground(a.structure(), pi) else {
        return false;
    };
    match a.is_in_k(n) {
        Ok(true) => {}
        _ => return false,
    }
    match a.restrict(n) {
        Ok(restriction) => restriction == *pi,
        Err(_) => false,
    }
}

fn depth_of_ground(structure: &JStructure, pi: &FinitePermutation) -> Option<usize> {
    let n = structure.depth_for_size(pi.points().len())?;
    let expected: Vec<Point> = (1..=pi.points().len() as Point).collect();
    (pi.points() == expected.as_slice()).then_some(n)
}

/// Extend an injection `β : J^n → J_{n+k}` to the order-2 element swapping
/// `J^n` with its image pointwise and fixing everything else.
pub fn exchanger(
    structure: &JStructure,
    beta: &BTreeMap<Point, Point>,
) -> Result<StructuredPermutation, RohlinError> {
    let n = structure
        .depth_for_size(beta.len())
        .ok_or(RohlinError::NotAnInitialSegment)?;
    let expected: Vec<Point> = structure.initial_segment(n)?;
    let keys: Vec<Point> = beta.keys().copied().collect();
    if keys != expected {
        return Err(RohlinError::NotAnInitialSegment);
    }
    let values: BTreeSet<Point> = beta.values().copied().collect();
    if values.len() != beta.len() {
        return Err(RohlinError::NotInjective);
    }
    let first_block = structure.block_of(*values.iter().next().unwrap())?;
    let last_block = structure.block_of(*values.iter().last().unwrap())?;
    if first_block != last_block || first_block <= n {
        return Err(RohlinError::ImageOutsideBlock);
    }
    let depth = first_block;
    let size = structure.cumulative(depth)?;
    let mut table: Vec<Point> = (1..=size as Point).collect();
    for (p, q) in beta {
        table[(*p - 1) as usize] = *q;
        table[(*q - 1) as usize] = *p;
    }
    StructuredPermutation::from_table(structure.clone(), depth, table)
}

/// The order-preserving injection from `J^n` into the first points of a
/// block.
pub fn order_preserving_injection(
    structure: &JStructure,
    n: usize,
    block: usize,
) -> Result<BTreeMap<Point, Point>, RohlinError> {
    let segment = structure.initial_segment(n)?;
    let (lo, hi) = structure.block_range(block)?;
    if ((hi - lo + 1) as usize) < segment.len() || block <= n {
        return Err(RohlinError::ImageOutsideBlock);
    }
    Ok(segment
        .iter()
        .enumerate()
        .map(|(i, p)| (*p, lo + i as Point))
        .collect())
}

/// Search the blocks `J_{n+1}, J_{n+2}, ...` up to `scan_bound` for a copy
/// of `π`: a block whose cycle census dominates `π`'s, matched cycle by
/// cycle in increasing length then increasing least element. The returned
/// injection satisfies `β ∘ π = a ∘ β` pointwise (checked before returning).
/// Absence within the bound is `None`, not an error.
pub fn contains_copy(
    a: &StructuredPermutation,
    pi: &FinitePermutation,
    scan_bound: usize,
) -> Option<BTreeMap<Point, Point>> {
    let n = depth_of_ground(a.structure(), pi)?;
    let pi_cycles: Vec<Vec<Point>> = {
        let mut cycles = pi.cycles();
        cycles.sort_by_key(|c| (c.len(), c[0]));
        cycles
    };
    for block in (n + 1)..=scan_bound {
        let (lo, hi) = a.structure().block_range(block).ok()?;
        let block_points: Vec<Point> = (lo..=hi).collect();
        let mut images = Vec::with_capacity(block_points.len());
        let mut preserved = true;
        for p in &block_points {
            match a.apply(*p) {
                Ok(q) if q >= lo && q <= hi => images.push(q),
                _ => {
                    preserved = false;
                    break;
                }
            }
        }
        if !preserved {
            continue;
        }
        let restricted = FinitePermutation::from_images(block_points, images).ok()?;
        let mut available: Vec<Vec<Point>> = restricted.cycles();
        available.sort_by_key(|c| (c.len(), c[0]));
        let mut beta: BTreeMap<Point, Point> = BTreeMap::new();
        let mut used = vec![false; available.len()];
        let mut ok = true;
        for cycle in &pi_cycles {
            let slot = available
                .iter()
                .enumerate()
                .position(|(i, c)| !used[i] && c.len() == cycle.len());
            match slot {
                Some(i) => {
                    used[i] = true;
                    for (x, y) in cycle.iter().zip(available[i].iter()) {
                        beta.insert(*x, *y);
                    }
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        // Pointwise check of the copy equation.
        let valid = pi.points().iter().all(|x| {
            let lhs = beta[&pi.apply(*x).unwrap()];
            let rhs = a.apply(beta[x]).unwrap();
            lhs == rhs
        });
        if valid {
            return Some(beta);
        }
    }
    None
}

/// Conjugation `b a b⁻¹`. Supported when `b` is finitely supported; the
/// result stays blockwise when `a` is.
pub fn conjugate(
    b: &StructuredPermutation,
    a: &StructuredPermutation,
) -> Result<StructuredPermutation, RohlinError> {
    let b_repr = match &b.repr {
        Repr::Finite { depth, table, .. } => (*depth, table.clone()),
        Repr::Blockwise { .. } => return Err(RohlinError::UnsupportedVariantCombination),
    };
    let structure = a.structure().clone();
    let (b_depth, b_table) = b_repr;
    match &a.repr {
        Repr::Finite {
            depth: a_depth, ..
        } => {
            let depth = b_depth.max(*a_depth);
            let size = structure.cumulative(depth)?;
            let b_inv = invert_table(&b_table, size);
            let mut table = Vec::with_capacity(size);
            for p in 1..=size as Point {
                let x = b_inv[(p - 1) as usize];
                let y = a.apply(x)?;
                let z = apply_table(&b_table, y);
                table.push(z);
            }
            let level = minimal_level(&structure, &table, depth)?;
            StructuredPermutation::from_table(structure, level, table)
        }
        Repr::Blockwise {
            head_depth, rule, ..
        } => {
            let depth = b_depth.max(*head_depth);
            let size = structure.cumulative(depth)?;
            let b_inv = invert_table(&b_table, size);
            let mut head = Vec::with_capacity(size);
            for p in 1..=size as Point {
                let x = b_inv[(p - 1) as usize];
                let y = a.apply(x)?;
                let z = apply_table(&b_table, y);
                head.push(z);
            }
            StructuredPermutation::blockwise(structure, head, *rule)
        }
    }
}

fn apply_table(table: &[Point], p: Point) -> Point {
    if (p as usize) <= table.len() {
        table[(p - 1) as usize]
    } else {
        p
    }
}

fn invert_table(table: &[Point], size: usize) -> Vec<Point> {
    let mut inv: Vec<Point> = (1..=size as Point).collect();
    for (idx, q) in table.iter().enumerate() {
        if (*q as usize) <= size {
            inv[(*q - 1) as usize] = (idx + 1) as Point;
        }
    }
    inv
}

/// The least `n` such that the table lies in `K_n`.
fn minimal_level(
    structure: &JStructure,
    table: &[Point],
    depth: usize,
) -> Result<usize, RohlinError> {
    'levels: for n in 1..=depth.max(1) {
        let boundary = structure.cumulative(n)? as Point;
        for (idx, q) in table.iter().enumerate() {
            let p = (idx + 1) as Point;
            if (p <= boundary) != (*q <= boundary) {
                continue 'levels;
            }
        }
        for i in (n + 1)..=depth {
            let (lo, hi) = structure.block_range(i)?;
            for p in lo..=hi {
                let q = table[(p - 1) as usize];
                if q < lo || q > hi {
                    continue 'levels;
                }
            }
        }
        return Ok(n);
    }
    Ok(depth.max(1))
}

/// Witnesses for the conjugacy of two basic neighborhoods: an element `a`
/// restricting to `π1` that carries a copy of `π2` in a deeper block, and
/// the exchanger `b` moving the copy home, so that `b a b⁻¹` restricts to
/// `π2`. Verified before returning.
pub fn witness_pair(
    structure: &JStructure,
    pi1: &FinitePermutation,
    pi2: &FinitePermutation,
) -> Result<(StructuredPermutation, StructuredPermutation), RohlinError> {
    let n = depth_of_ground(structure, pi1).ok_or(RohlinError::NotAnInitialSegment)?;
    if depth_of_ground(structure, pi2) != Some(n) {
        return Err(RohlinError::GroundMismatch);
    }
    let segment_size = structure.cumulative(n)?;
    let mut block = n + 1;
    while structure.block_size(block)? < segment_size {
        block += 1;
    }
    let beta = order_preserving_injection(structure, n, block)?;

    // a = π1 on J^n, the β-copy of π2 on β(J^n), identity elsewhere.
    let size = structure.cumulative(block)?;
    let mut table: Vec<Point> = (1..=size as Point).collect();
    for p in pi1.points() {
        table[(*p - 1) as usize] = pi1.apply(*p).unwrap();
    }
    for p in pi2.points() {
        let src = beta[p];
        let dst = beta[&pi2.apply(*p).unwrap()];
        table[(src - 1) as usize] = dst;
    }
    let a = StructuredPermutation::from_table(structure.clone(), n, table)?;
    let b = exchanger(structure, &beta)?;

    let conj = conjugate(&b, &a)?;
    if !in_neighborhood(&a, pi1) {
        return Err(RohlinError::InternalVerificationFailed(
            "witness element is outside K(pi1)".into(),
        ));
    }
    if !in_neighborhood(&conj, pi2) {
        return Err(RohlinError::InternalVerificationFailed(
            "conjugated witness is outside K(pi2)".into(),
        ));
    }
    Ok((a, b))
}

/// The blockwise element whose block `J_i` carries `i` cycles of every
/// length `1..=i`: it contains a copy of every finite permutation on every
/// `J^n`, witnessed blockwise. Tied to the canonical structure.
pub fn transitive_candidate(structure: &JStructure) -> Result<StructuredPermutation, RohlinError> {
    if !structure.is_canonical() {
        return Err(RohlinError::WrongStructure);
    }
    StructuredPermutation::blockwise(structure.clone(), Vec::new(), BlockRule::LayeredCycles)
}

/// A deterministic pseudorandom permutation of a ground set (Fisher-Yates
/// driven by the shared splitmix stream).
pub fn random_permutation(rng: &mut SplitMix64, ground: &[Point]) -> FinitePermutation {
    let mut images: Vec<Point> = ground.to_vec();
    for i in (1..images.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        images.swap(i, j);
    }
    FinitePermutation::from_images(ground.to_vec(), images).expect("shuffle is a permutation")
}
