//! Finite spirals: a wandering orbit segment glued to a factorial cycle at
//! each end.
//!
//! The level-`n` spiral has wandering points `W(x)` for `-n < x < n` and two
//! periodic ends, each a cycle of length `n!`. Its relation moves wandering
//! points one step right, rotates both end cycles, feeds the minus cycle
//! into the leftmost wandering point and absorbs the rightmost wandering
//! point into the plus cycle. Level 0 is a single point fixed by its
//! relation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ibig::{ubig, IBig, UBig};
use thiserror::Error;

use crate::adding_machine::{factorial, residue, Residue};
use crate::relations::{FiniteMap, SurjectiveRelation};

/// Levels above this are refused by the default constructors; `|Σ_6| = 1451`
/// keeps exhaustive suites fast. Raise explicitly where deeper levels are
/// genuinely needed.
pub const DEFAULT_LEVEL_CAP: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpiralError {
    #[error("level {level} exceeds the configured cap {cap}")]
    LevelTooLarge { level: usize, cap: usize },
    #[error("no canonical map from level {from} to level {to}")]
    BadLevels { from: usize, to: usize },
    #[error("wandering coordinate {x} is outside (-{level}, {level})")]
    InvalidWandering { level: usize, x: i64 },
    #[error("periodic residue has modulus {modulus}, expected {level}!")]
    WrongModulus { level: usize, modulus: String },
    #[error("level 0 admits only the origin point")]
    NotLevelZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum End {
    Minus,
    Plus,
}

impl End {
    pub fn sign(self) -> i64 {
        match self {
            End::Minus => -1,
            End::Plus => 1,
        }
    }
}

impl fmt::Display for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            End::Minus => write!(f, "-"),
            End::Plus => write!(f, "+"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpiralPointKind {
    /// The unique point of the level-0 spiral.
    Origin,
    /// `(x, Π(x))` with `-n < x < n`; only the integer coordinate is stored.
    Wandering(i64),
    /// A point of the cycle at one end, a residue modulo `n!`.
    Periodic(End, Residue),
}

/// A point of a finite spiral, tagged with the level it lives on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpiralPoint {
    level: u32,
    kind: SpiralPointKind,
}

impl SpiralPoint {
    pub fn origin() -> SpiralPoint {
        SpiralPoint {
            level: 0,
            kind: SpiralPointKind::Origin,
        }
    }

    pub fn wandering(level: usize, x: i64) -> Result<SpiralPoint, SpiralError> {
        let n = level as i64;
        if level == 0 || x <= -n || x >= n {
            return Err(SpiralError::InvalidWandering { level, x });
        }
        Ok(SpiralPoint {
            level: level as u32,
            kind: SpiralPointKind::Wandering(x),
        })
    }

    pub fn periodic(level: usize, end: End, t: Residue) -> Result<SpiralPoint, SpiralError> {
        if level == 0 {
            return Err(SpiralError::NotLevelZero);
        }
        if *t.modulus() != factorial(level) {
            return Err(SpiralError::WrongModulus {
                level,
                modulus: t.modulus().to_string(),
            });
        }
        Ok(SpiralPoint {
            level: level as u32,
            kind: SpiralPointKind::Periodic(end, t),
        })
    }

    /// Periodic point from a plain integer value, reduced modulo `level!`.
    pub fn periodic_from(level: usize, end: End, value: i64) -> Result<SpiralPoint, SpiralError> {
        if level == 0 {
            return Err(SpiralError::NotLevelZero);
        }
        let t = residue(&factorial(level), &IBig::from(value)).expect("positive modulus");
        SpiralPoint::periodic(level, end, t)
    }

    pub fn level(&self) -> usize {
        self.level as usize
    }

    pub fn kind(&self) -> &SpiralPointKind {
        &self.kind
    }

    pub fn is_wandering(&self) -> bool {
        matches!(self.kind, SpiralPointKind::Wandering(_))
    }

    /// The value the end-collapsing map reads off: the integer coordinate of
    /// a wandering point, the residue of a periodic one, reduced modulo `m!`.
    fn collapse_value(&self, m: usize) -> Residue {
        let modulus = factorial(m);
        match &self.kind {
            SpiralPointKind::Origin => residue(&modulus, &IBig::from(0)).unwrap(),
            SpiralPointKind::Wandering(x) => residue(&modulus, &IBig::from(*x)).unwrap(),
            SpiralPointKind::Periodic(_, t) => t.project(&modulus).expect("m! divides level!"),
        }
    }
}

impl fmt::Display for SpiralPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SpiralPointKind::Origin => write!(f, "O"),
            SpiralPointKind::Wandering(x) => write!(f, "W({x})"),
            SpiralPointKind::Periodic(end, t) => write!(f, "P({},{})", end, t.value()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpiralClass {
    Recurrent,
    Wandering,
}

impl fmt::Display for SpiralClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpiralClass::Recurrent => write!(f, "recurrent"),
            SpiralClass::Wandering => write!(f, "wandering"),
        }
    }
}

/// Periodic ends are recurrent; the orbit segment between them wanders. The
/// level-0 point is fixed, hence recurrent.
pub fn classify(p: &SpiralPoint) -> SpiralClass {
    match p.kind {
        SpiralPointKind::Wandering(_) => SpiralClass::Wandering,
        SpiralPointKind::Origin | SpiralPointKind::Periodic(..) => SpiralClass::Recurrent,
    }
}

/// The distinguished wandering point `W(0)`; at level 0 it is the unique
/// point.
pub fn zero_point(n: usize) -> SpiralPoint {
    if n == 0 {
        SpiralPoint::origin()
    } else {
        SpiralPoint::wandering(n, 0).expect("0 is interior for n >= 1")
    }
}

/// A finite spiral: its point set and relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSpiral {
    level: usize,
    relation: SurjectiveRelation<SpiralPoint>,
}

impl FiniteSpiral {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn points(&self) -> &BTreeSet<SpiralPoint> {
        self.relation.vertices()
    }

    pub fn relation(&self) -> &SurjectiveRelation<SpiralPoint> {
        &self.relation
    }
}

fn periodic_unchecked(level: usize, end: End, value: UBig) -> SpiralPoint {
    SpiralPoint {
        level: level as u32,
        kind: SpiralPointKind::Periodic(
            end,
            Residue::new(factorial(level), value).expect("positive modulus"),
        ),
    }
}

/// Build the level-`n` spiral with its full relation.
pub fn build_finite_spiral(n: usize, level_cap: usize) -> Result<FiniteSpiral, SpiralError> {
    if n > level_cap {
        return Err(SpiralError::LevelTooLarge {
            level: n,
            cap: level_cap,
        });
    }
    if n == 0 {
        let p = SpiralPoint::origin();
        let relation = SurjectiveRelation::new([p.clone()], [(p.clone(), p)])
            .expect("singleton loop is surjective");
        return Ok(FiniteSpiral { level: 0, relation });
    }
    let fact = factorial(n);
    let mut points: BTreeSet<SpiralPoint> = BTreeSet::new();
    let mut edges: BTreeSet<(SpiralPoint, SpiralPoint)> = BTreeSet::new();
    for x in (-(n as i64) + 1)..(n as i64) {
        points.insert(SpiralPoint::wandering(n, x).unwrap());
    }
    for end in [End::Minus, End::Plus] {
        let mut t = ubig!(0);
        while t < fact {
            let here = periodic_unchecked(n, end, t.clone());
            let mut next_value = &t + ubig!(1);
            if next_value == fact {
                next_value = ubig!(0);
            }
            let next = periodic_unchecked(n, end, next_value);
            points.insert(here.clone());
            edges.insert((here, next));
            t += ubig!(1);
        }
    }
    for x in (-(n as i64) + 1)..(n as i64 - 1) {
        edges.insert((
            SpiralPoint::wandering(n, x).unwrap(),
            SpiralPoint::wandering(n, x + 1).unwrap(),
        ));
    }
    // Gluing: the minus cycle feeds the leftmost wandering point, and the
    // rightmost wandering point enters the plus cycle.
    edges.insert((
        SpiralPoint::periodic_from(n, End::Minus, -(n as i64)).unwrap(),
        SpiralPoint::wandering(n, -(n as i64) + 1).unwrap(),
    ));
    edges.insert((
        SpiralPoint::wandering(n, n as i64 - 1).unwrap(),
        SpiralPoint::periodic_from(n, End::Plus, n as i64).unwrap(),
    ));
    let relation =
        SurjectiveRelation::new(points, edges).expect("spiral construction is surjective");
    Ok(FiniteSpiral { level: n, relation })
}

/// Point action of the canonical projection onto level `n`. Wandering points
/// inside the smaller window stay wandering; the rest are absorbed into the
/// end matching their sign.
pub fn project_point(p: &SpiralPoint, n: usize) -> SpiralPoint {
    if n == 0 {
        return SpiralPoint::origin();
    }
    debug_assert!(p.level() >= n);
    match &p.kind {
        SpiralPointKind::Origin => unreachable!("origin only lives at level 0"),
        SpiralPointKind::Wandering(x) => {
            if x.unsigned_abs() < n as u64 {
                SpiralPoint::wandering(n, *x).unwrap()
            } else {
                let end = if *x < 0 { End::Minus } else { End::Plus };
                SpiralPoint::periodic_from(n, end, *x).unwrap()
            }
        }
        SpiralPointKind::Periodic(end, t) => periodic_unchecked(
            n,
            *end,
            t.project(&factorial(n)).expect("n! divides level!").value().clone(),
        ),
    }
}

/// Point action of the end collapse onto level `n`: everything lands on the
/// chosen cycle at the position read off by the orbit coordinate.
pub fn collapse_point(p: &SpiralPoint, n: usize, side: End) -> SpiralPoint {
    if n == 0 {
        return SpiralPoint::origin();
    }
    let t = p.collapse_value(n);
    SpiralPoint {
        level: n as u32,
        kind: SpiralPointKind::Periodic(side, t),
    }
}

/// The canonical projection from level `m` onto level `n` as an explicit
/// map. It is equivariant: the exact image of the level-`m` relation is the
/// level-`n` relation.
pub fn spiral_projection(m: usize, n: usize) -> Result<FiniteMap<SpiralPoint, SpiralPoint>, SpiralError> {
    if m < n {
        return Err(SpiralError::BadLevels { from: m, to: n });
    }
    let source = build_finite_spiral(m, m)?;
    let target = build_finite_spiral(n, n)?;
    let assignment: BTreeMap<SpiralPoint, SpiralPoint> = source
        .points()
        .iter()
        .map(|p| (p.clone(), project_point(p, n)))
        .collect();
    FiniteMap::new(assignment, target.points().clone()).map_err(|_| SpiralError::BadLevels {
        from: m,
        to: n,
    })
}

/// The points of one end cycle at level `n` (the origin when `n = 0`).
pub fn end_cycle_points(n: usize, side: End) -> BTreeSet<SpiralPoint> {
    if n == 0 {
        return [SpiralPoint::origin()].into();
    }
    let fact = factorial(n);
    let mut out = BTreeSet::new();
    let mut t = ubig!(0);
    while t < fact {
        out.insert(periodic_unchecked(n, side, t.clone()));
        t += ubig!(1);
    }
    out
}

/// One end cycle at level `n` as a relation in its own right.
pub fn end_cycle_relation(n: usize, side: End) -> SurjectiveRelation<SpiralPoint> {
    if n == 0 {
        let p = SpiralPoint::origin();
        return SurjectiveRelation::new([p.clone()], [(p.clone(), p)]).unwrap();
    }
    let fact = factorial(n);
    let mut points = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut t = ubig!(0);
    while t < fact {
        let here = periodic_unchecked(n, side, t.clone());
        let mut next_value = &t + ubig!(1);
        if next_value == fact {
            next_value = ubig!(0);
        }
        points.insert(here.clone());
        edges.insert((here, periodic_unchecked(n, side, next_value)));
        t += ubig!(1);
    }
    SurjectiveRelation::new(points, edges).expect("cycle is surjective")
}

/// The collapse of the level-`m` spiral onto one end cycle of the level-`n`
/// spiral, as an explicit map into the spiral (image is exactly the cycle).
pub fn collapse_end(
    m: usize,
    n: usize,
    side: End,
) -> Result<FiniteMap<SpiralPoint, SpiralPoint>, SpiralError> {
    if m < n {
        return Err(SpiralError::BadLevels { from: m, to: n });
    }
    let source = build_finite_spiral(m, m)?;
    let assignment: BTreeMap<SpiralPoint, SpiralPoint> = source
        .points()
        .iter()
        .map(|p| (p.clone(), collapse_point(p, n, side)))
        .collect();
    Ok(FiniteMap::onto_image(assignment))
}
