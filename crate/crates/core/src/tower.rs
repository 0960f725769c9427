//! The inverse system of word-indexed spiral unions.
//!
//! Level `n` is a disjoint union of `6^n` copies of the level-`n` spiral,
//! indexed by words over the six-letter alphabet `{L1, L2, M1, M2, R1, R2}`.
//! The connecting map strips the last letter of a word and acts on the
//! spiral by the map that letter names: `L` collapses onto the minus cycle,
//! `M` is the canonical projection, `R` collapses onto the plus cycle. Each
//! word spiral carries three distinguished invariant subsets, its *pieces*:
//! the whole spiral and the two end cycles. Connecting maps send spirals
//! onto pieces, and every piece is hit by exactly `2 * 6^(k-1)` spirals from
//! `k` levels up.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::relations::{FiniteMap, SurjectiveRelation};
use crate::spirals::{
    build_finite_spiral, collapse_point, end_cycle_points, project_point, End, SpiralPoint,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TowerError {
    #[error("level {level} exceeds the configured cap {cap}")]
    LevelTooLarge { level: usize, cap: usize },
    #[error("cannot materialize level {level}: cap is {cap}")]
    MaterializationTooLarge { level: usize, cap: usize },
    #[error("no map from level {from} to level {to}")]
    BadLevels { from: usize, to: usize },
    #[error("word {word} does not have length {expected}")]
    WordLength { word: String, expected: usize },
    #[error("cannot parse {0:?} as a word")]
    BadWord(String),
    #[error("invalid limits: {0}")]
    BadLimits(String),
}

/// The six-letter alphabet. `L`/`R` letters collapse onto the minus/plus
/// cycle, `M` letters project; each comes in two flavors so that every piece
/// is hit twice per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    L1,
    L2,
    M1,
    M2,
    R1,
    R2,
}

impl Letter {
    pub const ALL: [Letter; 6] = [
        Letter::L1,
        Letter::L2,
        Letter::M1,
        Letter::M2,
        Letter::R1,
        Letter::R2,
    ];

    /// The end this letter collapses onto, if any.
    pub fn side(self) -> Option<End> {
        match self {
            Letter::L1 | Letter::L2 => Some(End::Minus),
            Letter::M1 | Letter::M2 => None,
            Letter::R1 | Letter::R2 => Some(End::Plus),
        }
    }

    pub fn is_projection(self) -> bool {
        self.side().is_none()
    }

    pub fn parse(s: &str) -> Result<Letter, TowerError> {
        match s {
            "L1" => Ok(Letter::L1),
            "L2" => Ok(Letter::L2),
            "M1" => Ok(Letter::M1),
            "M2" => Ok(Letter::M2),
            "R1" => Ok(Letter::R1),
            "R2" => Ok(Letter::R2),
            other => Err(TowerError::BadWord(other.to_string())),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Letter::L1 => "L1",
            Letter::L2 => "L2",
            Letter::M1 => "M1",
            Letter::M2 => "M2",
            Letter::R1 => "R1",
            Letter::R2 => "R2",
        };
        write!(f, "{s}")
    }
}

/// A word over the alphabet; the empty word is written `ε`.
///
/// Letters sit behind a shared allocation: the many points of one word
/// spiral all hold the same word, so cloning is a reference bump and
/// comparisons of literally-shared words short-circuit.
#[derive(Debug, Clone)]
pub struct Word(Arc<[Letter]>);

impl PartialEq for Word {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Word {}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.cmp(&other.0)
    }
}

impl Hash for Word {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

impl Default for Word {
    fn default() -> Self {
        Word::empty()
    }
}

impl Word {
    pub fn empty() -> Word {
        Word(Arc::from(Vec::new()))
    }

    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Word {
        Word(letters.into_iter().collect::<Vec<_>>().into())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The one-letter extension `ωK`.
    pub fn child(&self, letter: Letter) -> Word {
        let mut letters = self.0.to_vec();
        letters.push(letter);
        Word(letters.into())
    }

    /// The first `n` letters.
    pub fn prefix(&self, n: usize) -> Word {
        if n == self.0.len() {
            return self.clone();
        }
        Word(self.0[..n].to_vec().into())
    }

    pub fn parse(s: &str) -> Result<Word, TowerError> {
        if s == "ε" || s.is_empty() {
            return Ok(Word::empty());
        }
        let letters = s
            .split('.')
            .map(Letter::parse)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Word(letters.into()))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// All `6^len` words of a given length, in sorted order.
pub fn all_words(len: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * 6);
        for w in &out {
            for letter in Letter::ALL {
                next.push(w.child(letter));
            }
        }
        out = next;
    }
    out
}

/// A point of a tower level: a word of length `n` paired with a point of the
/// level-`n` spiral.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LevelPoint {
    word: Word,
    point: SpiralPoint,
}

impl LevelPoint {
    pub fn new(word: Word, point: SpiralPoint) -> Result<LevelPoint, TowerError> {
        if word.len() != point.level() {
            return Err(TowerError::WordLength {
                word: word.to_string(),
                expected: point.level(),
            });
        }
        Ok(LevelPoint { word, point })
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn point(&self) -> &SpiralPoint {
        &self.point
    }

    pub fn level(&self) -> usize {
        self.word.len()
    }
}

impl fmt::Display for LevelPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.word, self.point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PieceKind {
    /// The whole word spiral `S`.
    Full,
    /// The cycle at the minus end.
    MinusEnd,
    /// The cycle at the plus end.
    PlusEnd,
}

impl PieceKind {
    pub const ALL: [PieceKind; 3] = [PieceKind::Full, PieceKind::MinusEnd, PieceKind::PlusEnd];
}

impl fmt::Display for PieceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PieceKind::Full => write!(f, "S"),
            PieceKind::MinusEnd => write!(f, "G-"),
            PieceKind::PlusEnd => write!(f, "G+"),
        }
    }
}

/// One of the three invariant subsets of a word spiral.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Piece {
    pub word: Word,
    pub kind: PieceKind,
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.kind, self.word)
    }
}

/// Size caps for level construction. Materializing a full level is refused
/// above `materialization_cap`; per-word streaming operations (piece images,
/// preimage counting) run up to `level_cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TowerLimits {
    pub level_cap: usize,
    pub materialization_cap: usize,
}

impl Default for TowerLimits {
    fn default() -> Self {
        TowerLimits {
            level_cap: 6,
            materialization_cap: 5,
        }
    }
}

impl TowerLimits {
    pub fn validate(&self) -> Result<(), TowerError> {
        if self.level_cap == 0 || self.materialization_cap == 0 {
            return Err(TowerError::BadLimits("caps must be positive".into()));
        }
        if self.materialization_cap > self.level_cap {
            return Err(TowerError::BadLimits(
                "materialization cap exceeds level cap".into(),
            ));
        }
        Ok(())
    }
}

/// A fully materialized tower level: every word copy of the spiral with the
/// disjoint union of their relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemLevel {
    level: usize,
    relation: SurjectiveRelation<LevelPoint>,
}

impl SystemLevel {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn points(&self) -> &BTreeSet<LevelPoint> {
        self.relation.vertices()
    }

    pub fn relation(&self) -> &SurjectiveRelation<LevelPoint> {
        &self.relation
    }
}

fn tag(word: &Word, point: &SpiralPoint) -> LevelPoint {
    LevelPoint {
        word: word.clone(),
        point: point.clone(),
    }
}

/// Materialize level `n`: all `6^n` word spirals and their edges.
pub fn build_level(n: usize, limits: &TowerLimits) -> Result<SystemLevel, TowerError> {
    limits.validate()?;
    if n > limits.materialization_cap {
        return Err(TowerError::MaterializationTooLarge {
            level: n,
            cap: limits.materialization_cap,
        });
    }
    let spiral = build_finite_spiral(n, limits.level_cap).map_err(|_| TowerError::LevelTooLarge {
        level: n,
        cap: limits.level_cap,
    })?;
    let words = all_words(n);
    let mut points: Vec<LevelPoint> = Vec::with_capacity(words.len() * spiral.points().len());
    let mut edges: Vec<(LevelPoint, LevelPoint)> =
        Vec::with_capacity(words.len() * spiral.relation().edges().len());
    for word in &words {
        for p in spiral.points() {
            points.push(tag(word, p));
        }
        for (a, b) in spiral.relation().edges() {
            edges.push((tag(word, a), tag(word, b)));
        }
    }
    // The word copies are disjoint and each copy is the validated spiral
    // relation, so surjectivity and endpoint membership carry over.
    let relation = SurjectiveRelation::from_parts_unchecked(
        points.into_iter().collect(),
        edges.into_iter().collect(),
    );
    Ok(SystemLevel { level: n, relation })
}

/// Point action of one connecting step: apply the map named by `letter`,
/// landing at `target_level`.
pub fn step_point(p: &SpiralPoint, letter: Letter, target_level: usize) -> SpiralPoint {
    match letter.side() {
        None => project_point(p, target_level),
        Some(side) => collapse_point(p, target_level, side),
    }
}

/// Point action of the composed connecting map determined by the suffix of
/// `word` below level `n`.
pub fn composed_point(p: &SpiralPoint, word: &Word, n: usize) -> SpiralPoint {
    let mut q = p.clone();
    for j in (n..word.len()).rev() {
        q = step_point(&q, word.letters()[j], j);
    }
    q
}

/// The composed connecting map applied to a single level point.
pub fn xi_level_point(lp: &LevelPoint, n: usize) -> LevelPoint {
    LevelPoint {
        word: lp.word.prefix(n),
        point: composed_point(&lp.point, &lp.word, n),
    }
}

/// The connecting map from level `n + 1` onto level `n` as an explicit map.
pub fn step_map(
    n: usize,
    limits: &TowerLimits,
) -> Result<FiniteMap<LevelPoint, LevelPoint>, TowerError> {
    composed_map(n, 1, limits)
}

/// The composition of `k` connecting steps, from level `n + k` onto level
/// `n`. With `k = 0` this is the identity.
pub fn composed_map(
    n: usize,
    k: usize,
    limits: &TowerLimits,
) -> Result<FiniteMap<LevelPoint, LevelPoint>, TowerError> {
    limits.validate()?;
    let top = n + k;
    if top > limits.materialization_cap {
        return Err(TowerError::MaterializationTooLarge {
            level: top,
            cap: limits.materialization_cap,
        });
    }
    let source_spiral =
        build_finite_spiral(top, limits.level_cap).map_err(|_| TowerError::LevelTooLarge {
            level: top,
            cap: limits.level_cap,
        })?;
    let target = build_level(n, limits)?;
    // The per-point action depends only on the suffix below level n, so
    // compute it once per suffix and tag words afterwards.
    let mut suffix_actions: BTreeMap<Vec<Letter>, Vec<(SpiralPoint, SpiralPoint)>> =
        BTreeMap::new();
    for suffix in all_words(k) {
        let suffix = suffix.letters().to_vec();
        let action = source_spiral
            .points()
            .iter()
            .map(|p| {
                let mut q = p.clone();
                for (offset, letter) in suffix.iter().enumerate().rev() {
                    q = step_point(&q, *letter, n + offset);
                }
                (p.clone(), q)
            })
            .collect();
        suffix_actions.insert(suffix, action);
    }
    let mut pairs: Vec<(LevelPoint, LevelPoint)> =
        Vec::with_capacity(6usize.pow(top as u32) * source_spiral.points().len());
    for word in all_words(top) {
        let target_word = word.prefix(n);
        let action = &suffix_actions[&word.letters()[n..].to_vec()];
        for (p, q) in action {
            pairs.push((tag(&word, p), tag(&target_word, q)));
        }
    }
    let assignment: BTreeMap<LevelPoint, LevelPoint> = pairs.into_iter().collect();
    // Every image is a point of the freshly built target level: the point
    // part is a level-n spiral point by the step maps, the word part a
    // level-n word by truncation.
    Ok(FiniteMap::from_parts_unchecked(
        assignment,
        target.points().clone(),
    ))
}

/// The point set of a piece.
pub fn piece_points(
    piece: &Piece,
    limits: &TowerLimits,
) -> Result<BTreeSet<LevelPoint>, TowerError> {
    let n = piece.word.len();
    if n > limits.level_cap {
        return Err(TowerError::LevelTooLarge {
            level: n,
            cap: limits.level_cap,
        });
    }
    let points: BTreeSet<SpiralPoint> = match piece.kind {
        PieceKind::Full => build_finite_spiral(n, limits.level_cap)
            .map_err(|_| TowerError::LevelTooLarge {
                level: n,
                cap: limits.level_cap,
            })?
            .points()
            .clone(),
        PieceKind::MinusEnd => end_cycle_points(n, End::Minus),
        PieceKind::PlusEnd => end_cycle_points(n, End::Plus),
    };
    Ok(points.iter().map(|p| tag(&piece.word, p)).collect())
}

/// Memo for computed suffix kinds: the computation is pure and the preimage
/// sweeps ask for the same suffix once per word sharing it.
type SuffixKindCache = Mutex<BTreeMap<(usize, Vec<Letter>), PieceKind>>;

fn suffix_kind_cache() -> &'static SuffixKindCache {
    static CACHE: OnceLock<SuffixKindCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

/// The piece kind a letter suffix produces, computed by applying the actual
/// composed map to every point of the top spiral and identifying the image
/// set. The kind depends only on the suffix, not on the word prefix.
fn suffix_image_kind(
    suffix: &[Letter],
    n: usize,
    level_cap: usize,
) -> Result<PieceKind, TowerError> {
    if let Some(kind) = suffix_kind_cache()
        .lock()
        .expect("cache lock")
        .get(&(n, suffix.to_vec()))
    {
        return Ok(*kind);
    }
    let kind = compute_suffix_image_kind(suffix, n, level_cap)?;
    suffix_kind_cache()
        .lock()
        .expect("cache lock")
        .insert((n, suffix.to_vec()), kind);
    Ok(kind)
}

fn compute_suffix_image_kind(
    suffix: &[Letter],
    n: usize,
    level_cap: usize,
) -> Result<PieceKind, TowerError> {
    let top = n + suffix.len();
    let source = build_finite_spiral(top, level_cap).map_err(|_| TowerError::LevelTooLarge {
        level: top,
        cap: level_cap,
    })?;
    let mut image: BTreeSet<SpiralPoint> = BTreeSet::new();
    for p in source.points() {
        let mut q = p.clone();
        for (offset, letter) in suffix.iter().enumerate().rev() {
            q = step_point(&q, *letter, n + offset);
        }
        image.insert(q);
    }
    if n == 0 {
        // All three pieces coincide on the singleton level; label by the
        // letter rule so counting stays piece-by-piece.
        return Ok(letter_rule_kind(suffix));
    }
    let full = build_finite_spiral(n, level_cap)
        .map_err(|_| TowerError::LevelTooLarge {
            level: n,
            cap: level_cap,
        })?
        .points()
        .clone();
    if image == full {
        Ok(PieceKind::Full)
    } else if image == end_cycle_points(n, End::Minus) {
        Ok(PieceKind::MinusEnd)
    } else if image == end_cycle_points(n, End::Plus) {
        Ok(PieceKind::PlusEnd)
    } else {
        unreachable!("composed connecting maps always land on a piece")
    }
}

/// The letter characterization of piece kinds: all projection letters give
/// the full spiral, otherwise the first collapsing letter decides the end.
/// `suffix_image_kind` is the source of truth; this rule is asserted against
/// it in tests.
pub fn letter_rule_kind(suffix: &[Letter]) -> PieceKind {
    for letter in suffix {
        match letter.side() {
            Some(End::Minus) => return PieceKind::MinusEnd,
            Some(End::Plus) => return PieceKind::PlusEnd,
            None => continue,
        }
    }
    PieceKind::Full
}

/// The unique piece of level `n` onto which the spiral of `word` maps under
/// the composed connecting map.
pub fn piece_of_image(word: &Word, n: usize, limits: &TowerLimits) -> Result<Piece, TowerError> {
    limits.validate()?;
    if word.len() < n {
        return Err(TowerError::BadLevels {
            from: word.len(),
            to: n,
        });
    }
    if word.len() > limits.level_cap {
        return Err(TowerError::LevelTooLarge {
            level: word.len(),
            cap: limits.level_cap,
        });
    }
    let kind = suffix_image_kind(&word.letters()[n..], n, limits.level_cap)?;
    Ok(Piece {
        word: word.prefix(n),
        kind,
    })
}

/// All words of length `n + k` whose spiral maps onto the given piece. The
/// image kind is computed once per distinct suffix; every word sharing a
/// suffix shares its composed point action.
pub fn piece_preimage_spirals(
    n: usize,
    k: usize,
    piece: &Piece,
    limits: &TowerLimits,
) -> Result<Vec<Word>, TowerError> {
    limits.validate()?;
    if k == 0 || piece.word.len() != n {
        return Err(TowerError::BadLevels { from: n + k, to: n });
    }
    if n + k > limits.level_cap {
        return Err(TowerError::LevelTooLarge {
            level: n + k,
            cap: limits.level_cap,
        });
    }
    let mut out = Vec::new();
    for suffix in all_words(k) {
        let kind = suffix_image_kind(suffix.letters(), n, limits.level_cap)?;
        if kind == piece.kind {
            let mut letters = piece.word.letters().to_vec();
            letters.extend_from_slice(suffix.letters());
            out.push(Word::from_letters(letters));
        }
    }
    Ok(out)
}
