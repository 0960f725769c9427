//! Lifting an equivariant surjection onto a tower level through the
//! connecting maps.
//!
//! Given a spiral model mapping onto level `n`, each model spiral onto one
//! piece, the engine produces a map onto level `n + k` that commutes with
//! the connecting maps. Three moves, mirroring the structure of the result
//! this makes computable: duplicate spirals until every piece is hit by
//! exactly as many spirals as map onto it from `n + k` (a stand-in for
//! refining a Cantor fiber), match expanded spirals to target spirals piece
//! by piece, and pin each per-spiral map by sending a designated wandering
//! point to the target spiral's zero-point, which forces the rest by
//! equivariance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use ibig::IBig;
use thiserror::Error;

use crate::adding_machine::{factorial, residue};
use crate::relations::{image_under, FiniteMap, SurjectiveRelation};
use crate::representation::{
    Chain, ModelPoint, ModelSpiral, RepresentationError, SpiralId, SpiralModel,
    chain_to_spiral_map,
};
use crate::spirals::{
    build_finite_spiral, zero_point, End, SpiralPoint, SpiralPointKind,
};
use crate::tower::{
    all_words, build_level, piece_points, piece_preimage_spirals, xi_level_point, LevelPoint,
    Piece, PieceKind, TowerError, TowerLimits, Word,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LiftError {
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
    #[error("model target is not the relation of the requested level")]
    WrongTarget,
    #[error("assignment is not equivariant onto the level relation: {0}")]
    NotEquivariant(String),
    #[error("spiral {id} does not map onto a piece: {detail}")]
    SpiralImageNotAPiece { id: SpiralId, detail: String },
    #[error("piece {0} is not the image of any model spiral")]
    PieceNotCovered(String),
    #[error("piece {piece} is hit by {hits} spirals but only {capacity} targets exist; raise k")]
    ClimbTooSmall {
        piece: String,
        hits: usize,
        capacity: usize,
    },
    #[error("source spiral is too shallow: level {level} < required {required}")]
    SourceTooShallow { level: usize, required: usize },
    #[error("no admissible anchor point: {0}")]
    AnchorNotFound(String),
    #[error("internal verification failed: {0}")]
    InternalVerificationFailed(String),
}

/// A model mapping onto level `n`, together with the climb `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftProblem {
    model: SpiralModel<LevelPoint>,
    n: usize,
    k: usize,
    limits: TowerLimits,
}

impl LiftProblem {
    /// Validate that the model's target is the level-`n` relation, that the
    /// assignment is equivariant onto it, and that every spiral maps onto a
    /// piece.
    pub fn new(
        model: SpiralModel<LevelPoint>,
        n: usize,
        k: usize,
        limits: TowerLimits,
    ) -> Result<LiftProblem, LiftError> {
        limits.validate()?;
        let level = build_level(n, &limits)?;
        if model.target() != level.relation() {
            return Err(LiftError::WrongTarget);
        }
        let image = image_under(model.assignment(), &model.union_relation())
            .map_err(|e| LiftError::NotEquivariant(e.to_string()))?;
        if image.edges() != level.relation().edges() {
            return Err(LiftError::NotEquivariant(
                "image of the union relation differs from the level relation".into(),
            ));
        }
        let problem = LiftProblem {
            model,
            n,
            k,
            limits,
        };
        classify_spirals(&problem)?;
        Ok(problem)
    }

    pub fn model(&self) -> &SpiralModel<LevelPoint> {
        &self.model
    }

    pub fn base_level(&self) -> usize {
        self.n
    }

    pub fn climb(&self) -> usize {
        self.k
    }

    pub fn limits(&self) -> &TowerLimits {
        &self.limits
    }
}

/// The outcome of a lift: the expanded model (duplicates have fresh ids),
/// the lifted assignment onto level `n + k`, and the duplication record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftResult {
    expanded_model: SpiralModel<LevelPoint>,
    rho: FiniteMap<ModelPoint, LevelPoint>,
    duplication_record: BTreeMap<SpiralId, Vec<SpiralId>>,
}

impl LiftResult {
    pub fn expanded_model(&self) -> &SpiralModel<LevelPoint> {
        &self.expanded_model
    }

    pub fn rho(&self) -> &FiniteMap<ModelPoint, LevelPoint> {
        &self.rho
    }

    pub fn duplication_record(&self) -> &BTreeMap<SpiralId, Vec<SpiralId>> {
        &self.duplication_record
    }

    /// The original spiral a (possibly duplicated) id collapses to.
    pub fn collapse(&self, id: SpiralId) -> SpiralId {
        for (original, dups) in &self.duplication_record {
            if *original == id || dups.contains(&id) {
                return *original;
            }
        }
        id
    }
}

/// The piece of level `n` a spiral's image equals. At level 0 the three
/// pieces coincide as sets and the full-spiral label is used.
pub fn classify_spirals(problem: &LiftProblem) -> Result<BTreeMap<SpiralId, Piece>, LiftError> {
    let mut out = BTreeMap::new();
    for spiral in problem.model.spirals() {
        let image: BTreeSet<LevelPoint> = spiral
            .spiral
            .points()
            .iter()
            .map(|p| {
                problem
                    .model
                    .assignment()
                    .apply(&(spiral.id, p.clone()))
                    .expect("assignment is total")
                    .clone()
            })
            .collect();
        let words: BTreeSet<&Word> = image.iter().map(|lp| lp.word()).collect();
        if words.len() != 1 {
            return Err(LiftError::SpiralImageNotAPiece {
                id: spiral.id,
                detail: format!("image spans {} words", words.len()),
            });
        }
        let word = (*words.iter().next().unwrap()).clone();
        let mut found = None;
        for kind in PieceKind::ALL {
            let piece = Piece {
                word: word.clone(),
                kind,
            };
            if piece_points(&piece, &problem.limits)? == image {
                found = Some(piece);
                break;
            }
        }
        match found {
            Some(piece) => {
                out.insert(spiral.id, piece);
            }
            None => {
                return Err(LiftError::SpiralImageNotAPiece {
                    id: spiral.id,
                    detail: format!("image has {} points over word {word}", image.len()),
                });
            }
        }
    }
    Ok(out)
}

/// Pieces grouped so that set-equal pieces (which only happens at level 0)
/// are interchangeable for covering and matching.
fn piece_classes(n: usize) -> Vec<Vec<Piece>> {
    let mut classes = Vec::new();
    for word in all_words(n) {
        if n == 0 {
            classes.push(
                PieceKind::ALL
                    .iter()
                    .map(|kind| Piece {
                        word: word.clone(),
                        kind: *kind,
                    })
                    .collect(),
            );
        } else {
            for kind in PieceKind::ALL {
                classes.push(vec![Piece {
                    word: word.clone(),
                    kind,
                }]);
            }
        }
    }
    classes
}

/// A balanced problem: every piece is hit by exactly as many spirals as
/// there are target spirals mapping onto it, achieved by duplicating
/// existing spirals round-robin. Duplicates share level and assignment and
/// receive fresh ids.
pub struct BalancedProblem {
    pub problem: LiftProblem,
    pub duplication_record: BTreeMap<SpiralId, Vec<SpiralId>>,
}

pub fn balance_model(problem: &LiftProblem) -> Result<BalancedProblem, LiftError> {
    let classification = classify_spirals(problem)?;
    let n = problem.n;
    let k = problem.k;

    // Capacity of each piece: how many level-(n+k) spirals map onto it.
    let mut capacity: BTreeMap<Piece, usize> = BTreeMap::new();
    for class in piece_classes(n) {
        for piece in class {
            let words = piece_preimage_spirals(n, k, &piece, &problem.limits)?;
            capacity.insert(piece, words.len());
        }
    }

    let mut members: BTreeMap<Piece, Vec<SpiralId>> = BTreeMap::new();
    for (id, piece) in &classification {
        members.entry(piece.clone()).or_default().push(*id);
    }

    let mut next_id: SpiralId = problem
        .model
        .spirals()
        .iter()
        .map(|s| s.id)
        .max()
        .map_or(0, |m| m + 1);
    let mut spirals: Vec<ModelSpiral> = problem.model.spirals().to_vec();
    let mut assignment = problem.model.assignment().assignment().clone();
    let mut record: BTreeMap<SpiralId, Vec<SpiralId>> = BTreeMap::new();

    for class in piece_classes(n) {
        let class_members: Vec<SpiralId> = class
            .iter()
            .flat_map(|p| members.get(p).cloned().unwrap_or_default())
            .collect();
        let class_capacity: usize = class.iter().map(|p| capacity[p]).sum();
        if class_members.is_empty() {
            return Err(LiftError::PieceNotCovered(class[0].to_string()));
        }
        if class_members.len() > class_capacity {
            return Err(LiftError::ClimbTooSmall {
                piece: class[0].to_string(),
                hits: class_members.len(),
                capacity: class_capacity,
            });
        }
        let missing = class_capacity - class_members.len();
        for i in 0..missing {
            let original = class_members[i % class_members.len()];
            let source = problem
                .model
                .spiral(original)
                .expect("classified id exists")
                .clone();
            let dup_id = next_id;
            next_id += 1;
            for p in source.spiral.points() {
                let v = problem
                    .model
                    .assignment()
                    .apply(&(original, p.clone()))
                    .unwrap()
                    .clone();
                assignment.insert((dup_id, p.clone()), v);
            }
            spirals.push(ModelSpiral {
                id: dup_id,
                spiral: source.spiral,
            });
            record.entry(original).or_default().push(dup_id);
        }
    }

    let assignment = FiniteMap::new(assignment, problem.model.assignment().codomain().clone())
        .expect("duplication preserves images");
    let model = SpiralModel::new(spirals, assignment, problem.model.target().clone())?;
    Ok(BalancedProblem {
        problem: LiftProblem {
            model,
            n,
            k,
            limits: problem.limits,
        },
        duplication_record: record,
    })
}

/// The point of the abstract spiral at walk coordinate `y`, at a given
/// level: wandering inside the window, absorbed into the matching end
/// outside it.
fn walk_point(y: i64, level: usize) -> SpiralPoint {
    if level == 0 {
        return SpiralPoint::origin();
    }
    if y.unsigned_abs() < level as u64 {
        SpiralPoint::wandering(level, y).expect("inside the window")
    } else {
        let end = if y < 0 { End::Minus } else { End::Plus };
        let t = residue(&factorial(level), &IBig::from(y)).expect("positive modulus");
        SpiralPoint::periodic(level, end, t).expect("modulus matches")
    }
}

/// The translate of a spiral point by `-shift` along the walk coordinate,
/// reduced to `level`: the unique equivariant map pinned by sending the
/// wandering point at `shift` to the zero-point.
fn shifted_point(p: &SpiralPoint, shift: i64, level: usize) -> SpiralPoint {
    if level == 0 {
        return SpiralPoint::origin();
    }
    match p.kind() {
        SpiralPointKind::Origin => SpiralPoint::origin(),
        SpiralPointKind::Wandering(x) => walk_point(x - shift, level),
        SpiralPointKind::Periodic(end, t) => {
            let value = IBig::from(t.value().clone()) - IBig::from(shift);
            let t = residue(&factorial(level), &value).expect("positive modulus");
            SpiralPoint::periodic(level, *end, t).expect("modulus matches")
        }
    }
}

/// Wandering points of the source whose image under `phi_s` is `value`.
fn wandering_preimages(
    phi_s: &FiniteMap<SpiralPoint, LevelPoint>,
    value: &LevelPoint,
) -> Vec<i64> {
    phi_s
        .assignment()
        .iter()
        .filter_map(|(p, v)| match p.kind() {
            SpiralPointKind::Wandering(x) if v == value => Some(*x),
            _ => None,
        })
        .collect()
}

/// The anchor shift for a source spiral with assignment `phi_s`, mapping to
/// the spiral of `target_word`: the walk coordinate of the wandering source
/// point that must land on the target's zero-point.
fn anchor_shift(
    source_level: usize,
    phi_s: &FiniteMap<SpiralPoint, LevelPoint>,
    target_word: &Word,
    n: usize,
) -> Result<i64, LiftError> {
    let nk = target_word.len();
    if source_level < nk {
        return Err(LiftError::SourceTooShallow {
            level: source_level,
            required: nk,
        });
    }
    if n == 0 {
        // Every map to the singleton level agrees; the canonical projection
        // (shift zero) is always admissible.
        return Ok(0);
    }
    // Where the target zero-point lands at level n.
    let z = LevelPoint::new(target_word.clone(), zero_point(nk)).expect("lengths match");
    let xi_z = xi_level_point(&z, n);
    let window = (source_level - nk) as i64;
    let mut candidates = wandering_preimages(phi_s, &xi_z);
    candidates.sort();
    if candidates.is_empty() {
        return Err(LiftError::AnchorNotFound(format!(
            "no wandering source point maps to {xi_z}"
        )));
    }
    match candidates.iter().find(|x| x.abs() <= window) {
        Some(shift) => Ok(*shift),
        None => {
            let least = candidates
                .iter()
                .map(|x| x.abs())
                .min()
                .expect("nonempty");
            Err(LiftError::SourceTooShallow {
                level: source_level,
                required: nk + least as usize,
            })
        }
    }
}

/// An equivariant surjection from a source spiral onto the spiral of
/// `target_word`, pinned so that the anchor point maps to the target's
/// zero-point and commuting with the connecting maps over `phi_s`.
pub fn anchor_map(
    source: &crate::spirals::FiniteSpiral,
    phi_s: &FiniteMap<SpiralPoint, LevelPoint>,
    target_word: &Word,
    n: usize,
) -> Result<FiniteMap<SpiralPoint, LevelPoint>, LiftError> {
    let nk = target_word.len();
    let shift = anchor_shift(source.level(), phi_s, target_word, n)?;
    let mut assignment: BTreeMap<SpiralPoint, LevelPoint> = BTreeMap::new();
    for p in source.points() {
        let q = shifted_point(p, shift, nk);
        assignment.insert(
            p.clone(),
            LevelPoint::new(target_word.clone(), q).expect("lengths match"),
        );
    }
    let target_spiral = build_finite_spiral(nk, nk).expect("own cap");
    let codomain: BTreeSet<LevelPoint> = target_spiral
        .points()
        .iter()
        .map(|p| LevelPoint::new(target_word.clone(), p.clone()).expect("lengths match"))
        .collect();
    let map = FiniteMap::new(assignment, codomain)
        .map_err(|e| LiftError::InternalVerificationFailed(e.to_string()))?;
    if !map.is_surjective() {
        return Err(LiftError::InternalVerificationFailed(format!(
            "anchored map does not cover the spiral of {target_word}"
        )));
    }
    Ok(map)
}

/// Construct a lift: balance, match expanded spirals to target spirals with
/// equal pieces, anchor each one, and verify the result before returning.
pub fn find_lift(problem: &LiftProblem) -> Result<LiftResult, LiftError> {
    if problem.k == 0 {
        let result = LiftResult {
            expanded_model: problem.model.clone(),
            rho: problem.model.assignment().clone(),
            duplication_record: BTreeMap::new(),
        };
        if !verify_lift(problem, &result) {
            return Err(LiftError::InternalVerificationFailed(
                "trivial lift failed verification".into(),
            ));
        }
        return Ok(result);
    }

    let balanced = balance_model(problem)?;
    let expanded = &balanced.problem.model;
    let classification = classify_spirals(&balanced.problem)?;
    let n = problem.n;
    let k = problem.k;

    let mut members: BTreeMap<Piece, Vec<SpiralId>> = BTreeMap::new();
    for (id, piece) in &classification {
        members.entry(piece.clone()).or_default().push(*id);
    }

    // Pair spirals with target words class by class: spirals in id order,
    // words in lexicographic order.
    let mut rho_assignment: BTreeMap<ModelPoint, LevelPoint> = BTreeMap::new();
    for class in piece_classes(n) {
        let mut class_members: Vec<SpiralId> = class
            .iter()
            .flat_map(|p| members.get(p).cloned().unwrap_or_default())
            .collect();
        class_members.sort();
        let mut targets: Vec<Word> = Vec::new();
        for piece in &class {
            targets.extend(piece_preimage_spirals(n, k, piece, &problem.limits)?);
        }
        debug_assert_eq!(class_members.len(), targets.len());
        for (id, word) in class_members.iter().zip(targets.iter()) {
            let source = &expanded.spiral(*id).expect("classified id").spiral;
            let phi_s = expanded.spiral_map(*id);
            let map = anchor_map(source, &phi_s, word, n)?;
            for (p, q) in map.assignment() {
                rho_assignment.insert((*id, p.clone()), q.clone());
            }
        }
    }

    let target_level = build_level(n + k, &problem.limits)?;
    let rho = FiniteMap::new(rho_assignment, target_level.points().clone())
        .map_err(|e| LiftError::InternalVerificationFailed(e.to_string()))?;
    let result = LiftResult {
        expanded_model: expanded.clone(),
        rho,
        duplication_record: balanced.duplication_record,
    };
    if !verify_lift(problem, &result) {
        return Err(LiftError::InternalVerificationFailed(
            "constructed lift failed verification".into(),
        ));
    }
    Ok(result)
}

/// Check the three lift conditions: the lifted map is equivariant onto the
/// deeper level, composing with the connecting map recovers the original
/// assignment through the duplication record, and every deeper point is
/// hit.
pub fn verify_lift(problem: &LiftProblem, result: &LiftResult) -> bool {
    let n = problem.n;
    let k = problem.k;
    let deeper = match build_level(n + k, &problem.limits) {
        Ok(level) => level,
        Err(_) => return false,
    };

    // (i) equivariance onto the deeper relation.
    let union = result.expanded_model.union_relation();
    match image_under(result.rho(), &union) {
        Ok(image) => {
            if image.edges() != deeper.relation().edges() {
                return false;
            }
        }
        Err(_) => return false,
    }

    // (ii) the connecting map undoes the lift, through duplication.
    for spiral in result.expanded_model.spirals() {
        let original = result.collapse(spiral.id);
        for p in spiral.spiral.points() {
            let lifted = match result.rho().apply(&(spiral.id, p.clone())) {
                Some(q) => q,
                None => return false,
            };
            let projected = xi_level_point(lifted, n);
            let phi = match problem.model.assignment().apply(&(original, p.clone())) {
                Some(v) => v,
                None => return false,
            };
            if &projected != phi {
                return false;
            }
        }
    }

    // (iii) surjectivity on points.
    let hit: BTreeSet<&LevelPoint> = result.rho().assignment().values().collect();
    deeper.points().iter().all(|q| hit.contains(q))
}

/// The canonical problem: the model whose spirals are the word spirals of
/// level `n + k` and whose assignment is the composed connecting map. Its
/// lift exists with no duplication at all.
pub fn canonical_problem(n: usize, k: usize, limits: &TowerLimits) -> Result<LiftProblem, LiftError> {
    let top = n + k;
    let spiral = build_finite_spiral(top, limits.level_cap).map_err(|_| {
        LiftError::Tower(TowerError::LevelTooLarge {
            level: top,
            cap: limits.level_cap,
        })
    })?;
    let target = build_level(n, limits)?;
    let mut spirals = Vec::new();
    let mut assignment: BTreeMap<ModelPoint, LevelPoint> = BTreeMap::new();
    for (i, word) in all_words(top).into_iter().enumerate() {
        let id = i as SpiralId;
        for p in spiral.points() {
            let lp = LevelPoint::new(word.clone(), p.clone()).expect("lengths match");
            assignment.insert((id, p.clone()), xi_level_point(&lp, n));
        }
        spirals.push(ModelSpiral {
            id,
            spiral: spiral.clone(),
        });
    }
    let assignment = FiniteMap::new(assignment, target.points().clone())
        .map_err(|e| LiftError::InternalVerificationFailed(e.to_string()))?;
    let model = SpiralModel::new(spirals, assignment, target.relation().clone())?;
    LiftProblem::new(model, n, k, *limits)
}

/// The walk coordinate the anchor construction needs per spiral, and from
/// it the level the spiral must have to clear the window at level `n + k`.
fn required_level(
    spiral: &ModelSpiral,
    phi_s: &FiniteMap<SpiralPoint, LevelPoint>,
    piece: &Piece,
    n: usize,
    k: usize,
) -> Result<usize, LiftError> {
    let nk = n + k;
    let m = spiral.spiral.level();
    if n == 0 {
        return Ok(m.max(nk));
    }
    match piece.kind {
        PieceKind::Full => {
            let z = LevelPoint::new(piece.word.clone(), zero_point(n)).expect("lengths match");
            let mut anchors = wandering_preimages(phi_s, &z);
            anchors.sort();
            match anchors.first() {
                Some(x) => Ok(m.max(nk + x.unsigned_abs() as usize)),
                None => Err(LiftError::AnchorNotFound(format!(
                    "no wandering point maps to the zero-point of {}",
                    piece.word
                ))),
            }
        }
        PieceKind::MinusEnd | PieceKind::PlusEnd => {
            // The assignment on an end spiral advances the cycle coordinate
            // with the walk, so the residue of the zero-point's image tells
            // where an admissible anchor sits.
            let side = if piece.kind == PieceKind::MinusEnd {
                End::Minus
            } else {
                End::Plus
            };
            let source_zero = zero_point(m);
            let image = phi_s
                .apply(&source_zero)
                .ok_or_else(|| LiftError::AnchorNotFound("no zero-point image".into()))?;
            let c = match image.point().kind() {
                SpiralPointKind::Periodic(e, t) if *e == side => {
                    i64::try_from(t.value()).expect("small residue")
                }
                _ => {
                    return Err(LiftError::SpiralImageNotAPiece {
                        id: spiral.id,
                        detail: "end spiral image is not on the expected cycle".into(),
                    })
                }
            };
            let nf = i64::try_from(&factorial(n)).expect("small factorial");
            let r = (-c).rem_euclid(nf);
            let least = r.min(nf - r);
            Ok(m.max(nk + least as usize))
        }
    }
}

/// Complete a model into a valid lift problem for climb `k`: synthesize a
/// covering spiral for every piece no spiral maps onto, then deepen every
/// spiral far enough for its anchor window.
pub fn prepare_problem(
    model: SpiralModel<LevelPoint>,
    n: usize,
    k: usize,
    limits: TowerLimits,
) -> Result<LiftProblem, LiftError> {
    let problem = LiftProblem::new(model, n, k, limits)?;
    let classification = classify_spirals(&problem)?;
    let covered: BTreeSet<&Piece> = classification.values().collect();

    let mut spirals = problem.model.spirals().to_vec();
    let mut assignment = problem.model.assignment().assignment().clone();
    let mut next_id: SpiralId = spirals.iter().map(|s| s.id).max().map_or(0, |m| m + 1);

    if n > 0 {
        let level = build_level(n, &limits)?;
        for class in piece_classes(n) {
            let piece = &class[0];
            if covered.contains(piece) {
                continue;
            }
            let chain = synthesize_piece_chain(piece, level.relation())?;
            let (m, map) = chain_to_spiral_map(&chain);
            let spiral = build_finite_spiral(m, m).expect("own cap");
            let id = next_id;
            next_id += 1;
            for (p, v) in map.assignment() {
                assignment.insert((id, p.clone()), v.clone());
            }
            spirals.push(ModelSpiral { id, spiral });
        }
    }

    let assignment = FiniteMap::new(assignment, problem.model.assignment().codomain().clone())
        .map_err(|e| LiftError::InternalVerificationFailed(e.to_string()))?;
    let model = SpiralModel::new(spirals, assignment, problem.model.target().clone())?;
    let problem = LiftProblem::new(model, n, k, limits)?;

    // Deepen every spiral to its anchor window.
    let classification = classify_spirals(&problem)?;
    let mut levels: BTreeMap<SpiralId, usize> = BTreeMap::new();
    for spiral in problem.model.spirals() {
        let piece = &classification[&spiral.id];
        let phi_s = problem.model.spiral_map(spiral.id);
        let required = required_level(spiral, &phi_s, piece, n, k)?;
        levels.insert(spiral.id, required);
    }
    let model = problem.model.deepen(&levels)?;
    LiftProblem::new(model, n, k, limits)
}

/// A chain whose spiral maps onto exactly the given piece: the end cycles
/// loop for end pieces; the full traversal from the minus cycle through the
/// wandering stretch into the plus cycle for full pieces.
fn synthesize_piece_chain(
    piece: &Piece,
    relation: &SurjectiveRelation<LevelPoint>,
) -> Result<Chain<LevelPoint>, LiftError> {
    let n = piece.word.len();
    let tag = |p: SpiralPoint| LevelPoint::new(piece.word.clone(), p).expect("lengths match");
    let cycle_list = |side: End, last_value: i64| -> Vec<LevelPoint> {
        // The cycle in walk order, rotated so the requested residue is last.
        let nf = i64::try_from(&factorial(n)).expect("small factorial");
        (1..=nf)
            .map(|i| {
                let t = residue(&factorial(n), &IBig::from(last_value + i)).unwrap();
                tag(SpiralPoint::periodic(n, side, t).expect("modulus matches"))
            })
            .collect()
    };
    let chain = match piece.kind {
        PieceKind::MinusEnd | PieceKind::PlusEnd => {
            let side = if piece.kind == PieceKind::MinusEnd {
                End::Minus
            } else {
                End::Plus
            };
            let cycle = cycle_list(side, -1);
            Chain::new(cycle.clone(), Vec::new(), cycle, relation.clone())?
        }
        PieceKind::Full => {
            // Head ends at the gluing point of the minus cycle; the tail
            // starts where the wandering stretch is absorbed.
            let head = cycle_list(End::Minus, -(n as i64));
            let middle: Vec<LevelPoint> = (-(n as i64) + 1..n as i64)
                .map(|x| tag(SpiralPoint::wandering(n, x).expect("inside window")))
                .collect();
            let tail = cycle_list(End::Plus, n as i64 - 1);
            Chain::new(head, middle, tail, relation.clone())?
        }
    };
    Ok(chain)
}

/// Render a short summary of a lift for reports.
pub fn describe_lift(result: &LiftResult) -> String {
    let mut out = String::new();
    let dup_count: usize = result
        .duplication_record
        .values()
        .map(|v| v.len())
        .sum();
    let _ = write!(
        out,
        "{} spirals ({} duplicates), {} lifted points",
        result.expanded_model.spirals().len(),
        dup_count,
        result.rho.assignment().len()
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::is_equivariant;
    use crate::representation::represent_relation;
    use crate::tower::{piece_of_image, Letter};

    fn limits() -> TowerLimits {
        TowerLimits::default()
    }

    #[test]
    fn canonical_classification_matches_piece_of_image() {
        let problem = canonical_problem(1, 1, &limits()).unwrap();
        let classification = classify_spirals(&problem).unwrap();
        for (i, word) in all_words(2).into_iter().enumerate() {
            let expected = piece_of_image(&word, 1, &limits()).unwrap();
            assert_eq!(classification[&(i as SpiralId)], expected);
        }
    }

    #[test]
    fn single_spiral_model_onto_level_zero() {
        let problem = canonical_problem(0, 0, &limits()).unwrap();
        let classification = classify_spirals(&problem).unwrap();
        assert_eq!(classification.len(), 1);
        assert_eq!(
            classification[&0],
            Piece {
                word: Word::empty(),
                kind: PieceKind::Full
            }
        );
    }

    #[test]
    fn balance_leaves_canonical_problems_alone() {
        let problem = canonical_problem(1, 1, &limits()).unwrap();
        let balanced = balance_model(&problem).unwrap();
        assert!(balanced.duplication_record.is_empty());
        assert_eq!(balanced.problem.model().spirals().len(), 36);
    }

    #[test]
    fn balance_duplicates_to_capacity() {
        // A prepared representation model of the level-1 relation has one
        // spiral per piece; with k = 1 each is duplicated once.
        let level = build_level(1, &limits()).unwrap();
        let model = represent_relation(level.relation());
        let problem = prepare_problem(model, 1, 1, limits()).unwrap();
        assert_eq!(problem.model().spirals().len(), 18);
        let balanced = balance_model(&problem).unwrap();
        assert_eq!(balanced.problem.model().spirals().len(), 36);
        let dup_count: usize = balanced
            .duplication_record
            .values()
            .map(|v| v.len())
            .sum();
        assert_eq!(dup_count, 18);
    }

    #[test]
    fn balance_round_robin_arithmetic() {
        // Three spirals on one end piece with k = 2: capacity is 16, so 13
        // duplicates are distributed 5/4/4.
        let level = build_level(1, &limits()).unwrap();
        let model = represent_relation(level.relation());
        let problem = prepare_problem(model, 1, 2, limits()).unwrap();
        let classification = classify_spirals(&problem).unwrap();
        let minus_piece = Piece {
            word: Word::from_letters([Letter::L1]),
            kind: PieceKind::MinusEnd,
        };
        let existing: Vec<SpiralId> = classification
            .iter()
            .filter(|(_, p)| **p == minus_piece)
            .map(|(id, _)| *id)
            .collect();
        assert_eq!(existing.len(), 1);
        let balanced = balance_model(&problem).unwrap();
        let dups = &balanced.duplication_record[&existing[0]];
        assert_eq!(dups.len(), 15); // capacity 16, one original
    }

    #[test]
    fn uncovered_pieces_are_rejected_without_preparation() {
        // A raw representation model covers every edge with full-spiral
        // chains, so the end pieces have no spiral of their own.
        let level = build_level(1, &limits()).unwrap();
        let model = represent_relation(level.relation());
        let problem = LiftProblem::new(model, 1, 1, limits()).unwrap();
        assert!(matches!(
            balance_model(&problem),
            Err(LiftError::PieceNotCovered(_))
        ));
    }

    #[test]
    fn overfull_pieces_are_rejected() {
        // Duplicate one word spiral of the canonical problem by hand: its
        // piece then holds more spirals than there are targets.
        let problem = canonical_problem(1, 1, &limits()).unwrap();
        let mut spirals = problem.model().spirals().to_vec();
        let mut assignment = problem.model().assignment().assignment().clone();
        let clone_of = spirals[0].clone();
        let dup_id = spirals.len() as SpiralId;
        for p in clone_of.spiral.points() {
            let v = problem
                .model()
                .assignment()
                .apply(&(clone_of.id, p.clone()))
                .unwrap()
                .clone();
            assignment.insert((dup_id, p.clone()), v);
        }
        spirals.push(ModelSpiral {
            id: dup_id,
            spiral: clone_of.spiral,
        });
        let assignment =
            FiniteMap::new(assignment, problem.model().assignment().codomain().clone()).unwrap();
        let model =
            SpiralModel::new(spirals, assignment, problem.model().target().clone()).unwrap();
        let problem = LiftProblem::new(model, 1, 1, limits()).unwrap();
        assert!(matches!(
            balance_model(&problem),
            Err(LiftError::ClimbTooSmall { .. })
        ));
    }

    #[test]
    fn anchored_projection_is_the_identity_on_matching_levels() {
        // A central source at the target level with the canonical
        // assignment anchors with shift zero: the word-tagged identity.
        let problem = canonical_problem(1, 1, &limits()).unwrap();
        let target_word = Word::from_letters([Letter::M1, Letter::M1]);
        let id = all_words(2)
            .into_iter()
            .position(|w| w == target_word)
            .unwrap() as SpiralId;
        let spiral = &problem.model().spiral(id).unwrap().spiral;
        let phi_s = problem.model().spiral_map(id);
        let map = anchor_map(spiral, &phi_s, &target_word, 1).unwrap();
        for (p, q) in map.assignment() {
            assert_eq!(q.word(), &target_word);
            assert_eq!(q.point(), p);
        }
        assert_eq!(
            map.apply(&zero_point(2)).unwrap().point(),
            &zero_point(2)
        );
    }

    #[test]
    fn all_admissible_anchors_give_equivariant_maps() {
        // An end spiral over a cycle admits several anchors; every
        // admissible shift yields an equivariant surjection onto the target
        // spiral.
        let source = build_finite_spiral(3, 6).unwrap();
        let target = build_finite_spiral(1, 6).unwrap();
        for shift in [-2i64, -1, 0, 1, 2] {
            let assignment: BTreeMap<SpiralPoint, SpiralPoint> = source
                .points()
                .iter()
                .map(|p| (p.clone(), shifted_point(p, shift, 1)))
                .collect();
            let map = FiniteMap::new(assignment, target.points().clone()).unwrap();
            assert!(
                is_equivariant(&map, source.relation(), target.relation()).unwrap(),
                "shift {shift}"
            );
        }
    }

    #[test]
    fn equivariant_surjections_are_exactly_the_shifts() {
        // Brute force all 3^7 maps from the level-2 spiral to the level-1
        // spiral: the equivariant surjections are exactly the three shifted
        // walk maps, one per admissible anchor.
        let source = build_finite_spiral(2, 6).unwrap();
        let target = build_finite_spiral(1, 6).unwrap();
        let source_points: Vec<SpiralPoint> = source.points().iter().cloned().collect();
        let target_points: Vec<SpiralPoint> = target.points().iter().cloned().collect();
        let mut found = Vec::new();
        for code in 0..3usize.pow(7) {
            let mut c = code;
            let mut assignment = BTreeMap::new();
            for p in &source_points {
                assignment.insert(p.clone(), target_points[c % 3].clone());
                c /= 3;
            }
            let map = FiniteMap::new(assignment, target.points().clone()).unwrap();
            if map.is_surjective()
                && is_equivariant(&map, source.relation(), target.relation()).unwrap()
            {
                found.push(map);
            }
        }
        assert_eq!(found.len(), 3);
        for shift in [-1i64, 0, 1] {
            let expected: BTreeMap<SpiralPoint, SpiralPoint> = source
                .points()
                .iter()
                .map(|p| (p.clone(), shifted_point(p, shift, 1)))
                .collect();
            assert!(
                found.iter().any(|m| m.assignment() == &expected),
                "shift {shift} missing"
            );
        }
    }

    #[test]
    fn canonical_lifts_verify() {
        for n in 0..=1usize {
            for k in 0..=1usize {
                let problem = canonical_problem(n, k, &limits()).unwrap();
                let result = find_lift(&problem).unwrap();
                assert!(verify_lift(&problem, &result), "n={n} k={k}");
                assert!(result.duplication_record().is_empty());
            }
        }
    }

    #[test]
    fn represented_models_lift_after_preparation() {
        for (n, k) in [(0usize, 1usize), (1, 1)] {
            let level = build_level(n, &limits()).unwrap();
            let model = represent_relation(level.relation());
            let problem = prepare_problem(model, n, k, limits()).unwrap();
            let result = find_lift(&problem).unwrap();
            assert!(verify_lift(&problem, &result), "n={n} k={k}");
        }
    }

    #[test]
    fn verification_rejects_a_corrupted_lift() {
        let problem = canonical_problem(1, 1, &limits()).unwrap();
        let mut result = find_lift(&problem).unwrap();
        // Reassign one lifted point into a different word spiral.
        let mut assignment = result.rho.assignment().clone();
        let (key, value) = assignment.iter().next().map(|(k, v)| (k.clone(), v.clone())).unwrap();
        let other_word = if value.word() == &Word::from_letters([Letter::L1, Letter::L1]) {
            Word::from_letters([Letter::L1, Letter::L2])
        } else {
            Word::from_letters([Letter::L1, Letter::L1])
        };
        let corrupted = LevelPoint::new(other_word, value.point().clone()).unwrap();
        assignment.insert(key, corrupted);
        result.rho = FiniteMap::new(assignment, result.rho.codomain().clone()).unwrap();
        assert!(!verify_lift(&problem, &result));
    }

    #[test]
    fn trivial_climb_returns_the_assignment() {
        let problem = canonical_problem(1, 0, &limits()).unwrap();
        let result = find_lift(&problem).unwrap();
        assert_eq!(result.rho(), problem.model().assignment());
        assert!(verify_lift(&problem, &result));
    }

    #[test]
    fn iterated_lifts_compose_back_to_the_base() {
        // Lift the canonical level-0 problem one step, re-seat the result
        // as a problem over level 1, lift again, and check the composite
        // connecting map recovers the original assignment through both
        // duplication records.
        let base = canonical_problem(0, 1, &limits()).unwrap();
        let first = find_lift(&base).unwrap();

        let level1 = build_level(1, &limits()).unwrap();
        let model1 = SpiralModel::new(
            first.expanded_model().spirals().to_vec(),
            first.rho().clone(),
            level1.relation().clone(),
        )
        .unwrap();
        let problem1 = prepare_problem(model1, 1, 1, limits()).unwrap();
        let second = find_lift(&problem1).unwrap();
        assert!(verify_lift(&problem1, &second));

        for spiral in second.expanded_model().spirals() {
            let mid_id = second.collapse(spiral.id);
            let base_id = first.collapse(mid_id);
            for p in spiral.spiral.points() {
                if problem1.model().spiral(mid_id).is_none() {
                    continue;
                }
                let lifted = second.rho().apply(&(spiral.id, p.clone())).unwrap();
                // Down two steps: W_2 -> W_1 -> W_0.
                let down = xi_level_point(lifted, 0);
                if let Some(original) = base.model().assignment().apply(&(base_id, p.clone())) {
                    assert_eq!(&down, original);
                }
            }
        }
    }
}
