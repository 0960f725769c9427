//! The JSON file formats used across the command line tools.
//!
//! Relation files carry `vertices` (strings) and `edges` (pairs of
//! strings). Model files list spirals as `(id, level)` records plus the
//! assignment as `(spiral id, point label, target vertex)` triples. Lift
//! files record the duplication and the lifted assignment as
//! `(spiral id, point label, word, point label)` rows. All output is
//! sorted, so rendering is deterministic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lifting::LiftResult;
use crate::relations::{FiniteMap, Label, RelationError, SurjectiveRelation};
use crate::representation::{ModelSpiral, RepresentationError, SpiralId, SpiralModel};
use crate::spirals::{build_finite_spiral, End, SpiralError, SpiralPoint};
use crate::tower::{LevelPoint, TowerError, Word};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate vertex {0:?}")]
    DuplicateVertex(String),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Spiral(#[from] SpiralError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
    #[error("cannot parse point label {0:?}")]
    BadPointLabel(String),
    #[error("spiral {0} appears twice in the model file")]
    DuplicateSpiral(SpiralId),
    #[error("assignment row references unknown spiral {0}")]
    UnknownSpiral(SpiralId),
}

/// On-disk form of a surjective relation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationFile {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
}

/// Parse and validate a relation document. Duplicate vertices and edges
/// with unknown endpoints are rejected, as is any failure of surjectivity.
pub fn parse_relation(text: &str) -> Result<SurjectiveRelation<String>, FormatError> {
    let file: RelationFile = serde_json::from_str(text)?;
    let mut seen = std::collections::BTreeSet::new();
    for v in &file.vertices {
        if !seen.insert(v.clone()) {
            return Err(FormatError::DuplicateVertex(v.clone()));
        }
    }
    Ok(SurjectiveRelation::new(file.vertices, file.edges)?)
}

/// Render a relation as a sorted document.
pub fn render_relation(relation: &SurjectiveRelation<String>) -> String {
    let file = RelationFile {
        vertices: relation.vertices().iter().cloned().collect(),
        edges: relation.edges().iter().cloned().collect(),
    };
    serde_json::to_string_pretty(&file).expect("serializable") + "\n"
}

/// Parse a spiral point label: `O`, `W(x)`, or `P(+,t)` / `P(-,t)`, checked
/// against the level it is claimed to live on.
pub fn parse_spiral_point(label: &str, level: usize) -> Result<SpiralPoint, FormatError> {
    let bad = || FormatError::BadPointLabel(label.to_string());
    if label == "O" {
        if level != 0 {
            return Err(bad());
        }
        return Ok(SpiralPoint::origin());
    }
    if let Some(body) = label.strip_prefix("W(").and_then(|s| s.strip_suffix(')')) {
        let x: i64 = body.parse().map_err(|_| bad())?;
        return Ok(SpiralPoint::wandering(level, x)?);
    }
    if let Some(body) = label.strip_prefix("P(").and_then(|s| s.strip_suffix(')')) {
        let (side, value) = body.split_once(',').ok_or_else(bad)?;
        let end = match side {
            "+" => End::Plus,
            "-" => End::Minus,
            _ => return Err(bad()),
        };
        let value: i64 = value.parse().map_err(|_| bad())?;
        return Ok(SpiralPoint::periodic_from(level, end, value)?);
    }
    Err(bad())
}

/// Parse a level point label of the form `word:point`.
pub fn parse_level_point(label: &str) -> Result<LevelPoint, FormatError> {
    let (word, point) = label
        .split_once(':')
        .ok_or_else(|| FormatError::BadPointLabel(label.to_string()))?;
    let word = Word::parse(word)?;
    let point = parse_spiral_point(point, word.len())?;
    Ok(LevelPoint::new(word, point)?)
}

/// On-disk form of a spiral model: the spirals and the assignment; the
/// target relation is supplied by context when reading back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub spirals: Vec<ModelFileSpiral>,
    pub assignment: Vec<(SpiralId, String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFileSpiral {
    pub id: SpiralId,
    pub level: usize,
}

/// Render a model whose targets are plain strings.
pub fn render_model(model: &SpiralModel<String>) -> String {
    render_model_with(model, |v| v.clone())
}

/// Render a model whose targets are level points.
pub fn render_level_model(model: &SpiralModel<LevelPoint>) -> String {
    render_model_with(model, |v| v.to_string())
}

fn render_model_with<V: Label>(model: &SpiralModel<V>, show: impl Fn(&V) -> String) -> String {
    let spirals = model
        .spirals()
        .iter()
        .map(|s| ModelFileSpiral {
            id: s.id,
            level: s.spiral.level(),
        })
        .collect();
    let assignment = model
        .assignment()
        .assignment()
        .iter()
        .map(|((id, p), v)| (*id, p.to_string(), show(v)))
        .collect();
    let file = ModelFile {
        spirals,
        assignment,
    };
    serde_json::to_string_pretty(&file).expect("serializable") + "\n"
}

fn model_from_file<V: Label>(
    file: ModelFile,
    target: &SurjectiveRelation<V>,
    parse_target: impl Fn(&str) -> Result<V, FormatError>,
) -> Result<SpiralModel<V>, FormatError> {
    let mut levels: BTreeMap<SpiralId, usize> = BTreeMap::new();
    let mut spirals = Vec::with_capacity(file.spirals.len());
    for s in &file.spirals {
        if levels.insert(s.id, s.level).is_some() {
            return Err(FormatError::DuplicateSpiral(s.id));
        }
        spirals.push(ModelSpiral {
            id: s.id,
            spiral: build_finite_spiral(s.level, s.level)?,
        });
    }
    let mut assignment: BTreeMap<(SpiralId, SpiralPoint), V> = BTreeMap::new();
    for (id, point_label, target_label) in &file.assignment {
        let level = *levels.get(id).ok_or(FormatError::UnknownSpiral(*id))?;
        let point = parse_spiral_point(point_label, level)?;
        let value = parse_target(target_label)?;
        assignment.insert((*id, point), value);
    }
    let assignment = FiniteMap::new(assignment, target.vertices().clone())?;
    Ok(SpiralModel::new(spirals, assignment, target.clone())?)
}

/// Read a model back against a string-labeled target relation.
pub fn parse_model(
    text: &str,
    target: &SurjectiveRelation<String>,
) -> Result<SpiralModel<String>, FormatError> {
    let file: ModelFile = serde_json::from_str(text)?;
    model_from_file(file, target, |s| Ok(s.to_string()))
}

/// Read a model whose targets are level points, against a level relation.
pub fn parse_level_model(
    text: &str,
    target: &SurjectiveRelation<LevelPoint>,
) -> Result<SpiralModel<LevelPoint>, FormatError> {
    let file: ModelFile = serde_json::from_str(text)?;
    model_from_file(file, target, parse_level_point)
}

/// On-disk form of a lift: the duplication record and the lifted
/// assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftFile {
    pub n: usize,
    pub k: usize,
    pub duplication: Vec<(SpiralId, Vec<SpiralId>)>,
    pub rho: Vec<(SpiralId, String, String, String)>,
}

/// Render a lift result.
pub fn render_lift(n: usize, k: usize, result: &LiftResult) -> String {
    let duplication = result
        .duplication_record()
        .iter()
        .map(|(id, dups)| (*id, dups.clone()))
        .collect();
    let rho = result
        .rho()
        .assignment()
        .iter()
        .map(|((id, p), q)| {
            (
                *id,
                p.to_string(),
                q.word().to_string(),
                q.point().to_string(),
            )
        })
        .collect();
    let file = LiftFile {
        n,
        k,
        duplication,
        rho,
    };
    serde_json::to_string_pretty(&file).expect("serializable") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::represent_relation;
    use crate::tower::{build_level, Letter, TowerLimits};

    fn rel(vertices: &[&str], edges: &[(&str, &str)]) -> SurjectiveRelation<String> {
        SurjectiveRelation::new(
            vertices.iter().map(|s| s.to_string()),
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string())),
        )
        .unwrap()
    }

    #[test]
    fn relation_round_trip() {
        let r = rel(&["a", "b"], &[("a", "b"), ("b", "a"), ("b", "b")]);
        let text = render_relation(&r);
        let back = parse_relation(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(render_relation(&back), text);
    }

    #[test]
    fn duplicate_vertices_rejected() {
        let text = r#"{ "vertices": ["a", "a"], "edges": [["a", "a"]] }"#;
        assert!(matches!(
            parse_relation(text),
            Err(FormatError::DuplicateVertex(_))
        ));
    }

    #[test]
    fn dangling_edges_rejected() {
        let text = r#"{ "vertices": ["a"], "edges": [["a", "z"]] }"#;
        assert!(matches!(
            parse_relation(text),
            Err(FormatError::Relation(RelationError::UnknownVertex { .. }))
        ));
    }

    #[test]
    fn non_surjective_documents_rejected() {
        let text = r#"{ "vertices": ["a", "b"], "edges": [["a", "a"], ["a", "b"]] }"#;
        assert!(matches!(
            parse_relation(text),
            Err(FormatError::Relation(RelationError::NotSurjective { .. }))
        ));
    }

    #[test]
    fn point_labels_round_trip() {
        for (label, level) in [("W(-2)", 3), ("P(+,5)", 3), ("P(-,0)", 1), ("O", 0)] {
            let p = parse_spiral_point(label, level).unwrap();
            assert_eq!(p.to_string(), label);
        }
        assert!(parse_spiral_point("W(3)", 3).is_err());
        assert!(parse_spiral_point("Q(1)", 3).is_err());
        assert!(parse_spiral_point("O", 2).is_err());
    }

    #[test]
    fn level_point_labels_round_trip() {
        let word = Word::from_letters([Letter::M1, Letter::R2]);
        let lp = LevelPoint::new(word, crate::spirals::zero_point(2)).unwrap();
        let back = parse_level_point(&lp.to_string()).unwrap();
        assert_eq!(back, lp);
        assert!(parse_level_point("M1.R2").is_err());
        assert!(parse_level_point("M1:W(5)").is_err());
    }

    #[test]
    fn model_round_trip() {
        let r = rel(&["a", "b"], &[("a", "b"), ("b", "a"), ("b", "b")]);
        let model = represent_relation(&r);
        let text = render_model(&model);
        let back = parse_model(&text, &r).unwrap();
        assert_eq!(back, model);
        assert_eq!(render_model(&back), text);
    }

    #[test]
    fn level_model_round_trip() {
        let limits = TowerLimits::default();
        let level = build_level(1, &limits).unwrap();
        let model = represent_relation(level.relation());
        let text = render_level_model(&model);
        let back = parse_level_model(&text, level.relation()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn model_files_reject_unknown_spirals() {
        let r = rel(&["a"], &[("a", "a")]);
        let text = r#"{ "spirals": [{ "id": 0, "level": 1 }],
                       "assignment": [[5, "W(0)", "a"]] }"#;
        assert!(matches!(
            parse_model(text, &r),
            Err(FormatError::UnknownSpiral(5))
        ));
    }
}
