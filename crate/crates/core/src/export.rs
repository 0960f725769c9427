//! DOT graph output for spirals and tower levels.
//!
//! Nodes are labeled `W(x)`, `P(+,t)`, `P(-,t)` (and `O` for the level-0
//! point); level points carry their word as `word:point`. Output is sorted,
//! so identical inputs render byte-identical documents.

use std::fmt::Write as _;

use crate::spirals::{classify, FiniteSpiral, SpiralClass};
use crate::tower::{SystemLevel, Word};

fn class_attr(class: SpiralClass) -> &'static str {
    match class {
        SpiralClass::Recurrent => "recurrent",
        SpiralClass::Wandering => "wandering",
    }
}

/// A finite spiral as a DOT digraph, nodes annotated with their
/// classification.
pub fn spiral_dot(spiral: &FiniteSpiral) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph spiral_{} {{", spiral.level());
    for p in spiral.points() {
        let _ = writeln!(out, "  \"{}\" [class=\"{}\"];", p, class_attr(classify(p)));
    }
    for (a, b) in spiral.relation().edges() {
        let _ = writeln!(out, "  \"{a}\" -> \"{b}\";");
    }
    out.push_str("}\n");
    out
}

/// One word's copy of a spiral, nodes tagged with the word.
pub fn word_spiral_dot(word: &Word, spiral: &FiniteSpiral) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph word_spiral {{");
    for p in spiral.points() {
        let _ = writeln!(
            out,
            "  \"{word}:{p}\" [class=\"{}\"];",
            class_attr(classify(p))
        );
    }
    for (a, b) in spiral.relation().edges() {
        let _ = writeln!(out, "  \"{word}:{a}\" -> \"{word}:{b}\";");
    }
    out.push_str("}\n");
    out
}

/// A whole tower level as a DOT digraph.
pub fn level_dot(level: &SystemLevel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph level_{} {{", level.level());
    for p in level.points() {
        let _ = writeln!(
            out,
            "  \"{p}\" [class=\"{}\"];",
            class_attr(classify(p.point()))
        );
    }
    for (a, b) in level.relation().edges() {
        let _ = writeln!(out, "  \"{a}\" -> \"{b}\";");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spirals::build_finite_spiral;
    use crate::tower::{build_level, TowerLimits};

    #[test]
    fn level_one_spiral_renders_exactly() {
        let spiral = build_finite_spiral(1, 6).unwrap();
        let dot = spiral_dot(&spiral);
        let expected = "digraph spiral_1 {\n\
            \x20 \"W(0)\" [class=\"wandering\"];\n\
            \x20 \"P(-,0)\" [class=\"recurrent\"];\n\
            \x20 \"P(+,0)\" [class=\"recurrent\"];\n\
            \x20 \"W(0)\" -> \"P(+,0)\";\n\
            \x20 \"P(-,0)\" -> \"W(0)\";\n\
            \x20 \"P(-,0)\" -> \"P(-,0)\";\n\
            \x20 \"P(+,0)\" -> \"P(+,0)\";\n\
            }\n";
        assert_eq!(dot, expected);
    }

    #[test]
    fn rendering_is_deterministic_and_balanced() {
        let level = build_level(1, &TowerLimits::default()).unwrap();
        let a = level_dot(&level);
        let b = level_dot(&level);
        assert_eq!(a, b);
        assert_eq!(a.matches('{').count(), 1);
        assert_eq!(a.matches('}').count(), 1);
        // One line per node and edge plus the braces.
        let lines = a.lines().count();
        assert_eq!(
            lines,
            level.points().len() + level.relation().edges().len() + 2
        );
    }
}
