//! Command line surface for the spiral tower library: generation, graph
//! export, verification suites, relation representation, lifting, and the
//! block-permutation group demos.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage or
//! input errors. All output is deterministic for a fixed invocation.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spiraltower::export::{level_dot, spiral_dot, word_spiral_dot};
use spiraltower::formats::{
    parse_level_model, parse_relation, render_level_model, render_lift, render_model,
};
use spiraltower::lifting::{
    canonical_problem, describe_lift, find_lift, prepare_problem, verify_lift, LiftProblem,
};
use spiraltower::relations::image_under;
use spiraltower::representation::represent_relation;
use spiraltower::rohlin::{
    all_permutations_of, conjugate, contains_copy, in_neighborhood, transitive_candidate,
    witness_pair, FinitePermutation, JStructure, Point,
};
use spiraltower::sampling::random_surjective_relation;
use spiraltower::spirals::{
    build_finite_spiral, classify, collapse_end, end_cycle_points, spiral_projection, End,
    FiniteSpiral,
};
use spiraltower::tower::{
    all_words, build_level, piece_preimage_spirals, step_map, Piece, PieceKind, TowerLimits, Word,
};

#[derive(Parser)]
#[command(name = "spiraltower")]
#[command(about = "Finite spirals, inverse systems, relation representation and lifting")]
#[command(version)]
struct Cli {
    /// Deepest spiral level any operation may touch
    #[arg(long, global = true, default_value_t = 6)]
    level_cap: usize,

    /// Deepest tower level that may be fully materialized
    #[arg(long, global = true, default_value_t = 5)]
    materialization_cap: usize,

    /// Deepest block index scanned when searching for permutation copies
    #[arg(long, global = true, default_value_t = 30)]
    scan_bound: usize,

    /// Base seed for the randomized suites
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// DOT digraph
    GraphText,
    /// JSON document
    StructuredText,
    /// Plain text table
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Render a finite spiral
    Spiral {
        #[arg(long)]
        level: usize,
        #[arg(long, value_enum, default_value = "graph-text")]
        format: Format,
    },
    /// Render a tower level, or a single word's spiral within it
    Level {
        #[arg(long)]
        n: usize,
        /// Restrict to one word's spiral, e.g. "M1.L2"
        #[arg(long)]
        word: Option<String>,
        #[arg(long, value_enum, default_value = "graph-text")]
        format: Format,
    },
    /// Count the deeper spirals mapping onto each piece of a level
    Pieces {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// Run a verification suite
    Verify { suite: String },
    /// Represent a relation by a disjoint union of finite spirals
    Represent(RepresentArgs),
    /// Lift a model of a tower level through the connecting maps
    Lift {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Model file whose targets are level points of level n
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Synthesize missing end spirals and deepen sources first
        #[arg(long)]
        prepare: bool,
    },
    /// Block-structured permutation group demos
    Rohlin {
        #[command(subcommand)]
        command: RohlinCommand,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct RepresentSource {
    /// Relation file to represent
    #[arg(long)]
    input: Option<PathBuf>,
    /// Represent the relation of tower level N instead of a file
    #[arg(long)]
    level: Option<usize>,
}

#[derive(Args)]
struct RepresentArgs {
    #[command(flatten)]
    source: RepresentSource,
    /// Where to write the model file
    #[arg(long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum RohlinCommand {
    /// Produce and check conjugacy witnesses for two one-line permutations
    Witness {
        /// Depth of the initial segment both permutations act on
        #[arg(long)]
        n: usize,
        /// First permutation in cycle notation, e.g. "(1 2)(3 4 5)"
        #[arg(long)]
        pi1: String,
        #[arg(long)]
        pi2: String,
    },
    /// Sweep the transitive candidate's copies of every small permutation
    Candidate {
        /// Check every permutation of J^m for all m up to this depth
        #[arg(long)]
        check_upto: usize,
    },
}

/// Failures are split by exit code: bad input versus a verification that
/// ran and failed.
enum Failure {
    Input(String),
    Verification(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let limits = TowerLimits {
        level_cap: cli.level_cap,
        materialization_cap: cli.materialization_cap,
    };
    limits.validate()?;
    match cli.command {
        Command::Spiral { level, format } => cmd_spiral(level, format, &limits),
        Command::Level { n, word, format } => cmd_level(n, word, format, &limits),
        Command::Pieces { n, k } => cmd_pieces(n, k, &limits),
        Command::Verify { suite } => cmd_verify(&suite, &limits, cli.seed, cli.scan_bound),
        Command::Represent(args) => cmd_represent(args, &limits),
        Command::Lift {
            n,
            k,
            model,
            out,
            prepare,
        } => cmd_lift(n, k, &model, &out, prepare, &limits),
        Command::Rohlin { command } => match command {
            RohlinCommand::Witness { n, pi1, pi2 } => cmd_witness(n, &pi1, &pi2),
            RohlinCommand::Candidate { check_upto } => cmd_candidate(check_upto, cli.scan_bound),
        },
    }
}

fn spiral_table(spiral: &FiniteSpiral) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:<10} successors", "point", "class");
    for p in spiral.points() {
        let succ: Vec<String> = spiral
            .relation()
            .edges()
            .iter()
            .filter(|(a, _)| a == p)
            .map(|(_, b)| b.to_string())
            .collect();
        let _ = writeln!(out, "{:<12} {:<10} {}", p.to_string(), classify(p).to_string(), succ.join(" "));
    }
    out
}

fn spiral_json(spiral: &FiniteSpiral) -> String {
    let points: Vec<serde_json::Value> = spiral
        .points()
        .iter()
        .map(|p| {
            serde_json::json!({
                "label": p.to_string(),
                "class": classify(p).to_string(),
            })
        })
        .collect();
    let edges: Vec<serde_json::Value> = spiral
        .relation()
        .edges()
        .iter()
        .map(|(a, b)| serde_json::json!([a.to_string(), b.to_string()]))
        .collect();
    let doc = serde_json::json!({
        "level": spiral.level(),
        "points": points,
        "edges": edges,
    });
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

fn cmd_spiral(level: usize, format: Format, limits: &TowerLimits) -> Result<(), Failure> {
    let spiral = build_finite_spiral(level, limits.level_cap)?;
    let rendered = match format {
        Format::GraphText => spiral_dot(&spiral),
        Format::StructuredText => spiral_json(&spiral),
        Format::Table => spiral_table(&spiral),
    };
    print!("{rendered}");
    Ok(())
}

fn cmd_level(
    n: usize,
    word: Option<String>,
    format: Format,
    limits: &TowerLimits,
) -> Result<(), Failure> {
    if let Some(word) = word {
        let word = Word::parse(&word)?;
        if word.len() != n {
            return Err(Failure::Input(format!(
                "word {word} does not have length {n}"
            )));
        }
        let spiral = build_finite_spiral(n, limits.level_cap)?;
        let rendered = match format {
            Format::GraphText => word_spiral_dot(&word, &spiral),
            Format::StructuredText => spiral_json(&spiral),
            Format::Table => spiral_table(&spiral),
        };
        print!("{rendered}");
        return Ok(());
    }
    let level = build_level(n, limits)?;
    match format {
        Format::GraphText => print!("{}", level_dot(&level)),
        Format::StructuredText | Format::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "level {n}: {} points, {} edges", level.points().len(), level.relation().edges().len());
            print!("{out}");
        }
    }
    Ok(())
}

fn cmd_pieces(n: usize, k: usize, limits: &TowerLimits) -> Result<(), Failure> {
    if k == 0 {
        return Err(Failure::Input("k must be at least 1".into()));
    }
    println!("{:<24} preimage spirals", "piece");
    for word in all_words(n) {
        for kind in PieceKind::ALL {
            let piece = Piece {
                word: word.clone(),
                kind,
            };
            let count = piece_preimage_spirals(n, k, &piece, limits)?.len();
            println!("{:<24} {count}", piece.to_string());
        }
    }
    Ok(())
}

struct CheckRow {
    name: String,
    cases: usize,
    passed: bool,
}

fn print_report(rows: &[CheckRow]) -> Result<(), Failure> {
    println!("{:<58} {:>8} verdict", "check", "cases");
    let mut ok = true;
    for row in rows {
        println!(
            "{:<58} {:>8} {}",
            row.name,
            row.cases,
            if row.passed { "pass" } else { "FAIL" }
        );
        ok &= row.passed;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification("some checks failed".into()))
    }
}

fn cmd_verify(
    suite: &str,
    limits: &TowerLimits,
    seed: u64,
    scan_bound: usize,
) -> Result<(), Failure> {
    let rows = match suite {
        "tower-exactness" => verify_tower_exactness(limits)?,
        "piece-counts" => verify_piece_counts(limits)?,
        "lemma12" => verify_lemma12(limits)?,
        "representation" => verify_representation(seed)?,
        "lifting" => verify_lifting(limits)?,
        "rohlin" => verify_rohlin(scan_bound)?,
        other => {
            return Err(Failure::Input(format!(
                "unknown suite {other:?}; expected one of tower-exactness, piece-counts, \
                 lemma12, representation, lifting, rohlin"
            )))
        }
    };
    print_report(&rows)
}

fn verify_tower_exactness(limits: &TowerLimits) -> Result<Vec<CheckRow>, Failure> {
    let mut rows = Vec::new();
    let top = limits.materialization_cap.min(5);
    for n in 0..top {
        let step = step_map(n, limits)?;
        let upper = build_level(n + 1, limits)?;
        let lower = build_level(n, limits)?;
        let image = image_under(&step, upper.relation())?;
        rows.push(CheckRow {
            name: format!("image of level-{} relation equals level-{n} relation", n + 1),
            cases: upper.relation().edges().len(),
            passed: image.edges() == lower.relation().edges(),
        });
    }
    Ok(rows)
}

fn verify_piece_counts(limits: &TowerLimits) -> Result<Vec<CheckRow>, Failure> {
    let mut rows = Vec::new();
    for n in 0..=3usize.min(limits.level_cap) {
        for k in 1..=3usize {
            if n + k > limits.level_cap {
                continue;
            }
            let full_expect = 2usize.pow(k as u32);
            let end_expect = (6usize.pow(k as u32) - full_expect) / 2;
            let mut cases = 0;
            let mut passed = true;
            for word in all_words(n) {
                for kind in PieceKind::ALL {
                    let piece = Piece {
                        word: word.clone(),
                        kind,
                    };
                    let count = piece_preimage_spirals(n, k, &piece, limits)?.len();
                    let expect = match kind {
                        PieceKind::Full => full_expect,
                        _ => end_expect,
                    };
                    cases += 1;
                    passed &= count == expect;
                }
            }
            let label = if k == 1 {
                format!("one-step extensions split 2/2/2 at level {n}")
            } else {
                format!("census 2^k and (6^k-2^k)/2 at level {n}, climb {k}")
            };
            rows.push(CheckRow {
                name: label,
                cases,
                passed,
            });
        }
    }
    Ok(rows)
}

fn verify_lemma12(limits: &TowerLimits) -> Result<Vec<CheckRow>, Failure> {
    let mut rows = Vec::new();
    let top = limits.level_cap.min(5);
    let mut cases = 0;
    let mut passed = true;
    for n in 1..top {
        for m in (n + 1)..=top {
            let proj = spiral_projection(m, n)?;
            let target = build_finite_spiral(n, limits.level_cap)?;
            for q in target.points().iter().filter(|q| q.is_wandering()) {
                let pre: Vec<_> = proj
                    .assignment()
                    .iter()
                    .filter(|(_, img)| *img == q)
                    .collect();
                cases += 1;
                passed &= pre.len() == 1 && pre[0].0.is_wandering();
            }
        }
    }
    rows.push(CheckRow {
        name: "wandering points have unique wandering preimages".into(),
        cases,
        passed,
    });
    let mut cases = 0;
    let mut passed = true;
    for n in 1..=2usize {
        for m in (2 * n)..=top {
            for side in [End::Minus, End::Plus] {
                let collapse = collapse_end(m, n, side)?;
                for q in end_cycle_points(n, side) {
                    cases += 1;
                    passed &= collapse
                        .assignment()
                        .iter()
                        .any(|(src, img)| *img == q && src.is_wandering());
                }
            }
        }
    }
    rows.push(CheckRow {
        name: "cycle points have wandering preimages under end collapses".into(),
        cases,
        passed,
    });
    Ok(rows)
}

fn verify_representation(seed: u64) -> Result<Vec<CheckRow>, Failure> {
    let mut passed = true;
    for s in seed..seed + 100 {
        let relation = random_surjective_relation(s, 8);
        let model = represent_relation(&relation);
        passed &= model.image_is_exact();
    }
    Ok(vec![CheckRow {
        name: format!("representation is exact on 100 seeded relations (base {seed})"),
        cases: 100,
        passed,
    }])
}

fn verify_lifting(limits: &TowerLimits) -> Result<Vec<CheckRow>, Failure> {
    let mut rows = Vec::new();
    for n in 0..=2usize {
        for k in 0..=2usize {
            if n + k > limits.materialization_cap {
                continue;
            }
            let problem = canonical_problem(n, k, limits)?;
            let result = find_lift(&problem)?;
            rows.push(CheckRow {
                name: format!("canonical lift n={n} k={k} ({})", describe_lift(&result)),
                cases: result.rho().assignment().len(),
                passed: verify_lift(&problem, &result),
            });
            let level = build_level(n, limits)?;
            let model = represent_relation(level.relation());
            let problem = prepare_problem(model, n, k, *limits)?;
            let result = find_lift(&problem)?;
            rows.push(CheckRow {
                name: format!("represented lift n={n} k={k} ({})", describe_lift(&result)),
                cases: result.rho().assignment().len(),
                passed: verify_lift(&problem, &result),
            });
        }
    }
    Ok(rows)
}

fn verify_rohlin(scan_bound: usize) -> Result<Vec<CheckRow>, Failure> {
    let structure = JStructure::canonical();
    let mut rows = Vec::new();
    for n in [1usize, 2] {
        let ground: Vec<Point> = structure.initial_segment(n)?;
        let perms = all_permutations_of(&ground);
        let mut passed = true;
        for pi1 in &perms {
            for pi2 in &perms {
                passed &= witness_pair(&structure, pi1, pi2).is_ok();
            }
        }
        rows.push(CheckRow {
            name: format!("conjugacy witnesses for all ordered pairs over J^{n}"),
            cases: perms.len() * perms.len(),
            passed,
        });
    }
    let candidate = transitive_candidate(&structure)?;
    for n in [1usize, 2] {
        let ground: Vec<Point> = structure.initial_segment(n)?;
        let perms = all_permutations_of(&ground);
        let mut passed = true;
        for pi in &perms {
            match contains_copy(&candidate, pi, scan_bound) {
                Some(beta) => {
                    for x in &ground {
                        passed &= beta[&pi.apply(*x).unwrap()] == candidate.apply(beta[x])?;
                    }
                }
                None => passed = false,
            }
        }
        rows.push(CheckRow {
            name: format!("transitive candidate contains every permutation of J^{n}"),
            cases: perms.len(),
            passed,
        });
    }
    Ok(rows)
}

fn cmd_represent(args: RepresentArgs, limits: &TowerLimits) -> Result<(), Failure> {
    match (args.source.input, args.source.level) {
        (Some(input), None) => {
            let text = fs::read_to_string(&input)
                .map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
            let relation = parse_relation(&text)?;
            let model = represent_relation(&relation);
            fs::write(&args.output, render_model(&model))
                .map_err(|e| Failure::Input(format!("{}: {e}", args.output.display())))?;
            report_model_exactness(model.image_is_exact(), model.spirals().len())
        }
        (None, Some(n)) => {
            let level = build_level(n, limits)?;
            let model = represent_relation(level.relation());
            fs::write(&args.output, render_level_model(&model))
                .map_err(|e| Failure::Input(format!("{}: {e}", args.output.display())))?;
            report_model_exactness(model.image_is_exact(), model.spirals().len())
        }
        _ => unreachable!("clap enforces exactly one source"),
    }
}

fn report_model_exactness(exact: bool, spirals: usize) -> Result<(), Failure> {
    if exact {
        println!("model with {spirals} spirals: image is exact");
        Ok(())
    } else {
        println!("model with {spirals} spirals: image is NOT exact");
        Err(Failure::Verification("model image differs from target".into()))
    }
}

fn cmd_lift(
    n: usize,
    k: usize,
    model_path: &PathBuf,
    out: &PathBuf,
    prepare: bool,
    limits: &TowerLimits,
) -> Result<(), Failure> {
    let text = fs::read_to_string(model_path)
        .map_err(|e| Failure::Input(format!("{}: {e}", model_path.display())))?;
    let level = build_level(n, limits)?;
    let model = parse_level_model(&text, level.relation())?;
    let problem = if prepare {
        prepare_problem(model, n, k, *limits)
    } else {
        LiftProblem::new(model, n, k, *limits)
    }
    .map_err(|e| Failure::Verification(e.to_string()))?;
    let result = find_lift(&problem).map_err(|e| Failure::Verification(e.to_string()))?;
    let verdict = verify_lift(&problem, &result);
    fs::write(out, render_lift(n, k, &result))
        .map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
    if verdict {
        println!("lift verified: {}", describe_lift(&result));
        Ok(())
    } else {
        println!("lift FAILED verification");
        Err(Failure::Verification("lift verification failed".into()))
    }
}

fn cmd_witness(n: usize, pi1: &str, pi2: &str) -> Result<(), Failure> {
    let structure = JStructure::canonical();
    let ground: Vec<Point> = structure.initial_segment(n)?;
    let pi1 = FinitePermutation::parse_cycles(pi1, ground.clone())?;
    let pi2 = FinitePermutation::parse_cycles(pi2, ground)?;
    let (a, b) = witness_pair(&structure, &pi1, &pi2)
        .map_err(|e| Failure::Verification(e.to_string()))?;
    let conj = conjugate(&b, &a).map_err(|e| Failure::Verification(e.to_string()))?;
    println!("pi1 = {pi1}");
    println!("pi2 = {pi2}");
    println!("a   = {a}");
    println!("b   = {b}");
    println!("bab' = {conj}");
    let ok = in_neighborhood(&a, &pi1) && in_neighborhood(&conj, &pi2);
    if ok {
        println!("verified: a restricts to pi1 and the conjugate restricts to pi2");
        Ok(())
    } else {
        println!("verification FAILED");
        Err(Failure::Verification("witness verification failed".into()))
    }
}

fn cmd_candidate(check_upto: usize, scan_bound: usize) -> Result<(), Failure> {
    let structure = JStructure::canonical();
    let candidate = transitive_candidate(&structure)?;
    println!("{:<10} {:>12} verdict", "segment", "permutations");
    let mut all_ok = true;
    for m in 1..=check_upto {
        let size = structure.cumulative(m)?;
        if size > 8 {
            return Err(Failure::Input(format!(
                "J^{m} has {size} points; enumerating its permutations is infeasible \
                 (limit is 8)"
            )));
        }
        let ground: Vec<Point> = structure.initial_segment(m)?;
        let perms = all_permutations_of(&ground);
        let mut ok = true;
        for pi in &perms {
            match contains_copy(&candidate, pi, scan_bound) {
                Some(beta) => {
                    for x in &ground {
                        ok &= beta[&pi.apply(*x).unwrap()] == candidate.apply(beta[x])?;
                    }
                }
                None => ok = false,
            }
        }
        println!(
            "J^{:<8} {:>12} {}",
            m,
            perms.len(),
            if ok { "pass" } else { "FAIL" }
        );
        all_ok &= ok;
    }
    if all_ok {
        Ok(())
    } else {
        Err(Failure::Verification(
            "candidate is missing a copy of some permutation".into(),
        ))
    }
}
