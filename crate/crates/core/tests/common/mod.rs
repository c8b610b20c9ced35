//! Fixtures and independent oracles shared by the integration suites.
#![allow(dead_code)]

use std::path::PathBuf;

use conjecture_core::chat::{BackendError, Completion};
use conjecture_core::checker::{Novelty, Syntax, Triviality, Verdict};
use conjecture_core::genpipe::{ConjectureCandidate, GeneratorBackend, PromptBundle};
use conjecture_core::lean_surface::ContextBlock;
use conjecture_core::looper::Record;
use conjecture_core::prover_harness::{AttemptMatrix, ProofAttempt};
use proptest::prelude::*;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn topology_seed() -> String {
    std::fs::read_to_string(fixture_path("topology_seed.lean")).expect("fixture present")
}

pub const TOPOLOGY_THEOREMS: [&str; 26] = [
    "semi_open_union",
    "open_set_is_alpha_open",
    "closure_pre_open_is_semi_open",
    "closure_subset_of_semi_open",
    "preopen_empty_set",
    "semi_open_empty",
    "interior_union_preopen",
    "interior_alpha_open_subset_alpha_open",
    "semi_open_interior_alpha_open",
    "pre_open_set_is_pre_open",
    "alpha_open_interior_closure",
    "alpha_open_empty_set",
    "interior_of_alpha_open_is_alpha_open",
    "finitary_preservation_of_semi_open",
    "semi_open_of_open",
    "semi_open_interior_subset_interior",
    "alpha_open_union",
    "closure_interior_subset_closure",
    "pre_open_closure_eq_closure",
    "closure_preopen_subset",
    "alpha_open_subset_open_closure",
    "interior_of_closure_is_pre_open",
    "pre_open_union",
    "preopen_closure_subset_interior_closure",
    "open_set_is_pre_open",
    "alpha_open_implies_semi_open",
];

pub const SINGLE_THEOREM_SEED: &str = "import Mathlib\nimport Aesop\n\nopen Set\n\n\
variable {X : Type*} [TopologicalSpace X]\n\n\
theorem inter_interior_subset (A B : Set X) (hA : IsOpen A) : interior A ∩ B ⊆ closure (A ∪ B) := by\n  sorry\n";

// ---------------------------------------------------------------------------
// Statement oracle

/// The three statement invariants, checked textually.
pub fn statement_invariants(s: &str) -> Result<(), String> {
    let first = s.split_whitespace().next().unwrap_or("");
    if first != "theorem" {
        return Err(format!("does not start with theorem: {s:?}"));
    }
    if s.contains("@[") {
        return Err(format!("attribute left: {s:?}"));
    }
    for m in ["protected", "private", "noncomputable", "nonrec"] {
        if s.starts_with(m) {
            return Err(format!("modifier left: {s:?}"));
        }
    }
    if !s.ends_with(":= by") {
        return Err(format!("does not end in := by: {s:?}"));
    }
    Ok(())
}

/// `\uXXXX` spelling of every non-ASCII character.
pub fn escape_non_ascii(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii() {
            out.push(c);
        } else {
            let mut buf = [0u16; 2];
            for unit in c.encode_utf16(&mut buf) {
                out.push_str(&format!("\\u{unit:04X}"));
            }
        }
    }
    out
}

/// How a bare statement may be dressed up by a generator.
#[derive(Debug, Clone)]
pub struct Decoration {
    pub doc: bool,
    pub attribute: Option<&'static str>,
    pub modifier: Option<&'static str>,
    pub lemma: bool,
    pub escape: bool,
    pub proof: Option<&'static str>,
    pub fence: Option<&'static str>,
}

pub fn decorate(name: &str, signature: &str, d: &Decoration) -> String {
    let keyword = if d.lemma { "lemma" } else { "theorem" };
    let sig = if d.escape { escape_non_ascii(signature) } else { signature.to_owned() };
    let mut s = String::new();
    if d.doc {
        s.push_str("/-- A variant. -/\n");
    }
    if let Some(a) = d.attribute {
        s.push_str(a);
        s.push(' ');
    }
    if let Some(m) = d.modifier {
        s.push_str(m);
        s.push(' ');
    }
    s.push_str(&format!("{keyword} {name} {sig} := by"));
    if let Some(p) = d.proof {
        s.push_str(p);
    }
    match d.fence {
        Some(tag) => format!("```{tag}\n{s}\n```"),
        None => s,
    }
}

pub const SIGNATURES: [&str; 6] = [
    "(A B : Set X) : interior A ∩ B ⊆ closure B",
    "{A : Set X} (h : IsOpen A) : A ⊆ interior A",
    ": ∀ n : ℕ, n ≤ n + 1",
    "(a : ℕ := 2) (b : ℕ) : a + b = b + a",
    "(f : X → X) (s : Set X) : f '' (s ∪ s) = f '' s",
    "{𝕜 : Type*} [NontriviallyNormedField 𝕜] (x : 𝕜) : ‖x‖ = ‖x‖",
];

pub fn decoration_strategy() -> impl Strategy<Value = Decoration> {
    (
        any::<bool>(),
        prop::option::of(prop::sample::select(vec!["@[simp]", "@[simp, norm_cast]", "@[to_additive (attr := simp)]"])),
        prop::option::of(prop::sample::select(vec!["protected", "private", "noncomputable", "nonrec"])),
        any::<bool>(),
        any::<bool>(),
        prop::option::of(prop::sample::select(vec![
            " rfl",
            "\n  sorry",
            "\n  have h : True := by trivial\n  exact h",
            "\n  simp [foo] <;> aesop",
        ])),
        prop::option::of(prop::sample::select(vec!["lean", "lean4", ""])),
    )
        .prop_map(|(doc, attribute, modifier, lemma, escape, proof, fence)| Decoration {
            doc,
            attribute,
            modifier,
            lemma,
            escape,
            proof,
            fence,
        })
}

// ---------------------------------------------------------------------------
// Lattice oracle

/// What the scripted checker answers for one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Canned {
    Text(String),
    Timeout,
    Crash,
}

fn error_lines(text: &str) -> usize {
    text.lines().filter(|l| l.contains(": error:") || l.starts_with("error:")).count()
}

/// Re-derives a verdict from the canned outputs by line inspection alone.
pub fn oracle_verdict(sorry: &Canned, exact: &Canned, aesop: &Canned) -> (Syntax, Option<Novelty>, Option<Triviality>) {
    let valid = match sorry {
        Canned::Text(t) => {
            let warnings: Vec<&str> =
                t.lines().filter(|l| l.contains(": warning:") && !l.contains("unused variable")).collect();
            error_lines(t) == 0 && warnings.len() == 1 && warnings[0].contains("declaration uses 'sorry'")
        }
        _ => false,
    };
    if !valid {
        return (Syntax::Invalid, None, None);
    }
    let known = match exact {
        Canned::Text(t) => error_lines(t) == 0 && t.contains("Try this:"),
        Canned::Timeout => false,
        Canned::Crash => true,
    };
    if known {
        return (Syntax::Valid, Some(Novelty::Known), None);
    }
    let trivial = match aesop {
        Canned::Text(t) => error_lines(t) == 0 && !t.contains("declaration uses 'sorry'"),
        _ => false,
    };
    let tri = if trivial { Triviality::Trivial } else { Triviality::NonTrivial };
    (Syntax::Valid, Some(Novelty::Novel), Some(tri))
}

pub fn verdict_triple(v: &Verdict) -> (Syntax, Option<Novelty>, Option<Triviality>) {
    (v.syntax, v.novelty, v.triviality)
}

// ---------------------------------------------------------------------------
// Records and matrices

fn verdict_at(stage: u8) -> Verdict {
    Verdict {
        syntax: if stage >= 1 { Syntax::Valid } else { Syntax::Invalid },
        novelty: match stage {
            0 => None,
            1 => Some(Novelty::Known),
            _ => Some(Novelty::Novel),
        },
        triviality: match stage {
            0 | 1 => None,
            2 => Some(Triviality::Trivial),
            _ => Some(Triviality::NonTrivial),
        },
        diagnostics: Vec::new(),
        witness: None,
        notes: Vec::new(),
    }
}

/// A record reaching `stage`: 0 invalid, 1 known, 2 trivial, 3 non-trivial.
pub fn record_at(seed: &str, index: usize, stage: u8) -> Record {
    let candidate = ConjectureCandidate::new(
        seed,
        1,
        index,
        format!("theorem c{index} : {index} = {index} := by"),
        String::new(),
        &ContextBlock::default(),
    );
    Record { candidate, verdict: verdict_at(stage) }
}

/// Records over `seeds` seeds whose stage counts are exactly the given
/// totals, spread as evenly as possible.
pub fn synthetic_records(seeds: usize, total: usize, valid: usize, novel: usize, non_trivial: usize) -> Vec<Record> {
    let stages: Vec<u8> = std::iter::repeat_n(0u8, total - valid)
        .chain(std::iter::repeat_n(1, valid - novel))
        .chain(std::iter::repeat_n(2, novel - non_trivial))
        .chain(std::iter::repeat_n(3, non_trivial))
        .collect();
    stages.iter().enumerate().map(|(i, &s)| record_at(&format!("seed{:02}", i % seeds), i, s)).collect()
}

/// Builds a matrix from a boolean grid.
pub fn matrix_from_grid(grid: &[Vec<bool>]) -> AttemptMatrix {
    let k = grid.first().map_or(1, |r| r.len()) as u32;
    let problems: Vec<String> = (0..grid.len()).map(|i| format!("p{i}")).collect();
    let cells = grid
        .iter()
        .enumerate()
        .flat_map(|(p, row)| {
            row.iter()
                .enumerate()
                .map(move |(s, &ok)| ProofAttempt::new(&format!("p{p}"), s as u32, String::new(), ok, None))
        })
        .collect();
    AttemptMatrix::from_cells(problems, k, cells).expect("dense grid")
}

/// (successes, attempts, solved rows, rows) by plain loops over the grid.
pub fn recount(grid: &[Vec<bool>]) -> (u64, u64, u64, u64) {
    let mut successes = 0;
    let mut attempts = 0;
    let mut solved = 0;
    for row in grid {
        let mut any = false;
        for &cell in row {
            attempts += 1;
            if cell {
                successes += 1;
                any = true;
            }
        }
        if any {
            solved += 1;
        }
    }
    (successes, attempts, solved, grid.len() as u64)
}

// ---------------------------------------------------------------------------
// Generators

/// Each call repeats every earlier answer, renamed and re-spaced, and adds
/// one new statement.
pub struct RepetitiveGenerator {
    calls: std::sync::atomic::AtomicUsize,
}

impl RepetitiveGenerator {
    pub fn new() -> Self {
        RepetitiveGenerator { calls: std::sync::atomic::AtomicUsize::new(0) }
    }
}

impl GeneratorBackend for RepetitiveGenerator {
    fn id(&self) -> String {
        "repetitive".into()
    }

    fn complete(&self, _prompt: &PromptBundle) -> Result<Completion, BackendError> {
        let n = self.calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        let mut text = String::new();
        for i in 0..=n {
            text.push_str(&format!(
                "```lean\ntheorem fresh_{n}_{i} (x : ℕ) :  x + {i} = {i} + x := by\n  omega\n```\n"
            ));
            text.push_str(&format!("```lean\ntheorem again_{n}_{i} (x : ℕ) : x + {i}   = {i} + x := by\n```\n"));
        }
        Ok(Completion { text, usage: None })
    }
}
