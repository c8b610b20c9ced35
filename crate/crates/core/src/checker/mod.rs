//! Three-stage evaluation of candidates against a Lean checking backend.
//!
//! Stages short-circuit: novelty is only asked of syntactically valid
//! statements, triviality only of novel ones. Each stage fills the proof
//! slot of the candidate differently (`sorry`, `exact?`, `aesop`) and reads
//! the verdict off the checker's diagnostics.

mod diagnostics;
mod stub;
mod subprocess;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genpipe::{rename_statement, ConjectureCandidate};

pub use diagnostics::{parse_diagnostics, Diagnostic, Severity, SORRY_WARNING};
pub use stub::{canned, SlotKind, StubChecker, StubResponse, StubRule};
pub use subprocess::LeanSubprocess;

/// What goes after the statement's `:= by`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "text", rename_all = "snake_case")]
pub enum ProofSlot {
    Sorry,
    ExactSearch,
    Aesop,
    /// A full tactic proof, for verification.
    Tactic(String),
}

impl ProofSlot {
    pub fn kind(&self) -> SlotKind {
        match self {
            ProofSlot::Sorry => SlotKind::Sorry,
            ProofSlot::ExactSearch => SlotKind::ExactSearch,
            ProofSlot::Aesop => SlotKind::Aesop,
            ProofSlot::Tactic(_) => SlotKind::Tactic,
        }
    }

    fn text(&self) -> &str {
        match self {
            ProofSlot::Sorry => "sorry",
            ProofSlot::ExactSearch => "exact?",
            ProofSlot::Aesop => "aesop",
            ProofSlot::Tactic(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRequest {
    /// Source ending in the statement's `:= by`.
    pub assembled_source: String,
    /// The statement under test, as it appears at the end of the source.
    pub statement: String,
    pub proof_slot: ProofSlot,
    /// Prior conjectures replayed before the statement for in-context novelty.
    pub context_lemmas: Vec<String>,
    pub timeout: Duration,
}

impl CheckRequest {
    /// The file handed to Lean: the source with the proof slot filled in.
    pub fn render(&self) -> String {
        let mut out = self.assembled_source.clone();
        for line in self.proof_slot.text().lines() {
            out.push_str("\n  ");
            out.push_str(line);
        }
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum CheckerError {
    #[error("checker timed out after {0:?}")]
    Timeout(Duration),
    #[error("checker crashed: {0}")]
    Crash(String),
}

/// Something that can run Lean on a request and return its diagnostics text.
pub trait CheckerBackend: Send + Sync {
    fn id(&self) -> String;
    fn run(&self, req: &CheckRequest) -> Result<String, CheckerError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Syntax {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Novelty {
    Novel,
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Triviality {
    NonTrivial,
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Syntax,
    Novelty,
    Triviality,
    Verification,
}

/// A timeout or crash met while running a stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageNote {
    pub stage: Stage,
    pub error: CheckerError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub syntax: Syntax,
    pub novelty: Option<Novelty>,
    pub triviality: Option<Triviality>,
    /// Diagnostics of the syntax stage.
    pub diagnostics: Vec<Diagnostic>,
    /// The term `exact?` found, or `aesop` when aesop closed the goal.
    pub witness: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<StageNote>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.syntax == Syntax::Valid
    }

    pub fn is_novel(&self) -> bool {
        self.novelty == Some(Novelty::Novel)
    }

    pub fn is_non_trivial(&self) -> bool {
        self.triviality == Some(Triviality::NonTrivial)
    }

    /// Number of stages that produced a result.
    pub fn populated_stages(&self) -> usize {
        1 + usize::from(self.novelty.is_some()) + usize::from(self.triviality.is_some())
    }

    /// Checks the short-circuit shape and the syntax-diagnostics rule.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.novelty.is_some() != self.is_valid() {
            return Err("novelty must be present exactly when syntax is valid".into());
        }
        if self.triviality.is_some() != self.is_novel() {
            return Err("triviality must be present exactly when the statement is novel".into());
        }
        if self.is_valid() && syntax_verdict(&self.diagnostics) != Syntax::Valid {
            return Err("valid syntax requires a lone sorry warning and no errors".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Timeouts {
    pub syntax_secs: u64,
    pub exact_secs: u64,
    pub aesop_secs: u64,
}

impl Default for Timeouts {
    fn default() -> Self {
        Timeouts { syntax_secs: 120, exact_secs: 60, aesop_secs: 30 }
    }
}

impl Timeouts {
    pub fn syntax(&self) -> Duration {
        Duration::from_secs(self.syntax_secs.max(1))
    }
    pub fn exact(&self) -> Duration {
        Duration::from_secs(self.exact_secs.max(1))
    }
    pub fn aesop(&self) -> Duration {
        Duration::from_secs(self.aesop_secs.max(1))
    }
}

/// Outcome of a single stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageResult<T> {
    pub outcome: T,
    pub diagnostics: Vec<Diagnostic>,
    pub witness: Option<String>,
    pub note: Option<StageNote>,
}

/// Valid iff there are no errors and, ignoring unused-variable lint, exactly
/// one warning, which is the sorry warning. Info messages are ignored.
pub fn syntax_verdict(diags: &[Diagnostic]) -> Syntax {
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
    let warnings: Vec<_> =
        diags.iter().filter(|d| d.severity == Severity::Warning && !d.is_unused_variable()).collect();
    if errors == 0 && warnings.len() == 1 && warnings[0].is_sorry_warning() {
        Syntax::Valid
    } else {
        Syntax::Invalid
    }
}

fn request(
    candidate: &ConjectureCandidate,
    source: String,
    slot: ProofSlot,
    ctx: &[String],
    timeout: Duration,
) -> CheckRequest {
    CheckRequest {
        assembled_source: source,
        statement: candidate.statement.clone(),
        proof_slot: slot,
        context_lemmas: ctx.to_vec(),
        timeout,
    }
}

pub fn check_syntax(
    candidate: &ConjectureCandidate,
    backend: &dyn CheckerBackend,
    timeout: Duration,
) -> StageResult<Syntax> {
    let req = request(candidate, candidate.assembled_source.clone(), ProofSlot::Sorry, &[], timeout);
    match backend.run(&req) {
        Ok(raw) => {
            let diagnostics = parse_diagnostics(&raw);
            StageResult { outcome: syntax_verdict(&diagnostics), diagnostics, witness: None, note: None }
        }
        Err(error) => StageResult {
            outcome: Syntax::Invalid,
            diagnostics: vec![Diagnostic::new(Severity::Error, error.to_string())],
            witness: None,
            note: Some(StageNote { stage: Stage::Syntax, error }),
        },
    }
}

/// Name given to the `i`-th replayed conjecture in a novelty check.
pub fn context_lemma_name(i: usize) -> String {
    format!("conj_ctx_{i}")
}

/// Candidate source with every accumulated statement placed before it as a
/// `sorry`-proved theorem, so `exact?` can find them.
pub fn novelty_source(candidate: &ConjectureCandidate, accumulated: &[String]) -> String {
    let mut out = candidate.preamble().to_owned();
    for (i, stmt) in accumulated.iter().enumerate() {
        out.push_str(&rename_statement(stmt, &context_lemma_name(i)));
        out.push_str("\n  sorry\n\n");
    }
    out.push_str(&candidate.statement);
    out
}

fn try_this(diags: &[Diagnostic]) -> Option<String> {
    diags.iter().find_map(|d| {
        let at = d.message.find("Try this:")?;
        let rest = d.message[at + "Try this:".len()..].trim();
        Some(rest.lines().next().unwrap_or("").trim().to_owned())
    })
}

/// Known iff `exact?` reports a closing term without errors. A timeout
/// means the search was exhausted and counts as Novel; a crash leaves the
/// candidate Known so that it is not accumulated on an unverified basis.
pub fn check_novelty(
    candidate: &ConjectureCandidate,
    accumulated: &[String],
    backend: &dyn CheckerBackend,
    timeout: Duration,
) -> StageResult<Novelty> {
    let source = novelty_source(candidate, accumulated);
    let req = request(candidate, source, ProofSlot::ExactSearch, accumulated, timeout);
    match backend.run(&req) {
        Ok(raw) => {
            let diagnostics = parse_diagnostics(&raw);
            let no_errors = diagnostics.iter().all(|d| d.severity != Severity::Error);
            let witness = try_this(&diagnostics).filter(|_| no_errors);
            let outcome = if witness.is_some() { Novelty::Known } else { Novelty::Novel };
            StageResult { outcome, diagnostics, witness, note: None }
        }
        Err(error) => StageResult {
            outcome: match error {
                CheckerError::Timeout(_) => Novelty::Novel,
                CheckerError::Crash(_) => Novelty::Known,
            },
            diagnostics: Vec::new(),
            witness: None,
            note: Some(StageNote { stage: Stage::Novelty, error }),
        },
    }
}

/// Trivial iff `aesop` closes the goal: no errors and no sorry warning.
pub fn check_triviality(
    candidate: &ConjectureCandidate,
    backend: &dyn CheckerBackend,
    timeout: Duration,
) -> StageResult<Triviality> {
    let req = request(candidate, candidate.assembled_source.clone(), ProofSlot::Aesop, &[], timeout);
    match backend.run(&req) {
        Ok(raw) => {
            let diagnostics = parse_diagnostics(&raw);
            let closed = diagnostics.iter().all(|d| d.severity != Severity::Error && !d.is_sorry_warning());
            let (outcome, witness) =
                if closed { (Triviality::Trivial, Some("aesop".to_owned())) } else { (Triviality::NonTrivial, None) };
            StageResult { outcome, diagnostics, witness, note: None }
        }
        Err(error) => StageResult {
            outcome: Triviality::NonTrivial,
            diagnostics: Vec::new(),
            witness: None,
            note: Some(StageNote { stage: Stage::Triviality, error }),
        },
    }
}

/// Runs the lattice for one candidate.
pub fn evaluate(
    candidate: &ConjectureCandidate,
    accumulated: &[String],
    backend: &dyn CheckerBackend,
    timeouts: &Timeouts,
) -> Verdict {
    let syn = check_syntax(candidate, backend, timeouts.syntax());
    let mut verdict = Verdict {
        syntax: syn.outcome,
        novelty: None,
        triviality: None,
        diagnostics: syn.diagnostics,
        witness: None,
        notes: syn.note.into_iter().collect(),
    };
    if verdict.syntax == Syntax::Invalid {
        return verdict;
    }
    let nov = check_novelty(candidate, accumulated, backend, timeouts.exact());
    verdict.novelty = Some(nov.outcome);
    verdict.witness = nov.witness;
    verdict.notes.extend(nov.note);
    if nov.outcome == Novelty::Known {
        return verdict;
    }
    let tri = check_triviality(candidate, backend, timeouts.aesop());
    verdict.triviality = Some(tri.outcome);
    verdict.witness = tri.witness;
    verdict.notes.extend(tri.note);
    verdict
}

/// Evaluates candidates on up to `workers` threads; results keep input order.
pub fn evaluate_all(
    candidates: &[ConjectureCandidate],
    accumulated: &[String],
    backend: &dyn CheckerBackend,
    timeouts: &Timeouts,
    workers: usize,
) -> Vec<Verdict> {
    use rayon::prelude::*;
    if workers <= 1 || candidates.len() <= 1 {
        return candidates.iter().map(|c| evaluate(c, accumulated, backend, timeouts)).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => {
            pool.install(|| candidates.par_iter().map(|c| evaluate(c, accumulated, backend, timeouts)).collect())
        }
        Err(e) => {
            tracing::warn!("falling back to sequential evaluation: {e}");
            candidates.iter().map(|c| evaluate(c, accumulated, backend, timeouts)).collect()
        }
    }
}
