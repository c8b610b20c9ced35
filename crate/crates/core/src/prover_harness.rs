//! Proof attempts on collected conjectures, their verification, binary
//! rewards and pass@k bookkeeping.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::{BackendError, ChatClient};
use crate::checker::{parse_diagnostics, CheckRequest, CheckerBackend, CheckerError, Diagnostic, ProofSlot, Severity};
use crate::genpipe::normalize_statement;
use crate::lean_surface::{extract_theorems, parse_file};
use crate::reportkit::{rates, DatasetRecord, RateReport};

/// A statement to prove, with the source it is checked in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofProblem {
    pub id: String,
    pub statement: String,
    /// Source ending in the statement's `:= by`.
    pub assembled_source: String,
}

impl From<&DatasetRecord> for ProofProblem {
    fn from(r: &DatasetRecord) -> Self {
        ProofProblem {
            id: r.statement_id.clone(),
            statement: r.statement.clone(),
            assembled_source: r.assembled_source.clone(),
        }
    }
}

pub trait ProverBackend: Send + Sync {
    fn id(&self) -> String;
    /// Tactic proof for `problem`; `sample_index` distinguishes draws.
    fn prove(&self, problem: &ProofProblem, sample_index: u32) -> Result<String, BackendError>;
}

/// Canned proofs keyed by normalized statement. Sample `i` gets
/// `proofs[i % proofs.len()]`; unknown statements get an empty proof.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubProver {
    pub proofs: BTreeMap<String, Vec<String>>,
}

impl StubProver {
    pub fn new() -> Self {
        StubProver::default()
    }

    pub fn with_proofs<S: Into<String>>(mut self, statement: &str, proofs: impl IntoIterator<Item = S>) -> Self {
        self.proofs.insert(normalize_statement(statement), proofs.into_iter().map(Into::into).collect());
        self
    }
}

impl ProverBackend for StubProver {
    fn id(&self) -> String {
        "stub-prover".into()
    }

    fn prove(&self, problem: &ProofProblem, sample_index: u32) -> Result<String, BackendError> {
        Ok(self
            .proofs
            .get(&normalize_statement(&problem.statement))
            .filter(|p| !p.is_empty())
            .map(|p| p[sample_index as usize % p.len()].clone())
            .unwrap_or_default())
    }
}

const PROVER_SYSTEM: &str = "Complete the following Lean 4 code with a tactic proof. \
Reply with the full theorem in a single ```lean4 code block.";

/// Prover model behind a chat-completion endpoint.
pub struct HttpProver {
    client: ChatClient,
}

impl HttpProver {
    pub fn new(client: ChatClient) -> Self {
        HttpProver { client }
    }
}

impl ProverBackend for HttpProver {
    fn id(&self) -> String {
        format!("http:{}", self.client.config().model)
    }

    fn prove(&self, problem: &ProofProblem, _sample_index: u32) -> Result<String, BackendError> {
        let user = format!("```lean4\n{}\n```", problem.assembled_source);
        let completion = self.client.complete(PROVER_SYSTEM, &user)?;
        Ok(extract_proof(&completion.text, &problem.statement))
    }
}

/// The tactic block of the answer's theorem matching `statement` (or its
/// first theorem), taken from the last code block when there is one.
pub fn extract_proof(answer: &str, statement: &str) -> String {
    let code = match answer.rfind("```") {
        Some(close) => {
            let before = &answer[..close];
            match before.rfind("```") {
                Some(open) => {
                    let body = &before[open + 3..];
                    body.split_once('\n').map_or(body, |(_, rest)| rest)
                }
                None => before,
            }
        }
        None => answer,
    };
    let file = parse_file(code);
    let theorems = extract_theorems(&file);
    let key = normalize_statement(statement);
    let decl = theorems.iter().find(|d| normalize_statement(&d.as_statement()) == key).or_else(|| theorems.first());
    match decl.and_then(|d| d.proof_span.clone()) {
        Some(p) => dedent(&p),
        None => dedent(code.trim()),
    }
}

/// Removes the common indentation of every line after the first, which
/// has already lost its own.
fn dedent(text: &str) -> String {
    let mut lines = text.lines();
    let first = lines.next().unwrap_or("").trim();
    let rest: Vec<&str> = lines.collect();
    let indent = |l: &str| l.len() - l.trim_start().len();
    let common = rest.iter().filter(|l| !l.trim().is_empty()).map(|l| indent(l)).min().unwrap_or(0);
    std::iter::once(first).chain(rest.iter().map(|l| &l[indent(l).min(common)..])).collect::<Vec<_>>().join("\n")
}

/// The backend's proof text, verbatim.
pub fn attempt_proof(
    problem: &ProofProblem,
    prover: &dyn ProverBackend,
    sample_index: u32,
) -> Result<String, BackendError> {
    prover.prove(problem, sample_index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProofFailure {
    Error,
    Sorry,
    Timeout,
    Crash,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub verified: bool,
    /// Every reason the proof was rejected.
    pub failures: Vec<ProofFailure>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Checks `proof` in the problem's source. It verifies iff the checker
/// reports no error and no sorry warning.
pub fn check_proof(problem: &ProofProblem, proof: &str, chk: &dyn CheckerBackend, timeout: Duration) -> Verification {
    let req = CheckRequest {
        assembled_source: problem.assembled_source.clone(),
        statement: problem.statement.clone(),
        proof_slot: ProofSlot::Tactic(proof.to_owned()),
        context_lemmas: Vec::new(),
        timeout,
    };
    match chk.run(&req) {
        Ok(raw) => {
            let diagnostics = parse_diagnostics(&raw);
            let mut failures = Vec::new();
            if diagnostics.iter().any(|d| d.severity == Severity::Error) {
                failures.push(ProofFailure::Error);
            }
            if diagnostics.iter().any(Diagnostic::is_sorry_warning) {
                failures.push(ProofFailure::Sorry);
            }
            Verification { verified: failures.is_empty(), failures, diagnostics }
        }
        Err(e) => Verification {
            verified: false,
            failures: vec![match e {
                CheckerError::Timeout(_) => ProofFailure::Timeout,
                CheckerError::Crash(_) => ProofFailure::Crash,
            }],
            diagnostics: vec![Diagnostic::new(Severity::Error, e.to_string())],
        },
    }
}

pub fn verify_proof(problem: &ProofProblem, proof: &str, chk: &dyn CheckerBackend, timeout: Duration) -> bool {
    check_proof(problem, proof, chk, timeout).verified
}

/// One (problem, sample) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofAttempt {
    pub statement_id: String,
    pub sample_index: u32,
    pub proof_text: String,
    pub verified: bool,
    pub reward: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ProofAttempt {
    pub fn new(
        statement_id: &str,
        sample_index: u32,
        proof_text: String,
        verified: bool,
        error: Option<String>,
    ) -> Self {
        let mut a = ProofAttempt {
            statement_id: statement_id.to_owned(),
            sample_index,
            proof_text,
            verified,
            reward: 0,
            error,
        };
        a.reward = reward(&a);
        a
    }
}

/// 1 for a verified proof, 0 otherwise.
pub fn reward(attempt: &ProofAttempt) -> u8 {
    u8::from(attempt.verified)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HarnessError {
    #[error("k must be at least 1")]
    ZeroSamples,
    #[error("cell for {statement_id} sample {sample_index} is missing or misplaced")]
    NotDense { statement_id: String, sample_index: u32 },
}

/// Cells of `problems × k`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptMatrix {
    pub problems: Vec<String>,
    pub k: u32,
    pub cells: Vec<ProofAttempt>,
}

impl AttemptMatrix {
    /// Builds a matrix from cells in any order, requiring every pair once.
    pub fn from_cells(problems: Vec<String>, k: u32, cells: Vec<ProofAttempt>) -> Result<Self, HarnessError> {
        if k == 0 {
            return Err(HarnessError::ZeroSamples);
        }
        let index: HashMap<&str, usize> = problems.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let mut slots: Vec<Option<ProofAttempt>> = vec![None; problems.len() * k as usize];
        for c in cells {
            let slot = index
                .get(c.statement_id.as_str())
                .filter(|_| c.sample_index < k)
                .map(|&p| p * k as usize + c.sample_index as usize);
            match slot {
                Some(s) if slots[s].is_none() => slots[s] = Some(c),
                _ => return Err(HarnessError::NotDense { statement_id: c.statement_id, sample_index: c.sample_index }),
            }
        }
        let mut out = Vec::with_capacity(slots.len());
        for (i, s) in slots.into_iter().enumerate() {
            match s {
                Some(c) => out.push(c),
                None => {
                    return Err(HarnessError::NotDense {
                        statement_id: problems[i / k as usize].clone(),
                        sample_index: (i % k as usize) as u32,
                    })
                }
            }
        }
        Ok(AttemptMatrix { problems, k, cells: out })
    }

    pub fn rows(&self) -> impl Iterator<Item = &[ProofAttempt]> {
        self.cells.chunks(self.k.max(1) as usize)
    }

    pub fn outcome(&self, problem: usize, sample: u32) -> bool {
        self.cells[problem * self.k as usize + sample as usize].verified
    }

    pub fn summary(&self) -> MatrixSummary {
        let problems = self
            .rows()
            .zip(&self.problems)
            .map(|(row, id)| ProblemSummary {
                statement_id: id.clone(),
                solved: row.iter().any(|c| c.verified),
                successes: row.iter().filter(|c| c.verified).count() as u32,
            })
            .collect();
        MatrixSummary { k: self.k, problems, rates: rates(self) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub statement_id: String,
    pub solved: bool,
    pub successes: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSummary {
    pub k: u32,
    pub problems: Vec<ProblemSummary>,
    pub rates: RateReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixOptions {
    pub workers: usize,
    pub timeout: Duration,
    /// Compute at most this many new cells, then stop.
    pub max_new_cells: Option<usize>,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        MatrixOptions { workers: 1, timeout: Duration::from_secs(120), max_new_cells: None }
    }
}

fn run_cell(
    problem: &ProofProblem,
    sample: u32,
    prover: &dyn ProverBackend,
    chk: &dyn CheckerBackend,
    timeout: Duration,
) -> ProofAttempt {
    match attempt_proof(problem, prover, sample) {
        Ok(proof) => {
            let v = check_proof(problem, &proof, chk, timeout);
            let error = v
                .failures
                .iter()
                .any(|f| matches!(f, ProofFailure::Timeout | ProofFailure::Crash))
                .then(|| v.diagnostics.first().map(|d| d.message.clone()).unwrap_or_default());
            ProofAttempt::new(&problem.id, sample, proof, v.verified, error)
        }
        Err(e) => ProofAttempt::new(&problem.id, sample, String::new(), false, Some(format!("prover: {e}"))),
    }
}

/// Fills the cells missing from `existing`, calling `on_cell` as each one
/// finishes. Returns all cells ordered by problem and sample.
pub fn run_cells(
    problems: &[ProofProblem],
    prover: &dyn ProverBackend,
    chk: &dyn CheckerBackend,
    k: u32,
    existing: Vec<ProofAttempt>,
    opts: &MatrixOptions,
    on_cell: &(dyn Fn(&ProofAttempt) + Sync),
) -> Result<Vec<ProofAttempt>, HarnessError> {
    use rayon::prelude::*;
    if k == 0 {
        return Err(HarnessError::ZeroSamples);
    }
    let done: BTreeSet<(String, u32)> = existing.iter().map(|c| (c.statement_id.clone(), c.sample_index)).collect();
    let todo: Vec<(usize, u32)> = problems
        .iter()
        .enumerate()
        .flat_map(|(p, prob)| (0..k).filter(|s| !done.contains(&(prob.id.clone(), *s))).map(move |s| (p, s)))
        .take(opts.max_new_cells.unwrap_or(usize::MAX))
        .collect();
    let work = |&(p, s): &(usize, u32)| {
        let cell = run_cell(&problems[p], s, prover, chk, opts.timeout);
        on_cell(&cell);
        cell
    };
    let fresh: Vec<ProofAttempt> = match rayon::ThreadPoolBuilder::new().num_threads(opts.workers.max(1)).build() {
        Ok(pool) if opts.workers > 1 => pool.install(|| todo.par_iter().map(work).collect()),
        _ => todo.iter().map(work).collect(),
    };
    let order: HashMap<&str, usize> = problems.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    let mut all = existing;
    all.extend(fresh);
    all.sort_by_key(|c| (order.get(c.statement_id.as_str()).copied().unwrap_or(usize::MAX), c.sample_index));
    Ok(all)
}

/// Dense `problems × k` matrix of verified outcomes.
pub fn run_matrix(
    problems: &[ProofProblem],
    prover: &dyn ProverBackend,
    chk: &dyn CheckerBackend,
    k: u32,
    opts: &MatrixOptions,
) -> Result<AttemptMatrix, HarnessError> {
    let opts = MatrixOptions { max_new_cells: None, ..*opts };
    let cells = run_cells(problems, prover, chk, k, Vec::new(), &opts, &|_| {})?;
    AttemptMatrix::from_cells(problems.iter().map(|p| p.id.clone()).collect(), k, cells)
}
