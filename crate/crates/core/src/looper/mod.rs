//! The generate, evaluate, collect cycle for one seed file.

mod persist;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::BackendError;
use crate::checker::{evaluate_all, CheckerBackend, Timeouts, Verdict};
use crate::genpipe::{
    build_prompt, generate, normalize_statement, postprocess, ConjectureCandidate, GeneratorBackend, PRELUDE_IMPORTS,
};
use crate::lean_surface::{extract_context, parse_file, ContextBlock};
use crate::reportkit::RunReport;
use crate::store::StoreError;

pub use persist::{load_records, load_state, SNAPSHOT_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Fixpoint,
    MaxIterations,
    /// The generator became unreachable; records so far are kept.
    BackendOutage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub candidate: ConjectureCandidate,
    pub verdict: Verdict,
}

/// What happened in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: u32,
    pub chunks: usize,
    pub candidates: usize,
    pub rejected: usize,
    pub newly_novel: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend_error: Option<BackendError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationState {
    pub seed_id: String,
    /// The seed file as read; its theorems open every prompt.
    pub seed_source: String,
    pub iteration: u32,
    pub current_context: ContextBlock,
    pub accumulated_novel: Vec<ConjectureCandidate>,
    pub all_records: Vec<Record>,
    pub history: Vec<IterationLog>,
    pub terminated_reason: Option<TerminationReason>,
}

impl IterationState {
    pub fn new(seed_id: impl Into<String>, seed_source: impl Into<String>) -> Self {
        let seed_source = seed_source.into();
        let current_context = extract_context(&parse_file(&seed_source));
        IterationState {
            seed_id: seed_id.into(),
            seed_source,
            iteration: 0,
            current_context,
            accumulated_novel: Vec::new(),
            all_records: Vec::new(),
            history: Vec::new(),
            terminated_reason: None,
        }
    }

    pub fn accumulated_statements(&self) -> Vec<String> {
        self.accumulated_novel.iter().map(|c| c.statement.clone()).collect()
    }

    /// Checks the dedup, cap and record-conservation invariants.
    pub fn check_invariants(&self, max_iterations: u32) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for c in &self.accumulated_novel {
            if !seen.insert(normalize_statement(&c.statement)) {
                return Err(format!("duplicate accumulated statement: {}", c.statement));
            }
        }
        if self.iteration > max_iterations {
            return Err(format!("iteration {} exceeds cap {max_iterations}", self.iteration));
        }
        let logged: usize = self.history.iter().map(|h| h.candidates).sum();
        if logged != self.all_records.len() {
            return Err(format!("{} records but {logged} logged candidates", self.all_records.len()));
        }
        for r in &self.all_records {
            r.verdict.check_invariants().map_err(|e| format!("{}: {e}", r.candidate.id))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub max_iterations: u32,
    pub directive_many: bool,
    pub workers: usize,
    pub timeouts: Timeouts,
    /// Run directory; nothing is persisted when absent.
    pub output_dir: Option<PathBuf>,
    /// Return after this many completed iterations without terminating, as
    /// if the process had been killed.
    #[serde(skip)]
    pub stop_after: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_iterations: 15,
            directive_many: true,
            workers: 1,
            timeouts: Timeouts::default(),
            output_dir: None,
            stop_after: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("cannot read seed {path}: {source}")]
    SeedUnreadable { path: PathBuf, source: std::io::Error },
    #[error("state already terminated ({0:?})")]
    AlreadyTerminated(TerminationReason),
    #[error("max_iterations must be at least 1")]
    ZeroIterations,
    #[error("no accumulated conjectures to build a seed from")]
    EmptyAccumulation,
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// One round: prompt, generate, post-process, evaluate against the
/// round-start accumulation, then collect valid and novel statements not
/// already present after normalization.
pub fn run_iteration(
    mut state: IterationState,
    gen: &dyn GeneratorBackend,
    chk: &dyn CheckerBackend,
    cfg: &RunConfig,
) -> Result<(IterationState, Vec<ConjectureCandidate>), LoopError> {
    if let Some(reason) = state.terminated_reason {
        return Err(LoopError::AlreadyTerminated(reason));
    }
    let round = state.iteration + 1;
    let seed = parse_file(&state.seed_source);
    let prompt = build_prompt(&seed, &state.accumulated_novel, cfg.directive_many);

    let mut log = IterationLog {
        iteration: round,
        chunks: 0,
        candidates: 0,
        rejected: 0,
        newly_novel: Vec::new(),
        backend_error: None,
    };
    let candidates: Vec<ConjectureCandidate> = match generate(gen, &prompt) {
        Ok(raw) => {
            let processed = postprocess(&raw);
            log.chunks = raw.chunks.len();
            log.rejected = processed.rejected;
            processed
                .statements
                .into_iter()
                .enumerate()
                .map(|(i, e)| {
                    let raw_text = raw.chunks[e.chunk].clone();
                    ConjectureCandidate::new(&state.seed_id, round, i, e.statement, raw_text, &state.current_context)
                })
                .collect()
        }
        Err(e) => {
            tracing::warn!(seed = %state.seed_id, round, "generation failed: {e}");
            log.backend_error = Some(e);
            Vec::new()
        }
    };
    log.candidates = candidates.len();

    let context = state.accumulated_statements();
    let verdicts = evaluate_all(&candidates, &context, chk, &cfg.timeouts, cfg.workers);

    let mut seen: BTreeSet<String> =
        state.accumulated_novel.iter().map(|c| normalize_statement(&c.statement)).collect();
    let mut newly = Vec::new();
    for (candidate, verdict) in candidates.into_iter().zip(verdicts) {
        if verdict.is_valid() && verdict.is_novel() && seen.insert(normalize_statement(&candidate.statement)) {
            newly.push(candidate.clone());
        }
        state.all_records.push(Record { candidate, verdict });
    }
    log.newly_novel = newly.iter().map(|c| c.id.clone()).collect();
    state.accumulated_novel.extend(newly.iter().cloned());
    state.iteration = round;
    state.history.push(log);
    Ok((state, newly))
}

/// A Lean file holding the seed context and every accumulated statement,
/// each closed with `sorry`.
pub fn build_next_seed(state: &IterationState) -> Result<String, LoopError> {
    if state.accumulated_novel.is_empty() {
        return Err(LoopError::EmptyAccumulation);
    }
    let mut ctx = state.current_context.clone();
    for (i, imp) in PRELUDE_IMPORTS.iter().enumerate() {
        if !ctx.imports.iter().any(|x| x == imp) {
            ctx.imports.insert(i.min(ctx.imports.len()), (*imp).to_owned());
        }
    }
    let mut out = ctx.render();
    for c in &state.accumulated_novel {
        out.push('\n');
        out.push_str(&c.statement);
        out.push_str("\n  sorry\n");
    }
    Ok(out)
}

/// Seed id of a seed file: its file stem.
pub fn seed_id_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "seed".into())
}

/// Runs rounds until a fixpoint, the cap, or a generator outage.
pub fn run_pipeline(
    seed_path: &Path,
    gen: &dyn GeneratorBackend,
    chk: &dyn CheckerBackend,
    cfg: &RunConfig,
) -> Result<(IterationState, RunReport), LoopError> {
    run_pipeline_with(seed_path, gen, chk, cfg, &mut |_, _| {})
}

/// As [`run_pipeline`], calling `observe` after every persisted round.
pub fn run_pipeline_with(
    seed_path: &Path,
    gen: &dyn GeneratorBackend,
    chk: &dyn CheckerBackend,
    cfg: &RunConfig,
    observe: &mut dyn FnMut(&IterationState, &IterationLog),
) -> Result<(IterationState, RunReport), LoopError> {
    let source = std::fs::read_to_string(seed_path)
        .map_err(|source| LoopError::SeedUnreadable { path: seed_path.to_owned(), source })?;
    let state = IterationState::new(seed_id_of(seed_path), source);
    drive(state, gen, chk, cfg, observe)
}

/// Continues the run persisted in `run_dir` from its last snapshot.
pub fn resume_pipeline(
    run_dir: &Path,
    gen: &dyn GeneratorBackend,
    chk: &dyn CheckerBackend,
    cfg: &RunConfig,
    observe: &mut dyn FnMut(&IterationState, &IterationLog),
) -> Result<(IterationState, RunReport), LoopError> {
    let state = load_state(run_dir)?;
    let cfg = RunConfig { output_dir: Some(run_dir.to_owned()), ..cfg.clone() };
    drive(state, gen, chk, &cfg, observe)
}

fn drive(
    mut state: IterationState,
    gen: &dyn GeneratorBackend,
    chk: &dyn CheckerBackend,
    cfg: &RunConfig,
    observe: &mut dyn FnMut(&IterationState, &IterationLog),
) -> Result<(IterationState, RunReport), LoopError> {
    if cfg.max_iterations == 0 {
        return Err(LoopError::ZeroIterations);
    }
    while state.terminated_reason.is_none() {
        if state.iteration >= cfg.max_iterations {
            state.terminated_reason = Some(TerminationReason::MaxIterations);
            if let Some(dir) = &cfg.output_dir {
                persist::write_snapshot(dir, &state)?;
            }
            break;
        }
        let (next, newly) = run_iteration(state, gen, chk, cfg)?;
        state = next;
        let log = state.history.last().expect("round logged").clone();
        state.terminated_reason = if matches!(log.backend_error, Some(BackendError::Unavailable(_))) {
            Some(TerminationReason::BackendOutage)
        } else if newly.is_empty() {
            Some(TerminationReason::Fixpoint)
        } else if state.iteration >= cfg.max_iterations {
            Some(TerminationReason::MaxIterations)
        } else {
            None
        };
        if let Some(dir) = &cfg.output_dir {
            persist::write_iteration(dir, &state)?;
            persist::write_snapshot(dir, &state)?;
        }
        observe(&state, &log);
        if state.terminated_reason.is_none() && cfg.stop_after.is_some_and(|n| state.iteration >= n) {
            break;
        }
    }
    let report = RunReport::from_states(&[&state]);
    if let Some(dir) = &cfg.output_dir {
        if state.terminated_reason.is_some() {
            report.write(dir)?;
        }
    }
    Ok((state, report))
}
