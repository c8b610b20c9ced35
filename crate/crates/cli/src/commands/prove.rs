use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use anyhow::anyhow;
use conjecture_core::chat::BackendError;
use conjecture_core::prover_harness::{
    run_cells, AttemptMatrix, MatrixOptions, ProofAttempt, ProofProblem, ProverBackend,
};
use conjecture_core::reportkit::read_dataset;
use conjecture_core::store::{write_atomic, write_json, write_jsonl, StoreError};
use serde_json::json;

use super::{load_config, record_config};
use crate::events::EventLog;
use crate::exit::{CmdResult, Code, Failure};
use crate::ProveArgs;

pub const CELLS_FILE: &str = "cells.jsonl";
pub const MATRIX_FILE: &str = "matrix.json";
pub const SUMMARY_FILE: &str = "matrix_summary.json";
pub const RATES_FILE: &str = "rates.txt";

/// Stops calling the prover after its first outage so the remaining
/// cells stay pending instead of being recorded as failures.
struct OutageGuard<'a> {
    inner: &'a dyn ProverBackend,
    tripped: AtomicBool,
}

impl ProverBackend for OutageGuard<'_> {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn prove(&self, problem: &ProofProblem, sample_index: u32) -> Result<String, BackendError> {
        if self.tripped.load(Ordering::SeqCst) {
            return Err(BackendError::Unavailable("skipped after outage".into()));
        }
        let r = self.inner.prove(problem, sample_index);
        if matches!(r, Err(BackendError::Unavailable(_))) {
            self.tripped.store(true, Ordering::SeqCst);
        }
        r
    }
}

fn is_outage_cell(c: &ProofAttempt) -> bool {
    c.error.as_deref().is_some_and(|e| e.starts_with("prover: backend unavailable"))
}

/// Cells persisted by an earlier invocation. A final line cut short by a
/// kill is dropped; any other unreadable line is corruption.
pub fn read_cells(path: &Path) -> Result<Vec<ProofAttempt>, StoreError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(StoreError::io(path, e)),
    };
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut cells = Vec::with_capacity(lines.len());
    let mut seen = BTreeSet::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cell: ProofAttempt = match serde_json::from_str(line) {
            Ok(c) => c,
            Err(_) if !complete && i + 1 == lines.len() => {
                tracing::warn!("{}:{}: dropping truncated cell", path.display(), i + 1);
                break;
            }
            Err(e) => return Err(StoreError::corrupt(path, i + 1, e.to_string())),
        };
        if !seen.insert((cell.statement_id.clone(), cell.sample_index)) {
            return Err(StoreError::corrupt(path, i + 1, "duplicate cell"));
        }
        cells.push(cell);
    }
    Ok(cells)
}

pub fn run(config: Option<&Path>, args: &ProveArgs) -> CmdResult {
    let mut cfg = load_config(config)?;
    if let Some(k) = args.k {
        cfg.prover.k = k;
    }
    if let Some(w) = args.workers {
        cfg.run.workers = w;
    }
    let k = cfg.prover.k;
    if k == 0 {
        return Err(Failure::usage("k must be at least 1"));
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.run.output_dir.join("prove"));
    let dataset = read_dataset(&args.dataset)?;
    let problems: Vec<ProofProblem> = dataset.records.iter().map(ProofProblem::from).collect();
    let prover = cfg.prover().map_err(|e| Failure::new(Code::Usage, e))?;
    let chk = cfg.checker(&out).map_err(|e| Failure::new(Code::Usage, e))?;

    let cells_path = out.join(CELLS_FILE);
    if cells_path.exists() && !args.resume {
        return Err(Failure::usage(format!("{} exists; pass --resume to continue", cells_path.display())));
    }
    record_config(&cfg, &out)?;
    let existing = read_cells(&cells_path)?;
    let ids: BTreeSet<&str> = problems.iter().map(|p| p.id.as_str()).collect();
    if let Some(c) = existing.iter().find(|c| !ids.contains(c.statement_id.as_str()) || c.sample_index >= k) {
        return Err(Failure::usage(format!(
            "{}: cell {} sample {} does not belong to this dataset with k={k}",
            cells_path.display(),
            c.statement_id,
            c.sample_index
        )));
    }
    write_jsonl(&cells_path, &existing)?;

    let events = EventLog::open(&out).map_err(|e| Failure::new(Code::Failure, anyhow!("{}: {e}", out.display())))?;
    events.emit(
        "prove_start",
        json!({ "problems": problems.len(), "k": k, "existing_cells": existing.len(), "prover": prover.id() }),
    );
    let file = OpenOptions::new()
        .append(true)
        .open(&cells_path)
        .map_err(|e| Failure::new(Code::Failure, anyhow!("{}: {e}", cells_path.display())))?;
    let sink = Mutex::new(file);
    let on_cell = |c: &ProofAttempt| {
        if is_outage_cell(c) {
            return;
        }
        let mut line = serde_json::to_string(c).expect("cell serializes");
        line.push('\n');
        let mut f = sink.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = f.write_all(line.as_bytes()).and_then(|_| f.flush()) {
            tracing::error!("{}: {e}", cells_path.display());
        }
    };
    let guard = OutageGuard { inner: prover.as_ref(), tripped: AtomicBool::new(false) };
    let opts = MatrixOptions {
        workers: cfg.run.workers,
        timeout: Duration::from_secs(cfg.prover.timeout_secs.max(1)),
        max_new_cells: args.max_cells,
    };
    let cells = run_cells(&problems, &guard, chk.as_ref(), k, existing, &opts, &on_cell)
        .map_err(|e| Failure::new(Code::Usage, e))?;
    let cells: Vec<ProofAttempt> = cells.into_iter().filter(|c| !is_outage_cell(c)).collect();
    let want = problems.len() * k as usize;
    events.emit("prove_cells", json!({ "done": cells.len(), "total": want }));

    if guard.tripped.load(Ordering::SeqCst) {
        return Err(Failure::new(
            Code::Backend,
            anyhow!("prover unavailable; {}/{want} cells done, rerun with --resume", cells.len()),
        ));
    }
    if cells.len() < want {
        println!("{}/{want} cells done; rerun with --resume to continue", cells.len());
        return Ok(());
    }
    let matrix = AttemptMatrix::from_cells(problems.iter().map(|p| p.id.clone()).collect(), k, cells)
        .map_err(|e| Failure::new(Code::Corrupt, e))?;
    let summary = matrix.summary();
    write_json(&out.join(MATRIX_FILE), &matrix)?;
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    let text = summary.rates.render();
    write_atomic(&out.join(RATES_FILE), text.as_bytes())?;
    events.emit("prove_end", json!({ "rates": summary.rates }));
    print!("{text}");
    Ok(())
}
