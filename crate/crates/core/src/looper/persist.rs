use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{build_next_seed, IterationState, Record};
use crate::checker::Verdict;
use crate::genpipe::ConjectureCandidate;
use crate::store::{read_json, read_jsonl, write_atomic, write_json, write_jsonl, StoreError};

pub const SNAPSHOT_FILE: &str = "state.snapshot";

#[derive(Serialize, Deserialize)]
struct VerdictLine {
    id: String,
    verdict: Verdict,
}

fn iter_dir(run_dir: &Path, n: u32) -> PathBuf {
    run_dir.join(format!("iter-{n}"))
}

/// Writes the newest round's candidates, verdicts and next seed.
pub(super) fn write_iteration(run_dir: &Path, state: &IterationState) -> Result<(), StoreError> {
    let n = state.iteration;
    let dir = iter_dir(run_dir, n);
    let records: Vec<&Record> = state.all_records.iter().filter(|r| r.candidate.iteration == n).collect();
    write_jsonl(&dir.join("candidates.jsonl"), records.iter().map(|r| &r.candidate))?;
    let verdicts: Vec<VerdictLine> =
        records.iter().map(|r| VerdictLine { id: r.candidate.id.clone(), verdict: r.verdict.clone() }).collect();
    write_jsonl(&dir.join("verdicts.jsonl"), &verdicts)?;
    if let Ok(text) = build_next_seed(state) {
        write_atomic(&dir.join("next_seed.lean"), text.as_bytes())?;
    }
    Ok(())
}

pub(super) fn write_snapshot(run_dir: &Path, state: &IterationState) -> Result<(), StoreError> {
    write_json(&run_dir.join(SNAPSHOT_FILE), state)
}

pub fn load_state(run_dir: &Path) -> Result<IterationState, StoreError> {
    read_json(&run_dir.join(SNAPSHOT_FILE))
}

/// Reads the per-round record files of every round in the snapshot,
/// pairing candidates with verdicts line by line.
pub fn load_records(run_dir: &Path) -> Result<Vec<Record>, StoreError> {
    let state = load_state(run_dir)?;
    let mut out = Vec::new();
    for n in 1..=state.iteration {
        let dir = iter_dir(run_dir, n);
        let cands_path = dir.join("candidates.jsonl");
        let verdicts_path = dir.join("verdicts.jsonl");
        let cands: Vec<ConjectureCandidate> = read_jsonl(&cands_path)?;
        let verdicts: Vec<VerdictLine> = read_jsonl(&verdicts_path)?;
        if cands.len() != verdicts.len() {
            let line = cands.len().min(verdicts.len()) + 1;
            return Err(StoreError::corrupt(
                &verdicts_path,
                line,
                format!("{} candidates but {} verdicts", cands.len(), verdicts.len()),
            ));
        }
        for (i, (candidate, v)) in cands.into_iter().zip(verdicts).enumerate() {
            if candidate.id != v.id {
                return Err(StoreError::corrupt(
                    &verdicts_path,
                    i + 1,
                    format!("verdict for {} does not match candidate {}", v.id, candidate.id),
                ));
            }
            if let Err(e) = v.verdict.check_invariants() {
                return Err(StoreError::corrupt(&verdicts_path, i + 1, e));
            }
            out.push(Record { candidate, verdict: v.verdict });
        }
    }
    Ok(out)
}
