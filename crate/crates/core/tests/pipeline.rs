mod common;

use std::collections::BTreeSet;
use std::path::Path;

use common::*;
use conjecture_core::checker::StubChecker;
use conjecture_core::genpipe::{normalize_statement, MutationBackend};
use conjecture_core::looper::{
    load_records, resume_pipeline, run_pipeline, RunConfig, TerminationReason, SNAPSHOT_FILE,
};
use conjecture_core::prover_harness::{run_matrix, MatrixOptions, ProofProblem, StubProver};
use conjecture_core::reportkit::{export_dataset, rates, read_dataset, summarize, ExportFilter, RunReport};

fn write_seed(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn cfg(max: u32) -> RunConfig {
    RunConfig { max_iterations: max, ..RunConfig::default() }
}

#[test]
fn all_known_reaches_fixpoint_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "topology.lean", &topology_seed());
    let (s, report) = run_pipeline(&seed, &MutationBackend::new(7), &StubChecker::all_known(), &cfg(15)).unwrap();
    assert_eq!(s.iteration, 1);
    assert_eq!(s.terminated_reason, Some(TerminationReason::Fixpoint));
    assert!(s.accumulated_novel.is_empty());
    assert_eq!(report.aggregate.novel, 0);
}

#[test]
fn productive_run_hits_cap() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "topology.lean", &topology_seed());
    let (s, report) = run_pipeline(&seed, &MutationBackend::new(7), &StubChecker::permissive(), &cfg(15)).unwrap();
    assert_eq!(s.iteration, 15);
    assert_eq!(s.terminated_reason, Some(TerminationReason::MaxIterations));
    s.check_invariants(15).unwrap();
    assert_eq!(report.per_seed["topology"].iterations, 15);
}

#[test]
fn repetition_never_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "s.lean", SINGLE_THEOREM_SEED);
    let chk = StubChecker { self_match: false, ..StubChecker::permissive() };
    let (s, _) = run_pipeline(&seed, &RepetitiveGenerator::new(), &chk, &cfg(10)).unwrap();
    assert_eq!(s.iteration, 10);
    let keys: BTreeSet<_> = s.accumulated_novel.iter().map(|c| normalize_statement(&c.statement)).collect();
    assert_eq!(keys.len(), s.accumulated_novel.len());
    assert_eq!(s.accumulated_novel.len(), 10);
    s.check_invariants(10).unwrap();
}

#[test]
fn directive_changes_volume() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "s.lean", SINGLE_THEOREM_SEED);
    let chk = StubChecker::permissive();
    let one = RunConfig { directive_many: false, ..cfg(5) };
    let (a, _) = run_pipeline(&seed, &MutationBackend::new(3).with_max_chunks(1), &chk, &one).unwrap();
    let (b, _) = run_pipeline(&seed, &MutationBackend::new(3), &chk, &cfg(5)).unwrap();
    assert!(a.all_records.len() < b.all_records.len(), "{} vs {}", a.all_records.len(), b.all_records.len());
}

#[test]
fn same_seed_same_state() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "topology.lean", &topology_seed());
    let run = |w: usize| {
        let c = RunConfig { workers: w, ..cfg(3) };
        run_pipeline(&seed, &MutationBackend::new(11), &StubChecker::permissive(), &c).unwrap().0
    };
    let a = run(1);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&run(1)).unwrap());
    assert_eq!(a, run(4));
}

#[test]
fn resumed_run_matches_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "topology.lean", &topology_seed());
    let full_dir = dir.path().join("full");
    let cut_dir = dir.path().join("cut");
    let gen = MutationBackend::new(42);
    let chk = StubChecker::permissive();
    let full = RunConfig { output_dir: Some(full_dir.clone()), ..cfg(6) };
    run_pipeline(&seed, &gen, &chk, &full).unwrap();
    let cut = RunConfig { output_dir: Some(cut_dir.clone()), stop_after: Some(2), ..cfg(6) };
    let (partial, _) = run_pipeline(&seed, &gen, &chk, &cut).unwrap();
    assert_eq!(partial.iteration, 2);
    assert!(partial.terminated_reason.is_none());
    resume_pipeline(&cut_dir, &gen, &chk, &cfg(6), &mut |_, _| {}).unwrap();
    let a = std::fs::read(full_dir.join(SNAPSHOT_FILE)).unwrap();
    let b = std::fs::read(cut_dir.join(SNAPSHOT_FILE)).unwrap();
    assert!(a == b, "snapshots differ");
    assert_eq!(
        std::fs::read(full_dir.join("report.json")).unwrap(),
        std::fs::read(cut_dir.join("report.json")).unwrap()
    );
}

#[test]
fn exports_agree_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let seed = write_seed(dir.path(), "topology.lean", &topology_seed());
    let run_dir = dir.path().join("run");
    let chk = StubChecker::permissive().with_rule(conjecture_core::checker::StubRule::new(
        Some(conjecture_core::checker::SlotKind::Aesop),
        "∅",
        conjecture_core::checker::StubResponse::output(""),
    ));
    let c = RunConfig { output_dir: Some(run_dir.clone()), ..cfg(3) };
    let (s, report) = run_pipeline(&seed, &MutationBackend::new(9), &chk, &c).unwrap();
    let records = load_records(&run_dir).unwrap();
    assert_eq!(records, s.all_records);
    let mut stats = summarize(&records);
    stats.set_run_info(&s.seed_id, s.iteration, s.terminated_reason);
    assert_eq!(stats, report);
    assert_eq!(report, RunReport::from_states(&[&s]));
    for (filter, want) in [
        (ExportFilter::All, report.aggregate.total),
        (ExportFilter::NovelOnly, report.aggregate.novel),
        (ExportFilter::NontrivialOnly, report.aggregate.non_trivial),
    ] {
        let p = dir.path().join("d.jsonl");
        assert_eq!(export_dataset(&records, filter, &p).unwrap() as u64, want);
        assert_eq!(read_dataset(&p).unwrap().records.len() as u64, want);
    }
}

#[test]
fn capacity_matrix() {
    let problems: Vec<ProofProblem> = (0..192)
        .map(|i| ProofProblem {
            id: format!("p{i}"),
            statement: format!("theorem q{i} : {i} = {i} := by"),
            assembled_source: format!("import Mathlib\nimport Aesop\n\ntheorem q{i} : {i} = {i} := by"),
        })
        .collect();
    let mut prover = StubProver::new();
    for i in (0..192).step_by(4) {
        prover = prover.with_proofs(&format!("theorem q{i} : {i} = {i} := by"), ["rfl", "sorry"]);
    }
    let opts = MatrixOptions { workers: 4, ..MatrixOptions::default() };
    let m = run_matrix(&problems, &prover, &StubChecker::permissive(), 128, &opts).unwrap();
    assert_eq!(m.cells.len(), 24576);
    let r = rates(&m);
    assert_eq!((r.proof_successes, r.problems_solved, r.problems_total), (48 * 64, 48, 192));
    let text = serde_json::to_string(&m).unwrap();
    let back: conjecture_core::prover_harness::AttemptMatrix = serde_json::from_str(&text).unwrap();
    assert_eq!(back, m);
}
