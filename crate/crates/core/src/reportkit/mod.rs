//! Counting, rates and dataset export.

mod dataset;
mod ratio;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::looper::{IterationState, Record, TerminationReason};
use crate::prover_harness::AttemptMatrix;
use crate::store::{write_atomic, write_json, StoreError};

pub use dataset::{export_dataset, read_dataset, Dataset, DatasetRecord, ExportFilter, DATASET_FORMAT};
pub use ratio::{render_decimal, ExactRatio};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

/// Candidates reaching each stage of the lattice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub total: u64,
    pub valid: u64,
    pub novel: u64,
    pub non_trivial: u64,
}

impl StageCounts {
    pub fn add_record(&mut self, r: &Record) {
        let v = &r.verdict;
        self.total += 1;
        if v.is_valid() {
            self.valid += 1;
            if v.is_novel() {
                self.novel += 1;
                if v.is_non_trivial() {
                    self.non_trivial += 1;
                }
            }
        }
    }

    pub fn add(&mut self, other: &StageCounts) {
        self.total += other.total;
        self.valid += other.valid;
        self.novel += other.novel;
        self.non_trivial += other.non_trivial;
    }

    pub fn check_chain(&self) -> Result<(), String> {
        if self.total >= self.valid && self.valid >= self.novel && self.novel >= self.non_trivial {
            Ok(())
        } else {
            Err(format!(
                "chain violated: total {} valid {} novel {} non-trivial {}",
                self.total, self.valid, self.novel, self.non_trivial
            ))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRow {
    #[serde(flatten)]
    pub counts: StageCounts,
    pub iterations: u32,
    pub terminated_reason: Option<TerminationReason>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub per_seed: BTreeMap<String, SeedRow>,
    pub aggregate: StageCounts,
    pub avg_novel_per_seed: ExactRatio,
}

impl Default for RunReport {
    fn default() -> Self {
        summarize(&[])
    }
}

/// Counts records per seed and overall.
pub fn summarize(records: &[Record]) -> RunReport {
    let mut per_seed: BTreeMap<String, SeedRow> = BTreeMap::new();
    for r in records {
        let row = per_seed.entry(r.candidate.seed_id.clone()).or_default();
        row.counts.add_record(r);
        row.iterations = row.iterations.max(r.candidate.iteration);
    }
    let mut report =
        RunReport { per_seed, aggregate: StageCounts::default(), avg_novel_per_seed: ExactRatio::new(0, 0) };
    report.recompute();
    report
}

/// Proof and problem success counts of an attempt matrix.
pub fn rates(matrix: &AttemptMatrix) -> RateReport {
    let solved = matrix.rows().filter(|row| row.iter().any(|c| c.verified)).count() as u64;
    RateReport {
        proof_successes: matrix.cells.iter().filter(|c| c.verified).count() as u64,
        proof_attempts: matrix.cells.len() as u64,
        problems_solved: solved,
        problems_total: matrix.problems.len() as u64,
    }
}

impl RunReport {
    /// Report over finished or interrupted runs, with their round counts and
    /// termination reasons.
    pub fn from_states(states: &[&IterationState]) -> Self {
        let records: Vec<Record> = states.iter().flat_map(|s| s.all_records.iter().cloned()).collect();
        let mut report = summarize(&records);
        for s in states {
            report.set_run_info(&s.seed_id, s.iteration, s.terminated_reason);
        }
        report
    }

    /// Records run metadata for a seed, adding an empty row if needed.
    pub fn set_run_info(&mut self, seed_id: &str, iterations: u32, reason: Option<TerminationReason>) {
        let row = self.per_seed.entry(seed_id.to_owned()).or_default();
        row.iterations = iterations;
        row.terminated_reason = reason;
        self.recompute();
    }

    fn recompute(&mut self) {
        let mut agg = StageCounts::default();
        for row in self.per_seed.values() {
            agg.add(&row.counts);
        }
        self.aggregate = agg;
        self.avg_novel_per_seed = ExactRatio::new(agg.novel, self.per_seed.len() as u64);
        assert!(self.check_chain().is_ok(), "lattice counts out of order");
    }

    pub fn check_chain(&self) -> Result<(), String> {
        for (seed, row) in &self.per_seed {
            row.counts.check_chain().map_err(|e| format!("{seed}: {e}"))?;
        }
        self.aggregate.check_chain()
    }

    /// Aligned text table with one row per seed and a total row.
    pub fn render_table(&self) -> String {
        let name_w = self.per_seed.keys().map(|k| k.chars().count()).chain([5]).max().unwrap_or(5);
        let mut out = String::new();
        let header = ["Total", "Valid", "Novel", "Non-Trivial", "Iterations", "Reason"];
        let _ = write!(out, "{:<name_w$}", "Seed");
        for h in &header[..5] {
            let _ = write!(out, "  {h:>11}");
        }
        let _ = writeln!(out, "  {}", header[5]);
        let line = |out: &mut String, name: &str, c: &StageCounts, iters: Option<u32>, reason: &str| {
            let _ = write!(
                out,
                "{name:<name_w$}  {:>11}  {:>11}  {:>11}  {:>11}",
                c.total, c.valid, c.novel, c.non_trivial
            );
            let iters = iters.map_or(String::new(), |i| i.to_string());
            let _ = writeln!(out, "  {iters:>11}  {reason}");
        };
        for (seed, row) in &self.per_seed {
            let reason = row.terminated_reason.map_or("running".to_owned(), |r| format!("{r:?}"));
            line(&mut out, seed, &row.counts, Some(row.iterations), &reason);
        }
        line(&mut out, "Total", &self.aggregate, None, "");
        let avg = &self.avg_novel_per_seed;
        let _ = write!(out, "Average novel per seed: {} ({}/{})", avg.decimal, avg.numerator, avg.denominator);
        if !avg.defined {
            out.push_str(" undefined, no seeds");
        }
        out.push('\n');
        out
    }

    /// Writes `report.json` and `report.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), StoreError> {
        write_json(&dir.join(REPORT_JSON), self)?;
        write_atomic(&dir.join(REPORT_TEXT), self.render_table().as_bytes())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateReport {
    pub proof_successes: u64,
    pub proof_attempts: u64,
    pub problems_solved: u64,
    pub problems_total: u64,
}

impl RateReport {
    pub fn proof_rate(&self) -> ExactRatio {
        ExactRatio::new(self.proof_successes, self.proof_attempts)
    }

    pub fn problem_rate(&self) -> ExactRatio {
        ExactRatio::new(self.problems_solved, self.problems_total)
    }

    pub fn check(&self) -> Result<(), String> {
        if self.proof_successes > self.proof_attempts || self.problems_solved > self.problems_total {
            return Err(format!("rate counts out of range: {self:?}"));
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let pr = self.proof_rate();
        let qr = self.problem_rate();
        format!(
            "Proof rate:   {}/{} ({})\nProblem rate: {}/{} ({})\n",
            self.proof_successes,
            self.proof_attempts,
            pr.decimal,
            self.problems_solved,
            self.problems_total,
            qr.decimal
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{Novelty, Syntax, Triviality, Verdict};
    use crate::genpipe::ConjectureCandidate;
    use crate::lean_surface::ContextBlock;

    pub(crate) fn record(seed: &str, i: usize, stage: u8) -> Record {
        let verdict = Verdict {
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
            diagnostics: vec![],
            witness: None,
            notes: vec![],
        };
        let candidate = ConjectureCandidate::new(
            seed,
            1,
            i,
            format!("theorem t{i} : {i} = {i} := by"),
            String::new(),
            &ContextBlock::default(),
        );
        Record { candidate, verdict }
    }

    #[test]
    fn empty_summary_flags_undefined_average() {
        let r = summarize(&[]);
        assert_eq!(r.aggregate, StageCounts::default());
        assert!(!r.avg_novel_per_seed.defined);
        assert_eq!(r.avg_novel_per_seed.decimal, "0");
        assert!(r.render_table().contains("undefined"));
    }

    #[test]
    fn single_seed_row() {
        // 412 total, 392 valid, 108 non-trivial; novel count chosen as 200
        let mut recs = Vec::new();
        let mut i = 0;
        for (stage, n) in [(0u8, 20), (1, 192), (2, 92), (3, 108)] {
            for _ in 0..n {
                recs.push(record("Topology", i, stage));
                i += 1;
            }
        }
        let r = summarize(&recs);
        let row = &r.per_seed["Topology"];
        assert_eq!(row.counts, StageCounts { total: 412, valid: 392, novel: 200, non_trivial: 108 });
        assert_eq!(r.avg_novel_per_seed.decimal, "200");
    }

    #[test]
    fn table_has_columns() {
        let r = summarize(&[record("a", 0, 3), record("b", 1, 0)]);
        let t = r.render_table();
        let first = t.lines().next().unwrap();
        for col in ["Total", "Valid", "Novel", "Non-Trivial"] {
            assert!(first.contains(col));
        }
        assert!(t.contains("Average novel per seed: 0.5 (1/2)"));
    }

    #[test]
    fn report_serde_round_trip() {
        let r = summarize(&[record("a", 0, 3), record("a", 1, 2)]);
        let back: RunReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
