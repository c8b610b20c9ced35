use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checker::{Novelty, Syntax, Triviality};
use crate::looper::{IterationState, Record};
use crate::store::{read_jsonl, to_jsonl, write_atomic, StoreError};

pub const DATASET_FORMAT: &str = "conjecture-dataset";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExportFilter {
    #[default]
    All,
    NovelOnly,
    NontrivialOnly,
}

impl ExportFilter {
    pub fn admits(&self, r: &Record) -> bool {
        let v = &r.verdict;
        match self {
            ExportFilter::All => true,
            ExportFilter::NovelOnly => v.is_valid() && v.is_novel(),
            ExportFilter::NontrivialOnly => v.is_valid() && v.is_novel() && v.is_non_trivial(),
        }
    }
}

/// One exported conjecture. Field order is fixed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub statement_id: String,
    pub statement: String,
    pub seed_id: String,
    pub iteration: u32,
    pub syntax: Syntax,
    pub novelty: Option<Novelty>,
    pub triviality: Option<Triviality>,
    pub witness: Option<String>,
    /// Imports and context followed by the statement, ready for a proof.
    pub assembled_source: String,
}

impl From<&Record> for DatasetRecord {
    fn from(r: &Record) -> Self {
        DatasetRecord {
            statement_id: r.candidate.id.clone(),
            statement: r.candidate.statement.clone(),
            seed_id: r.candidate.seed_id.clone(),
            iteration: r.candidate.iteration,
            syntax: r.verdict.syntax,
            novelty: r.verdict.novelty,
            triviality: r.verdict.triviality,
            witness: r.verdict.witness.clone(),
            assembled_source: r.candidate.assembled_source.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header { format: String, version: u32, filter: ExportFilter },
    Record(DatasetRecord),
    Trailer { count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub filter: ExportFilter,
    pub records: Vec<DatasetRecord>,
}

/// Writes the records admitted by `filter` between a header and a trailer
/// line carrying their count. Returns the count.
pub fn export_dataset(records: &[Record], filter: ExportFilter, path: &Path) -> Result<usize, StoreError> {
    let mut lines = vec![Line::Header { format: DATASET_FORMAT.into(), version: 1, filter }];
    lines.extend(records.iter().filter(|r| filter.admits(r)).map(|r| Line::Record(r.into())));
    let count = lines.len() - 1;
    lines.push(Line::Trailer { count });
    write_atomic(path, to_jsonl(&lines).as_bytes())?;
    Ok(count)
}

impl IterationState {
    pub fn export(&self, filter: ExportFilter, path: &Path) -> Result<usize, StoreError> {
        export_dataset(&self.all_records, filter, path)
    }
}

/// Reads a dataset, checking header, trailer and count.
pub fn read_dataset(path: &Path) -> Result<Dataset, StoreError> {
    let lines: Vec<Line> = read_jsonl(path)?;
    let n = lines.len();
    let filter = match lines.first() {
        Some(Line::Header { format, filter, .. }) if format == DATASET_FORMAT => *filter,
        _ => return Err(StoreError::corrupt(path, 1, "missing dataset header")),
    };
    let mut records = Vec::new();
    for (i, line) in lines.into_iter().enumerate().skip(1) {
        match line {
            Line::Record(r) if i + 1 < n => records.push(r),
            Line::Trailer { count } if i + 1 == n => {
                if count != records.len() {
                    return Err(StoreError::corrupt(
                        path,
                        i + 1,
                        format!("trailer says {count} records, found {}", records.len()),
                    ));
                }
                return Ok(Dataset { filter, records });
            }
            _ => return Err(StoreError::corrupt(path, i + 1, "unexpected line")),
        }
    }
    Err(StoreError::corrupt(path, n.max(1), "missing dataset trailer"))
}

#[cfg(test)]
mod tests {
    use super::super::tests::record;
    use super::*;

    #[test]
    fn filters_and_trailer() {
        let recs: Vec<Record> = (0..10).map(|i| record("s", i, (i % 4) as u8)).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        assert_eq!(export_dataset(&recs, ExportFilter::All, &p).unwrap(), 10);
        assert_eq!(export_dataset(&recs, ExportFilter::NovelOnly, &p).unwrap(), 4);
        let n = export_dataset(&recs, ExportFilter::NontrivialOnly, &p).unwrap();
        assert_eq!(n, 2);
        let ds = read_dataset(&p).unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.filter, ExportFilter::NontrivialOnly);
        let text = std::fs::read_to_string(&p).unwrap();
        let first_record = text.lines().nth(1).unwrap();
        assert!(first_record.starts_with(r#"{"kind":"record","statement_id":"#));
    }

    #[test]
    fn empty_export_is_header_and_trailer() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        export_dataset(&[], ExportFilter::All, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 2);
        assert!(read_dataset(&p).unwrap().records.is_empty());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let recs: Vec<Record> = (0..3).map(|i| record("s", i, 3)).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        export_dataset(&recs, ExportFilter::All, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let cut: Vec<&str> = text.lines().take(3).collect();
        std::fs::write(&p, cut.join("\n")).unwrap();
        assert!(read_dataset(&p).unwrap_err().is_corruption());
    }
}
