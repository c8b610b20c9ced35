pub mod export;
pub mod parse;
pub mod prove;
pub mod run;
pub mod stats;

use std::path::{Path, PathBuf};

use conjecture_core::looper::{load_records, load_state, IterationState, Record, SNAPSHOT_FILE};
use conjecture_core::store::write_json;

use crate::config::CliConfig;
use crate::exit::{Code, Failure};

pub const RESOLVED_CONFIG: &str = "config.resolved.json";

/// Logs the effective config and stores it next to the outputs.
fn record_config(cfg: &CliConfig, out: &Path) -> Result<(), Failure> {
    let text = serde_json::to_string(cfg).map_err(|e| Failure::new(Code::Failure, e))?;
    tracing::info!("resolved config: {text}");
    std::fs::create_dir_all(out).map_err(|e| Failure::new(Code::Failure, anyhow::anyhow!("{}: {e}", out.display())))?;
    write_json(&out.join(RESOLVED_CONFIG), cfg)?;
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<CliConfig, Failure> {
    CliConfig::load(path).map_err(|e| Failure::new(Code::Usage, e))
}

/// Seed run directories named by `paths`: each path is either one, or a
/// batch directory whose immediate subdirectories holding a snapshot are
/// taken in name order.
fn seed_dirs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        if p.join(SNAPSHOT_FILE).is_file() {
            out.push(p.clone());
            continue;
        }
        let entries = std::fs::read_dir(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
        let mut found: Vec<PathBuf> =
            entries.filter_map(Result::ok).map(|e| e.path()).filter(|d| d.join(SNAPSHOT_FILE).is_file()).collect();
        if found.is_empty() {
            return Err(Failure::usage(format!("{}: no run directories found", p.display())));
        }
        found.sort();
        out.extend(found);
    }
    Ok(out)
}

/// Snapshot and persisted records of each seed directory.
fn load_runs(dirs: &[PathBuf]) -> Result<Vec<(IterationState, Vec<Record>)>, Failure> {
    dirs.iter()
        .map(|d| {
            let state = load_state(d)?;
            let records = load_records(d)?;
            Ok((state, records))
        })
        .collect()
}
