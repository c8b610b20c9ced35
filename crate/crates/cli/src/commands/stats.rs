use conjecture_core::looper::Record;
use conjecture_core::reportkit::{summarize, RunReport};

use super::{load_runs, seed_dirs};
use crate::exit::{CmdResult, Code, Failure};
use crate::StatsArgs;

/// Report rebuilt from the per-round record files, never from the
/// stored report.
pub fn recompute(run_dirs: &[std::path::PathBuf]) -> Result<RunReport, Failure> {
    let runs = load_runs(&seed_dirs(run_dirs)?)?;
    let records: Vec<Record> = runs.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
    let mut report = summarize(&records);
    for (state, _) in &runs {
        report.set_run_info(&state.seed_id, state.iteration, state.terminated_reason);
    }
    Ok(report)
}

pub fn run(args: &StatsArgs) -> CmdResult {
    let report = recompute(&args.run_dirs)?;
    if args.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::new(Code::Failure, e))?;
        println!("{text}");
    } else {
        print!("{}", report.render_table());
    }
    Ok(())
}
