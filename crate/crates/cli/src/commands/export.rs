use conjecture_core::looper::Record;
use conjecture_core::reportkit::{export_dataset, ExportFilter};

use super::{load_runs, seed_dirs};
use crate::exit::CmdResult;
use crate::ExportArgs;

pub fn run(args: &ExportArgs) -> CmdResult {
    let runs = load_runs(&seed_dirs(&args.run_dirs)?)?;
    let records: Vec<Record> = runs.into_iter().flat_map(|(_, r)| r).collect();
    let filter = ExportFilter::from(args.filter);
    let n = export_dataset(&records, filter, &args.out)?;
    println!("exported {n} of {} records to {}", records.len(), args.out.display());
    Ok(())
}
