use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use conjecture_core::genpipe::GeneratorBackend;
use conjecture_core::looper::{
    resume_pipeline, run_pipeline_with, seed_id_of, IterationLog, IterationState, LoopError, TerminationReason,
    SNAPSHOT_FILE,
};
use conjecture_core::reportkit::RunReport;
use serde_json::json;

use super::{load_config, record_config};
use crate::config::CliConfig;
use crate::events::EventLog;
use crate::exit::{loop_code, CmdResult, Code, Failure};
use crate::RunArgs;

fn apply_flags(cfg: &mut CliConfig, args: &RunArgs) {
    if let Some(n) = args.max_iterations {
        cfg.run.max_iterations = n;
    }
    if args.no_directive_many {
        cfg.run.directive_many = false;
    }
    if let Some(w) = args.workers {
        cfg.run.workers = w;
    }
    if let Some(s) = args.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.run.output_dir = o.clone();
    }
    if args.keep_logs {
        cfg.checker.keep_logs = true;
    }
}

/// Seed files named by `paths`; directories contribute their `.lean`
/// files in name order.
pub fn collect_seeds(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        if !p.is_dir() {
            out.push(p.clone());
            continue;
        }
        let entries = std::fs::read_dir(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
        let mut found: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "lean"))
            .collect();
        found.sort();
        if found.is_empty() {
            tracing::warn!("{}: no .lean files", p.display());
        }
        out.extend(found);
    }
    if out.is_empty() {
        return Err(Failure::usage("no seed files given"));
    }
    Ok(out)
}

enum SeedOutcome {
    Done(IterationState),
    Outage(IterationState),
    Failed(Code, anyhow::Error),
}

fn run_seed(
    seed: &Path,
    seed_dir: &Path,
    cfg: &CliConfig,
    args: &RunArgs,
    gen: &dyn GeneratorBackend,
    events: &EventLog,
) -> SeedOutcome {
    let chk = match cfg.checker(seed_dir) {
        Ok(c) => c,
        Err(e) => return SeedOutcome::Failed(Code::Usage, e),
    };
    let mut run_cfg = cfg.run_config(seed_dir.to_owned());
    run_cfg.stop_after = args.stop_after;
    let mut observe = |s: &IterationState, log: &IterationLog| {
        tracing::info!(
            "{} round {}: {} candidates, {} rejected, {} new",
            s.seed_id,
            log.iteration,
            log.candidates,
            log.rejected,
            log.newly_novel.len()
        );
        events.emit(
            "iteration",
            json!({
                "seed": s.seed_id,
                "iteration": log.iteration,
                "chunks": log.chunks,
                "candidates": log.candidates,
                "rejected": log.rejected,
                "newly_novel": log.newly_novel.len(),
                "backend_error": log.backend_error,
                "terminated_reason": s.terminated_reason,
            }),
        );
    };
    let has_snapshot = seed_dir.join(SNAPSHOT_FILE).is_file();
    let result: Result<_, LoopError> = if has_snapshot {
        if !args.resume {
            return SeedOutcome::Failed(
                Code::Usage,
                anyhow!("{} already holds a run; pass --resume to continue it", seed_dir.display()),
            );
        }
        tracing::info!("resuming {}", seed_dir.display());
        resume_pipeline(seed_dir, gen, chk.as_ref(), &run_cfg, &mut observe)
    } else {
        run_pipeline_with(seed, gen, chk.as_ref(), &run_cfg, &mut observe)
    };
    match result {
        Ok((state, _)) if state.terminated_reason == Some(TerminationReason::BackendOutage) => {
            SeedOutcome::Outage(state)
        }
        Ok((state, _)) => SeedOutcome::Done(state),
        Err(e) => SeedOutcome::Failed(loop_code(&e), e.into()),
    }
}

pub fn run(config: Option<&Path>, args: &RunArgs) -> CmdResult {
    let mut cfg = load_config(config)?;
    apply_flags(&mut cfg, args);
    if cfg.run.max_iterations == 0 {
        return Err(Failure::usage("max_iterations must be at least 1"));
    }
    let seeds = collect_seeds(&args.seeds)?;
    let out = cfg.run.output_dir.clone();
    cfg.checker(&out).map_err(|e| Failure::new(Code::Usage, e))?;
    record_config(&cfg, &out)?;
    let events = EventLog::open(&out).map_err(|e| Failure::new(Code::Failure, anyhow!("{}: {e}", out.display())))?;
    events.emit("run_start", json!({ "seeds": seeds.len(), "seed": cfg.run.seed }));
    let gen = cfg.generator();

    let mut states = Vec::new();
    let mut failures = Vec::new();
    let mut ids = BTreeSet::new();
    for seed in &seeds {
        let id = seed_id_of(seed);
        let outcome = if ids.insert(id.clone()) {
            run_seed(seed, &out.join(&id), &cfg, args, gen.as_ref(), &events)
        } else {
            SeedOutcome::Failed(Code::Usage, anyhow!("seed id {id} is used by an earlier seed"))
        };
        match outcome {
            SeedOutcome::Done(state) => {
                events.emit(
                    "seed_done",
                    json!({ "seed": id, "iterations": state.iteration, "terminated_reason": state.terminated_reason }),
                );
                states.push(state);
            }
            SeedOutcome::Outage(state) => {
                tracing::error!("{}: generator unavailable after round {}", seed.display(), state.iteration);
                events.emit(
                    "seed_failed",
                    json!({ "seed": id, "code": Code::Backend.as_u8(), "error": "backend outage" }),
                );
                failures.push(Code::Backend);
                states.push(state);
            }
            SeedOutcome::Failed(code, e) => {
                tracing::error!("{}: {e:#}", seed.display());
                events.emit("seed_failed", json!({ "seed": id, "code": code.as_u8(), "error": format!("{e:#}") }));
                failures.push(code);
            }
        }
    }

    let refs: Vec<&IterationState> = states.iter().collect();
    let report = RunReport::from_states(&refs);
    report.write(&out)?;
    print!("{}", report.render_table());
    events.emit("run_end", json!({ "seeds": seeds.len(), "failed": failures.len(), "aggregate": report.aggregate }));

    if failures.len() < seeds.len() {
        return Ok(());
    }
    let code = match failures.first() {
        Some(&first) if failures.iter().all(|&c| c == first) => first,
        _ => Code::Failure,
    };
    Err(Failure::new(code, anyhow!("all {} seeds failed", seeds.len())))
}
