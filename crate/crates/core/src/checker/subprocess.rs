use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{parse_diagnostics, CheckRequest, CheckerBackend, CheckerError, Severity};

/// Runs a Lean executable on a scratch file inside a project workspace,
/// typically `lake env lean` in a Mathlib-enabled project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeanSubprocess {
    pub command: Vec<String>,
    pub workspace: PathBuf,
    /// Where scratch files go. Defaults to the system temp dir.
    #[serde(default)]
    pub scratch_dir: Option<PathBuf>,
    /// When set, every request's source and output are written here.
    #[serde(default)]
    pub keep_logs: Option<PathBuf>,
}

const POLL: Duration = Duration::from_millis(20);

impl LeanSubprocess {
    pub fn new(workspace: impl Into<PathBuf>) -> Self {
        LeanSubprocess {
            command: vec!["lake".into(), "env".into(), "lean".into()],
            workspace: workspace.into(),
            scratch_dir: None,
            keep_logs: None,
        }
    }

    /// Runs `<command> --version` to see whether the toolchain is usable.
    pub fn probe(&self) -> Result<String, CheckerError> {
        let (program, args) = self.split_command()?;
        let out = Command::new(program)
            .args(args)
            .arg("--version")
            .current_dir(&self.workspace)
            .output()
            .map_err(|e| CheckerError::Crash(format!("cannot start {program}: {e}")))?;
        if out.status.success() {
            Ok(String::from_utf8_lossy(&out.stdout).trim().to_owned())
        } else {
            Err(CheckerError::Crash(String::from_utf8_lossy(&out.stderr).trim().to_owned()))
        }
    }

    fn split_command(&self) -> Result<(&str, &[String]), CheckerError> {
        match self.command.split_first() {
            Some((p, rest)) => Ok((p.as_str(), rest)),
            None => Err(CheckerError::Crash("empty checker command".into())),
        }
    }

    fn write_log(&self, source: &str, output: &str) {
        let Some(dir) = &self.keep_logs else { return };
        let name = format!("{:016x}.log", fnv(source));
        let body = format!("{source}\n-- output --\n{output}");
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join(name), body)) {
            tracing::warn!("cannot keep checker log: {e}");
        }
    }
}

fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100000001b3))
}

fn drain<R: Read + Send + 'static>(src: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut r) = src {
            let _ = r.read_to_end(&mut buf);
        }
        String::from_utf8_lossy(&buf).into_owned()
    })
}

impl CheckerBackend for LeanSubprocess {
    fn id(&self) -> String {
        format!("lean:{}", self.command.join(" "))
    }

    fn run(&self, req: &CheckRequest) -> Result<String, CheckerError> {
        let source = req.render();
        let scratch = self.scratch_dir.clone().unwrap_or_else(std::env::temp_dir);
        let io = |e: std::io::Error| CheckerError::Crash(e.to_string());
        let mut file = tempfile::Builder::new().prefix("Conj").suffix(".lean").tempfile_in(&scratch).map_err(io)?;
        file.write_all(source.as_bytes()).map_err(io)?;
        file.flush().map_err(io)?;

        let (program, args) = self.split_command()?;
        let mut child = Command::new(program)
            .args(args)
            .arg(file.path())
            .current_dir(&self.workspace)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| CheckerError::Crash(format!("cannot start {program}: {e}")))?;
        let out = drain(child.stdout.take());
        let err = drain(child.stderr.take());

        let started = Instant::now();
        let status = loop {
            match child.try_wait().map_err(io)? {
                Some(status) => break status,
                None if started.elapsed() >= req.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    self.write_log(&source, "(timed out)");
                    return Err(CheckerError::Timeout(req.timeout));
                }
                None => thread::sleep(POLL),
            }
        };
        let mut output = out.join().unwrap_or_default();
        let stderr = err.join().unwrap_or_default();
        if !stderr.is_empty() {
            if !output.is_empty() && !output.ends_with('\n') {
                output.push('\n');
            }
            output.push_str(&stderr);
        }
        self.write_log(&source, &output);

        // Lean exits nonzero when it reports errors; only a failure without
        // any error diagnostic is a crash.
        if !status.success() && parse_diagnostics(&output).iter().all(|d| d.severity != Severity::Error) {
            let tail: String = output.lines().rev().take(5).collect::<Vec<_>>().join(" | ");
            return Err(CheckerError::Crash(format!("{status}: {tail}")));
        }
        Ok(output)
    }
}
