use std::path::{Path, PathBuf};

use anyhow::Context;
use conjecture_core::chat::{ChatClient, ChatConfig};
use conjecture_core::checker::{CheckerBackend, LeanSubprocess, StubChecker, Timeouts};
use conjecture_core::genpipe::{GeneratorBackend, HttpGenerator, MutationBackend};
use conjecture_core::looper::RunConfig;
use conjecture_core::prover_harness::{HttpProver, ProverBackend, StubProver};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub max_iterations: u32,
    pub directive_many: bool,
    pub workers: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        let base = RunConfig::default();
        RunSection {
            max_iterations: base.max_iterations,
            directive_many: base.directive_many,
            workers: base.workers,
            seed: 0,
            output_dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    #[default]
    Mutation,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    pub backend: GeneratorKind,
    pub max_chunks: usize,
    pub decorations: bool,
    pub chat: ChatConfig,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        GeneratorSection {
            backend: GeneratorKind::Mutation,
            max_chunks: 8,
            decorations: true,
            chat: ChatConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CheckerKind {
    #[default]
    Stub,
    Lean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StubProfile {
    #[default]
    Permissive,
    AllKnown,
    AllTrivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckerSection {
    pub backend: CheckerKind,
    pub stub_profile: StubProfile,
    /// JSON file describing a scripted stub; overrides `stub_profile`.
    pub stub_script: Option<PathBuf>,
    pub lean_command: Vec<String>,
    pub lean_workspace: Option<PathBuf>,
    pub keep_logs: bool,
}

impl Default for CheckerSection {
    fn default() -> Self {
        CheckerSection {
            backend: CheckerKind::Stub,
            stub_profile: StubProfile::Permissive,
            stub_script: None,
            lean_command: vec!["lake".into(), "env".into(), "lean".into()],
            lean_workspace: None,
            keep_logs: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProverKind {
    #[default]
    Stub,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProverSection {
    pub backend: ProverKind,
    pub stub_script: Option<PathBuf>,
    pub k: u32,
    pub timeout_secs: u64,
    pub chat: ChatConfig,
}

impl Default for ProverSection {
    fn default() -> Self {
        ProverSection {
            backend: ProverKind::Stub,
            stub_script: None,
            k: 128,
            timeout_secs: 300,
            chat: ChatConfig::default(),
        }
    }
}

/// Everything a command needs, after defaults, file and flags are merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub run: RunSection,
    pub timeouts: Timeouts,
    pub generator: GeneratorSection,
    pub checker: CheckerSection,
    pub prover: ProverSection,
}

impl CliConfig {
    /// Defaults overlaid with the TOML file at `path`, if any.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(CliConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))
            }
        }
    }

    pub fn run_config(&self, output_dir: PathBuf) -> RunConfig {
        RunConfig {
            max_iterations: self.run.max_iterations,
            directive_many: self.run.directive_many,
            workers: self.run.workers,
            timeouts: self.timeouts,
            output_dir: Some(output_dir),
            stop_after: None,
        }
    }

    pub fn generator(&self) -> Box<dyn GeneratorBackend> {
        match self.generator.backend {
            GeneratorKind::Mutation => Box::new(
                MutationBackend::new(self.run.seed)
                    .with_max_chunks(self.generator.max_chunks)
                    .with_decorations(self.generator.decorations),
            ),
            GeneratorKind::Http => Box::new(HttpGenerator::new(ChatClient::from_env(self.generator.chat.clone()))),
        }
    }

    /// Checker for one run directory; Lean logs go under it when kept.
    pub fn checker(&self, run_dir: &Path) -> anyhow::Result<Box<dyn CheckerBackend>> {
        let c = &self.checker;
        match c.backend {
            CheckerKind::Stub => {
                if let Some(p) = &c.stub_script {
                    let text = std::fs::read_to_string(p)
                        .with_context(|| format!("cannot read stub script {}", p.display()))?;
                    let stub: StubChecker =
                        serde_json::from_str(&text).with_context(|| format!("invalid stub script {}", p.display()))?;
                    return Ok(Box::new(stub));
                }
                Ok(Box::new(match c.stub_profile {
                    StubProfile::Permissive => StubChecker::permissive(),
                    StubProfile::AllKnown => StubChecker::all_known(),
                    StubProfile::AllTrivial => StubChecker::all_trivial(),
                }))
            }
            CheckerKind::Lean => {
                let workspace =
                    c.lean_workspace.clone().context("checker.lean_workspace is required for the lean backend")?;
                let mut lean = LeanSubprocess::new(workspace);
                lean.command = c.lean_command.clone();
                lean.keep_logs = c.keep_logs.then(|| run_dir.join("logs"));
                Ok(Box::new(lean))
            }
        }
    }

    pub fn prover(&self) -> anyhow::Result<Box<dyn ProverBackend>> {
        match self.prover.backend {
            ProverKind::Stub => match &self.prover.stub_script {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .with_context(|| format!("cannot read prover script {}", p.display()))?;
                    let stub: StubProver = serde_json::from_str(&text)
                        .with_context(|| format!("invalid prover script {}", p.display()))?;
                    Ok(Box::new(stub))
                }
                None => Ok(Box::new(StubProver::new())),
            },
            ProverKind::Http => Ok(Box::new(HttpProver::new(ChatClient::from_env(self.prover.chat.clone())))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: CliConfig =
            toml::from_str("[run]\nmax_iterations = 4\n[checker]\nstub_profile = \"all_known\"\n").unwrap();
        assert_eq!(cfg.run.max_iterations, 4);
        assert!(cfg.run.directive_many);
        assert_eq!(cfg.checker.stub_profile, StubProfile::AllKnown);
        assert_eq!(cfg.prover.k, 128);
        assert_eq!(cfg.timeouts, Timeouts::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<CliConfig>("[run]\nmax_iter = 4\n").is_err());
    }

    #[test]
    fn config_serializes_back() {
        let cfg = CliConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<CliConfig>(&text).unwrap(), cfg);
    }
}
