//! Prompt construction, generation backends and statement post-processing.

mod mutation;
mod postprocess;

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::chat::{BackendError, ChatClient, Completion, TokenUsage};
use crate::lean_surface::{extract_theorems, ContextBlock, LeanFileStructure};

pub use mutation::{MutationBackend, ScriptedGenerator};
pub use postprocess::{decode_unicode_escapes, postprocess_chunks, Extracted, Postprocessed};

/// The clause that keeps generation volume independent of seed size.
pub const DIRECTIVE_MANY: &str = "as many as possible";

const PROMPT_HEAD: &str = "Please generate new theorems in Lean 4 format that are similar but not \
identical to each theorem provided in the text";
const PROMPT_TAIL: &str = ". For each theorem in the text, generate a corresponding new theorem with \
slight variations in content. Do not include proofs, annotations, or imports. The new theorems \
begin with '```lean theorem', not any annotations. They should end with ':= by```'. Additionally, \
please use standard mathematical symbols (e.g., ∀, ∃, √) instead of Unicode escape sequences \
(e.g., \\u2200).";

/// Imports every assembled candidate starts with.
pub const PRELUDE_IMPORTS: [&str; 2] = ["Mathlib", "Aesop"];

pub fn system_prompt(directive_many: bool) -> String {
    if directive_many {
        format!("{PROMPT_HEAD} {DIRECTIVE_MANY}{PROMPT_TAIL}")
    } else {
        format!("{PROMPT_HEAD}{PROMPT_TAIL}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub user_payload: String,
    pub directive_many: bool,
}

/// One generated statement with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjectureCandidate {
    /// `<seed>:<iteration>:<index>`.
    pub id: String,
    pub statement: String,
    pub raw_text: String,
    pub seed_id: String,
    pub iteration: u32,
    /// Imports, context and statement, ending in `:= by`. The proof slot is
    /// filled in by the checker.
    pub assembled_source: String,
}

impl ConjectureCandidate {
    pub fn new(
        seed_id: &str,
        iteration: u32,
        index: usize,
        statement: String,
        raw_text: String,
        ctx: &ContextBlock,
    ) -> Self {
        let assembled_source = augment(&statement, ctx);
        ConjectureCandidate {
            id: format!("{seed_id}:{iteration}:{index}"),
            statement,
            raw_text,
            seed_id: seed_id.to_owned(),
            iteration,
            assembled_source,
        }
    }

    /// The assembled source without the trailing statement.
    pub fn preamble(&self) -> &str {
        self.assembled_source.strip_suffix(self.statement.as_str()).unwrap_or(&self.assembled_source)
    }
}

/// Builds the generation prompt. Seed theorems come first, then accumulated
/// conjectures; a statement already listed is not repeated.
pub fn build_prompt(
    seed: &LeanFileStructure,
    accumulated: &[ConjectureCandidate],
    directive_many: bool,
) -> PromptBundle {
    let mut statements: Vec<String> = Vec::new();
    let seeds = extract_theorems(seed).into_iter().map(|d| d.as_statement());
    for s in seeds.chain(accumulated.iter().map(|c| c.statement.clone())) {
        if !statements.contains(&s) {
            statements.push(s);
        }
    }
    PromptBundle { system_prompt: system_prompt(directive_many), user_payload: statements.join("\n\n"), directive_many }
}

/// Source of raw generations.
pub trait GeneratorBackend: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, prompt: &PromptBundle) -> Result<Completion, BackendError>;
}

/// Chat-completion model behind an HTTP endpoint.
pub struct HttpGenerator {
    client: ChatClient,
}

impl HttpGenerator {
    pub fn new(client: ChatClient) -> Self {
        HttpGenerator { client }
    }
}

impl GeneratorBackend for HttpGenerator {
    fn id(&self) -> String {
        format!("http:{}", self.client.config().model)
    }

    fn complete(&self, prompt: &PromptBundle) -> Result<Completion, BackendError> {
        self.client.complete(&prompt.system_prompt, &prompt.user_payload)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGeneration {
    pub chunks: Vec<String>,
    pub backend_id: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub token_usage: Option<TokenUsage>,
}

/// Calls the backend and splits its answer into chunks.
pub fn generate(backend: &dyn GeneratorBackend, prompt: &PromptBundle) -> Result<RawGeneration, BackendError> {
    let completion = backend.complete(prompt)?;
    Ok(RawGeneration {
        chunks: split_chunks(&completion.text),
        backend_id: backend.id(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        token_usage: completion.usage,
    })
}

/// Splits a response into chunks: the elements of a JSON list of strings,
/// else one chunk per fenced block, else the whole text.
pub fn split_chunks(text: &str) -> Vec<String> {
    if text.trim().is_empty() {
        return Vec::new();
    }
    if let Ok(list) = serde_json::from_str::<Vec<String>>(text.trim()) {
        return list.into_iter().filter(|s| !s.trim().is_empty()).collect();
    }
    let mut chunks = Vec::new();
    let mut current: Option<String> = None;
    let mut fenced = false;
    for line in text.split_inclusive('\n') {
        let t = line.trim();
        match current.as_mut() {
            None if t.starts_with("```") => {
                fenced = true;
                if t.len() > 3 && t[3..].contains("```") {
                    chunks.push(t.to_owned());
                } else {
                    current = Some(line.to_owned());
                }
            }
            None => {}
            Some(buf) => {
                buf.push_str(line);
                if t.starts_with("```") || t.ends_with("```") {
                    chunks.push(buf.trim_end().to_owned());
                    current = None;
                }
            }
        }
    }
    if let Some(buf) = current {
        chunks.push(buf.trim_end().to_owned());
    }
    if !fenced {
        chunks.push(text.trim().to_owned());
    }
    chunks
}

/// Post-processes a raw generation into bare statements.
pub fn postprocess(raw: &RawGeneration) -> Postprocessed {
    postprocess_chunks(&raw.chunks)
}

/// Prepends the fixed imports and the seed context to a statement.
pub fn augment(statement: &str, ctx: &ContextBlock) -> String {
    let mut out = String::new();
    for i in PRELUDE_IMPORTS {
        out.push_str("import ");
        out.push_str(i);
        out.push('\n');
    }
    out.push('\n');
    for o in &ctx.opens {
        out.push_str(&format!("open {o}\n"));
    }
    if !ctx.opens.is_empty() {
        out.push('\n');
    }
    for v in &ctx.variables {
        out.push_str(&format!("variable {v}\n"));
    }
    if !ctx.variables.is_empty() {
        out.push('\n');
    }
    out.push_str(statement);
    out
}

/// Dedup key for a statement: the name is dropped and whitespace runs
/// collapse to one space.
pub fn normalize_statement(statement: &str) -> String {
    let mut words = statement.split_whitespace();
    let first = words.next();
    let rest: Vec<&str> = match first {
        Some("theorem") | Some("lemma") => {
            // the name may be glued to a binder: `theorem foo(x : ℕ)`
            let name_and_more = words.next().unwrap_or("");
            let cut = name_and_more
                .char_indices()
                .find(|&(_, c)| "([{⟨⦃:".contains(c))
                .map_or(name_and_more.len(), |(i, _)| i);
            let tail = &name_and_more[cut..];
            std::iter::once(tail).filter(|t| !t.is_empty()).chain(words).collect()
        }
        Some(w) => std::iter::once(w).chain(words).collect(),
        None => Vec::new(),
    };
    rest.join(" ")
}

/// Replaces the declaration name of a `theorem NAME ...` statement.
pub fn rename_statement(statement: &str, new_name: &str) -> String {
    let body = statement.strip_prefix("theorem").unwrap_or(statement);
    let trimmed = body.trim_start();
    let name_len = trimmed
        .char_indices()
        .find(|&(_, c)| c.is_whitespace() || "([{⟨⦃:".contains(c))
        .map_or(trimmed.len(), |(i, _)| i);
    format!("theorem {new_name} {}", trimmed[name_len..].trim_start())
}
