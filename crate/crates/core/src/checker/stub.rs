use serde::{Deserialize, Serialize};

use super::{CheckRequest, CheckerBackend, CheckerError, ProofSlot};
use crate::genpipe::normalize_statement;

/// Proof slot without its payload, for matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Sorry,
    ExactSearch,
    Aesop,
    Tactic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StubResponse {
    Output { text: String },
    Timeout,
    Crash { message: String },
}

impl StubResponse {
    pub fn output(text: impl Into<String>) -> Self {
        StubResponse::Output { text: text.into() }
    }

    pub fn crash(message: impl Into<String>) -> Self {
        StubResponse::Crash { message: message.into() }
    }

    fn answer(&self, req: &CheckRequest) -> Result<String, CheckerError> {
        match self {
            StubResponse::Output { text } => Ok(text.clone()),
            StubResponse::Timeout => Err(CheckerError::Timeout(req.timeout)),
            StubResponse::Crash { message } => Err(CheckerError::Crash(message.clone())),
        }
    }
}

/// Answers requests whose slot matches and whose statement contains
/// `contains`. For tactic requests `proof_contains` is matched against the
/// proof as well.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubRule {
    #[serde(default)]
    pub slot: Option<SlotKind>,
    #[serde(default)]
    pub contains: String,
    #[serde(default)]
    pub proof_contains: Option<String>,
    pub response: StubResponse,
}

impl StubRule {
    pub fn new(slot: Option<SlotKind>, contains: impl Into<String>, response: StubResponse) -> Self {
        StubRule { slot, contains: contains.into(), proof_contains: None, response }
    }

    pub fn with_proof(mut self, needle: impl Into<String>) -> Self {
        self.proof_contains = Some(needle.into());
        self
    }

    fn matches(&self, req: &CheckRequest) -> bool {
        if self.slot.is_some_and(|s| s != req.proof_slot.kind()) {
            return false;
        }
        if !req.statement.contains(&self.contains) {
            return false;
        }
        match (&self.proof_contains, &req.proof_slot) {
            (None, _) => true,
            (Some(needle), ProofSlot::Tactic(proof)) => proof.contains(needle.as_str()),
            (Some(_), _) => false,
        }
    }
}

/// Lean-style output snippets for scripting the stub.
pub mod canned {
    const FILE: &str = "Check.lean";

    pub fn sorry_warning() -> String {
        format!("{FILE}:1:8: warning: {}", super::super::SORRY_WARNING)
    }

    pub fn error(message: &str) -> String {
        format!("{FILE}:1:0: error: {message}")
    }

    pub fn warning(message: &str) -> String {
        format!("{FILE}:1:0: warning: {message}")
    }

    pub fn unused_variable(name: &str) -> String {
        format!("{FILE}:1:0: warning: unused variable `{name}`\nnote: this linter can be disabled with `set_option linter.unusedVariables false`")
    }

    pub fn exact_found(term: &str) -> String {
        format!("{FILE}:1:2: info: Try this: {term}")
    }

    pub fn exact_failed() -> String {
        error("`exact?` could not close the goal. Try `apply?` to see partial suggestions.")
    }

    pub fn aesop_failed() -> String {
        error("aesop: failed to prove the goal after exhaustive search.")
    }
}

/// Scripted checker for tests and offline runs. With `self_match` set,
/// `exact?` finds any replayed context lemma equal to the statement up to
/// naming and whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StubChecker {
    pub rules: Vec<StubRule>,
    pub sorry: StubResponse,
    pub exact: StubResponse,
    pub aesop: StubResponse,
    /// `None` judges the proof text: empty fails, `sorry` warns, else clean.
    pub tactic: Option<StubResponse>,
    pub self_match: bool,
}

impl Default for StubChecker {
    fn default() -> Self {
        StubChecker::permissive()
    }
}

impl StubChecker {
    /// Everything is valid and novel, nothing is trivial.
    pub fn permissive() -> Self {
        StubChecker {
            rules: Vec::new(),
            sorry: StubResponse::output(canned::sorry_warning()),
            exact: StubResponse::output(canned::exact_failed()),
            aesop: StubResponse::output(canned::aesop_failed()),
            tactic: None,
            self_match: true,
        }
    }

    pub fn all_known() -> Self {
        StubChecker { exact: StubResponse::output(canned::exact_found("exact trivial")), ..StubChecker::permissive() }
    }

    pub fn all_trivial() -> Self {
        StubChecker { aesop: StubResponse::output(String::new()), ..StubChecker::permissive() }
    }

    pub fn with_rule(mut self, rule: StubRule) -> Self {
        self.rules.push(rule);
        self
    }

    fn self_match(&self, req: &CheckRequest) -> Option<String> {
        let key = normalize_statement(&req.statement);
        req.context_lemmas
            .iter()
            .position(|l| normalize_statement(l) == key)
            .map(|i| canned::exact_found(&format!("exact {}", super::context_lemma_name(i))))
    }
}

impl CheckerBackend for StubChecker {
    fn id(&self) -> String {
        "stub".into()
    }

    fn run(&self, req: &CheckRequest) -> Result<String, CheckerError> {
        if self.self_match && req.proof_slot == ProofSlot::ExactSearch {
            if let Some(out) = self.self_match(req) {
                return Ok(out);
            }
        }
        if let Some(rule) = self.rules.iter().find(|r| r.matches(req)) {
            return rule.response.answer(req);
        }
        match &req.proof_slot {
            ProofSlot::Sorry => self.sorry.answer(req),
            ProofSlot::ExactSearch => self.exact.answer(req),
            ProofSlot::Aesop => self.aesop.answer(req),
            ProofSlot::Tactic(proof) => match &self.tactic {
                Some(r) => r.answer(req),
                None if proof.trim().is_empty() => Ok(canned::error("unsolved goals")),
                None if proof.contains("sorry") => Ok(canned::sorry_warning()),
                None => Ok(String::new()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn req(stmt: &str, slot: ProofSlot) -> CheckRequest {
        CheckRequest {
            assembled_source: stmt.into(),
            statement: stmt.into(),
            proof_slot: slot,
            context_lemmas: vec![],
            timeout: Duration::from_secs(3),
        }
    }

    #[test]
    fn rules_take_precedence_over_defaults() {
        let stub = StubChecker::permissive()
            .with_rule(StubRule::new(Some(SlotKind::Tactic), "", StubResponse::output("x")).with_proof("simp"));
        assert_eq!(stub.run(&req("theorem t : True := by", ProofSlot::Tactic("simp".into()))).unwrap(), "x");
        assert_eq!(stub.run(&req("theorem t : True := by", ProofSlot::Tactic("rfl".into()))).unwrap(), "");
        assert_eq!(
            stub.run(&req("theorem t : True := by", ProofSlot::Tactic("  sorry".into()))).unwrap(),
            canned::sorry_warning()
        );
    }

    #[test]
    fn timeout_carries_request_budget() {
        let stub = StubChecker { sorry: StubResponse::Timeout, ..StubChecker::permissive() };
        assert_eq!(
            stub.run(&req("theorem t : True := by", ProofSlot::Sorry)),
            Err(CheckerError::Timeout(Duration::from_secs(3)))
        );
    }

    #[test]
    fn loads_from_json() {
        let json = r#"{"rules":[{"slot":"aesop","contains":"easy","response":{"kind":"output","text":""}}],
                       "exact":{"kind":"timeout"}}"#;
        let stub: StubChecker = serde_json::from_str(json).unwrap();
        assert_eq!(stub.exact, StubResponse::Timeout);
        assert_eq!(stub.sorry, StubResponse::output(canned::sorry_warning()));
        assert!(stub.self_match);
        assert_eq!(stub.run(&req("theorem easy : True := by", ProofSlot::Aesop)).unwrap(), "");
    }
}
