//! Offline generator backends.
//!
//! [`MutationBackend`] stands in for a language model: it reads the theorem
//! statements out of the prompt payload and answers with fenced variants
//! produced by a fixed rule table. Output depends only on the configured
//! seed and the prompt, so runs are reproducible and resumable.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GeneratorBackend, PromptBundle, DIRECTIVE_MANY};
use crate::chat::{BackendError, Completion};
use crate::lean_surface::{classify, extract_theorems, parse_file, scan_delims, Declaration};

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    SwapSetOps,
    SwapInteriorClosure,
    DropHypothesis,
    RenameBinder,
    AddBinder,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '.'
}

/// Replaces whole-identifier occurrences of `from`.
fn replace_word(text: &str, from: &str, to: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    let mut prev: Option<char> = None;
    while let Some(at) = rest.find(from) {
        let before = rest[..at].chars().last().or(prev);
        let after = rest[at + from.len()..].chars().next();
        out.push_str(&rest[..at]);
        if before.is_none_or(|c| !is_ident_char(c)) && after.is_none_or(|c| !is_ident_char(c)) {
            out.push_str(to);
        } else {
            out.push_str(from);
        }
        prev = from.chars().last();
        rest = &rest[at + from.len()..];
    }
    out.push_str(rest);
    out
}

fn swap_words(text: &str, a: &str, b: &str) -> String {
    const MARK: &str = "\u{0}swap\u{0}";
    let tmp = replace_word(text, a, MARK);
    let tmp = replace_word(&tmp, b, a);
    tmp.replace(MARK, b)
}

fn swap_chars(text: &str, pairs: &[(char, char)]) -> String {
    text.chars()
        .map(|c| {
            pairs
                .iter()
                .find_map(|&(x, y)| {
                    if c == x {
                        Some(y)
                    } else if c == y {
                        Some(x)
                    } else {
                        None
                    }
                })
                .unwrap_or(c)
        })
        .collect()
}

/// A bracketed binder group before the statement's type colon.
struct Binder {
    span: std::ops::Range<usize>,
    open: char,
    names: Vec<String>,
}

fn binders(signature: &str) -> Vec<Binder> {
    let classes = classify(signature);
    let scan = scan_delims(signature, &classes);
    let mut out = Vec::new();
    let mut open_at: Option<(usize, char)> = None;
    for (i, c) in signature.char_indices() {
        if !classes[i].is_code() {
            continue;
        }
        let depth = scan.depth[i];
        match (open_at, depth, c) {
            (None, 0, ':') => break,
            (None, 0, '(' | '{' | '[' | '⦃') => open_at = Some((i, c)),
            (Some((start, open)), 1, ')' | '}' | ']' | '⦄') => {
                let inner = &signature[start + open.len_utf8()..i];
                let names = match inner.find(':') {
                    Some(colon) => inner[..colon].split_whitespace().map(str::to_owned).collect(),
                    None => Vec::new(),
                };
                out.push(Binder { span: start..i + c.len_utf8(), open, names });
                open_at = None;
            }
            _ => {}
        }
    }
    out
}

fn applicable(sig: &str) -> Vec<Rule> {
    let mut rules = Vec::new();
    if sig.contains(['∪', '∩', '⋃', '⋂']) {
        rules.push(Rule::SwapSetOps);
    }
    if sig.contains("interior") || sig.contains("closure") {
        rules.push(Rule::SwapInteriorClosure);
    }
    let bs = binders(sig);
    if bs.iter().any(is_hypothesis) {
        rules.push(Rule::DropHypothesis);
    }
    if bs.iter().any(|b| !b.names.is_empty()) {
        rules.push(Rule::RenameBinder);
    }
    rules.push(Rule::AddBinder);
    rules
}

fn is_hypothesis(b: &Binder) -> bool {
    b.open == '(' && !b.names.is_empty() && b.names.iter().all(|n| n.starts_with('h'))
}

fn apply(rule: Rule, sig: &str, rng: &mut ChaCha8Rng) -> String {
    match rule {
        Rule::SwapSetOps => swap_chars(sig, &[('∪', '∩'), ('⋃', '⋂')]),
        Rule::SwapInteriorClosure => swap_words(sig, "interior", "closure"),
        Rule::DropHypothesis => {
            let hyps: Vec<_> = binders(sig).into_iter().filter(is_hypothesis).collect();
            let b = hyps.choose(rng).expect("rule is applicable");
            let mut end = b.span.end;
            while sig[end..].starts_with(' ') {
                end += 1;
            }
            format!("{}{}", &sig[..b.span.start], &sig[end..])
        }
        Rule::RenameBinder => {
            let names: Vec<String> = binders(sig).into_iter().flat_map(|b| b.names).collect();
            let name = names.choose(rng).expect("rule is applicable");
            let fresh = format!("{name}{}", rng.gen_range(1..1000));
            replace_word(sig, name, &fresh)
        }
        Rule::AddBinder => format!("(n{} : ℕ) {sig}", rng.gen_range(0..1000)),
    }
}

fn base_name(name: &str) -> &str {
    let mut n = name;
    while let Some(pos) = n.rfind("_v") {
        let tail = &n[pos + 2..];
        if tail.len() == 4 && tail.chars().all(|c| c.is_ascii_hexdigit()) {
            n = &n[..pos];
        } else {
            break;
        }
    }
    n
}

/// Deterministic rule-table generator.
#[derive(Debug, Clone)]
pub struct MutationBackend {
    seed: u64,
    max_chunks: usize,
    decorate: bool,
}

impl MutationBackend {
    pub fn new(seed: u64) -> Self {
        MutationBackend { seed, max_chunks: 8, decorate: true }
    }

    /// Upper bound on chunks per answer.
    pub fn with_max_chunks(mut self, n: usize) -> Self {
        self.max_chunks = n.max(1);
        self
    }

    /// Whether to dress variants with attributes, modifiers and stray proofs
    /// the way a model sometimes does.
    pub fn with_decorations(mut self, on: bool) -> Self {
        self.decorate = on;
        self
    }

    fn variant(&self, decl: &Declaration, rng: &mut ChaCha8Rng) -> String {
        let mut sig = decl.signature.clone();
        let rounds = if rng.gen_bool(0.5) { 2 } else { 1 };
        for _ in 0..rounds {
            let rules = applicable(&sig);
            let rule = *rules.choose(rng).expect("AddBinder always applies");
            sig = apply(rule, &sig, rng);
        }
        let base = if decl.name.is_empty() { "conj" } else { base_name(&decl.name) };
        let name = format!("{base}_v{:04x}", rng.gen::<u16>());
        let (prefix, suffix) = if self.decorate {
            match rng.gen_range(0..4) {
                0 => ("@[simp] ", ""),
                1 => ("protected ", ""),
                2 => ("", "\n  sorry"),
                _ => ("", ""),
            }
        } else {
            ("", "")
        };
        format!("```lean\n{prefix}theorem {name} {sig} := by{suffix}\n```\n")
    }
}

impl GeneratorBackend for MutationBackend {
    fn id(&self) -> String {
        format!("mutation:{}", self.seed)
    }

    fn complete(&self, prompt: &PromptBundle) -> Result<Completion, BackendError> {
        let theorems = extract_theorems(&parse_file(&prompt.user_payload));
        if theorems.is_empty() {
            return Ok(Completion { text: String::new(), usage: None });
        }
        let many = prompt.system_prompt.contains(DIRECTIVE_MANY);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(prompt.user_payload.as_bytes()) ^ u64::from(many));
        let count = if many { self.max_chunks } else { theorems.len().min(self.max_chunks) };
        let mut order: Vec<usize> = (0..theorems.len()).collect();
        order.shuffle(&mut rng);
        let text = (0..count)
            .map(|k| self.variant(&theorems[order[k % order.len()]], &mut rng))
            .collect::<Vec<_>>()
            .join("\n");
        Ok(Completion { text, usage: None })
    }
}

/// Replays canned responses in order, repeating the last one.
#[derive(Debug)]
pub struct ScriptedGenerator {
    responses: Vec<Result<String, BackendError>>,
    calls: AtomicUsize,
}

impl ScriptedGenerator {
    pub fn new(responses: Vec<Result<String, BackendError>>) -> Self {
        assert!(!responses.is_empty(), "at least one scripted response");
        ScriptedGenerator { responses, calls: AtomicUsize::new(0) }
    }

    pub fn repeating(text: impl Into<String>) -> Self {
        Self::new(vec![Ok(text.into())])
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl GeneratorBackend for ScriptedGenerator {
    fn id(&self) -> String {
        "scripted".to_owned()
    }

    fn complete(&self, _prompt: &PromptBundle) -> Result<Completion, BackendError> {
        let i = self.calls.fetch_add(1, Ordering::SeqCst);
        self.responses[i.min(self.responses.len() - 1)].clone().map(|text| Completion { text, usage: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genpipe::{build_prompt, generate, postprocess};
    use crate::lean_surface::LeanFileStructure;

    const SEED: &str = "theorem semi_open_union {A B : Set X} (hA : SemiOpen A) (hB : SemiOpen B)\n  : SemiOpen (A ∪ B) := by\n  sorry\n";

    #[test]
    fn swaps_are_word_aware() {
        assert_eq!(
            swap_words("interior (closure A) ⊆ closure_mono", "interior", "closure"),
            "closure (interior A) ⊆ closure_mono"
        );
        assert_eq!(replace_word("A ∪ AB ∪ (A)", "A", "C"), "C ∪ AB ∪ (C)");
        assert_eq!(swap_chars("A ∪ B ∩ C", &[('∪', '∩')]), "A ∩ B ∪ C");
    }

    #[test]
    fn binder_groups_stop_at_type_colon() {
        let bs = binders("{A B : Set X} (hA : P A) [Fact q] : ∀ (x : X), x ∈ A");
        assert_eq!(bs.len(), 3);
        assert_eq!(bs[0].names, vec!["A", "B"]);
        assert!(is_hypothesis(&bs[1]));
        assert!(bs[2].names.is_empty());
    }

    #[test]
    fn variant_names_do_not_accumulate_suffixes() {
        assert_eq!(base_name("foo_v1a2b_v00ff"), "foo");
        assert_eq!(base_name("foo_vx"), "foo_vx");
    }

    #[test]
    fn directive_controls_volume() {
        let seed = parse_file(SEED);
        let backend = MutationBackend::new(7);
        let many = generate(&backend, &build_prompt(&seed, &[], true)).unwrap();
        let one = generate(&backend, &build_prompt(&seed, &[], false)).unwrap();
        assert!(many.chunks.len() >= 2);
        assert_eq!(one.chunks.len(), 1);
        let stmts = postprocess(&many);
        assert_eq!(stmts.statements.len(), many.chunks.len());
        assert_eq!(stmts.rejected, 0);
    }

    #[test]
    fn empty_payload_gives_no_chunks() {
        let raw = generate(&MutationBackend::new(1), &build_prompt(&LeanFileStructure::default(), &[], true)).unwrap();
        assert!(raw.chunks.is_empty());
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let prompt = build_prompt(&parse_file(SEED), &[], true);
        let a = generate(&MutationBackend::new(42), &prompt).unwrap();
        let b = generate(&MutationBackend::new(42), &prompt).unwrap();
        let c = generate(&MutationBackend::new(43), &prompt).unwrap();
        assert_eq!(a.chunks, b.chunks);
        assert_ne!(a.chunks, c.chunks);
    }

    #[test]
    fn scripted_repeats_last() {
        let g = ScriptedGenerator::new(vec![Err(BackendError::Unavailable("down".into())), Ok("x".into())]);
        let p = build_prompt(&LeanFileStructure::default(), &[], true);
        assert!(g.complete(&p).is_err());
        assert_eq!(g.complete(&p).unwrap().text, "x");
        assert_eq!(g.complete(&p).unwrap().text, "x");
        assert_eq!(g.calls(), 3);
    }
}
