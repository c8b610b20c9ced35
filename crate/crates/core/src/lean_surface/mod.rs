//! Rule-based structural scanner for Lean 4 source files.
//!
//! This is not a Lean grammar. Commands are recognised by keyword at the
//! start of a column-zero line that is not inside a comment; everything up
//! to the next such line belongs to the same item. That is enough to pull
//! out imports, opened namespaces, `variable` binders and the declarations
//! used as generation seeds, and it never fails: text it does not understand
//! is kept as an un-modelled segment so the file can be reassembled exactly.

mod mask;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub(crate) use mask::{classify, first_top_level_assign, is_balanced, scan_delims, starts_with_word, ByteClass};

/// Declaration keyword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclKind {
    Theorem,
    Lemma,
    Def,
    Abbrev,
    Instance,
    Example,
    Other,
}

impl DeclKind {
    fn from_keyword(word: &str) -> Option<DeclKind> {
        Some(match word {
            "theorem" => DeclKind::Theorem,
            "lemma" => DeclKind::Lemma,
            "def" => DeclKind::Def,
            "abbrev" => DeclKind::Abbrev,
            "instance" => DeclKind::Instance,
            "example" => DeclKind::Example,
            "structure" | "class" | "inductive" | "coinductive" | "axiom" | "opaque" => DeclKind::Other,
            _ => return None,
        })
    }
}

const MODIFIERS: [&str; 8] =
    ["private", "protected", "noncomputable", "nonrec", "partial", "unsafe", "local", "scoped"];

const OTHER_COMMANDS: [&str; 24] = [
    "universe",
    "set_option",
    "attribute",
    "notation",
    "infix",
    "infixl",
    "infixr",
    "prefix",
    "postfix",
    "macro",
    "macro_rules",
    "syntax",
    "elab",
    "deriving",
    "mutual",
    "initialize",
    "export",
    "omit",
    "include",
    "alias",
    "irreducible_def",
    "suppress_compilation",
    "open_locale",
    "assert_not_exists",
];

/// One declaration found in a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Declaration {
    pub kind: DeclKind,
    /// The keyword as written (`theorem`, `structure`, ...).
    pub keyword: String,
    pub modifiers: Vec<String>,
    /// Contents of each `@[...]` group, without the brackets.
    pub attributes: Vec<String>,
    /// Empty for anonymous declarations.
    pub name: String,
    /// Text between the name and the top-level `:=` (or `where` / `|`).
    pub signature: String,
    /// Body after `:=`, with a leading `by` removed. `None` if there is no body.
    pub proof_span: Option<String>,
    pub source_span: Range<usize>,
    /// Set when brackets in the declaration do not nest properly.
    pub unbalanced: bool,
}

impl Declaration {
    /// Renders the declaration as a bare `theorem ... := by` statement.
    pub fn as_statement(&self) -> String {
        let mut s = String::from("theorem");
        if !self.name.is_empty() {
            s.push(' ');
            s.push_str(&self.name);
        }
        if !self.signature.is_empty() {
            s.push(' ');
            s.push_str(&self.signature);
        }
        s.push_str(" := by");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Import,
    Open,
    Namespace,
    Section,
    End,
    Variable,
    Declaration,
    /// A recognised command that carries no context (`universe`, `set_option`, ...).
    Command,
    /// Whitespace and comments between items.
    Trivia,
    /// Text the scanner could not attribute to any command.
    Unmodeled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub span: Range<usize>,
}

/// Surface structure of a Lean file.
///
/// `segments` partition the source: they are contiguous, in order, and cover
/// every byte exactly once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeanFileStructure {
    pub imports: Vec<String>,
    pub opens: Vec<String>,
    pub variables: Vec<String>,
    pub declarations: Vec<Declaration>,
    pub segments: Vec<Segment>,
}

impl LeanFileStructure {
    /// Concatenates every segment of `source`. Equal to `source` when
    /// `self` was produced from it.
    pub fn reassemble(&self, source: &str) -> String {
        self.segments.iter().map(|s| &source[s.span.clone()]).collect()
    }

    /// Number of declarations whose delimiters did not balance.
    pub fn warnings(&self) -> usize {
        self.declarations.iter().filter(|d| d.unbalanced).count()
    }

    pub fn count_kind(&self, kind: DeclKind) -> usize {
        self.declarations.iter().filter(|d| d.kind == kind).count()
    }
}

/// The part of a file that is replayed onto generated statements.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub imports: Vec<String>,
    pub opens: Vec<String>,
    pub variables: Vec<String>,
}

impl ContextBlock {
    pub fn is_empty(&self) -> bool {
        self.imports.is_empty() && self.opens.is_empty() && self.variables.is_empty()
    }

    /// Renders `import`, `open` and `variable` lines, one per entry.
    pub fn render(&self) -> String {
        let mut groups: Vec<String> = Vec::new();
        let lines = |kw: &str, items: &[String]| -> Option<String> {
            (!items.is_empty()).then(|| items.iter().map(|i| format!("{kw} {i}\n")).collect::<String>())
        };
        groups.extend(lines("import", &self.imports));
        groups.extend(lines("open", &self.opens));
        groups.extend(lines("variable", &self.variables));
        groups.join("\n")
    }
}

fn leading_word(text: &str) -> &str {
    let end = text
        .char_indices()
        .find(|&(_, c)| !(c.is_alphanumeric() || c == '_' || c == '#'))
        .map_or(text.len(), |(i, _)| i);
    &text[..end]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ItemKind {
    Import,
    Open,
    Namespace,
    Section,
    End,
    Variable,
    Declaration,
    Command,
}

/// Classifies a column-zero line by its first token.
fn item_kind(line: &str) -> Option<ItemKind> {
    if line.starts_with("@[") {
        return Some(ItemKind::Declaration);
    }
    let word = leading_word(line);
    if word.starts_with('#') && word.len() > 1 {
        return Some(ItemKind::Command);
    }
    Some(match word {
        "import" => ItemKind::Import,
        "open" => ItemKind::Open,
        "namespace" => ItemKind::Namespace,
        "section" => ItemKind::Section,
        "end" => ItemKind::End,
        "variable" => ItemKind::Variable,
        w if MODIFIERS.contains(&w) || DeclKind::from_keyword(w).is_some() => ItemKind::Declaration,
        w if OTHER_COMMANDS.contains(&w) => ItemKind::Command,
        _ => return None,
    })
}

fn is_trivia(classes: &[ByteClass], src: &[u8], i: usize) -> bool {
    classes[i] == ByteClass::Comment || src[i].is_ascii_whitespace()
}

/// Parses Lean source into its surface structure. Total: never fails.
pub fn parse_file(source: &str) -> LeanFileStructure {
    let classes = classify(source);
    let bytes = source.as_bytes();

    let mut starts: Vec<(usize, ItemKind)> = Vec::new();
    let mut line_start = 0;
    while line_start < bytes.len() {
        let line_end = bytes[line_start..].iter().position(|&c| c == b'\n').map_or(bytes.len(), |p| line_start + p);
        if classes[line_start].is_code() && !bytes[line_start].is_ascii_whitespace() {
            let line = &source[line_start..line_end];
            // `noncomputable section` opens a section, not a declaration
            let kind = if starts_with_word(line, 0, "noncomputable")
                && starts_with_word(line["noncomputable".len()..].trim_start(), 0, "section")
            {
                Some(ItemKind::Section)
            } else {
                item_kind(line)
            };
            if let Some(kind) = kind {
                starts.push((line_start, kind));
            }
        }
        line_start = line_end + 1;
    }

    let mut out = LeanFileStructure::default();
    let mut scopes: Vec<Option<String>> = Vec::new();

    let first = starts.first().map_or(source.len(), |s| s.0);
    if first > 0 {
        let all_trivia = (0..first).all(|i| is_trivia(&classes, bytes, i));
        out.segments.push(Segment {
            kind: if all_trivia { SegmentKind::Trivia } else { SegmentKind::Unmodeled },
            span: 0..first,
        });
    }

    for (idx, &(start, kind)) in starts.iter().enumerate() {
        let next = starts.get(idx + 1).map_or(source.len(), |s| s.0);
        let mut end = next;
        while end > start && is_trivia(&classes, bytes, end - 1) {
            end -= 1;
        }
        let text = &source[start..end];
        let seg_kind = match kind {
            ItemKind::Import => {
                out.imports.extend(text["import".len()..].split_whitespace().map(str::to_owned));
                SegmentKind::Import
            }
            ItemKind::Open => match parse_open(text) {
                OpenLine::Global(names) => {
                    for n in names {
                        push_unique(&mut out.opens, n);
                    }
                    SegmentKind::Open
                }
                OpenLine::Scoped(offset) => {
                    let inner = &text[offset..];
                    match item_kind(inner) {
                        Some(ItemKind::Declaration) => {
                            out.declarations.push(parse_declaration(text, offset, start));
                            SegmentKind::Declaration
                        }
                        _ => SegmentKind::Command,
                    }
                }
            },
            ItemKind::Namespace => {
                if let Some(name) = text["namespace".len()..].split_whitespace().next() {
                    let mut path: Vec<&str> = scopes.iter().flatten().map(String::as_str).collect();
                    path.push(name);
                    push_unique(&mut out.opens, path.join("."));
                    scopes.push(Some(name.to_owned()));
                }
                SegmentKind::Namespace
            }
            ItemKind::Section => {
                scopes.push(None);
                SegmentKind::Section
            }
            ItemKind::End => {
                scopes.pop();
                SegmentKind::End
            }
            ItemKind::Variable => {
                let binders = text["variable".len()..].trim();
                if !binders.is_empty() {
                    out.variables.push(binders.to_owned());
                }
                SegmentKind::Variable
            }
            ItemKind::Declaration => {
                out.declarations.push(parse_declaration(text, 0, start));
                SegmentKind::Declaration
            }
            ItemKind::Command => SegmentKind::Command,
        };
        out.segments.push(Segment { kind: seg_kind, span: start..end });
        if end < next {
            out.segments.push(Segment { kind: SegmentKind::Trivia, span: end..next });
        }
    }
    out
}

fn push_unique(list: &mut Vec<String>, item: String) {
    if !list.contains(&item) {
        list.push(item);
    }
}

enum OpenLine {
    Global(Vec<String>),
    /// `open X in <command>`; the offset points at the command.
    Scoped(usize),
}

fn parse_open(text: &str) -> OpenLine {
    let mut names = Vec::new();
    let mut pos = "open".len();
    loop {
        let rest = &text[pos..];
        let trimmed = rest.trim_start();
        pos += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            break;
        }
        let tok_len = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let tok = &trimmed[..tok_len];
        match tok {
            "in" => {
                let after = &trimmed[tok_len..];
                return OpenLine::Scoped(pos + tok_len + (after.len() - after.trim_start().len()));
            }
            "scoped" => {}
            "hiding" | "renaming" => break,
            t if t.starts_with('(') => break,
            t => names.push(t.to_owned()),
        }
        pos += tok_len;
    }
    OpenLine::Global(names)
}

fn skip_trivia(text: &str, classes: &[ByteClass], mut pos: usize) -> usize {
    let b = text.as_bytes();
    while pos < b.len() && (b[pos].is_ascii_whitespace() || classes[pos] == ByteClass::Comment) {
        pos += 1;
    }
    pos
}

/// Parses one declaration item. `offset` is where the declaration proper
/// begins inside `text` (after an `open ... in` prefix); `base` is the byte
/// position of `text` in the file.
fn parse_declaration(text: &str, offset: usize, base: usize) -> Declaration {
    let classes = classify(text);
    let scan = scan_delims(text, &classes);
    let b = text.as_bytes();

    let mut attributes = Vec::new();
    let mut modifiers = Vec::new();
    let mut pos = skip_trivia(text, &classes, offset);
    let keyword;
    loop {
        if text[pos..].starts_with("@[") {
            let open_depth = scan.depth[pos];
            let close = (pos + 2..b.len())
                .find(|&i| b[i] == b']' && classes[i].is_code() && scan.depth[i] == open_depth + 1)
                .unwrap_or(b.len());
            attributes.push(text[pos + 2..close].trim().to_owned());
            pos = skip_trivia(text, &classes, (close + 1).min(b.len()));
            continue;
        }
        let word = leading_word(&text[pos..]);
        if MODIFIERS.contains(&word) {
            modifiers.push(word.to_owned());
            pos = skip_trivia(text, &classes, pos + word.len());
            continue;
        }
        keyword = word.to_owned();
        pos += word.len();
        break;
    }
    let kind = DeclKind::from_keyword(&keyword).unwrap_or(DeclKind::Other);

    let after_kw = skip_trivia(text, &classes, pos);
    let rest = &text[after_kw..];
    let name_len =
        rest.char_indices().find(|&(_, c)| c.is_whitespace() || "([{⟨⦃:".contains(c)).map_or(rest.len(), |(i, _)| i);
    let anonymous = kind == DeclKind::Example
        || name_len == 0
        || (kind == DeclKind::Instance && !rest.starts_with(|c: char| c.is_alphabetic() || c == '_' || c == '«'));
    let (name, sig_start) =
        if anonymous { (String::new(), after_kw) } else { (rest[..name_len].to_owned(), after_kw + name_len) };

    let assign = first_top_level_assign(text, &classes, &scan, sig_start);
    let (signature, proof_span) = match assign {
        Some(at) => {
            let body = text[at + 2..].trim_start();
            let body = if starts_with_word(body, 0, "by") { &body[2..] } else { body };
            let body = body.trim();
            (text[sig_start..at].trim(), (!body.is_empty()).then(|| body.to_owned()))
        }
        None => match equations_start(text, &classes, &scan, sig_start) {
            Some(at) => (text[sig_start..at].trim(), Some(text[at..].trim().to_owned())),
            None => (text[sig_start..].trim(), None),
        },
    };

    Declaration {
        kind,
        keyword,
        modifiers,
        attributes,
        name,
        signature: signature.to_owned(),
        proof_span,
        source_span: base..base + text.len(),
        unbalanced: !scan.balanced || !is_balanced(signature),
    }
}

/// Start of a `where` block or `|` pattern-matching equations at depth zero.
fn equations_start(text: &str, classes: &[ByteClass], scan: &mask::DelimScan, from: usize) -> Option<usize> {
    let b = text.as_bytes();
    (from..b.len()).find(|&i| {
        if !classes[i].is_code() || scan.depth[i] != 0 {
            return false;
        }
        let prev_ws = i == 0 || b[i - 1].is_ascii_whitespace();
        prev_ws
            && ((b[i] == b'|' && b.get(i + 1).is_none_or(|c| c.is_ascii_whitespace()))
                || starts_with_word(text, i, "where"))
    })
}

/// The imports, opens and variables of a parsed file.
pub fn extract_context(file: &LeanFileStructure) -> ContextBlock {
    ContextBlock { imports: file.imports.clone(), opens: file.opens.clone(), variables: file.variables.clone() }
}

/// `theorem` and `lemma` declarations in source order.
pub fn extract_theorems(file: &LeanFileStructure) -> Vec<Declaration> {
    file.declarations.iter().filter(|d| matches!(d.kind, DeclKind::Theorem | DeclKind::Lemma)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_has_no_structure() {
        let f = parse_file("");
        assert_eq!(f, LeanFileStructure::default());
        assert_eq!(extract_context(&f), ContextBlock::default());
    }

    #[test]
    fn single_protected_theorem() {
        let src = "protected theorem foo : 1 = 1 := by rfl";
        let f = parse_file(src);
        assert_eq!(f.declarations.len(), 1);
        let d = &f.declarations[0];
        assert_eq!(d.kind, DeclKind::Theorem);
        assert_eq!(d.modifiers, vec!["protected"]);
        assert_eq!(d.name, "foo");
        assert_eq!(d.signature, ": 1 = 1");
        assert_eq!(d.proof_span.as_deref(), Some("rfl"));
        assert_eq!(d.source_span, 0..src.len());
        assert!(!d.unbalanced);
    }

    #[test]
    fn open_line_splits_namespaces() {
        let f = parse_file("open Set Filter\n");
        assert_eq!(extract_context(&f).opens, vec!["Set", "Filter"]);
    }

    #[test]
    fn open_variants() {
        let f = parse_file("open scoped Topology\nopen Function hiding foo\nopen Nat (succ)\n");
        assert_eq!(f.opens, vec!["Topology", "Function", "Nat"]);
    }

    #[test]
    fn open_in_prefixes_a_local_declaration() {
        let f = parse_file("open Real in\ntheorem t : π > 0 := by positivity\n");
        assert!(f.opens.is_empty());
        assert_eq!(f.declarations.len(), 1);
        assert_eq!(f.declarations[0].name, "t");
    }

    #[test]
    fn nested_namespaces_open_full_paths() {
        let src = "namespace A\nnamespace B\nend B\nend A\nnamespace C\n";
        assert_eq!(parse_file(src).opens, vec!["A", "A.B", "C"]);
    }

    #[test]
    fn theorem_filter_keeps_source_order() {
        let src = "def a := 1\nlemma l1 : a = 1 := rfl\ndef b := 2\ntheorem t1 : b = 2 := rfl\n";
        let f = parse_file(src);
        let names: Vec<_> = extract_theorems(&f).into_iter().map(|d| d.name).collect();
        assert_eq!(names, vec!["l1", "t1"]);
        let only_defs = parse_file("def a := 1\ndef b := 2\n");
        assert!(extract_theorems(&only_defs).is_empty());
    }

    #[test]
    fn examples_are_anonymous_and_not_theorems() {
        let f = parse_file("example : 1 = 1 := rfl\n");
        assert_eq!(f.declarations[0].kind, DeclKind::Example);
        assert_eq!(f.declarations[0].name, "");
        assert_eq!(f.declarations[0].signature, ": 1 = 1");
        assert!(extract_theorems(&f).is_empty());
    }

    #[test]
    fn attributes_and_default_arguments() {
        let src = "@[simp, norm_cast] private lemma foo (n : ℕ := 3) : n = n := by\n  rfl\n";
        let d = &parse_file(src).declarations[0];
        assert_eq!(d.attributes, vec!["simp, norm_cast"]);
        assert_eq!(d.modifiers, vec!["private"]);
        assert_eq!(d.kind, DeclKind::Lemma);
        assert_eq!(d.signature, "(n : ℕ := 3) : n = n");
        assert_eq!(d.proof_span.as_deref(), Some("rfl"));
    }

    #[test]
    fn bodyless_statement_has_no_proof_span() {
        let d = &parse_file("theorem foo : True := by").declarations[0];
        assert_eq!(d.proof_span, None);
        assert_eq!(d.as_statement(), "theorem foo : True := by");
    }

    #[test]
    fn commented_out_declarations_are_ignored() {
        let src = "/-\ntheorem hidden : 1 = 1 := rfl\n-/\n-- theorem also_hidden : True := trivial\ntheorem shown : True := trivial\n";
        let f = parse_file(src);
        let names: Vec<_> = f.declarations.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["shown"]);
        assert_eq!(f.reassemble(src), src);
    }

    #[test]
    fn unbalanced_signature_is_flagged_not_fatal() {
        let f = parse_file("theorem bad (x : ℕ : x = x := by rfl\ntheorem good : True := trivial\n");
        assert_eq!(f.declarations.len(), 2);
        assert!(f.declarations[0].unbalanced);
        assert!(!f.declarations[1].unbalanced);
        assert_eq!(f.warnings(), 1);
    }

    #[test]
    fn continuation_lines_at_column_zero_stay_in_declaration() {
        let src = "theorem t (A : Set X) (h : P A)\n: A ⊆ B :=  by\n  exact h\n";
        let f = parse_file(src);
        assert_eq!(f.declarations.len(), 1);
        assert_eq!(f.declarations[0].signature, "(A : Set X) (h : P A)\n: A ⊆ B");
    }

    #[test]
    fn pattern_matching_definition() {
        let d = &parse_file("def f : ℕ → ℕ\n  | 0 => 1\n  | n + 1 => n\n").declarations[0];
        assert_eq!(d.signature, ": ℕ → ℕ");
        assert!(d.proof_span.as_deref().unwrap().starts_with("| 0 => 1"));
    }

    #[test]
    fn context_block_render_reparses() {
        let ctx = ContextBlock {
            imports: vec!["Mathlib".into(), "Aesop".into()],
            opens: vec!["Topology".into(), "Set".into()],
            variables: vec!["{X : Type*} [TopologicalSpace X]".into()],
        };
        assert_eq!(extract_context(&parse_file(&ctx.render())), ctx);
    }
}
