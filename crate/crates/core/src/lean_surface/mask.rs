//! Byte-level masking of comments and literals in Lean source.
//!
//! Everything the surface scanner does (keyword detection, delimiter depth,
//! `:=` anchoring) must ignore text inside comments and string or character
//! literals. [`classify`] tags every byte once so later passes can consult
//! the tag instead of re-lexing.

/// What a byte of source belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ByteClass {
    Code,
    Comment,
    Literal,
}

impl ByteClass {
    pub(crate) fn is_code(self) -> bool {
        self == ByteClass::Code
    }
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'\'' || b == b'.' || b >= 0x80
}

fn utf8_len(lead: u8) -> usize {
    match lead {
        0x00..=0x7f => 1,
        0xc0..=0xdf => 2,
        0xe0..=0xef => 3,
        _ => 4,
    }
}

/// Length in bytes of a character literal starting at `i` (which holds `'`),
/// or `None` if the quote is a prime in an identifier such as `h'`.
fn char_literal_len(b: &[u8], i: usize) -> Option<usize> {
    if i > 0 && is_ident_byte(b[i - 1]) {
        return None;
    }
    let body = *b.get(i + 1)?;
    let inner = if body == b'\\' {
        // `'\n'`, `'\\'`, `'\''`; longer escapes (`'\x41'`) are rare enough to skip
        2
    } else {
        utf8_len(body)
    };
    (b.get(i + 1 + inner) == Some(&b'\'')).then_some(inner + 2)
}

/// Tags each byte of `src` as code, comment, or literal.
///
/// Block comments nest (`/- /- -/ -/`), line comments run to the newline
/// (exclusive), strings honour backslash escapes. Unterminated constructs
/// extend to end of input.
pub(crate) fn classify(src: &str) -> Vec<ByteClass> {
    let b = src.as_bytes();
    let n = b.len();
    let mut out = vec![ByteClass::Code; n];
    let mut i = 0;
    while i < n {
        match b[i] {
            b'-' if b.get(i + 1) == Some(&b'-') => {
                let end = b[i..].iter().position(|&c| c == b'\n').map_or(n, |p| i + p);
                out[i..end].fill(ByteClass::Comment);
                i = end;
            }
            b'/' if b.get(i + 1) == Some(&b'-') => {
                let start = i;
                let mut depth = 0usize;
                while i < n {
                    if b[i] == b'/' && b.get(i + 1) == Some(&b'-') {
                        depth += 1;
                        i += 2;
                    } else if b[i] == b'-' && b.get(i + 1) == Some(&b'/') {
                        depth -= 1;
                        i += 2;
                        if depth == 0 {
                            break;
                        }
                    } else {
                        i += 1;
                    }
                }
                let end = i.min(n);
                out[start..end].fill(ByteClass::Comment);
                i = end;
            }
            b'"' => {
                let start = i;
                i += 1;
                while i < n && b[i] != b'"' {
                    i += if b[i] == b'\\' { 2 } else { 1 };
                }
                let end = (i + 1).min(n);
                out[start..end].fill(ByteClass::Literal);
                i = end;
            }
            b'\'' => match char_literal_len(b, i) {
                Some(len) => {
                    out[i..i + len].fill(ByteClass::Literal);
                    i += len;
                }
                None => i += 1,
            },
            _ => i += 1,
        }
    }
    out
}

const OPENERS: [char; 5] = ['(', '[', '{', '⟨', '⦃'];
const CLOSERS: [char; 5] = [')', ']', '}', '⟩', '⦄'];

/// Bracket depth before every byte, computed over code bytes only.
#[derive(Debug, Clone)]
pub(crate) struct DelimScan {
    pub depth: Vec<u32>,
    pub balanced: bool,
}

pub(crate) fn scan_delims(src: &str, classes: &[ByteClass]) -> DelimScan {
    let mut depth = vec![0u32; src.len()];
    let mut stack: Vec<usize> = Vec::new();
    let mut balanced = true;
    for (i, c) in src.char_indices() {
        let d = stack.len() as u32;
        depth[i..i + c.len_utf8()].fill(d);
        if !classes[i].is_code() {
            continue;
        }
        if let Some(k) = OPENERS.iter().position(|&o| o == c) {
            stack.push(k);
        } else if let Some(k) = CLOSERS.iter().position(|&o| o == c) {
            match stack.pop() {
                Some(open) if open == k => {}
                _ => balanced = false,
            }
        }
    }
    if !stack.is_empty() {
        balanced = false;
    }
    DelimScan { depth, balanced }
}

/// True when `text` has matched `(){}[]⟨⟩⦃⦄` outside comments and literals.
pub(crate) fn is_balanced(text: &str) -> bool {
    scan_delims(text, &classify(text)).balanced
}

/// Byte offset of the first `:=` that sits at bracket depth zero in code.
pub(crate) fn first_top_level_assign(src: &str, classes: &[ByteClass], scan: &DelimScan, from: usize) -> Option<usize> {
    let b = src.as_bytes();
    (from..b.len().saturating_sub(1))
        .find(|&i| b[i] == b':' && b[i + 1] == b'=' && classes[i].is_code() && scan.depth[i] == 0)
}

/// Whether `text` at `at` begins the keyword `word` as a whole token.
pub(crate) fn starts_with_word(text: &str, at: usize, word: &str) -> bool {
    let rest = &text[at..];
    rest.starts_with(word)
        && rest[word.len()..].chars().next().is_none_or(|c| !(c.is_alphanumeric() || c == '_' || c == '\'' || c == '.'))
}
