//! Reduces raw generator output to bare `theorem ... := by` statements.

use crate::lean_surface::{classify, first_top_level_assign, scan_delims, starts_with_word, ByteClass};

const STRIPPED_MODIFIERS: [&str; 4] = ["protected", "private", "noncomputable", "nonrec"];

/// A statement recovered from a chunk, with the index of that chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub statement: String,
    pub chunk: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Postprocessed {
    pub statements: Vec<Extracted>,
    /// Non-blank pieces that did not yield a statement.
    pub rejected: usize,
}

impl Postprocessed {
    pub fn texts(&self) -> Vec<String> {
        self.statements.iter().map(|e| e.statement.clone()).collect()
    }
}

/// Post-processes every chunk in order.
pub fn postprocess_chunks<S: AsRef<str>>(chunks: &[S]) -> Postprocessed {
    let mut out = Postprocessed::default();
    for (idx, chunk) in chunks.iter().enumerate() {
        let content = fence_content(chunk.as_ref());
        for piece in split_pieces(&content) {
            if piece.trim().is_empty() {
                continue;
            }
            match clean_piece(piece) {
                Some(statement) => out.statements.push(Extracted { statement, chunk: idx }),
                None => out.rejected += 1,
            }
        }
    }
    out
}

/// Contents of every ```` ``` ```` fence in `chunk`, or the chunk itself when
/// it has none. A `lean`/`lean4` info string is dropped, including the
/// inline form ```` ```lean theorem ... := by``` ````.
fn fence_content(chunk: &str) -> String {
    if !chunk.contains("```") {
        return chunk.to_owned();
    }
    let mut parts = Vec::new();
    let mut rest = chunk;
    while let Some(open) = rest.find("```") {
        let mut body = &rest[open + 3..];
        for tag in ["lean4", "Lean4", "lean", "Lean"] {
            if starts_with_word(body, 0, tag) {
                body = &body[tag.len()..];
                break;
            }
        }
        match body.find("```") {
            Some(close) => {
                parts.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => {
                parts.push(body);
                break;
            }
        }
    }
    parts.join("\n")
}

fn starts_piece(line: &str) -> bool {
    if line.starts_with("@[") {
        return true;
    }
    ["theorem", "lemma"].iter().chain(STRIPPED_MODIFIERS.iter()).any(|w| starts_with_word(line, 0, w))
}

/// Splits fenced content holding several declarations at lines that start a
/// new one at the content's base indentation.
fn split_pieces(content: &str) -> Vec<&str> {
    let classes = classify(content);
    let indent = |l: &str| l.len() - l.trim_start().len();
    let base = content.lines().filter(|l| !l.trim().is_empty()).map(indent).min().unwrap_or(0);

    let mut cuts = vec![0];
    let mut offset = 0;
    for line in content.split_inclusive('\n') {
        let ind = indent(line);
        if offset > 0
            && ind == base
            && offset + ind < content.len()
            && classes[offset + ind] == ByteClass::Code
            && starts_piece(&line[ind..])
        {
            cuts.push(offset);
        }
        offset += line.len();
    }
    cuts.push(content.len());
    cuts.windows(2).map(|w| &content[w[0]..w[1]]).collect()
}

/// Decodes `\uXXXX` escapes (and surrogate pairs) outside string literals.
/// Escapes naming ASCII code points are left alone: they never stand for
/// mathematical notation, and decoding them could introduce syntax.
pub fn decode_unicode_escapes(text: &str) -> String {
    let classes = classify(text);
    let b = text.as_bytes();
    let hex_at = |i: usize| -> Option<u32> {
        if i + 6 <= b.len() && b[i] == b'\\' && b[i + 1] == b'u' {
            u32::from_str_radix(text.get(i + 2..i + 6)?, 16).ok()
        } else {
            None
        }
    };
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < b.len() {
        if classes[i] != ByteClass::Literal {
            if let Some(hi) = hex_at(i) {
                let decoded = if (0xd800..0xdc00).contains(&hi) {
                    hex_at(i + 6)
                        .filter(|lo| (0xdc00..0xe000).contains(lo))
                        .and_then(|lo| char::from_u32(0x10000 + ((hi - 0xd800) << 10) + (lo - 0xdc00)))
                        .map(|c| (c, 12))
                } else {
                    char::from_u32(hi).map(|c| (c, 6))
                };
                if let Some((c, len)) = decoded.filter(|(c, _)| !c.is_ascii()) {
                    out.push(c);
                    i += len;
                    continue;
                }
            }
        }
        let c = text[i..].chars().next().expect("index on char boundary");
        out.push(c);
        i += c.len_utf8();
    }
    out
}

/// Drops leading comments, `@[...]` groups and modifier keywords.
fn strip_prefixes(mut s: &str) -> &str {
    loop {
        s = s.trim_start();
        if s.starts_with("--") || s.starts_with("/-") {
            let classes = classify(s);
            let end = classes.iter().position(|c| *c != ByteClass::Comment).unwrap_or(s.len());
            s = &s[end..];
            continue;
        }
        if s.starts_with("@[") {
            let classes = classify(s);
            let scan = scan_delims(s, &classes);
            let close = s
                .bytes()
                .enumerate()
                .skip(2)
                .find(|&(i, c)| c == b']' && classes[i].is_code() && scan.depth[i] == 1)
                .map_or(s.len(), |(i, _)| i + 1);
            s = &s[close..];
            continue;
        }
        match STRIPPED_MODIFIERS.iter().find(|m| starts_with_word(s, 0, m)) {
            Some(m) => s = &s[m.len()..],
            None => return s,
        }
    }
}

/// Replaces each comment with a space and drops trailing spaces on every
/// line, so nothing after the head can end up commented out.
fn blank_comments(text: &str) -> String {
    let classes = classify(text);
    let mut out = String::with_capacity(text.len());
    let mut in_comment = false;
    for (i, c) in text.char_indices() {
        if classes[i] == ByteClass::Comment {
            if !in_comment {
                out.push(' ');
            }
            in_comment = true;
        } else {
            in_comment = false;
            out.push(c);
        }
    }
    out.lines().map(str::trim_end).collect::<Vec<_>>().join("\n")
}

fn clean_piece(piece: &str) -> Option<String> {
    let decoded = decode_unicode_escapes(piece);
    let s = strip_prefixes(&decoded).trim_end();
    let body = if starts_with_word(s, 0, "theorem") {
        &s["theorem".len()..]
    } else if starts_with_word(s, 0, "lemma") {
        &s["lemma".len()..]
    } else {
        return None;
    };
    let classes = classify(body);
    let scan = scan_delims(body, &classes);
    let head = match first_top_level_assign(body, &classes, &scan, 0) {
        Some(at) => &body[..at],
        None => body,
    };
    let head = blank_comments(head);
    let head = head.trim();
    if head.is_empty() || head.contains("@[") || head.contains("```") {
        return None;
    }
    Some(format!("theorem {head} := by"))
}
