use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: Option<u32>,
    pub column: Option<u32>,
}

pub const SORRY_WARNING: &str = "declaration uses 'sorry'";

impl Diagnostic {
    pub fn new(severity: Severity, message: impl Into<String>) -> Self {
        Diagnostic { severity, message: message.into(), line: None, column: None }
    }

    pub fn is_sorry_warning(&self) -> bool {
        self.severity == Severity::Warning && self.message.starts_with(SORRY_WARNING)
    }

    /// Linter noise from replayed `variable` binders.
    pub fn is_unused_variable(&self) -> bool {
        self.severity == Severity::Warning && self.message.starts_with("unused variable")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "{l}:{c}: ")?;
        }
        write!(f, "{}: {}", self.severity, self.message)
    }
}

fn record_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?:(.+?):(\d+):(\d+):\s+)?(error|warning|info)(?:\([^)]*\))?:\s?(.*)$").expect("valid regex")
    })
}

/// Parses `file:line:col: severity: message` records. Lines that do not
/// start a record continue the previous message; text before the first
/// record is dropped.
pub fn parse_diagnostics(raw: &str) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    for line in raw.lines() {
        if let Some(caps) = record_re().captures(line) {
            let severity = match &caps[4] {
                "error" => Severity::Error,
                "warning" => Severity::Warning,
                _ => Severity::Info,
            };
            out.push(Diagnostic {
                severity,
                message: caps[5].trim_end().to_owned(),
                line: caps.get(2).and_then(|m| m.as_str().parse().ok()),
                column: caps.get(3).and_then(|m| m.as_str().parse().ok()),
            });
        } else if let Some(last) = out.last_mut() {
            if !last.message.is_empty() {
                last.message.push('\n');
            }
            last.message.push_str(line.trim_end());
        }
    }
    for d in &mut out {
        let trimmed = d.message.trim_end().len();
        d.message.truncate(trimmed);
        if d.message.is_empty() {
            d.message = format!("({} without message)", d.severity);
        }
    }
    out
}
