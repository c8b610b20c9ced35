use std::path::Path;

use conjecture_core::lean_surface::{extract_theorems, parse_file, DeclKind};

use crate::exit::{CmdResult, Failure};

pub fn run(path: &Path) -> CmdResult {
    let bytes = std::fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let source = match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => {
            tracing::warn!("{}: not valid UTF-8, invalid bytes replaced", path.display());
            String::from_utf8_lossy(e.as_bytes()).into_owned()
        }
    };
    let file = parse_file(&source);
    if file.warnings() > 0 {
        tracing::warn!("{}: {} parser warnings", path.display(), file.warnings());
    }
    print!("{}", summary(&file));
    Ok(())
}

fn summary(file: &conjecture_core::lean_surface::LeanFileStructure) -> String {
    let rows = [
        ("imports", file.imports.len()),
        ("opens", file.opens.len()),
        ("variables", file.variables.len()),
        ("theorems", extract_theorems(file).len()),
        ("defs", file.count_kind(DeclKind::Def)),
        ("declarations", file.declarations.len()),
        ("warnings", file.warnings()),
    ];
    rows.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_zero() {
        let s = summary(&parse_file(""));
        assert!(s.lines().all(|l| l.ends_with(": 0")), "{s}");
        assert_eq!(s.lines().count(), 7);
    }
}
