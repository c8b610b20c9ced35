mod common;

use common::{topology_seed, TOPOLOGY_THEOREMS};
use conjecture_core::genpipe::{augment, build_prompt};
use conjecture_core::lean_surface::{extract_context, extract_theorems, parse_file, DeclKind, SegmentKind};

#[test]
fn topology_seed_structure() {
    let src = topology_seed();
    let file = parse_file(&src);
    assert_eq!(file.imports, vec!["Mathlib", "Aesop"]);
    assert_eq!(file.opens, vec!["Topology"]);
    assert_eq!(file.variables, vec!["{X : Type*} [TopologicalSpace X]"]);
    assert_eq!(file.count_kind(DeclKind::Def), 3);
    let defs: Vec<_> = file.declarations.iter().filter(|d| d.kind == DeclKind::Def).map(|d| d.name.as_str()).collect();
    assert_eq!(defs, vec!["SemiOpen", "AlphaOpen", "PreOpen"]);
    let names: Vec<_> = extract_theorems(&file).iter().map(|d| d.name.clone()).collect();
    assert_eq!(names, TOPOLOGY_THEOREMS);
    assert_eq!(file.warnings(), 0);
}

#[test]
fn topology_seed_is_lossless() {
    let src = topology_seed();
    let file = parse_file(&src);
    assert_eq!(file.reassemble(&src), src);
    let mut at = 0;
    for seg in &file.segments {
        assert_eq!(seg.span.start, at);
        at = seg.span.end;
    }
    assert_eq!(at, src.len());
    assert!(file.segments.iter().any(|s| s.kind == SegmentKind::Namespace));
}

#[test]
fn topology_theorem_fields() {
    let file = parse_file(&topology_seed());
    let thms = extract_theorems(&file);
    let cisc = thms.iter().find(|d| d.name == "closure_interior_subset_closure").unwrap();
    assert_eq!(cisc.signature, "(A : Set X) : closure (interior A) ⊆ closure A");
    assert_eq!(cisc.proof_span.as_deref(), Some("apply closure_mono\n  exact interior_subset"));
    let union = &thms[0];
    assert_eq!(union.signature, "{A B : Set X} (hA : SemiOpen A) (hB : SemiOpen B) \n  : SemiOpen (A ∪ B)");
    assert!(union.proof_span.as_deref().unwrap().starts_with("intro x hx"));
}

#[test]
fn topology_context_and_augment() {
    let file = parse_file(&topology_seed());
    let ctx = extract_context(&file);
    let src = augment("theorem t (A : Set X) : A ⊆ A := by", &ctx);
    let lines: Vec<&str> = src.lines().collect();
    assert_eq!(&lines[..2], &["import Mathlib", "import Aesop"]);
    let open = src.find("open Topology\n").unwrap();
    let var = src.find("variable {X : Type*} [TopologicalSpace X]\n").unwrap();
    let stmt = src.find("theorem t").unwrap();
    assert!(open < var && var < stmt);
}

#[test]
fn topology_prompt() {
    let file = parse_file(&topology_seed());
    let p = build_prompt(&file, &[], true);
    assert!(p.user_payload.contains("theorem semi_open_union {A B : Set X} (hA : SemiOpen A) (hB : SemiOpen B)"));
    assert!(p.system_prompt.contains("as many as possible"));
    assert_eq!(p.user_payload.matches("theorem ").count(), 26);
    assert!(!p.user_payload.contains("intro x hx"));
}
