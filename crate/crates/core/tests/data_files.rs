//! The shipped JSON files equal the built-in reference definitions.

use fuzzyrepair::domain::shift::{default_reference_plan, reference_kb, shift_schema, OperationPlan};
use fuzzyrepair::kb::KnowledgeBase;

fn data(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

#[test]
fn reference_kb_file() {
    let kb = KnowledgeBase::load(&data("reference_kb.json")).unwrap();
    assert_eq!(kb, reference_kb());
    assert!(kb.diagnostics(Some(shift_schema())).is_empty());
}

#[test]
fn reference_plan_file() {
    let text = std::fs::read_to_string(data("reference_plan.json")).unwrap();
    assert_eq!(OperationPlan::read_json(&text).unwrap(), default_reference_plan());
}
