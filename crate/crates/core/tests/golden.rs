mod common;

use common::checks;

#[test]
fn behaviors_summary() {
    checks::golden_behaviors().unwrap();
}

#[test]
fn attitudes_and_ledger() {
    checks::golden_attitudes().unwrap();
}

#[test]
fn beliefs_aggregate() {
    checks::golden_beliefs().unwrap();
}

#[test]
fn self_consistency_buffered() {
    checks::golden_self_consistency().unwrap();
}

#[test]
fn self_perception_turn() {
    checks::golden_self_perception().unwrap();
}
