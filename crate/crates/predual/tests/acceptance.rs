//! The acceptance gate: run every built-in criterion and print one
//! pass/fail line per criterion. The suite fails if any criterion fails.

use predual::verify::run_all;

#[test]
fn acceptance_criteria() {
    let results = run_all();
    let mut failures = Vec::new();
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("criterion {} ({}): {status} — {}", r.id, r.name, r.detail);
        if !r.passed {
            failures.push(format!("criterion {} ({}): {}", r.id, r.name, r.detail));
        }
    }
    assert!(
        failures.is_empty(),
        "{} of {} acceptance criteria failed:\n{}",
        failures.len(),
        results.len(),
        failures.join("\n")
    );
}
