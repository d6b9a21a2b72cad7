//! Acceptance suite: runs every criterion at its pinned tolerance and
//! prints one pass/fail line each (visible with `--nocapture`).
//!
//! The seed can be overridden through `THERMODIFF_SEED`, matching the
//! binary's `accept` subcommand.

use thermodiff_cli::acceptance::{format_line, run_acceptance};
use thermodiff_cli::config::{DEFAULT_SEED, SEED_ENV_VAR};

#[test]
fn acceptance_battery_passes() {
    let seed = std::env::var(SEED_ENV_VAR)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    let report = run_acceptance(seed);
    for criterion in &report.criteria {
        println!("{}", format_line(criterion));
    }
    println!(
        "overall: {} in {:.1} s",
        if report.pass { "PASS" } else { "FAIL" },
        report.total_runtime_ms / 1000.0
    );

    let failed: Vec<&str> = report
        .criteria
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.id)
        .collect();
    assert!(report.pass, "failed criteria: {failed:?}");
    assert_eq!(report.criteria.len(), 8);
    assert!(
        report.total_runtime_ms < 300_000.0,
        "battery took {:.1} s, budget is 5 minutes",
        report.total_runtime_ms / 1000.0
    );
}
