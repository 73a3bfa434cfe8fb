//! Runs every acceptance criterion and prints one line per criterion.

use helicity_lab::acceptance::{run, run_all};
use std::process::ExitCode;

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let results = run_all(&(1..=10).collect::<Vec<_>>());
    for r in &results {
        println!("{}", r.line());
    }
    let mut failed: Vec<usize> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    if run(11).pass {
        println!("[FAIL] unknown criterion was reported as passing");
        failed.push(11);
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("acceptance: {passed} passed, {} failed", failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
