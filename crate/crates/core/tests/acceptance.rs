//! Acceptance criteria at full size. Prints one line per criterion and
//! exits nonzero if any fails.

use streambandit::verify::{run_suite, Suite};

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let outcomes = run_suite(Suite::Full, |o| println!("{o}"));
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.id)
        .collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        outcomes.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({})", failed.join(", "))
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
