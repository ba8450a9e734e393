//! Acceptance run: one PASS/FAIL line per check, nonzero exit if any failed.
//! Every check runs even when an earlier one fails.

mod cli;
mod criteria;
mod invariants;
mod support;

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut checks = criteria::checks();
    checks.extend(invariants::checks());
    checks.extend(cli::checks());
    if !filter.is_empty() {
        checks.retain(|c| filter.iter().any(|f| format!("{} {}", c.label, c.name).contains(f.as_str())));
    }
    let total = checks.len();
    let failed = support::run_all(checks);
    println!("acceptance: {} passed, {failed} failed, {total} total", total - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
