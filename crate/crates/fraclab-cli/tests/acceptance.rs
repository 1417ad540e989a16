//! Acceptance suite: every criterion on the default configuration, one line each.
//!
//! A criterion passes when all of its checks pass and it finishes inside its
//! runtime budget.

use fraclab_cli::config::Config;
use fraclab_cli::experiments::CRITERIA;
use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let cfg = Config::default();
    let mut failed = Vec::new();
    for c in &CRITERIA {
        let start = Instant::now();
        let result = (c.run)(&cfg);
        let secs = start.elapsed().as_secs_f64();
        let in_budget = secs <= c.budget_secs as f64;
        match result {
            Ok(o) if o.passed() && in_budget => {
                println!("PASS criterion {:>2} {}: {} [{secs:.1}s / {}s]", c.id, o.title, o.summary, c.budget_secs);
            }
            Ok(o) => {
                println!("FAIL criterion {:>2} {}: {} [{secs:.1}s / {}s]", c.id, o.title, o.summary, c.budget_secs);
                for f in o.failing() {
                    println!("    failed check: {} : {}", f.name, f.detail);
                }
                if !in_budget {
                    println!("    runtime budget exceeded");
                }
                failed.push(c.id);
            }
            Err(e) => {
                println!("FAIL criterion {:>2}: error: {e}", c.id);
                failed.push(c.id);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
