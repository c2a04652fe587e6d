//! The acceptance battery at reduced size.

use olab::suite::{run_suite, SuiteConfig};

fn main() -> olab::Result<()> {
    let run = run_suite(&SuiteConfig::quick())?;
    for c in &run.report.checks {
        println!("{:>2} {:<5} {}", c.id, if c.passed { "pass" } else { "FAIL" }, c.name);
    }
    for t in run.timings.iter().filter(|t| t.what == "total") {
        println!("check {} took {:.2}s", t.id, t.seconds);
    }
    Ok(())
}
