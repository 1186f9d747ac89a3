//! Every built-in invariant suite, with a one-line verdict per suite.

use ommo::harness::{verify, SUITES};

fn main() -> ommo::Result<()> {
    for suite in SUITES {
        for r in verify(suite, 0)? {
            println!("{:14} {:3} checks, {} failed", r.suite, r.checks.len(), r.failures());
        }
    }
    Ok(())
}
