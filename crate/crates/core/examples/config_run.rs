//! The config-driven harness: parse a TOML experiment, run it with every
//! invariant check, and write the ledger and summary to a directory.

use ommo::harness::{output_dir, run_experiment, write_outputs, ExperimentConfig};

const CONFIG: &str = r#"
[run]
horizon = 256
seed = 3

[instance]
kind = "sc-sc-quadratic"
lambda = 1.0
dim_x = 2
dim_y = 2
radius = 1.0
spread = 0.5
coupling = 0.3
schedule = "piecewise"
segments = 3

[algorithm]
name = "ommns"

[verify]
variation = true
"#;

fn main() -> ommo::Result<()> {
    let cfg = ExperimentConfig::from_toml_str(CONFIG)?;
    let outcome = run_experiment(&cfg)?;
    for c in &outcome.checks {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(b) = &outcome.bound {
        println!("{}: {:.4} vs {:.4}", b.name, b.value, b.bound);
    }
    let (ledger, summary) = write_outputs(&outcome, &output_dir(None).join(cfg.label()))?;
    println!("wrote {} and {}", ledger.display(), summary.display());
    Ok(())
}
