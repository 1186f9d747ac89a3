use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ommo::harness::{self, output_dir, ExperimentConfig, SweepParam, OUT_DIR_ENV};
use ommo::Error;

/// Online min-max optimization experiments.
#[derive(Parser)]
#[command(name = "ommo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its ledger and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to $OMMO_OUT_DIR, then ./out.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Run a named invariant suite, or `all`.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one experiment per value of a parameter, e.g. `--param T=64,128`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
}

const FAILED_CHECKS: u8 = 4;

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(FAILED_CHECKS),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Command) -> Result<bool, Error> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = harness::run_experiment(&cfg)?;
            let dir = output_dir(out).join(cfg.label());
            let (ledger, summary) = harness::write_outputs(&outcome, &dir)?;
            let t = &outcome.ledger.totals;
            println!("{}: T = {}, {:?} protocol", cfg.label(), cfg.run.horizon, outcome.protocol);
            println!(
                "  sdual-gap {:.6e}  dual-gap {:.6e}  dsp-reg {:.6e}  dne-reg {:.6e}",
                t.sdual_gap, t.dual_gap, t.dsp_reg, t.dne_reg
            );
            if let Some(b) = &outcome.bound {
                println!("  {}: {:.6e} vs {:.6e} (ratio {:.4})", b.name, b.value, b.bound, b.ratio);
            }
            for c in &outcome.checks {
                println!("  [{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            println!("  wrote {} and {}", ledger.display(), summary.display());
            Ok(outcome.passed())
        }
        Command::Verify { suite, seed } => {
            let reports = harness::verify(&suite, seed)?;
            for r in &reports {
                println!("{}: {} checks, {} failed", r.suite, r.checks.len(), r.failures());
                for c in &r.checks {
                    println!("  [{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
                }
            }
            Ok(reports.iter().all(|r| r.passed()))
        }
        Command::Sweep { config, param, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let param = SweepParam::parse(&param)?;
            let dir = output_dir(out);
            let rows = harness::run_sweep(&cfg, &param, &dir)?;
            for r in &rows {
                let ratio = r.outcome.bound.as_ref().map_or(String::from("-"), |b| format!("{:.4}", b.ratio));
                println!(
                    "{}: sdual-gap {:.6e}, bound ratio {ratio}, {}",
                    r.tag,
                    r.outcome.ledger.totals.sdual_gap,
                    if r.outcome.passed() { "pass" } else { "FAIL" }
                );
            }
            println!("wrote {}", dir.join(harness::SWEEP_FILE).display());
            Ok(rows.iter().all(|r| r.outcome.passed()))
        }
    }
}
