//! Config-driven experiments: build a sequence and a learner, run the rounds,
//! check invariants, write the ledger.

mod config;
mod output;
mod run;
mod sweep;
mod verify;

pub use config::{output_dir, AlgorithmConfig, ExperimentConfig, InstanceConfig, RunConfig, Tolerances, VerifyToggles, OUT_DIR_ENV};
pub use output::{
    fmt_f64, ledger_header, read_ledger_csv, write_ledger_csv, write_outputs, CsvLedger, Summary, LEDGER_FILE, SUMMARY_FILE,
};
pub use run::{
    build_sequence, run_experiment, BoundReport, CheckOutcome, Protocol, RunOutcome, AGDA_BOUND_SLACK, CONTRACTION_SLACK,
};
pub use verify::{
    grid_search_projection, impossibility_floor, impossibility_regrets, verify, SuiteReport, IMPOSSIBILITY_HORIZON, SUITES,
};
pub use sweep::{expand, run_sweep, SweepParam, SweepRow, SWEEP_FILE};
