use std::process::Command;

use ommo::functions::Schedule;
use ommo::harness::{
    read_ledger_csv, run_experiment, run_sweep, write_outputs, AlgorithmConfig, ExperimentConfig, InstanceConfig, SweepParam,
    LEDGER_FILE, SUMMARY_FILE, SWEEP_FILE,
};
use ommo::Error;

fn ogda(horizon: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(horizon, seed, InstanceConfig::sc_sc(2, 0.3, Schedule::Iid, 1), AlgorithmConfig::Ogda { gamma: None })
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("ommo-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn runs_are_bitwise_deterministic() {
    for alg in [
        AlgorithmConfig::Ogda { gamma: None },
        AlgorithmConfig::Agda { k_cap: 64 },
        AlgorithmConfig::Mmflh { base: "ommns".into(), k: Some(3), alpha: None },
    ] {
        let cfg = ExperimentConfig::new(96, 5, InstanceConfig::sc_sc(2, 0.3, Schedule::Piecewise, 3), alg);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.ledger.plays(), b.ledger.plays());
        let bits = |o: &ommo::harness::RunOutcome| o.ledger.rows.iter().map(|r| r.g_star.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
    let other = run_experiment(&ogda(64, 6)).unwrap();
    assert_ne!(other.ledger.totals.sdual_gap, run_experiment(&ogda(64, 5)).unwrap().ledger.totals.sdual_gap);
}

#[test]
fn ledger_csv_round_trips_exactly() {
    let outcome = run_experiment(&ogda(128, 2)).unwrap();
    let dir = scratch("csv");
    let (ledger, summary) = write_outputs(&outcome, &dir).unwrap();
    let back = read_ledger_csv(&ledger).unwrap();
    assert_eq!(back.header[..5], ["t", "x0", "x1", "y0", "y1"]);
    for (row, (g, s)) in outcome.ledger.rows.iter().zip(back.g_prime.iter().zip(&back.sdual_gap)) {
        assert_eq!(row.g_prime.to_bits(), g.to_bits());
        assert_eq!(row.sdual_gap.to_bits(), s.to_bits());
    }
    let (s, d, p) = back.resummed();
    let t = outcome.ledger.totals;
    assert!((s - t.sdual_gap).abs() < 1e-12 && (d - t.dual_gap).abs() < 1e-12 && (p - t.dsp_reg).abs() < 1e-12);
    let text = std::fs::read_to_string(summary).unwrap();
    let parsed: toml::Table = text.parse().unwrap();
    assert_eq!(parsed["horizon"].as_integer(), Some(128));
    assert_eq!(parsed["passed"].as_bool(), Some(true));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = scratch("sweep");
    let rows = run_sweep(&ogda(16, 1), &SweepParam::parse("T=32,64").unwrap(), &dir).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.dir.join(LEDGER_FILE).exists() && r.dir.join(SUMMARY_FILE).exists());
    }
    let summary = std::fs::read_to_string(dir.join(SWEEP_FILE)).unwrap();
    assert_eq!(summary.lines().count(), 3);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bad_parameters_surface_as_config_errors() {
    let mut cfg = ogda(64, 1);
    cfg.run.start = Some(vec![0.0; 3]);
    assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    let sep = ExperimentConfig::new(64, 1, InstanceConfig::portfolio(2), AlgorithmConfig::Ogda { gamma: None });
    assert!(matches!(run_experiment(&sep), Err(Error::Config(_))));
    let odd = ExperimentConfig::new(63, 1, InstanceConfig::Impossibility { sequence: 1 }, AlgorithmConfig::Ogda { gamma: None });
    assert!(matches!(run_experiment(&odd), Err(Error::Config(_))));
    assert_eq!(Error::Config(String::new()).exit_code(), 2);
    assert_eq!(Error::Invariant(String::new()).exit_code(), 4);
}

#[test]
fn adaptive_and_oblivious_protocols_are_recorded() {
    let dyne = ExperimentConfig::new(
        40,
        1,
        InstanceConfig::Dyne { radius: 2.0 },
        AlgorithmConfig::Constant { point: vec![0.5, 0.5] },
    );
    let o = run_experiment(&dyne).unwrap();
    assert_eq!(o.protocol, ommo::harness::Protocol::Adaptive);
    assert!(o.ledger.totals.dne_reg <= 1.0);
    assert_eq!(run_experiment(&ogda(16, 1)).unwrap().protocol, ommo::harness::Protocol::Oblivious);
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_ommo");
    let dir = scratch("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("ogda.toml");
    std::fs::write(&cfg, ogda(32, 1).to_toml_string().unwrap()).unwrap();
    let ok = Command::new(bin).args(["run", "--config"]).arg(&cfg).env("OMMO_OUT_DIR", &dir).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.join(ogda(32, 1).label()).join(LEDGER_FILE).exists());

    std::fs::write(&cfg, "[run]\nhorizon = 2\nseed = 0\n").unwrap();
    let bad = Command::new(bin).args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let suite = Command::new(bin).args(["verify", "--suite", "nope"]).output().unwrap();
    assert_eq!(suite.status.code(), Some(2));
    let cover = Command::new(bin).args(["verify", "--suite", "mmflh-cover"]).output().unwrap();
    assert_eq!(cover.status.code(), Some(0));
    std::fs::remove_dir_all(dir).unwrap();
}
