use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::output::{fmt_f64, write_outputs};
use super::run::{run_experiment, RunOutcome};
use crate::error::{Error, Result};

pub const SWEEP_FILE: &str = "sweep.csv";

/// A parsed `--param` argument: `key=v1,v2,...`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepParam {
    /// Dotted path into the config table; `T` stands for `run.horizon`.
    pub path: Vec<String>,
    pub values: Vec<toml::Value>,
}

impl SweepParam {
    pub fn parse(arg: &str) -> Result<Self> {
        let (key, values) =
            arg.split_once('=').ok_or_else(|| Error::Config(format!("sweep parameter {arg:?} is not key=v1,v2,...")))?;
        let key = key.trim();
        let path: Vec<String> = if key == "T" { vec!["run".into(), "horizon".into()] } else { key.split('.').map(String::from).collect() };
        if path.iter().any(String::is_empty) {
            return Err(Error::Config(format!("bad sweep key {key:?}")));
        }
        let values = values.split(',').map(|v| parse_value(v.trim())).collect::<Vec<_>>();
        if values.is_empty() || values.iter().any(|v| matches!(v, toml::Value::String(s) if s.is_empty())) {
            return Err(Error::Config(format!("sweep parameter {arg:?} has an empty value")));
        }
        Ok(Self { path, values })
    }

    pub fn key(&self) -> String {
        self.path.join(".")
    }
}

fn parse_value(s: &str) -> toml::Value {
    if let Ok(i) = s.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = s.parse::<f64>() {
        return toml::Value::Float(f);
    }
    match s {
        "true" => toml::Value::Boolean(true),
        "false" => toml::Value::Boolean(false),
        _ => toml::Value::String(s.trim_matches('"').to_string()),
    }
}

fn display(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Copies of `base` with the swept key set to each value, validated.
pub fn expand(base: &ExperimentConfig, param: &SweepParam) -> Result<Vec<(String, ExperimentConfig)>> {
    let table: toml::Table = toml::Table::try_from(base).map_err(|e| Error::Config(e.to_string()))?;
    param
        .values
        .iter()
        .map(|v| {
            let mut t = table.clone();
            let (last, parents) = param.path.split_last().expect("non-empty path");
            let mut cur = &mut t;
            for p in parents {
                cur = cur
                    .entry(p.clone())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| Error::Config(format!("{} is not a table", param.key())))?;
            }
            cur.insert(last.clone(), v.clone());
            let mut cfg = ExperimentConfig::from_table(t)?;
            let tag = format!("{}={}", param.key(), display(v));
            cfg.run.label = Some(format!("{}-{}", base.label(), tag.replace(['=', '.', '/'], "_")));
            Ok((tag, cfg))
        })
        .collect()
}

/// One row of the sweep summary.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub tag: String,
    pub dir: PathBuf,
    pub outcome: RunOutcome,
}

/// Runs every expanded config in parallel, writing each under its own
/// subdirectory of `out`, then writes `sweep.csv`.
pub fn run_sweep(base: &ExperimentConfig, param: &SweepParam, out: &Path) -> Result<Vec<SweepRow>> {
    let runs = expand(base, param)?;
    let rows = runs
        .into_par_iter()
        .map(|(tag, cfg)| {
            let outcome = run_experiment(&cfg)?;
            let dir = out.join(cfg.label());
            write_outputs(&outcome, &dir)?;
            Ok(SweepRow { tag, dir, outcome })
        })
        .collect::<Result<Vec<_>>>()?;
    write_sweep_csv(&rows, &out.join(SWEEP_FILE))?;
    Ok(rows)
}

fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "value", "horizon", "sdual_gap", "dual_gap", "dsp_reg", "dne_reg", "sne_reg", "bound", "ratio", "passed", "dir",
    ])?;
    for r in rows {
        let t = &r.outcome.ledger.totals;
        let b = r.outcome.bound.as_ref();
        w.write_record([
            r.tag.split_once('=').map_or(r.tag.as_str(), |(_, v)| v).to_string(),
            r.outcome.config.run.horizon.to_string(),
            fmt_f64(t.sdual_gap),
            fmt_f64(t.dual_gap),
            fmt_f64(t.dsp_reg),
            fmt_f64(t.dne_reg),
            fmt_f64(t.sne_reg),
            b.map_or(String::new(), |b| fmt_f64(b.bound)),
            b.map_or(String::new(), |b| fmt_f64(b.ratio)),
            u8::from(r.outcome.passed()).to_string(),
            r.dir.display().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
