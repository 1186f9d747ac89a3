use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{BoundReport, CheckOutcome, Protocol, RunOutcome};
use crate::error::{Error, Result};
use crate::metrics::{RegretLedger, RegretTotals, VariationReport};

pub const LEDGER_FILE: &str = "ledger.csv";
pub const SUMMARY_FILE: &str = "summary.toml";

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column names: `t, x0.., y0.., f, g_prime, g_star, ...`.
pub fn ledger_header(m: usize, n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..m).map(|i| format!("x{i}")));
    h.extend((0..n).map(|i| format!("y{i}")));
    h.extend(
        [
            "f", "g_prime", "g_star", "min_g_prime", "round_value", "sdual_gap", "dual_gap", "dsp_reg",
            "approximate", "inner_steps", "cap_hit", "clipped",
        ]
        .map(String::from),
    );
    h
}

pub fn write_ledger_csv(ledger: &RegretLedger, path: &Path) -> Result<()> {
    let (m, n) = ledger.rows.first().map_or((0, 0), |r| (r.point.x.len(), r.point.y.len()));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ledger_header(m, n))?;
    for r in &ledger.rows {
        let mut rec = vec![r.t.to_string()];
        rec.extend(r.point.x.iter().chain(r.point.y.iter()).map(|v| fmt_f64(*v)));
        rec.extend([r.value, r.g_prime, r.g_star, r.min_g_prime, r.round_value, r.sdual_gap, r.dual_gap, r.dsp_reg].map(fmt_f64));
        rec.push(u8::from(r.approximate).to_string());
        rec.push(r.inner_steps.map_or(String::new(), |k| k.to_string()));
        rec.push(u8::from(r.cap_hit).to_string());
        rec.push(r.clipped.to_string());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-round columns parsed back from a ledger CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvLedger {
    pub header: Vec<String>,
    pub g_prime: Vec<f64>,
    pub g_star: Vec<f64>,
    pub min_g_prime: Vec<f64>,
    pub sdual_gap: Vec<f64>,
    pub dual_gap: Vec<f64>,
    pub dsp_reg: Vec<f64>,
}

impl CsvLedger {
    /// Running sums recomputed from the per-round columns, in file order.
    pub fn resummed(&self) -> (f64, f64, f64) {
        let (mut s, mut d, mut p) = (0.0, 0.0, 0.0);
        for i in 0..self.g_prime.len() {
            s += self.g_prime[i];
            d += self.g_star[i];
            p += self.g_prime[i] - self.min_g_prime[i];
        }
        (s, d, p)
    }
}

pub fn read_ledger_csv(path: &Path) -> Result<CsvLedger> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| Error::Config(format!("missing column {name}")));
    let idx = [col("g_prime")?, col("g_star")?, col("min_g_prime")?, col("sdual_gap")?, col("dual_gap")?, col("dsp_reg")?];
    let mut cols: [Vec<f64>; 6] = Default::default();
    for rec in r.records() {
        let rec = rec?;
        for (c, &i) in cols.iter_mut().zip(&idx) {
            let v: f64 = rec[i].parse().map_err(|e| Error::Config(format!("bad float {:?}: {e}", &rec[i])))?;
            c.push(v);
        }
    }
    let [g_prime, g_star, min_g_prime, sdual_gap, dual_gap, dsp_reg] = cols;
    Ok(CsvLedger { header, g_prime, g_star, min_g_prime, sdual_gap, dual_gap, dsp_reg })
}

#[derive(Serialize)]
struct Totals {
    sdual_gap: f64,
    dual_gap: f64,
    dsp_reg: f64,
    reg1: f64,
    reg2: f64,
    sne_reg: f64,
    dne_reg: f64,
}

impl From<RegretTotals> for Totals {
    fn from(t: RegretTotals) -> Self {
        Self {
            sdual_gap: t.sdual_gap,
            dual_gap: t.dual_gap,
            dsp_reg: t.dsp_reg,
            reg1: t.reg1,
            reg2: t.reg2,
            sne_reg: t.sne_reg,
            dne_reg: t.dne_reg,
        }
    }
}

#[derive(Serialize)]
struct Constants {
    l0: f64,
    l1: f64,
    lambda: f64,
    alpha: f64,
    mu1: f64,
    mu2: f64,
    diameter: f64,
    sampled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
}

#[derive(Serialize)]
struct Saddle {
    point: Vec<f64>,
    value: f64,
    gap: f64,
    approximate: bool,
}

#[derive(Serialize)]
struct Variation {
    u_t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    v_t: Option<f64>,
    v_t_prime: f64,
    c_t: f64,
    c_t_prime: f64,
    delta_t: f64,
    samples: usize,
    approximate: bool,
}

impl From<&VariationReport> for Variation {
    fn from(v: &VariationReport) -> Self {
        Self {
            u_t: v.u_t,
            v_t: v.v_t,
            v_t_prime: v.v_t_prime,
            c_t: v.c_t,
            c_t_prime: v.c_t_prime,
            delta_t: v.delta_t,
            samples: v.samples,
            approximate: v.approximate,
        }
    }
}

/// Summary block written next to the ledger.
#[derive(Serialize)]
pub struct Summary<'a> {
    label: String,
    instance: &'static str,
    algorithm: &'static str,
    horizon: usize,
    seed: u64,
    protocol: Protocol,
    passed: bool,
    approximate: bool,
    average_iterate_distance: f64,
    cap_hits: usize,
    clip_events: usize,
    totals: Totals,
    constants: Constants,
    saddle: Saddle,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<&'a BoundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variation: Option<Variation>,
    checks: &'a [CheckOutcome],
}

impl<'a> Summary<'a> {
    pub fn new(o: &'a RunOutcome) -> Self {
        let c = &o.constants;
        let s = &o.ledger.saddle;
        Self {
            label: o.config.label(),
            instance: o.config.instance.kind(),
            algorithm: o.config.algorithm.name(),
            horizon: o.config.run.horizon,
            seed: o.config.run.seed,
            protocol: o.protocol,
            passed: o.passed(),
            approximate: o.ledger.approximate,
            average_iterate_distance: o.average_distance,
            cap_hits: o.ledger.cap_hits(),
            clip_events: o.ledger.clip_events(),
            totals: o.ledger.totals.into(),
            constants: Constants {
                l0: c.l0,
                l1: c.l1,
                lambda: c.lambda,
                alpha: c.alpha,
                mu1: c.mu1,
                mu2: c.mu2,
                diameter: c.diameter,
                sampled: c.source == crate::functions::ConstantsSource::Sampled,
                gamma: o.gamma,
            },
            saddle: Saddle { point: s.point.joint().iter().copied().collect(), value: s.value, gap: s.gap, approximate: s.approximate },
            bound: o.bound.as_ref(),
            variation: o.variation.as_ref().map(Variation::from),
            checks: &o.checks,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Writes `ledger.csv` and `summary.toml` under `dir`, returning both paths.
pub fn write_outputs(o: &RunOutcome, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let ledger = dir.join(LEDGER_FILE);
    let summary = dir.join(SUMMARY_FILE);
    write_ledger_csv(&o.ledger, &ledger)?;
    fs::write(&summary, Summary::new(o).to_toml()?)?;
    Ok((ledger, summary))
}
