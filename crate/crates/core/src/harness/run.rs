use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use super::config::{AlgorithmConfig, ExperimentConfig, InstanceConfig};
use crate::error::{Error, Result};
use crate::functions::{
    log_portfolio_sequence, make_dyne_sequence, make_impossibility_pair, sc_sc_sequence, DecisionPoint,
    FunctionClass, FunctionConstants, FunctionSequence, GameDomain, GameFunction,
};
use crate::learners::{play_rounds, AgdaConfig, Learner, MRule, Player, Rounds, FEASIBILITY_TOL};
use crate::linalg::Split;
use crate::meta::{BaseLearner, Mmflh, MmflhConfig};
use crate::metrics::{
    average_iterate_distance, check_cumulative_saddle, cumulative_saddle, dynamic_gap, regret_report,
    variation_report, vi_regret, CumulativeSaddle, RegretLedger, VariationReport, GAP_FLOOR,
};

/// Slack of the per-round contraction check.
pub const CONTRACTION_SLACK: f64 = 1e-9;
/// Slack of the AGDA dual-gap bound.
pub const AGDA_BOUND_SLACK: f64 = 1e-6;
/// Telescoping comparators beyond the cumulative saddle: at most this many vertices.
const TELESCOPING_VERTICES: usize = 64;

/// Whether the payoff depended on the point just played.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Oblivious,
    Adaptive,
}

/// Pass/fail of one post-run invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

/// Measured quantity against its theoretical bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `value / bound`.
    pub ratio: f64,
    /// `None` for bounds known only up to a constant.
    pub holds: Option<bool>,
}

impl BoundReport {
    fn new(name: &str, value: f64, bound: f64, enforced: bool) -> Self {
        Self { name: name.into(), value, bound, ratio: value / bound, holds: enforced.then_some(value <= bound) }
    }
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub protocol: Protocol,
    pub constants: FunctionConstants,
    /// Step scale of the learner (or base learners).
    pub gamma: Option<f64>,
    pub ledger: RegretLedger,
    pub functions: Vec<Arc<dyn GameFunction>>,
    /// `z_{T+1}`, the point after the last update.
    pub final_point: DecisionPoint,
    pub average_distance: f64,
    pub variation: Option<VariationReport>,
    pub bound: Option<BoundReport>,
    pub checks: Vec<CheckOutcome>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.bound.as_ref().and_then(|b| b.holds).unwrap_or(true)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self.checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
        if let Some(b) = &self.bound {
            if b.holds == Some(false) {
                out.push(format!("{}: {} > {}", b.name, b.value, b.bound));
            }
        }
        out
    }
}

/// Instantiates the payoff generator.
pub fn build_sequence(instance: &InstanceConfig, horizon: usize, seed: u64) -> Result<Box<dyn FunctionSequence>> {
    Ok(match instance {
        InstanceConfig::ScScQuadratic(p) => Box::new(sc_sc_sequence(p, horizon, seed)?),
        InstanceConfig::LogPortfolio(p) => Box::new(log_portfolio_sequence(p, horizon, seed)?),
        InstanceConfig::Impossibility { sequence } => {
            let (a, b) = make_impossibility_pair(horizon).map_err(|e| Error::Config(e.to_string()))?;
            Box::new(if *sequence == 1 { a } else { b })
        }
        InstanceConfig::Dyne { radius } => Box::new(make_dyne_sequence(horizon, *radius)?),
    })
}

#[allow(clippy::large_enum_variant)]
enum AnyPlayer {
    Learner(Learner),
    Meta(Mmflh),
}

impl AnyPlayer {
    fn as_player(&mut self) -> &mut dyn Player {
        match self {
            AnyPlayer::Learner(l) => l,
            AnyPlayer::Meta(m) => m,
        }
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    }
}

fn need_lambda(c: &FunctionConstants) -> Result<f64> {
    if c.lambda > 0.0 {
        Ok(c.lambda)
    } else {
        Err(Error::Config("instance is not strongly convex-strongly concave; set gamma explicitly".into()))
    }
}

fn build_player(
    cfg: &ExperimentConfig,
    domain: &GameDomain,
    c: &FunctionConstants,
    saddle: Option<&CumulativeSaddle>,
) -> Result<(AnyPlayer, Option<f64>)> {
    let horizon = cfg.run.horizon;
    let learner = match &cfg.algorithm {
        AlgorithmConfig::Ogda { gamma } => {
            let g = gamma.map_or_else(|| need_lambda(c), Ok)?;
            Learner::ogda(domain.clone(), g)
        }
        AlgorithmConfig::Ommns { gamma, epsilon } => Learner::ommns(domain.clone(), gamma.unwrap_or(c.ec_gamma()), *epsilon),
        AlgorithmConfig::Lra { rule, gamma, epsilon, scale } => {
            let rule = match rule.as_str() {
                "identity" => MRule::Identity(*scale),
                "outer" => MRule::Outer,
                _ => MRule::BlockSplit(Split::new(vec![domain.x_dim(), domain.y_dim()])?),
            };
            Learner::lra(domain.clone(), *gamma, rule, *epsilon)
        }
        AlgorithmConfig::Agda { k_cap } => Learner::agda(domain.clone(), AgdaConfig::new(c.mu1, c.mu2, c.l1, *k_cap)?),
        AlgorithmConfig::OnlineVi { split, gamma, epsilon } => {
            let split = Split::new(split.clone().unwrap_or_else(|| vec![domain.x_dim(), domain.y_dim()]))?;
            Learner::online_vi(domain.clone(), split, gamma.unwrap_or(c.ec_gamma()), *epsilon)
        }
        AlgorithmConfig::Constant { point } => {
            Learner::constant(domain.clone(), domain.split(&DVector::from_column_slice(point)))
        }
        AlgorithmConfig::Mmflh { base, k, alpha } => {
            let base = match base.as_str() {
                "ogda" => BaseLearner::Ogda { lambda: need_lambda(c)? },
                _ => BaseLearner::Ommns { gamma: c.ec_gamma(), epsilon: None },
            };
            let gamma = match &base {
                BaseLearner::Ogda { lambda } => *lambda,
                BaseLearner::Ommns { gamma, .. } => *gamma,
            };
            let mut mc = MmflhConfig::from_constants(base, k.unwrap_or(horizon.max(2)), c);
            if let Some(a) = alpha {
                mc.alpha = *a;
            }
            let m = Mmflh::new(domain.clone(), mc, saddle.map(|s| s.point.clone())).map_err(config_err)?;
            return Ok((AnyPlayer::Meta(m), Some(gamma)));
        }
    }
    .map_err(config_err)?;
    let mut learner = learner.with_seed(cfg.run.seed);
    if let Some(start) = &cfg.run.start {
        if start.len() != domain.dim() {
            return Err(Error::Config(format!("start has {} coordinates, domain has {}", start.len(), domain.dim())));
        }
        learner = learner.with_start(domain.split(&DVector::from_column_slice(start)))?;
    }
    if cfg.verify.telescoping {
        learner = learner.with_trace();
    }
    let gamma = match cfg.algorithm {
        AlgorithmConfig::Constant { .. } | AlgorithmConfig::Agda { .. } => None,
        _ => Some(learner.gamma()),
    };
    Ok((AnyPlayer::Learner(learner), gamma))
}

/// Runs the act-then-observe loop and every enabled check.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let horizon = cfg.run.horizon;
    let mut seq = build_sequence(&cfg.instance, horizon, cfg.run.seed)?;
    let domain = seq.domain().clone();
    let constants = seq.constants().ok_or(Error::MissingOracle("sequence constants"))?;
    let upfront = match seq.materialized() {
        Some(fns) => Some(cumulative_saddle(fns, cfg.tolerances.saddle)?),
        None => None,
    };
    let (mut player, gamma) = build_player(cfg, &domain, &constants, upfront.as_ref())?;
    let protocol = if seq.is_adaptive() { Protocol::Adaptive } else { Protocol::Oblivious };

    let Rounds { functions: fns, plays, reports, next: final_point } = play_rounds(seq.as_mut(), player.as_player())?;
    let mut infeasible = 0usize;
    for z in &plays {
        if !domain.contains(z, FEASIBILITY_TOL)? {
            infeasible += 1;
        }
    }
    let saddle = match upfront {
        Some(s) => s,
        None => cumulative_saddle(&fns, cfg.tolerances.saddle)?,
    };
    let mut ledger = regret_report(&fns, &plays, &saddle, true)?;
    ledger.attach_reports(&reports)?;
    let average_distance = average_iterate_distance(&plays, &saddle.point)?;

    let mut checks = Vec::new();
    let v = &cfg.verify;
    if v.feasibility {
        checks.push(CheckOutcome::new("feasibility", infeasible == 0, format!("{infeasible} infeasible plays")));
    }
    if v.telescoping {
        if let AnyPlayer::Learner(l) = &player {
            if let Some(tr) = l.trace() {
                let mut refs = vec![saddle.point.joint(), domain.center().joint()];
                if let Some(vs) = domain.joint().vertices() {
                    refs.extend(vs.into_iter().take(TELESCOPING_VERTICES));
                }
                let mut worst = f64::NEG_INFINITY;
                let mut ok = true;
                for r in &refs {
                    let c = tr.check(r)?;
                    ok &= c.holds();
                    worst = worst.max(c.lhs - c.rhs);
                }
                checks.push(CheckOutcome::new(
                    "telescoping",
                    ok,
                    format!("{} comparators, worst lhs - rhs = {worst:.3e}", refs.len()),
                ));
            }
        }
    }
    if v.contraction && matches!(cfg.algorithm, AlgorithmConfig::Agda { .. }) {
        let mut worst = f64::NEG_INFINITY;
        for r in &reports {
            if let (Some(b), Some(a)) = (r.gap_before, r.gap_after) {
                worst = worst.max(a - 0.25 * b);
            }
        }
        checks.push(CheckOutcome::new(
            "agda-contraction",
            worst <= CONTRACTION_SLACK,
            format!("worst g*(z_next) - g*(z)/4 = {worst:.3e}, {} cap hits", ledger.cap_hits()),
        ));
    }
    if v.gap_floor {
        let m = ledger.min_dynamic_gap();
        checks.push(CheckOutcome::new("dynamic-gap-floor", m >= GAP_FLOOR, format!("min g* = {m:.3e}")));
    }
    if v.ordering {
        let separable = fns.iter().all(|f| f.classes().contains(&FunctionClass::Separable));
        for o in ledger.ordering(separable) {
            checks.push(CheckOutcome::new(o.name, o.holds(), format!("{:.6e} vs {:.6e}", o.lhs, o.rhs)));
        }
    }
    if v.saddle_check {
        let c = check_cumulative_saddle(&fns, &saddle, cfg.tolerances.saddle_check_samples, cfg.run.seed)?;
        checks.push(CheckOutcome::new(
            "cumulative-saddle",
            c.passed(),
            format!("{} points, worst margin {:.3e}", c.evaluated, c.worst_margin),
        ));
    }

    let needs_variation = v.variation
        || (v.bound && matches!(cfg.algorithm, AlgorithmConfig::Agda { .. } | AlgorithmConfig::Mmflh { .. }));
    let variation = if needs_variation {
        Some(variation_report(&fns, &plays, Some(&saddle.point), cfg.tolerances.variation_samples, cfg.run.seed, true)?)
    } else {
        None
    };

    let bound = if v.bound {
        compute_bound(cfg, &constants, gamma, &domain, &fns, &plays, &ledger, &final_point, variation.as_ref())?
    } else {
        None
    };

    Ok(RunOutcome {
        config: cfg.clone(),
        protocol,
        constants,
        gamma,
        ledger,
        functions: fns,
        final_point,
        average_distance,
        variation,
        bound,
        checks,
    })
}

#[allow(clippy::too_many_arguments)]
fn compute_bound(
    cfg: &ExperimentConfig,
    c: &FunctionConstants,
    gamma: Option<f64>,
    domain: &GameDomain,
    fns: &[Arc<dyn GameFunction>],
    plays: &[DecisionPoint],
    ledger: &RegretLedger,
    final_point: &DecisionPoint,
    variation: Option<&VariationReport>,
) -> Result<Option<BoundReport>> {
    let t = cfg.run.horizon as f64;
    let d = domain.dim() as f64;
    let log_t = t.ln();
    Ok(match &cfg.algorithm {
        AlgorithmConfig::Ogda { .. } => {
            let lambda = gamma.expect("ogda has a step scale");
            Some(BoundReport::new("sdual-gap <= L0^2/lambda log T", ledger.totals.sdual_gap, c.l0 * c.l0 / lambda * log_t, true))
        }
        AlgorithmConfig::Ommns { .. } => Some(BoundReport::new(
            "sdual-gap <= 2d(1/alpha + L0 D) log T",
            ledger.totals.sdual_gap,
            2.0 * d * (1.0 / c.alpha + c.l0 * c.diameter) * log_t,
            true,
        )),
        AlgorithmConfig::OnlineVi { .. } => {
            let grid = domain.joint().grid(cfg.tolerances.vi_grid);
            let (value, _) = vi_regret(fns, plays, &grid)?;
            Some(BoundReport::new(
                "vi-regret <= (1/alpha + L0 D)(d log T + 1)",
                value,
                (1.0 / c.alpha + c.l0 * c.diameter) * (d * log_t + 1.0),
                true,
            ))
        }
        AlgorithmConfig::Agda { .. } => {
            let u = variation.expect("variation computed for agda").u_t;
            let first = ledger.rows[0].g_star;
            let last = dynamic_gap(fns[fns.len() - 1].as_ref(), final_point, true)?.value;
            Some(BoundReport::new(
                "dual-gap <= 2 U_T + 2(g*_1(z_1) - g*_T(z_T+1))",
                ledger.totals.dual_gap,
                2.0 * u + 2.0 * (first - last) + AGDA_BOUND_SLACK,
                true,
            ))
        }
        AlgorithmConfig::Mmflh { .. } => {
            let vt = variation.and_then(|v| v.v_t).expect("variation computed for mmflh");
            let scale = log_t.max((t * vt * log_t).sqrt());
            Some(BoundReport::new("dsp-reg / max(log T, sqrt(T V_T log T))", ledger.totals.dsp_reg, scale, false))
        }
        AlgorithmConfig::Lra { .. } | AlgorithmConfig::Constant { .. } => None,
    })
}
