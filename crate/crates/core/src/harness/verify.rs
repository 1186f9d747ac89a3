use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::{AlgorithmConfig, ExperimentConfig, InstanceConfig};
use super::run::{run_experiment, CheckOutcome, RunOutcome};
use crate::error::{Error, Result};
use crate::functions::{
    check_class_membership, check_gap_regularity, log_portfolio_sequence, make_impossibility_pair, make_sc_sc_quadratic,
    GameDomain, GameFunction, LogPortfolioParams, Schedule,
};
use crate::geometry::{project_weighted_matrix, Domain};
use crate::linalg::RegularityMatrix;
use crate::meta::coverage_violation;
use crate::metrics::cumulative_saddle;
use crate::rng::{stream, streams, Rng};

pub const SUITES: [&str; 7] = ["lemmas", "projections", "linalg", "bounds", "ordering", "mmflh-cover", "impossibility"];

pub const LEMMA_SAMPLES: usize = 500;
pub const LEMMA_SEGMENTS: usize = 200;
pub const PROJECTION_TOL: f64 = 2e-3;
pub const PROJECTION_CASES: usize = 60;
pub const INVERSE_TOL: f64 = 1e-10;
pub const INVERSE_UPDATES: usize = 1000;
pub const ORDERING_TOL: f64 = 1e-6;
pub const COVER_HORIZON: usize = 512;
pub const IMPOSSIBILITY_HORIZON: usize = 400;
pub const FLOOR_SEQUENCES: usize = 100;

/// Outcome of one named suite.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

/// Runs one suite by name, or every suite for `"all"`.
pub fn verify(suite: &str, seed: u64) -> Result<Vec<SuiteReport>> {
    if suite == "all" {
        return SUITES.iter().map(|s| run_suite(s, seed)).collect();
    }
    Ok(vec![run_suite(suite, seed)?])
}

fn run_suite(suite: &str, seed: u64) -> Result<SuiteReport> {
    let checks = match suite {
        "lemmas" => lemmas(seed)?,
        "projections" => projections(seed)?,
        "linalg" => linalg(seed)?,
        "bounds" => bounds(seed)?,
        "ordering" => ordering(seed)?,
        "mmflh-cover" => mmflh_cover(),
        "impossibility" => impossibility(seed)?,
        other => return Err(Error::Config(format!("unknown suite {other:?}; known: {}", SUITES.join(", ")))),
    };
    Ok(SuiteReport { suite: suite.into(), checks })
}

fn lemma_instances(seed: u64) -> Result<Vec<(&'static str, Arc<dyn GameFunction>)>> {
    let mut rng = stream(seed, streams::VERIFY);
    let cube = |d| Domain::cube(d, 1.0);
    let sc_dom = GameDomain::new(cube(2)?, cube(2)?);
    let a = DVector::from_fn(2, |_, _| rng.random_range(-0.5..=0.5));
    let b = DVector::from_fn(2, |_, _| rng.random_range(-0.5..=0.5));
    let coupling = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-0.3..=0.3));
    let coupled: Arc<dyn GameFunction> = Arc::new(make_sc_sc_quadratic(1.0, &a, &b, &coupling, sc_dom.clone())?);
    let separable: Arc<dyn GameFunction> = Arc::new(make_sc_sc_quadratic(2.0, &a, &b, &DMatrix::zeros(2, 2), sc_dom)?);
    let params = LogPortfolioParams { assets: 2, price_low: 0.5, price_high: 1.5, y_low: 0.5, y_high: 1.5 };
    let portfolio = log_portfolio_sequence(&params, 1, seed)?.functions()[0].clone();
    let (first, _) = make_impossibility_pair(4)?;
    Ok(vec![
        ("coupled-quadratic", coupled),
        ("separable-quadratic", separable),
        ("log-portfolio", portfolio),
        ("impossibility-round", first.functions()[0].clone()),
    ])
}

fn lemmas(seed: u64) -> Result<Vec<CheckOutcome>> {
    let per_instance = lemma_instances(seed)?
        .into_par_iter()
        .map(|(name, f)| -> Result<Vec<CheckOutcome>> {
            let mut out = Vec::new();
            let report = check_class_membership(f.as_ref(), LEMMA_SAMPLES, seed)?;
            let reference = cumulative_saddle(std::slice::from_ref(&f), crate::metrics::SADDLE_TOL)?.point;
            let gap = check_gap_regularity(f.as_ref(), &reference, LEMMA_SEGMENTS, seed)?;
            for c in report.checks.iter().chain(&gap) {
                out.push(CheckOutcome::new(
                    &format!("{name}/{}", c.name),
                    c.passed(),
                    format!("{} evaluated, {} violations, worst margin {:.3e}", c.evaluated, c.violations, c.worst_margin),
                ));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

fn random_spd(rng: &mut Rng, d: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    &b * b.transpose() + DMatrix::identity(d, d) * 0.1
}

type Chart<'a> = Box<dyn Fn(&[f64]) -> DVector<f64> + 'a>;

/// Coordinates in which `domain` is full-dimensional; balls retract radially
/// onto their boundary so the search can slide along it.
fn chart(domain: &Domain) -> (usize, Chart<'_>) {
    match domain {
        Domain::Simplex { dim, scale } => (
            dim - 1,
            Box::new(move |c: &[f64]| {
                let last = scale - c.iter().sum::<f64>();
                DVector::from_iterator(*dim, c.iter().copied().chain(std::iter::once(last)))
            }),
        ),
        Domain::Ball { center, radius } => (
            domain.dim(),
            Box::new(move |c: &[f64]| {
                let o = DVector::from_column_slice(center);
                let r = DVector::from_column_slice(c) - &o;
                let n = r.norm();
                if n > *radius { o + r * (radius / n) } else { o + r }
            }),
        ),
        _ => (domain.dim(), Box::new(|c: &[f64]| DVector::from_column_slice(c))),
    }
}

/// `argmin_{z in domain} (z - u)^T A (z - u)` by a global grid search
/// followed by a local pattern search: the window re-centers on any
/// improvement and shrinks only when its center is best.
pub fn grid_search_projection(u: &DVector<f64>, a: &DMatrix<f64>, domain: &Domain) -> Result<DVector<f64>> {
    const POINTS: usize = 41;
    const LOCAL: usize = 5;
    const MIN_WIDTH: f64 = 1e-9;
    const MAX_MOVES: usize = 100_000;
    let q = |z: &DVector<f64>| {
        let r = z - u;
        r.dot(&(a * &r))
    };
    let (k, to_point) = chart(domain);
    let mut best = domain
        .grid(POINTS)
        .into_iter()
        .min_by(|p, r| q(p).total_cmp(&q(r)))
        .ok_or_else(|| Error::InvalidParameter("empty grid".into()))?;
    let mut best_q = q(&best);
    let width = match domain {
        Domain::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| u - l).fold(0.0, f64::max),
        _ => domain.diameter(),
    };
    let mut h = width / (POINTS - 1) as f64;
    let mut moves = 0;
    while h > MIN_WIDTH && moves < MAX_MOVES {
        let base: Vec<f64> = best.iter().take(k).copied().collect();
        let mut idx = vec![0usize; k];
        let mut moved = false;
        loop {
            let c: Vec<f64> =
                (0..k).map(|i| base[i] + h * (idx[i] as f64 / (LOCAL - 1) as f64 * 2.0 - 1.0)).collect();
            let p = to_point(&c);
            let qp = q(&p);
            if qp < best_q && domain.contains(&p, 1e-12)? {
                best = p;
                best_q = qp;
                moved = true;
            }
            let mut i = 0;
            while i < k {
                idx[i] += 1;
                if idx[i] < LOCAL {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
        if moved {
            moves += 1;
        } else {
            h *= 0.5;
        }
    }
    Ok(best)
}

fn projection_domains() -> Result<Vec<Domain>> {
    Ok(vec![
        Domain::cube(1, 1.0)?,
        Domain::new_box(vec![-1.0, 0.0], vec![1.0, 2.0])?,
        Domain::cube(3, 0.5)?,
        Domain::simplex(2, 1.0)?,
        Domain::simplex(3, 1.0)?,
        Domain::simplex(3, 2.0)?,
        Domain::ball(vec![0.0, 0.0], 1.0)?,
        Domain::ball(vec![0.5, -0.5, 0.0], 1.0)?,
    ])
}

fn projections(seed: u64) -> Result<Vec<CheckOutcome>> {
    let domains = projection_domains()?;
    let mut rng = stream(seed, streams::VERIFY);
    let cases: Vec<(usize, DVector<f64>, DMatrix<f64>)> = (0..PROJECTION_CASES)
        .map(|i| {
            let dom = &domains[i % domains.len()];
            let d = dom.dim();
            let u = dom.center() + DVector::from_fn(d, |_, _| 1.5 * rng.sample::<f64, _>(StandardNormal));
            (i % domains.len(), u, random_spd(&mut rng, d))
        })
        .collect();
    let errors = cases
        .par_iter()
        .map(|(di, u, a)| {
            let dom = &domains[*di];
            let fast = project_weighted_matrix(u, a, dom)?;
            let oracle = grid_search_projection(u, a, dom)?;
            Ok((*di, (fast - oracle).norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(domains
        .iter()
        .enumerate()
        .map(|(di, dom)| {
            let worst = errors.iter().filter(|(d, _)| *d == di).map(|(_, e)| *e).fold(0.0, f64::max);
            CheckOutcome::new(
                &format!("projection/{}", domain_label(dom)),
                worst <= PROJECTION_TOL,
                format!("worst distance to grid oracle {worst:.3e}"),
            )
        })
        .collect())
}

fn domain_label(d: &Domain) -> String {
    match d {
        Domain::Box { .. } => format!("box{}", d.dim()),
        Domain::Simplex { dim, scale } => format!("simplex{dim}x{scale}"),
        Domain::Ball { .. } => format!("ball{}", d.dim()),
        Domain::Product { .. } => format!("product{}", d.dim()),
    }
}

fn linalg(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = stream(seed, streams::VERIFY);
    let dims = [2usize, 3, 5, 8];
    let per_dim = INVERSE_UPDATES / dims.len();
    let mut out = Vec::new();
    for d in dims {
        let mut a = RegularityMatrix::init(d, 1.0)?;
        let mut worst = 0.0f64;
        for _ in 0..per_dim {
            let v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            a.rank_one_update(&v)?;
            let direct = a.matrix().try_inverse().ok_or(Error::Singular)?;
            worst = worst.max((a.inverse() - direct).amax());
        }
        out.push(CheckOutcome::new(
            &format!("rank-one-inverse/d{d}"),
            worst <= INVERSE_TOL,
            format!("{per_dim} updates, worst entry error {worst:.3e}"),
        ));
    }
    Ok(out)
}

fn run_all(cfgs: Vec<ExperimentConfig>) -> Result<Vec<RunOutcome>> {
    cfgs.par_iter().map(run_experiment).collect()
}

fn bounds(seed: u64) -> Result<Vec<CheckOutcome>> {
    let cfgs = vec![
        ExperimentConfig::new(256, seed, InstanceConfig::sc_sc(2, 0.3, Schedule::Iid, 1), AlgorithmConfig::Ogda { gamma: None }),
        ExperimentConfig::new(128, seed, InstanceConfig::portfolio(2), AlgorithmConfig::Ommns { gamma: None, epsilon: None }),
        ExperimentConfig::new(
            256,
            seed,
            InstanceConfig::sc_sc(1, 0.3, Schedule::Iid, 1),
            AlgorithmConfig::OnlineVi { split: None, gamma: None, epsilon: None },
        ),
        ExperimentConfig::new(
            200,
            seed,
            InstanceConfig::sc_sc(2, 0.3, Schedule::Piecewise, 4),
            AlgorithmConfig::Agda { k_cap: crate::learners::DEFAULT_K_CAP },
        ),
    ];
    Ok(run_all(cfgs)?
        .into_iter()
        .map(|o| {
            let b = o.bound.as_ref();
            let detail = match b {
                Some(b) => format!("{} = {:.4e} vs {:.4e}; {} failed checks", b.name, b.value, b.bound, o.failures().len()),
                None => "no bound".into(),
            };
            CheckOutcome::new(&format!("bound/{}", o.config.algorithm.name()), o.passed() && b.is_some(), detail)
        })
        .collect())
}

fn ordering(seed: u64) -> Result<Vec<CheckOutcome>> {
    let separable = |alg: AlgorithmConfig, schedule| {
        ExperimentConfig::new(256, seed, InstanceConfig::sc_sc(2, 0.0, schedule, 4), alg)
    };
    let cfgs = vec![
        separable(AlgorithmConfig::Ogda { gamma: None }, Schedule::Iid),
        separable(AlgorithmConfig::Ommns { gamma: None, epsilon: None }, Schedule::Iid),
        separable(AlgorithmConfig::Agda { k_cap: crate::learners::DEFAULT_K_CAP }, Schedule::Piecewise),
        separable(AlgorithmConfig::Mmflh { base: "ogda".into(), k: Some(2), alpha: None }, Schedule::Piecewise),
    ];
    let mut out = Vec::new();
    for o in run_all(cfgs)? {
        let chain = o.ledger.ordering(true);
        let worst = chain.iter().map(|c| c.lhs - c.rhs).fold(f64::NEG_INFINITY, f64::max);
        out.push(CheckOutcome::new(
            &format!("ordering/{}", o.config.algorithm.name()),
            worst <= ORDERING_TOL,
            format!("{} links, worst lhs - rhs = {worst:.3e}", chain.len()),
        ));
    }
    Ok(out)
}

fn mmflh_cover() -> Vec<CheckOutcome> {
    [2usize, 3, 10]
        .into_iter()
        .map(|k| {
            let v = coverage_violation(COVER_HORIZON, k);
            CheckOutcome::new(
                &format!("cover/K{k}"),
                v.is_none(),
                match v {
                    Some((r, s, m)) => format!("interval [{r}, {s}] needs {m} experts"),
                    None => format!("every interval up to T = {COVER_HORIZON} is covered"),
                },
            )
        })
        .collect()
}

/// `sum_t rho_t^2 + (1 - rho_t)^2`, written so each term is at least `1/2` in floating point.
pub fn impossibility_floor(rho: &[f64]) -> f64 {
    rho.iter().map(|r| 0.5 + 2.0 * (r - 0.5) * (r - 0.5)).sum()
}

/// Largest of `SNE-Reg`, `Reg^1`, `Reg^2` on each impossibility sequence.
pub fn impossibility_regrets(alg: AlgorithmConfig, horizon: usize, seed: u64) -> Result<[f64; 2]> {
    let run = |sequence| -> Result<f64> {
        let o = run_experiment(&ExperimentConfig::new(horizon, seed, InstanceConfig::Impossibility { sequence }, alg.clone()))?;
        let t = o.ledger.totals;
        Ok(t.sne_reg.max(t.reg1).max(t.reg2))
    };
    Ok([run(1)?, run(2)?])
}

fn impossibility(seed: u64) -> Result<Vec<CheckOutcome>> {
    let t = IMPOSSIBILITY_HORIZON;
    let mut rng = stream(seed, streams::VERIFY);
    let worst_floor = (0..FLOOR_SEQUENCES)
        .map(|_| {
            let rho: Vec<f64> = (0..t).map(|_| rng.random_range(0.0..=1.0)).collect();
            impossibility_floor(&rho)
        })
        .fold(f64::INFINITY, f64::min);
    let mut out = vec![CheckOutcome::new(
        "impossibility/floor",
        worst_floor >= t as f64 / 2.0,
        format!("smallest sum over {FLOOR_SEQUENCES} sequences {worst_floor:.6} vs {}", t / 2),
    )];
    let algs = [
        AlgorithmConfig::Ogda { gamma: None },
        AlgorithmConfig::Ommns { gamma: None, epsilon: None },
        AlgorithmConfig::Agda { k_cap: crate::learners::DEFAULT_K_CAP },
    ];
    let regrets = algs.par_iter().map(|a| impossibility_regrets(a.clone(), t, seed)).collect::<Result<Vec<_>>>()?;
    for (a, [r1, r2]) in algs.iter().zip(regrets) {
        out.push(CheckOutcome::new(
            &format!("impossibility/{}", a.name()),
            r1.max(r2) >= t as f64 / 20.0,
            format!("max regret {r1:.3} on sequence 1, {r2:.3} on sequence 2, floor {}", t as f64 / 20.0),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_oracle_finds_interior_and_boundary_points() {
        let a = DMatrix::identity(2, 2);
        let dom = Domain::cube(2, 1.0).unwrap();
        let inner = DVector::from_column_slice(&[0.3, -0.2]);
        assert!((grid_search_projection(&inner, &a, &dom).unwrap() - &inner).norm() < 1e-6);
        let outer = DVector::from_column_slice(&[2.0, 0.5]);
        let p = grid_search_projection(&outer, &a, &dom).unwrap();
        assert!((p - DVector::from_column_slice(&[1.0, 0.5])).norm() < 1e-6);
        let simplex = Domain::simplex(2, 1.0).unwrap();
        let p = grid_search_projection(&DVector::from_column_slice(&[1.0, 1.0]), &a, &simplex).unwrap();
        assert!((p - DVector::from_column_slice(&[0.5, 0.5])).norm() < 1e-6);
    }

    #[test]
    fn floor_terms_never_drop_below_half() {
        assert_eq!(impossibility_floor(&[0.5, 0.5]), 1.0);
        assert_eq!(impossibility_floor(&[0.0, 1.0]), 2.0);
        assert!(impossibility_floor(&[0.5 + 1e-17; 10]) >= 5.0);
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        assert!(matches!(verify("nope", 0), Err(Error::Config(_))));
    }

    #[test]
    fn cheap_suites_pass() {
        for s in ["mmflh-cover", "linalg", "projections"] {
            let r = verify(s, 3).unwrap();
            assert!(r[0].passed(), "{:?}", r[0].checks);
        }
    }
}
