use std::sync::Arc;

use nalgebra::{dmatrix, DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{domain_samples, DecisionPoint, FunctionConstants, GameDomain, GameFunction, LogPortfolio, QuadForm, QuadraticGame, SAMPLE_COUNT};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::rng::{stream, streams};

/// Source of per-round payoffs under the act-then-observe protocol.
pub trait FunctionSequence: Send {
    fn horizon(&self) -> usize;
    fn domain(&self) -> &GameDomain;

    /// Whether round `t`'s payoff depends on the point played in round `t`.
    fn is_adaptive(&self) -> bool {
        false
    }

    /// Payoff of round `t` (1-based), after the learner committed to `played`.
    fn reveal(&mut self, t: usize, played: &DecisionPoint) -> Result<Arc<dyn GameFunction>>;

    /// All payoffs up front, for oblivious sequences.
    fn materialized(&self) -> Option<&[Arc<dyn GameFunction>]> {
        None
    }

    /// Constants valid for every round, known before the first reveal.
    fn constants(&self) -> Option<FunctionConstants> {
        FunctionConstants::combine(self.materialized()?.iter().map(|f| f.constants()))
    }
}

/// An oblivious sequence fixed in advance.
#[derive(Clone, Debug)]
pub struct StaticSequence {
    fns: Vec<Arc<dyn GameFunction>>,
    domain: GameDomain,
}

impl StaticSequence {
    pub fn new(fns: Vec<Arc<dyn GameFunction>>) -> Result<Self> {
        let first = fns.first().ok_or_else(|| Error::InvalidParameter("empty sequence".into()))?;
        let domain = first.domain().clone();
        if fns.iter().any(|f| f.domain() != &domain) {
            return Err(Error::InvalidParameter("all rounds must share one domain".into()));
        }
        Ok(Self { fns, domain })
    }

    /// Payoff of round `t` (1-based).
    pub fn at(&self, t: usize) -> &Arc<dyn GameFunction> {
        &self.fns[t - 1]
    }

    pub fn functions(&self) -> &[Arc<dyn GameFunction>] {
        &self.fns
    }
}

impl FunctionSequence for StaticSequence {
    fn horizon(&self) -> usize {
        self.fns.len()
    }

    fn domain(&self) -> &GameDomain {
        &self.domain
    }

    fn reveal(&mut self, t: usize, _played: &DecisionPoint) -> Result<Arc<dyn GameFunction>> {
        if t == 0 || t > self.fns.len() {
            return Err(Error::InvalidParameter(format!("round {t} outside 1..={}", self.fns.len())));
        }
        Ok(self.fns[t - 1].clone())
    }

    fn materialized(&self) -> Option<&[Arc<dyn GameFunction>]> {
        Some(&self.fns)
    }
}

/// How the centers of a quadratic sequence move over time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Stationary,
    Iid,
    Piecewise,
}

/// Parameters of a strongly convex-strongly concave quadratic sequence on a cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScScParams {
    pub lambda: f64,
    pub dim_x: usize,
    pub dim_y: usize,
    /// Half-width of the cube domain.
    pub radius: f64,
    /// Centers are drawn uniformly from `[-spread, spread]`.
    pub spread: f64,
    /// Coupling entries are drawn uniformly from `[-coupling, coupling]`, fixed over time.
    pub coupling: f64,
    pub schedule: Schedule,
    #[serde(default = "one")]
    pub segments: usize,
}

fn one() -> usize {
    1
}

pub fn sc_sc_sequence(p: &ScScParams, horizon: usize, seed: u64) -> Result<StaticSequence> {
    if horizon == 0 || p.segments == 0 {
        return Err(Error::InvalidParameter("horizon and segments must be positive".into()));
    }
    let domain = GameDomain::new(Domain::cube(p.dim_x, p.radius)?, Domain::cube(p.dim_y, p.radius)?);
    let mut rng = stream(seed, streams::INSTANCE);
    let coupling = DMatrix::from_fn(p.dim_x, p.dim_y, |_, _| p.coupling * rng.random_range(-1.0..=1.0));
    let draw = |rng: &mut crate::rng::Rng| -> Result<Arc<dyn GameFunction>> {
        let a = DVector::from_fn(p.dim_x, |_, _| p.spread * rng.random_range(-1.0..=1.0));
        let b = DVector::from_fn(p.dim_y, |_, _| p.spread * rng.random_range(-1.0..=1.0));
        Ok(Arc::new(super::make_sc_sc_quadratic(p.lambda, &a, &b, &coupling, domain.clone())?))
    };
    let fns = match p.schedule {
        Schedule::Stationary => vec![draw(&mut rng)?; horizon],
        Schedule::Iid => (0..horizon).map(|_| draw(&mut rng)).collect::<Result<_>>()?,
        Schedule::Piecewise => {
            let pieces = (0..p.segments).map(|_| draw(&mut rng)).collect::<Result<Vec<_>>>()?;
            (0..horizon).map(|t| pieces[t * p.segments / horizon].clone()).collect()
        }
    };
    StaticSequence::new(fns)
}

/// Parameters of a log-portfolio sequence with i.i.d. diagonal weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogPortfolioParams {
    pub assets: usize,
    pub price_low: f64,
    pub price_high: f64,
    pub y_low: f64,
    pub y_high: f64,
}

pub fn log_portfolio_sequence(p: &LogPortfolioParams, horizon: usize, seed: u64) -> Result<StaticSequence> {
    if !(0.0 < p.price_low && p.price_low <= p.price_high) {
        return Err(Error::InvalidParameter("need 0 < price_low <= price_high".into()));
    }
    let domain = GameDomain::new(
        Domain::simplex(p.assets, 1.0)?,
        Domain::new_box(vec![p.y_low; p.assets], vec![p.y_high; p.assets])?,
    );
    let samples = domain_samples(&domain, SAMPLE_COUNT, seed);
    let mut rng = stream(seed, streams::INSTANCE);
    let fns = (0..horizon)
        .map(|_| {
            let a = DVector::from_fn(p.assets, |_, _| {
                if p.price_low == p.price_high {
                    p.price_low
                } else {
                    rng.random_range(p.price_low..=p.price_high)
                }
            });
            Ok(Arc::new(LogPortfolio::with_samples(a, domain.clone(), &samples)?) as Arc<dyn GameFunction>)
        })
        .collect::<Result<Vec<_>>>()?;
    StaticSequence::new(fns)
}

/// The two sequences `||x||^2 - 1/4 ||y||^2 + x^T A_t y` on simplex x simplex
/// that no learner can play well on simultaneously.
pub fn make_impossibility_pair(horizon: usize) -> Result<(StaticSequence, StaticSequence)> {
    if horizon < 4 || horizon % 2 == 1 {
        return Err(Error::InvalidParameter(format!("horizon must be even and >= 4, got {horizon}")));
    }
    let domain = GameDomain::new(Domain::simplex(2, 1.0)?, Domain::simplex(2, 1.0)?);
    let game = |c: DMatrix<f64>| -> Result<Arc<dyn GameFunction>> {
        let form = QuadForm { cx: 2.0, cy: 0.5, coupling: c, ..QuadForm::zeros(2, 2) };
        Ok(Arc::new(QuadraticGame::new(form, domain.clone())?))
    };
    let build = |early: Arc<dyn GameFunction>, late: Arc<dyn GameFunction>| {
        StaticSequence::new((1..=horizon).map(|t| if t <= horizon / 2 { early.clone() } else { late.clone() }).collect())
    };
    let first = build(game(dmatrix![1.0, -1.0; -1.0, 1.0])?, game(DMatrix::zeros(2, 2))?)?;
    let second = build(game(dmatrix![-1.0, 1.0; 1.0, -1.0])?, game(dmatrix![-1.0, 1.0; -1.0, 1.0])?)?;
    Ok((first, second))
}

/// Adaptive adversary whose per-round saddle sits one unit away from the
/// played point, on alternating players.
#[derive(Debug)]
pub struct DyneSequence {
    horizon: usize,
    domain: GameDomain,
}

impl DyneSequence {
    /// Per-round saddle `(x*_t, y*_t)` given the played point.
    pub fn shifted_saddle(t: usize, x: f64, y: f64) -> (f64, f64) {
        let sign = if t.is_multiple_of(2) { 1.0 } else { -1.0 };
        let ind = |v: f64| if v < 0.0 { 1.0 } else { 0.0 };
        let xs = x + (sign + 1.0) / 2.0 * (2.0 * ind(x) - 1.0);
        let ys = y - (sign - 1.0) / 2.0 * (2.0 * ind(y) - 1.0);
        (xs, ys)
    }
}

impl FunctionSequence for DyneSequence {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn domain(&self) -> &GameDomain {
        &self.domain
    }

    fn is_adaptive(&self) -> bool {
        true
    }

    /// Constants of the round whose saddle sits farthest outside the domain.
    fn constants(&self) -> Option<FunctionConstants> {
        let r = self.domain.x.diameter() / 2.0 + 1.0;
        let probe = QuadraticGame::centered(
            2.0,
            2.0,
            &DVector::from_element(1, -r),
            &DVector::from_element(1, r),
            &DMatrix::zeros(1, 1),
            0.0,
            self.domain.clone(),
        )
        .ok()?;
        Some(*probe.constants())
    }

    fn reveal(&mut self, t: usize, played: &DecisionPoint) -> Result<Arc<dyn GameFunction>> {
        let (xs, ys) = Self::shifted_saddle(t, played.x[0], played.y[0]);
        let f = QuadraticGame::centered(
            2.0,
            2.0,
            &DVector::from_element(1, xs),
            &DVector::from_element(1, ys),
            &DMatrix::zeros(1, 1),
            0.0,
            self.domain.clone(),
        )?;
        Ok(Arc::new(f))
    }
}

/// `f_t(x, y) = (x - x*_t)^2 - (y - y*_t)^2` on `[-radius, radius]^2`.
pub fn make_dyne_sequence(horizon: usize, radius: f64) -> Result<DyneSequence> {
    let domain = GameDomain::new(Domain::cube(1, radius)?, Domain::cube(1, radius)?);
    Ok(DyneSequence { horizon, domain })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn impossibility_values() {
        let (s1, s2) = make_impossibility_pair(8).unwrap();
        let v = s1.at(1).value(&dv(&[1.0, 0.0]), &dv(&[0.0, 1.0])).unwrap();
        assert!((v + 0.25).abs() < 1e-15);
        let late = s1.at(8).as_quadratic().unwrap();
        assert!(late.form().coupling.iter().all(|c| *c == 0.0));
        assert_eq!(s2.at(4).as_quadratic().unwrap().form().coupling, dmatrix![-1.0, 1.0; 1.0, -1.0]);
        assert_eq!(s2.at(5).as_quadratic().unwrap().form().coupling, dmatrix![-1.0, 1.0; -1.0, 1.0]);
        assert!(make_impossibility_pair(7).is_err());
        assert!(make_impossibility_pair(2).is_err());
    }

    #[test]
    fn dyne_shifts() {
        assert_eq!(DyneSequence::shifted_saddle(2, 0.5, 0.5), (-0.5, 0.5));
        assert_eq!(DyneSequence::shifted_saddle(3, 0.5, 0.5), (0.5, -0.5));
        assert_eq!(DyneSequence::shifted_saddle(4, -0.5, 0.5), (0.5, 0.5));
        assert_eq!(DyneSequence::shifted_saddle(1, 0.5, -0.5), (0.5, 0.5));
    }

    #[test]
    fn dyne_round_values_alternate() {
        let mut seq = make_dyne_sequence(10, 2.0).unwrap();
        let p = DecisionPoint::new(dv(&[0.5]), dv(&[0.5]));
        for t in 1..=10 {
            let f = seq.reveal(t, &p).unwrap();
            let expect = if t % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(f.value_at(&p).unwrap(), expect);
            assert_eq!(f.saddle().unwrap().unwrap().value, 0.0);
        }
    }

    #[test]
    fn piecewise_schedule_has_requested_segments() {
        let p = ScScParams {
            lambda: 1.0,
            dim_x: 2,
            dim_y: 2,
            radius: 2.0,
            spread: 0.5,
            coupling: 0.2,
            schedule: Schedule::Piecewise,
            segments: 5,
        };
        let s = sc_sc_sequence(&p, 500, 3).unwrap();
        let switches = (1..500).filter(|&i| !Arc::ptr_eq(&s.functions()[i], &s.functions()[i - 1])).count();
        assert_eq!(switches, 4);
    }

    #[test]
    fn iid_prefix_is_stable_across_horizons() {
        let p = ScScParams {
            lambda: 1.0,
            dim_x: 1,
            dim_y: 1,
            radius: 1.0,
            spread: 0.5,
            coupling: 0.3,
            schedule: Schedule::Iid,
            segments: 1,
        };
        let short = sc_sc_sequence(&p, 16, 9).unwrap();
        let long = sc_sc_sequence(&p, 64, 9).unwrap();
        for t in 1..=16 {
            assert_eq!(short.at(t).as_quadratic().unwrap().form(), long.at(t).as_quadratic().unwrap().form());
        }
    }
}
