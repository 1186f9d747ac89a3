//! Sleeping-experts meta-learner over geometrically lived base learners.

use crate::error::{Error, Result};
use crate::functions::{DecisionPoint, FunctionConstants, GameDomain, GameFunction};
use crate::learners::{Learner, Player, StepReport};

/// Tolerance on the alive-weight sum after every round.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// `E_K(t)`: the next multiple of `K^(k+1)` after `t`, where `K^k` is the
/// largest power of `K` dividing `t`.
pub fn ending_time(t: usize, k: usize) -> usize {
    assert!(t >= 1 && k >= 2, "ending_time needs t >= 1 and K >= 2");
    let mut p = k;
    let mut rest = t;
    while rest.is_multiple_of(k) {
        rest /= k;
        p *= k;
    }
    (t / p + 1) * p
}

/// Smallest `j` with `K^j >= n`.
pub fn ceil_log(n: usize, k: usize) -> usize {
    let mut j = 0;
    let mut p = 1usize;
    while p < n {
        p = p.saturating_mul(k);
        j += 1;
    }
    j
}

/// Number of chained lifetimes `[t_j, E_K(t_j) - 1]` needed to cover `[r, s]`
/// starting from `t_1 = r`.
pub fn chain_length(r: usize, s: usize, k: usize) -> usize {
    let mut m = 1;
    let mut t = r;
    loop {
        let e = ending_time(t, k);
        if e > s {
            return m;
        }
        t = e;
        m += 1;
    }
}

/// First interval `[r, s]` with `s <= horizon` whose chain exceeds
/// `ceil(log_K(s - r + 1)) + 1`, as `(r, s, m)`.
pub fn coverage_violation(horizon: usize, k: usize) -> Option<(usize, usize, usize)> {
    for r in 1..=horizon {
        for s in r..=horizon {
            let m = chain_length(r, s, k);
            if m > ceil_log(s - r + 1, k) + 1 {
                return Some((r, s, m));
            }
        }
    }
    None
}

/// Base learner spawned for every expert.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseLearner {
    Ogda { lambda: f64 },
    Ommns { gamma: f64, epsilon: Option<f64> },
}

impl BaseLearner {
    fn spawn(&self, domain: &GameDomain) -> Result<Learner> {
        match self {
            BaseLearner::Ogda { lambda } => Learner::ogda(domain.clone(), *lambda),
            BaseLearner::Ommns { gamma, epsilon } => Learner::ommns(domain.clone(), *gamma, *epsilon),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmflhConfig {
    pub base: BaseLearner,
    /// Lifetime base `K >= 2`.
    pub k: usize,
    /// Exponential-weights rate.
    pub alpha: f64,
    /// Losses are clipped to `[-clip, clip]`.
    pub clip: f64,
}

impl MmflhConfig {
    /// Rate `lambda / L0^2` for OGDA bases and `gamma / 4` for OMMNS bases;
    /// clip at `2 L0 D`.
    pub fn from_constants(base: BaseLearner, k: usize, c: &FunctionConstants) -> Self {
        let alpha = match &base {
            BaseLearner::Ogda { lambda } => lambda / (c.l0 * c.l0),
            BaseLearner::Ommns { gamma, .. } => gamma / 4.0,
        };
        Self { base, k, alpha, clip: 2.0 * c.l0 * c.diameter }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!("K must be at least 2, got {}", self.k)));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.clip > 0.0) {
            return Err(Error::InvalidParameter(format!("clip must be positive, got {}", self.clip)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Expert {
    birth: usize,
    ending: usize,
    learner: Learner,
    weight: f64,
}

/// Min-max following the leading history.
#[derive(Clone, Debug)]
pub struct Mmflh {
    domain: GameDomain,
    cfg: MmflhConfig,
    saddle_ref: DecisionPoint,
    pool: Vec<Expert>,
    t: usize,
    clipped: usize,
}

impl Mmflh {
    /// `saddle_ref` is the cumulative saddle point, known in advance.
    pub fn new(domain: GameDomain, cfg: MmflhConfig, saddle_ref: Option<DecisionPoint>) -> Result<Self> {
        cfg.validate()?;
        let saddle_ref = saddle_ref.ok_or(Error::MissingOracle("cumulative saddle point"))?;
        if !domain.contains(&saddle_ref, 1e-8)? {
            return Err(Error::OutsideDomain("saddle reference".into()));
        }
        let mut m = Self { domain, cfg, saddle_ref, pool: Vec::new(), t: 1, clipped: 0 };
        m.open_round()?;
        Ok(m)
    }

    /// Prune expired experts, rescale the survivors by `1 - 1/t` and add a
    /// newcomer with weight `1/t`.
    fn open_round(&mut self) -> Result<()> {
        let t = self.t;
        self.pool.retain(|e| e.ending > t);
        let z: f64 = self.pool.iter().map(|e| e.weight).sum();
        let keep = 1.0 - 1.0 / t as f64;
        if z > 0.0 {
            for e in &mut self.pool {
                e.weight *= keep / z;
            }
        }
        let learner = self.cfg.base.spawn(&self.domain)?;
        self.pool.push(Expert { birth: t, ending: ending_time(t, self.cfg.k), learner, weight: 1.0 / t as f64 });
        if t == 1 || z <= 0.0 {
            let s: f64 = self.pool.iter().map(|e| e.weight).sum();
            for e in &mut self.pool {
                e.weight /= s;
            }
        }
        Ok(())
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn alive(&self) -> usize {
        self.pool.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.pool.iter().map(|e| e.weight).collect()
    }

    /// `(birth, ending)` of every alive expert.
    pub fn lifetimes(&self) -> Vec<(usize, usize)> {
        self.pool.iter().map(|e| (e.birth, e.ending)).collect()
    }

    pub fn clipped(&self) -> usize {
        self.clipped
    }

    pub fn config(&self) -> &MmflhConfig {
        &self.cfg
    }

    /// `g'_t(z) = f_t(x, y') - f_t(x', y)`.
    fn loss(&self, f: &dyn GameFunction, z: &DecisionPoint) -> Result<f64> {
        Ok(f.value(&z.x, &self.saddle_ref.y)? - f.value(&self.saddle_ref.x, &z.y)?)
    }
}

/// Weighted mixture `sum_j w_j z_j`.
pub fn mix(points: &[DecisionPoint], weights: &[f64]) -> DecisionPoint {
    let mut x = points[0].x.clone() * 0.0;
    let mut y = points[0].y.clone() * 0.0;
    for (p, w) in points.iter().zip(weights) {
        x += &p.x * *w;
        y += &p.y * *w;
    }
    DecisionPoint::new(x, y)
}

/// Multiply by `exp(-alpha * loss)` and renormalize.
pub fn exp_weights(weights: &[f64], losses: &[f64], alpha: f64) -> Vec<f64> {
    let shift = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = weights.iter().zip(losses).map(|(w, l)| w * (-alpha * (l - shift)).exp()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

impl Player for Mmflh {
    fn play(&self) -> DecisionPoint {
        let pts: Vec<DecisionPoint> = self.pool.iter().map(|e| e.learner.play()).collect();
        mix(&pts, &self.weights())
    }

    fn observe(&mut self, f: &dyn GameFunction) -> Result<StepReport> {
        let mut losses = Vec::with_capacity(self.pool.len());
        let mut clipped = 0;
        for e in &self.pool {
            let g = self.loss(f, e.learner.point())?;
            if g.abs() > self.cfg.clip {
                clipped += 1;
            }
            losses.push(g.clamp(-self.cfg.clip, self.cfg.clip));
        }
        let w = exp_weights(&self.weights(), &losses, self.cfg.alpha);
        for (e, w) in self.pool.iter_mut().zip(w) {
            e.weight = w;
            e.learner.observe(f)?;
        }
        let sum: f64 = self.pool.iter().map(|e| e.weight).sum();
        if !((sum - 1.0).abs() <= WEIGHT_SUM_TOL) {
            return Err(Error::Invariant(format!("alive weights sum to {sum} at round {}", self.t)));
        }
        self.clipped += clipped;
        self.t += 1;
        self.open_round()?;
        Ok(StepReport { clipped, ..StepReport::default() })
    }

    fn name(&self) -> &'static str {
        "mmflh"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::make_sc_sc_quadratic;
    use crate::geometry::Domain;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn ending_time_examples() {
        assert_eq!(ending_time(1, 2), 2);
        assert_eq!(ending_time(4, 2), 8);
        assert_eq!(ending_time(6, 2), 8);
        assert_eq!(ending_time(30, 10), 100);
        assert_eq!(ending_time(7, 10), 10);
    }

    #[test]
    fn coverage_bound_is_exhaustive() {
        for k in [2, 3, 10] {
            assert_eq!(coverage_violation(200, k), None, "K = {k}");
        }
    }

    #[test]
    fn offset_rule_breaks_the_coverage_bound() {
        let offset = |t: usize, k: usize| {
            let mut p = 1;
            while t.is_multiple_of(p * k) {
                p *= k;
            }
            t + p
        };
        let mut m = 1;
        let mut t = 1;
        while offset(t, 3) <= 8 {
            t = offset(t, 3);
            m += 1;
        }
        assert!(m > ceil_log(8, 3) + 1);
        assert!(chain_length(1, 8, 3) <= ceil_log(8, 3) + 1);
    }

    #[test]
    fn mixing_and_weights() {
        let a = DecisionPoint::new(DVector::from_element(1, 1.0), DVector::from_element(1, 0.0));
        let b = DecisionPoint::new(DVector::from_element(1, 0.0), DVector::from_element(1, 1.0));
        let m = mix(&[a, b], &[0.5, 0.5]);
        assert_eq!(m.x[0], 0.5);
        assert_eq!(m.y[0], 0.5);
        let w = exp_weights(&[0.5, 0.5], &[0.0, 0.7], 1.0);
        assert_abs_diff_eq!(w[0], 1.0 / (1.0 + (-0.7f64).exp()), epsilon = 1e-15);
        assert!(w[0] > 0.5);
    }

    #[test]
    fn first_round_plays_the_single_expert() {
        let dom = GameDomain::new(Domain::cube(1, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap());
        let cfg = MmflhConfig { base: BaseLearner::Ogda { lambda: 1.0 }, k: 2, alpha: 1.0, clip: 4.0 };
        let saddle = DecisionPoint::new(DVector::zeros(1), DVector::zeros(1));
        assert!(Mmflh::new(dom.clone(), cfg.clone(), None).is_err());
        let mut m = Mmflh::new(dom.clone(), cfg, Some(saddle)).unwrap();
        assert_eq!(m.alive(), 1);
        assert_eq!(m.weights(), vec![1.0]);
        assert_eq!(m.play(), dom.center());
        let f = make_sc_sc_quadratic(1.0, &DVector::from_element(1, 0.5), &DVector::zeros(1), &DMatrix::zeros(1, 1), dom).unwrap();
        for _ in 0..40 {
            m.observe(&f).unwrap();
            let s: f64 = m.weights().iter().sum();
            assert!((s - 1.0).abs() <= WEIGHT_SUM_TOL);
            assert!(m.lifetimes().iter().all(|&(b, e)| b <= m.round() && m.round() < e));
        }
        assert!(m.alive() <= 2 * (ceil_log(41, 2) + 1));
    }
}
