//! Per-round update rules for the learner side of the game.
//!
//! Every learner follows the act-then-observe protocol: [`Player::play`]
//! returns the point for the current round, then [`Player::observe`] receives
//! that round's payoff and advances the state.

mod agda;
mod trace;

pub use agda::{agda_inner_step, AgdaConfig, DEFAULT_K_CAP};
pub use trace::{LraTrace, TelescopingCheck, TELESCOPING_SLACK};

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::functions::{DecisionPoint, FunctionConstants, FunctionSequence, GameDomain, GameFunction, Vector};
use crate::geometry::{project_weighted, Domain};
use crate::linalg::{RegularityMatrix, Split};
use crate::rng::{stream, streams, Rng};

/// Feasibility tolerance every emitted point must meet.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Bound on `<F + gamma A (z' - z), z' - w>` over sampled `w`.
pub const VI_RESIDUAL_TOL: f64 = 1e-7;
/// Points sampled per round for the VI residual check.
pub const VI_RESIDUAL_SAMPLES: usize = 16;

/// One side of the protocol: commit to a point, then learn from the payoff.
pub trait Player: Send {
    fn play(&self) -> DecisionPoint;
    fn observe(&mut self, f: &dyn GameFunction) -> Result<StepReport>;
    fn name(&self) -> &'static str;
}

/// Per-round diagnostics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    /// AGDA inner iterations `K_t`.
    pub inner_steps: Option<usize>,
    /// `K_t` was clamped to the cap.
    pub cap_hit: bool,
    /// `g*_t` at the played point and at the next point (AGDA only).
    pub gap_before: Option<f64>,
    pub gap_after: Option<f64>,
    /// Losses clipped by a meta-learner this round.
    pub clipped: usize,
}

/// Regularity increment `M_t` for the generic template.
#[derive(Clone, Debug, PartialEq)]
pub enum MRule {
    /// `M_t = c I`.
    Identity(f64),
    /// `M_t = F F^T`.
    Outer,
    /// `M_t = M_s(F)`, block-diagonal outer products.
    BlockSplit(Split),
}

/// Concrete `M_t` of one round, kept for the telescoping check.
#[derive(Clone, Debug, PartialEq)]
pub enum MStep {
    Scaled(f64),
    Outer(Vector),
    Blocks(Vector, Split),
}

impl MStep {
    /// `v^T M v`.
    pub fn quad(&self, v: &Vector) -> f64 {
        match self {
            MStep::Scaled(c) => c * v.norm_squared(),
            MStep::Outer(f) => f.dot(v).powi(2),
            MStep::Blocks(f, split) => {
                let mut off = 0;
                let mut s = 0.0;
                for &n in split.sizes() {
                    s += f.rows(off, n).dot(&v.rows(off, n)).powi(2);
                    off += n;
                }
                s
            }
        }
    }

    fn apply(&self, a: &mut RegularityMatrix) -> Result<()> {
        match self {
            MStep::Scaled(c) => match a.as_scalar() {
                Some(cur) => a.scalar_update(cur + c),
                None => a.add_psd(&(DMatrix::identity(a.dim(), a.dim()) * *c)),
            },
            MStep::Outer(f) => a.rank_one_update(f),
            MStep::Blocks(f, split) => a.add_block_split(f, split),
        }
    }
}

#[derive(Clone, Debug)]
enum Variant {
    Ogda,
    Ommns,
    Lra(MRule),
    Agda(AgdaConfig),
    OnlineVi(Split),
    Constant,
}

/// Learner state: current point, regularity matrix, round counter and step scale.
#[derive(Clone, Debug)]
pub struct Learner {
    variant: Variant,
    domain: GameDomain,
    joint: Domain,
    z: DecisionPoint,
    a: RegularityMatrix,
    t: usize,
    gamma: f64,
    trace: Option<LraTrace>,
    rng: Rng,
}

impl Learner {
    fn build(variant: Variant, domain: GameDomain, a: RegularityMatrix, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("step scale must be positive, got {gamma}")));
        }
        let joint = domain.joint();
        let z = domain.center();
        Ok(Self { variant, domain, joint, z, a, t: 1, gamma, trace: None, rng: stream(0, streams::VI_RESIDUAL) })
    }

    /// OGDA: `A_t = t I`, step scale `lambda`.
    pub fn ogda(domain: GameDomain, lambda: f64) -> Result<Self> {
        let a = RegularityMatrix::init(domain.dim(), 1.0)?;
        Self::build(Variant::Ogda, domain, a, lambda)
    }

    /// OMMNS: `A_0 = epsilon I`, `A_t = A_{t-1} + F F^T`. `epsilon` defaults
    /// to `1 / (gamma D)^2`.
    pub fn ommns(domain: GameDomain, gamma: f64, epsilon: Option<f64>) -> Result<Self> {
        let eps = epsilon.unwrap_or(1.0 / (gamma * domain.diameter()).powi(2));
        let a = RegularityMatrix::init(domain.dim(), eps)?;
        Self::build(Variant::Ommns, domain, a, gamma)
    }

    /// Generic template with a custom regularity rule and `A_0 = epsilon I`.
    pub fn lra(domain: GameDomain, gamma: f64, rule: MRule, epsilon: f64) -> Result<Self> {
        if let MRule::Identity(c) = rule {
            if !(c >= 0.0) {
                return Err(Error::InvalidParameter(format!("identity rule needs c >= 0, got {c}")));
            }
        }
        if let MRule::BlockSplit(s) = &rule {
            check_dim(domain.dim(), s.total())?;
        }
        let a = RegularityMatrix::init(domain.dim(), epsilon)?;
        Self::build(Variant::Lra(rule), domain, a, gamma)
    }

    pub fn agda(domain: GameDomain, config: AgdaConfig) -> Result<Self> {
        let a = RegularityMatrix::init(domain.dim(), 1.0)?;
        Self::build(Variant::Agda(config), domain, a, 1.0)
    }

    /// Online VI low-rank Newton step with block split `split`; `epsilon`
    /// defaults to `1 / (gamma D)^2`.
    pub fn online_vi(domain: GameDomain, split: Split, gamma: f64, epsilon: Option<f64>) -> Result<Self> {
        check_dim(domain.dim(), split.total())?;
        let eps = epsilon.unwrap_or(1.0 / (gamma * domain.diameter()).powi(2));
        let a = RegularityMatrix::init(domain.dim(), eps)?;
        Self::build(Variant::OnlineVi(split), domain, a, gamma)
    }

    /// Plays `point` every round.
    pub fn constant(domain: GameDomain, point: DecisionPoint) -> Result<Self> {
        let a = RegularityMatrix::init(domain.dim(), 1.0)?;
        let mut l = Self::build(Variant::Constant, domain, a, 1.0)?;
        l = l.with_start(point)?;
        Ok(l)
    }

    /// Default OMMNS step scale `gamma = min{1/(L0 D), alpha} / 2`.
    pub fn ommns_gamma(c: &FunctionConstants) -> f64 {
        c.ec_gamma()
    }

    /// First point `z_1` (default: domain center).
    pub fn with_start(mut self, z0: DecisionPoint) -> Result<Self> {
        if !self.domain.contains(&z0, FEASIBILITY_TOL)? {
            return Err(Error::OutsideDomain("start point".into()));
        }
        self.z = z0;
        Ok(self)
    }

    /// Seed for the online VI residual sampler.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng = stream(seed, streams::VI_RESIDUAL);
        self
    }

    /// Record the quantities of the telescoping inequality.
    pub fn with_trace(mut self) -> Self {
        let a0 = match self.variant {
            Variant::Ogda => DMatrix::zeros(self.domain.dim(), self.domain.dim()),
            _ => self.a.matrix(),
        };
        self.trace = Some(LraTrace::new(self.gamma, a0));
        self
    }

    pub fn point(&self) -> &DecisionPoint {
        &self.z
    }

    /// Index of the round about to be played.
    pub fn round(&self) -> usize {
        self.t
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn regularity(&self) -> &RegularityMatrix {
        &self.a
    }

    pub fn domain(&self) -> &GameDomain {
        &self.domain
    }

    pub fn trace(&self) -> Option<&LraTrace> {
        self.trace.as_ref()
    }

    /// `A <- A + M`, `u = z - A^{-1} F / gamma`, `z <- Proj_A(u)`.
    pub fn lra_step(&mut self, f: &Vector, m: MStep) -> Result<()> {
        check_dim(self.domain.dim(), f.len())?;
        m.apply(&mut self.a)?;
        self.descend(f, m)
    }

    /// OGDA update with `A_t = t I`.
    pub fn ogda_step(&mut self, f: &Vector) -> Result<()> {
        check_dim(self.domain.dim(), f.len())?;
        self.a.scalar_update(self.t as f64)?;
        self.descend(f, MStep::Scaled(1.0))
    }

    /// OMMNS update with `M_t = F F^T`.
    pub fn ommns_step(&mut self, f: &Vector) -> Result<()> {
        self.lra_step(f, MStep::Outer(f.clone()))
    }

    /// Online VI update: `A += M_s(F)`, then the auxiliary VI is solved by the
    /// weighted projection and its residual checked on sampled points.
    pub fn online_vi_step(&mut self, f: &Vector, split: &Split) -> Result<()> {
        let prev = self.z.joint();
        self.lra_step(f, MStep::Blocks(f.clone(), split.clone()))?;
        let next = self.z.joint();
        let ga = self.a.matrix() * (&next - &prev) * self.gamma;
        let lhs = f + ga;
        let mut worst: Option<(f64, Vector)> = None;
        for _ in 0..VI_RESIDUAL_SAMPLES {
            let w = self.joint.sample(&mut self.rng);
            let r = lhs.dot(&(&next - &w));
            if r > VI_RESIDUAL_TOL && worst.as_ref().is_none_or(|(v, _)| r > *v) {
                worst = Some((r, w));
            }
        }
        if let Some((r, w)) = worst {
            return Err(Error::Invariant(format!("online VI residual {r:.3e} at w = {:?}", w.as_slice())));
        }
        Ok(())
    }

    fn descend(&mut self, f: &Vector, m: MStep) -> Result<()> {
        let z = self.z.joint();
        if let Some(tr) = &mut self.trace {
            tr.push(z.clone(), f.clone(), self.a.inv_quad(f)?, m);
        }
        let u = &z - self.a.solve(f)? / self.gamma;
        let next = project_weighted(&u, &self.a, &self.joint)?;
        self.z = self.domain.split(&next);
        self.t += 1;
        Ok(())
    }
}

impl Player for Learner {
    fn play(&self) -> DecisionPoint {
        self.z.clone()
    }

    fn observe(&mut self, f: &dyn GameFunction) -> Result<StepReport> {
        let variant = self.variant.clone();
        match &variant {
            Variant::Ogda => self.ogda_step(&f.operator(&self.z)?)?,
            Variant::Ommns => self.ommns_step(&f.operator(&self.z)?)?,
            Variant::Lra(rule) => {
                let g = f.operator(&self.z)?;
                let m = match rule {
                    MRule::Identity(c) => MStep::Scaled(*c),
                    MRule::Outer => MStep::Outer(g.clone()),
                    MRule::BlockSplit(s) => MStep::Blocks(g.clone(), s.clone()),
                };
                self.lra_step(&g, m)?;
            }
            Variant::OnlineVi(split) => self.online_vi_step(&f.operator(&self.z)?, split)?,
            Variant::Agda(cfg) => {
                let (next, report) = cfg.round(f, &self.z)?;
                self.z = next;
                self.t += 1;
                return Ok(report);
            }
            Variant::Constant => self.t += 1,
        }
        Ok(StepReport::default())
    }

    fn name(&self) -> &'static str {
        match self.variant {
            Variant::Ogda => "ogda",
            Variant::Ommns => "ommns",
            Variant::Lra(_) => "lra",
            Variant::Agda(_) => "agda",
            Variant::OnlineVi(_) => "online-vi",
            Variant::Constant => "constant",
        }
    }
}

/// What the act-then-observe loop produced.
#[derive(Debug)]
pub struct Rounds {
    pub functions: Vec<Arc<dyn GameFunction>>,
    pub plays: Vec<DecisionPoint>,
    pub reports: Vec<StepReport>,
    /// `z_{T+1}`.
    pub next: DecisionPoint,
}

/// Plays `seq` to its horizon: each round the player commits to a point,
/// then the sequence reveals the payoff and the player observes it.
pub fn play_rounds(seq: &mut dyn FunctionSequence, player: &mut dyn Player) -> Result<Rounds> {
    let horizon = seq.horizon();
    let mut functions = Vec::with_capacity(horizon);
    let mut plays = Vec::with_capacity(horizon);
    let mut reports = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let z = player.play();
        let f = seq.reveal(t, &z)?;
        reports.push(player.observe(f.as_ref())?);
        functions.push(f);
        plays.push(z);
    }
    Ok(Rounds { functions, plays, reports, next: player.play() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::make_sc_sc_quadratic;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn unit_square() -> GameDomain {
        GameDomain::new(Domain::cube(1, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap())
    }

    fn at(x: f64, y: f64) -> DecisionPoint {
        DecisionPoint::new(dv(&[x]), dv(&[y]))
    }

    #[test]
    fn lra_single_step_reaches_saddle() {
        let mut l = Learner::lra(unit_square(), 1.0, MRule::Identity(0.0), 1.0).unwrap().with_start(at(1.0, 1.0)).unwrap();
        l.lra_step(&dv(&[1.0, 1.0]), MStep::Scaled(0.0)).unwrap();
        assert_eq!(l.point(), &at(0.0, 0.0));
        l.lra_step(&dv(&[0.0, 0.0]), MStep::Scaled(0.0)).unwrap();
        assert_eq!(l.point(), &at(0.0, 0.0));
        assert_eq!(l.round(), 3);
    }

    #[test]
    fn lra_outer_product_step() {
        let dom = GameDomain::new(Domain::cube(1, 2.0).unwrap(), Domain::cube(1, 2.0).unwrap());
        let mut l = Learner::lra(dom, 1.0, MRule::Outer, 1.0).unwrap().with_start(at(1.0, 1.0)).unwrap();
        let f = dv(&[1.0, 1.0]);
        l.lra_step(&f, MStep::Outer(f.clone())).unwrap();
        assert_abs_diff_eq!(l.regularity().matrix(), nalgebra::dmatrix![2.0, 1.0; 1.0, 2.0], epsilon = 1e-15);
        assert_abs_diff_eq!(l.point().joint(), dv(&[2.0 / 3.0, 2.0 / 3.0]), epsilon = 1e-12);
    }

    #[test]
    fn ogda_examples() {
        let mut l = Learner::ogda(unit_square(), 1.0).unwrap().with_start(at(1.0, 1.0)).unwrap();
        l.ogda_step(&dv(&[1.0, 1.0])).unwrap();
        assert_eq!(l.point(), &at(0.0, 0.0));

        let mut l = Learner::ogda(unit_square(), 1.0).unwrap().with_start(at(0.2, 0.0)).unwrap();
        for _ in 0..3 {
            l.ogda_step(&dv(&[0.0, 0.0])).unwrap();
        }
        assert_eq!(l.point(), &at(0.2, 0.0));
        assert_eq!(l.round(), 4);
        l.ogda_step(&dv(&[0.2, 0.0])).unwrap();
        assert_abs_diff_eq!(l.point().x[0], 0.15, epsilon = 1e-15);
    }

    #[test]
    fn ommns_examples() {
        let dom = GameDomain::new(Domain::cube(1, 2.0).unwrap(), Domain::cube(1, 2.0).unwrap());
        let mut l = Learner::ommns(dom.clone(), 0.5, Some(1.0)).unwrap().with_start(at(1.0, 1.0)).unwrap();
        l.ommns_step(&dv(&[1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(l.point().joint(), dv(&[1.0 / 3.0, 1.0 / 3.0]), epsilon = 1e-12);

        let mut l = Learner::ommns(dom.clone(), 0.5, Some(1.0)).unwrap().with_start(at(1.0, 1.0)).unwrap();
        l.ommns_step(&dv(&[0.0, 0.0])).unwrap();
        assert_eq!(l.point(), &at(1.0, 1.0));
        assert_eq!(l.regularity().matrix(), DMatrix::identity(2, 2));

        let mut l = Learner::ommns(dom, 0.5, Some(1.0)).unwrap();
        l.ommns_step(&dv(&[1.0, 0.0])).unwrap();
        l.ommns_step(&dv(&[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(l.regularity().matrix(), DMatrix::identity(2, 2) * 2.0, epsilon = 1e-15);
    }

    #[test]
    fn online_vi_examples() {
        let x = Domain::cube(1, 1.0).unwrap();
        let single = GameDomain::new(x.clone(), Domain::cube(1, 1.0).unwrap());
        let split = Split::new(vec![1, 1]).unwrap();
        let mut l = Learner::online_vi(single, split.clone(), 1.0, Some(1.0)).unwrap();
        let start = l.point().clone();
        l.online_vi_step(&dv(&[0.0, 0.0]), &split).unwrap();
        assert_eq!(l.point(), &start);
        l.online_vi_step(&dv(&[2.0, 3.0]), &split).unwrap();
        assert_abs_diff_eq!(l.regularity().matrix(), DMatrix::from_diagonal(&dv(&[5.0, 10.0])), epsilon = 1e-12);

        let mut l = Learner::online_vi(unit_square(), split.clone(), 1.0, Some(1.0)).unwrap().with_start(at(0.5, 0.0)).unwrap();
        l.online_vi_step(&dv(&[1.0, 0.0]), &split).unwrap();
        assert_abs_diff_eq!(l.point().x[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ogda_stays_feasible_on_a_quadratic() {
        let dom = GameDomain::new(Domain::cube(2, 1.0).unwrap(), Domain::cube(2, 1.0).unwrap());
        let f = make_sc_sc_quadratic(1.0, &dv(&[0.9, -0.9]), &dv(&[1.5, 0.0]), &DMatrix::from_element(2, 2, 0.3), dom.clone()).unwrap();
        let mut l = Learner::ogda(dom.clone(), 1.0).unwrap();
        for _ in 0..50 {
            l.observe(&f).unwrap();
            assert!(dom.contains(l.point(), FEASIBILITY_TOL).unwrap());
        }
        assert_eq!(l.round(), 51);
    }

    #[test]
    fn constant_player_never_moves() {
        let mut l = Learner::constant(unit_square(), at(0.5, 0.5)).unwrap();
        let f = make_sc_sc_quadratic(1.0, &dv(&[0.0]), &dv(&[0.0]), &DMatrix::zeros(1, 1), unit_square()).unwrap();
        l.observe(&f).unwrap();
        assert_eq!(l.play(), at(0.5, 0.5));
        assert!(Learner::constant(unit_square(), at(2.0, 0.0)).is_err());
    }
}
