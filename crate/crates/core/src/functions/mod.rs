//! Game functions: per-round payoff oracles, the instance families and the
//! sampled class-membership checks.

mod membership;
mod portfolio;
mod quadratic;
mod sequences;

use std::fmt::Debug;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::geometry::{minimize_convex, Domain};

pub use membership::{check_class_membership, check_gap_regularity, Check, MembershipReport};
pub use portfolio::{make_log_portfolio, LogPortfolio};
pub use quadratic::{make_sc_sc_quadratic, QuadForm, QuadraticGame};
pub use sequences::{
    log_portfolio_sequence, make_dyne_sequence, make_impossibility_pair, sc_sc_sequence, DyneSequence,
    FunctionSequence, LogPortfolioParams, Schedule, ScScParams, StaticSequence,
};

pub type Vector = DVector<f64>;

/// Tolerance of the numeric best-response solver.
pub const NUMERIC_RESPONSE_TOL: f64 = 1e-9;
pub const NUMERIC_RESPONSE_MAX_ITER: usize = 5000;

/// A joint action `(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionPoint {
    pub x: Vector,
    pub y: Vector,
}

impl DecisionPoint {
    pub fn new(x: Vector, y: Vector) -> Self {
        Self { x, y }
    }

    pub fn joint(&self) -> Vector {
        crate::geometry::concat_vectors([self.x.clone(), self.y.clone()])
    }

    /// Splits `z` after the first `m` coordinates.
    pub fn from_joint(z: &Vector, m: usize) -> Self {
        Self { x: z.rows(0, m).into_owned(), y: z.rows(m, z.len() - m).into_owned() }
    }
}

/// The product constraint set `X x Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameDomain {
    pub x: Domain,
    pub y: Domain,
}

impl GameDomain {
    pub fn new(x: Domain, y: Domain) -> Self {
        Self { x, y }
    }

    pub fn joint(&self) -> Domain {
        Domain::Product { factors: vec![self.x.clone(), self.y.clone()] }
    }

    pub fn x_dim(&self) -> usize {
        self.x.dim()
    }

    pub fn y_dim(&self) -> usize {
        self.y.dim()
    }

    pub fn dim(&self) -> usize {
        self.x_dim() + self.y_dim()
    }

    pub fn diameter(&self) -> f64 {
        self.x.diameter() + self.y.diameter()
    }

    pub fn center(&self) -> DecisionPoint {
        DecisionPoint::new(self.x.center(), self.y.center())
    }

    pub fn split(&self, z: &Vector) -> DecisionPoint {
        DecisionPoint::from_joint(z, self.x_dim())
    }

    pub fn contains(&self, p: &DecisionPoint, tol: f64) -> Result<bool> {
        Ok(self.x.contains(&p.x, tol)? && self.y.contains(&p.y, tol)?)
    }

    pub fn check(&self, x: &Vector, y: &Vector) -> Result<()> {
        check_dim(self.x_dim(), x.len())?;
        check_dim(self.y_dim(), y.len())
    }
}

/// Class tags carried by an instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FunctionClass {
    ConvexConcave,
    StronglyConvexConcave { lambda: f64 },
    MinMaxEc { alpha: f64 },
    TwoSidedPl { mu1: f64, mu2: f64 },
    Separable,
}

/// How a set of constants was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstantsSource {
    Exact,
    Sampled,
}

/// Regularity constants of one payoff (or a whole sequence).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionConstants {
    /// Bound on the operator norm over the domain.
    pub l0: f64,
    /// Operator smoothness.
    pub l1: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// Domain diameter bound.
    pub diameter: f64,
    pub source: ConstantsSource,
}

impl FunctionConstants {
    /// Worst case over several payoffs: largest bounds, smallest curvatures.
    pub fn combine<'a, I: IntoIterator<Item = &'a FunctionConstants>>(items: I) -> Option<FunctionConstants> {
        items.into_iter().copied().reduce(|a, b| FunctionConstants {
            l0: a.l0.max(b.l0),
            l1: a.l1.max(b.l1),
            lambda: a.lambda.min(b.lambda),
            alpha: a.alpha.min(b.alpha),
            mu1: a.mu1.min(b.mu1),
            mu2: a.mu2.min(b.mu2),
            diameter: a.diameter.max(b.diameter),
            source: if a.source == ConstantsSource::Exact && b.source == ConstantsSource::Exact {
                ConstantsSource::Exact
            } else {
                ConstantsSource::Sampled
            },
        })
    }

    /// `gamma = 1/2 min{1/(L0 D), alpha}`.
    pub fn ec_gamma(&self) -> f64 {
        0.5 * (1.0 / (self.l0 * self.diameter)).min(self.alpha)
    }
}

/// A saddle point together with its value.
#[derive(Clone, Debug, PartialEq)]
pub struct Saddle {
    pub point: DecisionPoint,
    pub value: f64,
}

/// Oracle bundle for one round's payoff `f_t(x, y)`, convex in `x`, concave in `y`.
pub trait GameFunction: Send + Sync + Debug {
    fn domain(&self) -> &GameDomain;
    fn value(&self, x: &Vector, y: &Vector) -> Result<f64>;
    fn grad_x(&self, x: &Vector, y: &Vector) -> Result<Vector>;
    fn grad_y(&self, x: &Vector, y: &Vector) -> Result<Vector>;
    fn classes(&self) -> Vec<FunctionClass>;
    fn constants(&self) -> &FunctionConstants;

    /// `F(z) = (grad_x f, -grad_y f)`.
    fn operator(&self, z: &DecisionPoint) -> Result<Vector> {
        let gx = self.grad_x(&z.x, &z.y)?;
        let gy = self.grad_y(&z.x, &z.y)?;
        Ok(crate::geometry::concat_vectors([gx, -gy]))
    }

    /// Analytic `argmin_x f(x, y)`, if the instance has one.
    fn best_response_x(&self, _y: &Vector) -> Option<Result<Vector>> {
        None
    }

    /// Analytic `argmax_y f(x, y)`, if the instance has one.
    fn best_response_y(&self, _x: &Vector) -> Option<Result<Vector>> {
        None
    }

    fn saddle(&self) -> Option<Result<Saddle>> {
        None
    }

    fn as_quadratic(&self) -> Option<&QuadraticGame> {
        None
    }

    fn value_at(&self, z: &DecisionPoint) -> Result<f64> {
        self.value(&z.x, &z.y)
    }
}

/// A best response and whether it came from the numeric solver.
#[derive(Clone, Debug)]
pub struct Response {
    pub point: Vector,
    pub approximate: bool,
}

/// `argmin_x f(x, y)`: analytic when available, else numeric if allowed.
pub fn best_response_x(f: &dyn GameFunction, y: &Vector, numeric: bool) -> Result<Response> {
    if let Some(r) = f.best_response_x(y) {
        return Ok(Response { point: r?, approximate: false });
    }
    if !numeric {
        return Err(crate::Error::MissingOracle("best_response_x"));
    }
    let dom = &f.domain().x;
    let m = minimize_convex(dom, &dom.center(), NUMERIC_RESPONSE_TOL, NUMERIC_RESPONSE_MAX_ITER, |x| {
        Ok((f.value(x, y)?, f.grad_x(x, y)?))
    })?;
    Ok(Response { point: m.point, approximate: true })
}

/// `argmax_y f(x, y)`: analytic when available, else numeric if allowed.
pub fn best_response_y(f: &dyn GameFunction, x: &Vector, numeric: bool) -> Result<Response> {
    if let Some(r) = f.best_response_y(x) {
        return Ok(Response { point: r?, approximate: false });
    }
    if !numeric {
        return Err(crate::Error::MissingOracle("best_response_y"));
    }
    let dom = &f.domain().y;
    let m = minimize_convex(dom, &dom.center(), NUMERIC_RESPONSE_TOL, NUMERIC_RESPONSE_MAX_ITER, |y| {
        Ok((-f.value(x, y)?, -f.grad_y(x, y)?))
    })?;
    Ok(Response { point: m.point, approximate: true })
}

/// Sampled operator constants: maxima over `samples` (plus vertices) times 1.1.
pub(crate) fn sampled_constants(
    dom: &GameDomain,
    samples: &[DecisionPoint],
    mut op_norm: impl FnMut(&DecisionPoint) -> f64,
    mut smooth_ratio: impl FnMut(&DecisionPoint, &DecisionPoint) -> f64,
) -> (f64, f64) {
    let mut l0 = 0.0f64;
    let mut l1 = 0.0f64;
    let verts = dom.joint().vertices().unwrap_or_default();
    for v in &verts {
        l0 = l0.max(op_norm(&dom.split(v)));
    }
    for (i, p) in samples.iter().enumerate() {
        l0 = l0.max(op_norm(p));
        let q = &samples[(i + 1) % samples.len()];
        l1 = l1.max(smooth_ratio(p, q));
    }
    (1.1 * l0, 1.1 * l1)
}

/// `SAMPLE_COUNT` seeded domain samples used by sampled constants.
pub const SAMPLE_COUNT: usize = 10_000;

pub fn domain_samples(dom: &GameDomain, n: usize, seed: u64) -> Vec<DecisionPoint> {
    let mut rng = crate::rng::stream(seed, crate::rng::streams::CONSTANTS);
    (0..n).map(|_| DecisionPoint::new(dom.x.sample(&mut rng), dom.y.sample(&mut rng))).collect()
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Max relative error between analytic gradients and central differences.
    pub fn gradient_error(f: &dyn GameFunction, p: &DecisionPoint) -> f64 {
        let h = 1e-6;
        let gx = f.grad_x(&p.x, &p.y).unwrap();
        let gy = f.grad_y(&p.x, &p.y).unwrap();
        let mut worst = 0.0f64;
        for i in 0..p.x.len() {
            let mut a = p.x.clone();
            let mut b = p.x.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (f.value(&a, &p.y).unwrap() - f.value(&b, &p.y).unwrap()) / (2.0 * h);
            worst = worst.max((fd - gx[i]).abs() / gx[i].abs().max(1.0));
        }
        for i in 0..p.y.len() {
            let mut a = p.y.clone();
            let mut b = p.y.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (f.value(&p.x, &a).unwrap() - f.value(&p.x, &b).unwrap()) / (2.0 * h);
            worst = worst.max((fd - gy[i]).abs() / gy[i].abs().max(1.0));
        }
        worst
    }
}
