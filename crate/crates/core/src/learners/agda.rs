use super::StepReport;
use crate::error::{Error, Result};
use crate::functions::{DecisionPoint, GameFunction};

pub const DEFAULT_K_CAP: usize = 64;
const AT_SADDLE: f64 = 1e-12;

/// Step sizes and contraction constants of online alternating GDA.
#[derive(Clone, Debug, PartialEq)]
pub struct AgdaConfig {
    pub tau1: f64,
    pub tau2: f64,
    pub l: f64,
    pub rho: f64,
    pub beta: f64,
    pub k_cap: usize,
}

impl AgdaConfig {
    /// Constants from two-sided PL moduli `mu1, mu2` and smoothness `l1`.
    pub fn new(mu1: f64, mu2: f64, l1: f64, k_cap: usize) -> Result<Self> {
        if !(mu1 > 0.0 && mu2 > 0.0 && l1 > 0.0) {
            return Err(Error::InvalidParameter(format!("AGDA needs mu1, mu2, L1 > 0 (got {mu1}, {mu2}, {l1})")));
        }
        if k_cap == 0 {
            return Err(Error::InvalidParameter("K cap must be at least 1".into()));
        }
        let tau1 = mu2 / (18.0 * l1.powi(3));
        let tau2 = 1.0 / l1;
        let l = l1 + l1 * l1 / mu2;
        let rho = 1.0 - mu1 * mu2 * mu2 / (36.0 * l.powi(3));
        let s = 4.0 * l1 * l1 * tau1 * tau1;
        let beta = ((s + 1.0) * 2.0 * l * l / mu1).max(10.0 * (s + 3.0) * 2.0 * l1 * l1 / mu2);
        let cfg = Self { tau1, tau2, l, rho, beta, k_cap };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.tau1 > 0.0 && self.tau2 > 0.0) {
            return Err(Error::InvalidParameter("AGDA step sizes must be positive".into()));
        }
        Ok(())
    }

    /// `K_t` before and after clamping to the cap, from the gap terms.
    pub fn inner_steps(&self, gap: f64, a: f64, b: f64) -> (usize, bool) {
        let denom = a + b / 10.0;
        if denom <= AT_SADDLE {
            return (1, false);
        }
        let ratio = gap / (4.0 * self.beta * denom);
        if !(ratio > 0.0) {
            return (1, false);
        }
        let k = (ratio.ln() / self.rho.ln()).ceil();
        if !(k > 1.0) {
            return (1, false);
        }
        if k > self.k_cap as f64 {
            return (self.k_cap, true);
        }
        (k as usize, false)
    }

    /// One protocol round: `K_t` alternating projected steps on `f`.
    pub(super) fn round(&self, f: &dyn GameFunction, z: &DecisionPoint) -> Result<(DecisionPoint, StepReport)> {
        let gap = |p: &DecisionPoint| -> Result<(f64, f64)> {
            let ys = f.best_response_y(&p.x).ok_or(Error::MissingOracle("best_response_y"))??;
            let xs = f.best_response_x(&p.y).ok_or(Error::MissingOracle("best_response_x"))??;
            let hi = f.value(&p.x, &ys)?;
            Ok((hi - f.value(&xs, &p.y)?, hi))
        };
        let saddle = f.saddle().ok_or(Error::MissingOracle("saddle"))??;
        let (g, hi) = gap(z)?;
        let a = hi - saddle.value;
        let b = hi - f.value(&z.x, &z.y)?;
        let (k, cap_hit) = self.inner_steps(g, a, b);
        let mut p = z.clone();
        for _ in 0..k {
            p = agda_inner_step(f, &p, self.tau1, self.tau2)?;
        }
        let (after, _) = gap(&p)?;
        let report = StepReport { inner_steps: Some(k), cap_hit, gap_before: Some(g), gap_after: Some(after), clipped: 0 };
        Ok((p, report))
    }
}

/// `x <- Proj(x - tau1 grad_x f(x, y))`, then `y <- Proj(y + tau2 grad_y f(x_new, y))`.
pub fn agda_inner_step(f: &dyn GameFunction, z: &DecisionPoint, tau1: f64, tau2: f64) -> Result<DecisionPoint> {
    let dom = f.domain();
    let x = dom.x.project_euclidean(&(&z.x - f.grad_x(&z.x, &z.y)? * tau1))?;
    let y = dom.y.project_euclidean(&(&z.y + f.grad_y(&x, &z.y)? * tau2))?;
    Ok(DecisionPoint::new(x, y))
}
