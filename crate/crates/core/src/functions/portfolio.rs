use nalgebra::DVector;

use super::{
    domain_samples, sampled_constants, ConstantsSource, DecisionPoint, FunctionClass, FunctionConstants, GameDomain,
    GameFunction, Saddle, Vector, SAMPLE_COUNT,
};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Domain;

/// `f(x, y) = -ln(sum_i a_i x_i / y_i)`: log-wealth with price-relative
/// rescaling `y` chosen by the adversary.
#[derive(Debug)]
pub struct LogPortfolio {
    a: Vector,
    domain: GameDomain,
    constants: FunctionConstants,
}

impl LogPortfolio {
    /// Builds the payoff, taking sampled constants over the given domain points.
    pub fn with_samples(a: Vector, domain: GameDomain, samples: &[DecisionPoint]) -> Result<Self> {
        check_dim(domain.x_dim(), a.len())?;
        check_dim(domain.y_dim(), a.len())?;
        if a.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("portfolio weights must be positive".into()));
        }
        match &domain.x {
            Domain::Simplex { .. } => {}
            Domain::Box { lower, .. } if lower.iter().all(|l| *l >= 0.0) => {}
            _ => return Err(Error::InvalidParameter("portfolio x needs a simplex or nonnegative box".into())),
        }
        match &domain.y {
            Domain::Box { lower, .. } if lower.iter().all(|l| *l > 0.0) => {}
            _ => return Err(Error::InvalidParameter("portfolio y needs a box bounded away from zero".into())),
        }
        let mut f = Self {
            a,
            domain,
            constants: FunctionConstants {
                l0: 0.0,
                l1: 0.0,
                lambda: 0.0,
                alpha: 1.0,
                mu1: 0.0,
                mu2: 0.0,
                diameter: 0.0,
                source: ConstantsSource::Sampled,
            },
        };
        let (l0, l1) = sampled_constants(
            &f.domain,
            samples,
            |p| f.operator_norm(p),
            |p, q| {
                let (gp, gq) = (f.raw_grads(&p.x, &p.y), f.raw_grads(&q.x, &q.y));
                let dz = (&p.x - &q.x).norm() + (&p.y - &q.y).norm();
                if dz <= 1e-12 {
                    0.0
                } else {
                    (&gp.0 - &gq.0).norm().max((&gp.1 - &gq.1).norm()) / dz
                }
            },
        );
        f.constants.l0 = l0;
        f.constants.l1 = l1;
        f.constants.diameter = f.domain.diameter();
        Ok(f)
    }

    pub fn weights(&self) -> &Vector {
        &self.a
    }

    fn wealth(&self, x: &Vector, y: &Vector) -> f64 {
        self.a.iter().zip(x.iter().zip(y)).map(|(a, (x, y))| a * x / y).sum()
    }

    fn raw_grads(&self, x: &Vector, y: &Vector) -> (Vector, Vector) {
        let s = self.wealth(x, y);
        let n = self.a.len();
        let gx = DVector::from_iterator(n, (0..n).map(|i| -(self.a[i] / y[i]) / s));
        let gy = DVector::from_iterator(n, (0..n).map(|i| self.a[i] * x[i] / (y[i] * y[i]) / s));
        (gx, gy)
    }

    fn operator_norm(&self, p: &DecisionPoint) -> f64 {
        let (gx, gy) = self.raw_grads(&p.x, &p.y);
        (gx.norm_squared() + gy.norm_squared()).sqrt()
    }

    fn checked(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.domain.check(x, y)?;
        if let Some(v) = y.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::OutsideDomain(format!("portfolio y coordinate {v} is not positive")));
        }
        let s = self.wealth(x, y);
        if !(s > 0.0) {
            return Err(Error::OutsideDomain(format!("portfolio wealth {s} is not positive")));
        }
        Ok(s)
    }

    fn upper_y(&self) -> Vector {
        match &self.domain.y {
            Domain::Box { upper, .. } => DVector::from_column_slice(upper),
            _ => unreachable!("validated at construction"),
        }
    }
}

impl GameFunction for LogPortfolio {
    fn domain(&self) -> &GameDomain {
        &self.domain
    }

    fn value(&self, x: &Vector, y: &Vector) -> Result<f64> {
        Ok(-self.checked(x, y)?.ln())
    }

    fn grad_x(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.checked(x, y)?;
        Ok(self.raw_grads(x, y).0)
    }

    fn grad_y(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.checked(x, y)?;
        Ok(self.raw_grads(x, y).1)
    }

    fn classes(&self) -> Vec<FunctionClass> {
        vec![FunctionClass::ConvexConcave, FunctionClass::MinMaxEc { alpha: 1.0 }]
    }

    fn constants(&self) -> &FunctionConstants {
        &self.constants
    }

    /// Maximizing a positive linear form: a vertex of the simplex, or the upper corner of a box.
    fn best_response_x(&self, y: &Vector) -> Option<Result<Vector>> {
        Some((|| {
            check_dim(self.a.len(), y.len())?;
            if y.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::OutsideDomain("portfolio y must be positive".into()));
            }
            Ok(match &self.domain.x {
                Domain::Simplex { dim, scale } => {
                    let mut k = 0;
                    for i in 1..*dim {
                        if self.a[i] / y[i] > self.a[k] / y[k] {
                            k = i;
                        }
                    }
                    let mut v = DVector::zeros(*dim);
                    v[k] = *scale;
                    v
                }
                Domain::Box { upper, .. } => DVector::from_column_slice(upper),
                _ => unreachable!("validated at construction"),
            })
        })())
    }

    /// `sum_i a_i x_i / y_i` is decreasing in every `y_i`, so the upper corner is optimal.
    fn best_response_y(&self, x: &Vector) -> Option<Result<Vector>> {
        Some(check_dim(self.a.len(), x.len()).map(|_| self.upper_y()))
    }

    fn saddle(&self) -> Option<Result<Saddle>> {
        let y = self.upper_y();
        Some(self.best_response_x(&y)?.and_then(|x| {
            let value = self.value(&x, &y)?;
            Ok(Saddle { point: DecisionPoint::new(x, y), value })
        }))
    }
}

/// Log-portfolio payoff with constants sampled from `SAMPLE_COUNT` seeded domain points.
pub fn make_log_portfolio(a: Vector, domain: GameDomain) -> Result<LogPortfolio> {
    let samples = domain_samples(&domain, SAMPLE_COUNT, 0);
    LogPortfolio::with_samples(a, domain, &samples)
}
