use nalgebra::DMatrix;

use super::MStep;
use crate::error::{check_dim, Result};
use crate::functions::Vector;

pub const TELESCOPING_SLACK: f64 = 1e-6;

/// Per-round record of `z_t`, `F_t`, `F_t^T A_t^{-1} F_t` and `M_t`.
#[derive(Clone, Debug)]
pub struct LraTrace {
    gamma: f64,
    a0: DMatrix<f64>,
    z: Vec<Vector>,
    f: Vec<Vector>,
    inv_quad: Vec<f64>,
    m: Vec<MStep>,
}

/// Both sides of the telescoping inequality for one comparator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TelescopingCheck {
    /// `sum_t F_t^T (z_t - z')`.
    pub lhs: f64,
    pub rhs: f64,
}

impl TelescopingCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + TELESCOPING_SLACK
    }
}

impl LraTrace {
    pub(super) fn new(gamma: f64, a0: DMatrix<f64>) -> Self {
        Self { gamma, a0, z: Vec::new(), f: Vec::new(), inv_quad: Vec::new(), m: Vec::new() }
    }

    pub(super) fn push(&mut self, z: Vector, f: Vector, inv_quad: f64, m: MStep) {
        self.z.push(z);
        self.f.push(f);
        self.inv_quad.push(inv_quad);
        self.m.push(m);
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `sum F^T (z - z') <= (1/2g) sum F^T A^{-1} F + (g/2) sum |z - z'|^2_M + (g/2) |z_1 - z'|^2_{A_0}`.
    pub fn check(&self, z_ref: &Vector) -> Result<TelescopingCheck> {
        check_dim(self.a0.nrows(), z_ref.len())?;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for t in 0..self.z.len() {
            let d = &self.z[t] - z_ref;
            lhs += self.f[t].dot(&d);
            rhs += self.inv_quad[t] / (2.0 * self.gamma) + 0.5 * self.gamma * self.m[t].quad(&d);
        }
        if let Some(z1) = self.z.first() {
            let d = z1 - z_ref;
            rhs += 0.5 * self.gamma * d.dot(&(&self.a0 * &d));
        }
        Ok(TelescopingCheck { lhs, rhs })
    }
}

#[cfg(test)]
mod tests {
    use crate::functions::{make_sc_sc_quadratic, DecisionPoint, GameDomain};
    use crate::geometry::Domain;
    use crate::learners::{Learner, MRule, Player};
    use crate::linalg::Split;
    use nalgebra::{DMatrix, DVector};

    fn run(mut l: Learner) -> Learner {
        let dom = l.domain().clone();
        for t in 0..60 {
            let s = if t % 2 == 0 { 0.8 } else { -0.6 };
            let f = make_sc_sc_quadratic(
                1.0,
                &DVector::from_element(2, s),
                &DVector::from_element(1, -s),
                &DMatrix::from_element(2, 1, 0.4),
                dom.clone(),
            )
            .unwrap();
            l.observe(&f).unwrap();
        }
        l
    }

    #[test]
    fn telescoping_holds_for_every_rule() {
        let dom = GameDomain::new(Domain::cube(2, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap());
        let learners = vec![
            Learner::ogda(dom.clone(), 1.0).unwrap(),
            Learner::ommns(dom.clone(), 0.2, None).unwrap(),
            Learner::lra(dom.clone(), 0.5, MRule::Identity(0.5), 0.1).unwrap(),
            Learner::online_vi(dom.clone(), Split::new(vec![2, 1]).unwrap(), 0.3, None).unwrap(),
        ];
        for l in learners {
            let l = run(l.with_trace());
            let tr = l.trace().unwrap();
            assert_eq!(tr.len(), 60);
            for v in dom.joint().vertices().unwrap() {
                let c = tr.check(&v).unwrap();
                assert!(c.holds(), "{}: {c:?}", l.name());
            }
            let c = tr.check(&DecisionPoint::new(DVector::zeros(2), DVector::zeros(1)).joint()).unwrap();
            assert!(c.holds());
        }
    }
}
