use super::{DecisionPoint, FunctionClass, GameFunction, Vector};
use crate::error::{Error, Result};
use crate::geometry::concat_vectors;
use crate::rng::{stream, streams};

/// Margin below which a sampled inequality counts as violated.
pub const MEMBERSHIP_SLACK: f64 = 1e-7;

/// Tally of one sampled inequality.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub evaluated: usize,
    pub violations: usize,
    /// Smallest observed `lhs - rhs`.
    pub worst_margin: f64,
    /// Inputs of the worst violation.
    pub witness: Option<String>,
}

impl Check {
    pub fn new(name: &'static str) -> Self {
        Self { name, evaluated: 0, violations: 0, worst_margin: f64::INFINITY, witness: None }
    }

    pub fn record(&mut self, margin: f64, witness: impl FnOnce() -> String) {
        self.evaluated += 1;
        let bad = !(margin >= -MEMBERSHIP_SLACK);
        if bad {
            self.violations += 1;
        }
        if !(margin >= self.worst_margin) {
            self.worst_margin = margin;
            if bad {
                self.witness = Some(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Result of [`check_class_membership`].
#[derive(Clone, Debug)]
pub struct MembershipReport {
    pub checks: Vec<Check>,
    /// Largest `(mu1, mu2)` consistent with every sampled PL inequality.
    pub mu_hat: Option<(f64, f64)>,
}

impl MembershipReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn witness(za: &DecisionPoint, zb: &DecisionPoint) -> String {
    format!("z_a = {:?}, z_b = {:?}", za.joint().as_slice(), zb.joint().as_slice())
}

/// Samples point pairs and tests the inequalities implied by each class tag.
pub fn check_class_membership(f: &dyn GameFunction, n_samples: usize, seed: u64) -> Result<MembershipReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let dom = f.domain();
    let classes = f.classes();
    let c = f.constants();
    let lambda = classes.iter().find_map(|k| match k {
        FunctionClass::StronglyConvexConcave { lambda } => Some(*lambda),
        _ => None,
    });
    let gamma = classes.iter().find_map(|k| match k {
        FunctionClass::MinMaxEc { alpha } => Some(0.5 * (1.0 / (c.l0 * c.diameter)).min(*alpha)),
        _ => None,
    });
    let pl = classes.iter().find_map(|k| match k {
        FunctionClass::TwoSidedPl { mu1, mu2 } => Some((*mu1, *mu2)),
        _ => None,
    });
    if pl.is_some() {
        let probe = dom.center();
        if f.best_response_x(&probe.y).is_none() {
            return Err(Error::MissingOracle("best_response_x"));
        }
        if f.best_response_y(&probe.x).is_none() {
            return Err(Error::MissingOracle("best_response_y"));
        }
    }

    let mut sandwich_upper = Check::new("sandwich-upper");
    let mut sandwich_lower = Check::new("sandwich-lower");
    let mut strong = Check::new("strong-lower");
    let mut ec = Check::new("ec-lower");
    let mut coco = Check::new("ec-operator");
    let mut pl_x = Check::new("pl-x");
    let mut pl_y = Check::new("pl-y");
    let mut mu_hat = (f64::INFINITY, f64::INFINITY);

    let mut rng = stream(seed, streams::VERIFY);
    for _ in 0..n_samples {
        let za = DecisionPoint::new(dom.x.sample(&mut rng), dom.y.sample(&mut rng));
        let zb = DecisionPoint::new(dom.x.sample(&mut rng), dom.y.sample(&mut rng));
        let d = za.joint() - zb.joint();
        let fa = f.operator(&za)?;
        let fb = f.operator(&zb)?;
        let cross = f.value(&za.x, &zb.y)? - f.value(&zb.x, &za.y)?;
        let lower = fb.dot(&d);
        sandwich_upper.record(fa.dot(&d) - cross, || witness(&za, &zb));
        sandwich_lower.record(cross - lower, || witness(&za, &zb));
        if let Some(l) = lambda {
            strong.record(cross - lower - 0.5 * l * d.norm_squared(), || witness(&za, &zb));
        }
        if let Some(g) = gamma {
            let m = dom.x_dim();
            let dx = d.rows(0, m);
            let dy = d.rows(m, d.len() - m);
            let q = fb.rows(0, m).dot(&dx).powi(2) + fb.rows(m, d.len() - m).dot(&dy).powi(2);
            ec.record(cross - lower - 0.5 * g * q, || witness(&za, &zb));
            coco.record((&fa - &fb).dot(&d) - 0.5 * g * q, || witness(&za, &zb));
        }
        if let Some((mu1, mu2)) = pl {
            let v = f.value(&za.x, &za.y)?;
            let xs = f.best_response_x(&za.y).expect("checked above")?;
            let ys = f.best_response_y(&za.x).expect("checked above")?;
            let gx = f.grad_x(&za.x, &za.y)?.norm_squared();
            let gy = f.grad_y(&za.x, &za.y)?.norm_squared();
            let ex = v - f.value(&xs, &za.y)?;
            let ey = f.value(&za.x, &ys)? - v;
            pl_x.record(gx - 2.0 * mu1 * ex, || witness(&za, &za));
            pl_y.record(gy - 2.0 * mu2 * ey, || witness(&za, &za));
            if ex > 1e-12 {
                mu_hat.0 = mu_hat.0.min(gx / (2.0 * ex));
            }
            if ey > 1e-12 {
                mu_hat.1 = mu_hat.1.min(gy / (2.0 * ey));
            }
        }
    }

    let mut checks = vec![sandwich_upper, sandwich_lower];
    if lambda.is_some() {
        checks.push(strong);
    }
    if gamma.is_some() {
        checks.push(ec);
        checks.push(coco);
    }
    if pl.is_some() {
        checks.push(pl_x);
        checks.push(pl_y);
    }
    Ok(MembershipReport { checks, mu_hat: pl.map(|_| mu_hat) })
}

/// Regularity of `g'(z) = f(x, y') - f(x', y)` for a fixed comparator: strong
/// convexity for strongly convex-concave payoffs, and concavity of
/// `exp(-(gamma/4) g')` along random segments for min-max exp-concave ones.
pub fn check_gap_regularity(f: &dyn GameFunction, reference: &DecisionPoint, n_segments: usize, seed: u64) -> Result<Vec<Check>> {
    let dom = f.domain();
    let classes = f.classes();
    let c = f.constants();
    let g = |z: &DecisionPoint| -> Result<f64> { Ok(f.value(&z.x, &reference.y)? - f.value(&reference.x, &z.y)?) };
    let grad = |z: &DecisionPoint| -> Result<Vector> {
        Ok(concat_vectors([f.grad_x(&z.x, &reference.y)?, -f.grad_y(&reference.x, &z.y)?]))
    };
    let lambda = classes.iter().find_map(|k| match k {
        FunctionClass::StronglyConvexConcave { lambda } => Some(*lambda),
        _ => None,
    });
    let gamma = classes.iter().find_map(|k| match k {
        FunctionClass::MinMaxEc { alpha } => Some(0.5 * (1.0 / (c.l0 * c.diameter)).min(*alpha)),
        _ => None,
    });
    let mut strong = Check::new("gap-strong-convexity");
    let mut expc = Check::new("gap-exp-concavity");
    let mut rng = stream(seed, streams::VERIFY);
    for _ in 0..n_segments {
        let za = DecisionPoint::new(dom.x.sample(&mut rng), dom.y.sample(&mut rng));
        let zb = DecisionPoint::new(dom.x.sample(&mut rng), dom.y.sample(&mut rng));
        let (ja, jb) = (za.joint(), zb.joint());
        let d = &ja - &jb;
        if let Some(l) = lambda {
            let m = g(&za)? - g(&zb)? - grad(&zb)?.dot(&d) - 0.5 * l * d.norm_squared();
            strong.record(m, || witness(&za, &zb));
        }
        if let Some(gm) = gamma {
            let p = |z: &DecisionPoint| -> Result<f64> { Ok((-0.25 * gm * g(z)?).exp()) };
            let (pa, pb) = (p(&za)?, p(&zb)?);
            for s in [0.25, 0.5, 0.75] {
                let zs = dom.split(&(&ja * (1.0 - s) + &jb * s));
                let m = p(&zs)? - ((1.0 - s) * pa + s * pb);
                expc.record(m, || witness(&za, &zb));
            }
        }
    }
    let mut out = Vec::new();
    if lambda.is_some() {
        out.push(strong);
    }
    if gamma.is_some() {
        out.push(expc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{make_log_portfolio, make_sc_sc_quadratic, GameDomain};
    use crate::geometry::Domain;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn quadratic_passes_its_classes() {
        let dom = GameDomain::new(Domain::cube(1, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap());
        let f = make_sc_sc_quadratic(1.0, &DVector::zeros(1), &DVector::zeros(1), &DMatrix::zeros(1, 1), dom).unwrap();
        let r = check_class_membership(&f, 500, 1).unwrap();
        assert_eq!(r.violations(), 0, "{:?}", r.checks);
        for name in ["sandwich-upper", "sandwich-lower", "strong-lower", "pl-x", "pl-y"] {
            assert_eq!(r.get(name).unwrap().evaluated, 500);
        }
        let (m1, m2) = r.mu_hat.unwrap();
        assert!(m1 >= 1.0 - 1e-9 && m2 >= 1.0 - 1e-9);
    }

    #[test]
    fn portfolio_passes_ec() {
        let dom = GameDomain::new(Domain::simplex(2, 1.0).unwrap(), Domain::new_box(vec![0.5; 2], vec![1.5; 2]).unwrap());
        let f = make_log_portfolio(DVector::from_element(2, 1.0), dom).unwrap();
        let r = check_class_membership(&f, 500, 2).unwrap();
        assert_eq!(r.violations(), 0, "{:?}", r.checks);
        assert!(r.get("ec-lower").is_some());
    }

    #[test]
    fn degenerate_pair_has_zero_gaps() {
        let dom = GameDomain::new(Domain::cube(2, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap());
        let f = make_sc_sc_quadratic(
            1.0,
            &DVector::from_column_slice(&[0.1, 0.2]),
            &DVector::zeros(1),
            &DMatrix::from_element(2, 1, 0.3),
            dom,
        )
        .unwrap();
        let z = DecisionPoint::new(DVector::from_column_slice(&[0.4, -0.2]), DVector::from_element(1, 0.7));
        let d = z.joint() - z.joint();
        let cross = f.value(&z.x, &z.y).unwrap() - f.value(&z.x, &z.y).unwrap();
        assert_eq!(cross, 0.0);
        assert_eq!(f.operator(&z).unwrap().dot(&d), 0.0);
    }
}
