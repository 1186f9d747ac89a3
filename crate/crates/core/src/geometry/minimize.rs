use nalgebra::DVector;

use super::domain::Domain;
use crate::error::{Error, Result};

/// Outcome of [`minimize_convex`].
#[derive(Clone, Debug)]
pub struct Minimum {
    pub point: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Length of one projected-gradient step from `point`.
    pub residual: f64,
}

/// Minimizes a smooth convex function over `domain` with accelerated
/// projected gradient, backtracking on the smoothness constant and restarting
/// momentum when the step turns against the gradient mapping.
///
/// Both tests use gradients only, so they stay meaningful where objective
/// values agree to machine precision.
///
/// `oracle` returns the value and gradient. Stops when a projected-gradient
/// step moves less than `tol`.
pub fn minimize_convex<F>(domain: &Domain, x0: &DVector<f64>, tol: f64, max_iter: usize, mut oracle: F) -> Result<Minimum>
where
    F: FnMut(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
{
    let mut x = domain.project_euclidean(x0)?;
    let mut gx = oracle(&x)?.1;
    let mut y = x.clone();
    let mut gy = gx.clone();
    let mut l = 1.0f64;
    let mut t = 1.0f64;
    let mut residual = f64::INFINITY;
    for k in 1..=max_iter {
        let (x_next, f_next, g_next) = loop {
            let cand = domain.project_euclidean(&(&y - &gy / l))?;
            let (fc, gc) = oracle(&cand)?;
            let d = &cand - &y;
            // convexity gives f(c) - f(y) - <g_y, d> <= <g_c - g_y, d>
            if (&gc - &gy).dot(&d) <= 0.5 * l * d.norm_squared() || l > 1e300 {
                break (cand, fc, gc);
            }
            l *= 2.0;
        };
        let restart = (&y - &x_next).dot(&(&x_next - &x)) > 0.0;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let momentum = if restart { 0.0 } else { (t - 1.0) / t_next };
        let step = &x_next - &x;
        x = x_next;
        gx = g_next;
        t = t_next;
        residual = (&x - domain.project_euclidean(&(&x - &gx / l))?).norm();
        if residual <= tol {
            return Ok(Minimum { point: x, value: f_next, iterations: k, residual });
        }
        if momentum > 0.0 {
            y = domain.project_euclidean(&(&x + step * momentum))?;
            gy = oracle(&y)?.1;
        } else {
            y = x.clone();
            gy = gx.clone();
        }
        l *= 0.9;
    }
    Err(Error::NonConvergence { what: "projected gradient", iterations: max_iter, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_over_box() {
        let d = Domain::cube(2, 1.0).unwrap();
        let target = DVector::from_column_slice(&[2.0, 0.3]);
        let m = minimize_convex(&d, &DVector::zeros(2), 1e-12, 5000, |x| {
            let r = x - &target;
            Ok((r.norm_squared(), r * 2.0))
        })
        .unwrap();
        assert!((m.point - DVector::from_column_slice(&[1.0, 0.3])).norm() < 1e-10);
    }

    #[test]
    fn log_objective_over_simplex() {
        let d = Domain::simplex(2, 1.0).unwrap();
        // -ln(2x1 + x2) is minimized at the vertex (1, 0)
        let m = minimize_convex(&d, &d.center(), 1e-12, 5000, |x| {
            let s = 2.0 * x[0] + x[1];
            Ok((-s.ln(), DVector::from_column_slice(&[-2.0 / s, -1.0 / s])))
        })
        .unwrap();
        assert!((m.point[0] - 1.0).abs() < 1e-10);
    }
}
