use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functions::{
    DecisionPoint, GameDomain, GameFunction, QuadForm, Vector, NUMERIC_RESPONSE_MAX_ITER,
};
use crate::geometry::{concat_vectors, minimize_convex, Domain};

/// Gap target of the cumulative saddle oracle, on the averaged payoff.
pub const SADDLE_TOL: f64 = 1e-8;
/// Extragradient iteration cap.
pub const SADDLE_MAX_ITER: usize = 1_000_000;
const CHECK_EVERY: usize = 200;
const INNER_TOL: f64 = 1e-11;

/// Saddle point of `sum_t f_t` with its value and certified gap.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulativeSaddle {
    pub point: DecisionPoint,
    /// `sum_t f_t(x', y')`.
    pub value: f64,
    /// Duality gap of the averaged payoff at `point`.
    pub gap: f64,
    /// Produced by the iterative solver rather than a linear solve.
    pub approximate: bool,
    pub iterations: usize,
}

/// Sum of the quadratic coefficients, if every round is a quadratic.
pub(crate) fn aggregate_quadratic(fns: &[Arc<dyn GameFunction>]) -> Option<QuadForm> {
    let first = fns.first()?.as_quadratic()?;
    let mut sum = QuadForm::zeros(first.form().lx.len(), first.form().ly.len());
    for f in fns {
        sum.add_assign(f.as_quadratic()?.form());
    }
    Some(sum)
}

fn shared_domain(fns: &[Arc<dyn GameFunction>]) -> Result<&GameDomain> {
    let first = fns.first().ok_or_else(|| Error::InvalidParameter("empty function sequence".into()))?;
    let dom = first.domain();
    if fns.iter().any(|f| f.domain() != dom) {
        return Err(Error::InvalidParameter("rounds do not share a domain".into()));
    }
    Ok(dom)
}

/// `(x', y')` with `max_y F(x', y) - min_x F(x, y') <= tol` for
/// `F = (1/T) sum_t f_t`.
pub fn cumulative_saddle(fns: &[Arc<dyn GameFunction>], tol: f64) -> Result<CumulativeSaddle> {
    let dom = shared_domain(fns)?;
    let n = fns.len() as f64;
    if let Some(mut q) = aggregate_quadratic(fns) {
        q.scale(1.0 / n);
        if q.cx > 0.0 && q.cy > 0.0 {
            let s = q.saddle_on(dom, tol)?;
            let gap = q.gap(&s.point, dom)?;
            let value = fns.iter().map(|f| f.value(&s.point.x, &s.point.y)).sum::<Result<f64>>()?;
            return Ok(CumulativeSaddle { point: s.point, value, gap, approximate: false, iterations: 0 });
        }
    }
    extragradient(fns, dom, tol, SADDLE_MAX_ITER)
}

fn avg_operator(fns: &[Arc<dyn GameFunction>], p: &DecisionPoint) -> Result<Vector> {
    let mut gx = p.x.clone() * 0.0;
    let mut gy = p.y.clone() * 0.0;
    for f in fns {
        gx += f.grad_x(&p.x, &p.y)?;
        gy -= f.grad_y(&p.x, &p.y)?;
    }
    let n = fns.len() as f64;
    Ok(concat_vectors([gx / n, gy / n]))
}

/// `min_x (1/T) sum_t f_t(x, y_t)` by the numeric solver.
pub(crate) fn numeric_min_x(fns: &[Arc<dyn GameFunction>], ys: &[&Vector], dom: &Domain, tol: f64) -> Result<(f64, Vector)> {
    let n = fns.len() as f64;
    let m = minimize_convex(dom, &dom.center(), tol, NUMERIC_RESPONSE_MAX_ITER, |x| {
        let mut v = 0.0;
        let mut g = x.clone() * 0.0;
        for (f, y) in fns.iter().zip(ys) {
            v += f.value(x, y)?;
            g += f.grad_x(x, y)?;
        }
        Ok((v / n, g / n))
    })?;
    Ok((m.value, m.point))
}

/// `max_y (1/T) sum_t f_t(x_t, y)` by the numeric solver.
pub(crate) fn numeric_max_y(fns: &[Arc<dyn GameFunction>], xs: &[&Vector], dom: &Domain, tol: f64) -> Result<(f64, Vector)> {
    let n = fns.len() as f64;
    let m = minimize_convex(dom, &dom.center(), tol, NUMERIC_RESPONSE_MAX_ITER, |y| {
        let mut v = 0.0;
        let mut g = y.clone() * 0.0;
        for (f, x) in fns.iter().zip(xs) {
            v -= f.value(x, y)?;
            g -= f.grad_y(x, y)?;
        }
        Ok((v / n, g / n))
    })?;
    Ok((-m.value, m.point))
}

fn averaged_gap(fns: &[Arc<dyn GameFunction>], dom: &GameDomain, p: &DecisionPoint) -> Result<f64> {
    let xs = vec![&p.x; fns.len()];
    let ys = vec![&p.y; fns.len()];
    let (hi, _) = numeric_max_y(fns, &xs, &dom.y, INNER_TOL)?;
    let (lo, _) = numeric_min_x(fns, &ys, &dom.x, INNER_TOL)?;
    Ok(hi - lo)
}

/// Projected extragradient with a backtracked step, tracking both the last
/// and the averaged iterate; whichever certifies the smaller gap is returned.
fn extragradient(fns: &[Arc<dyn GameFunction>], dom: &GameDomain, tol: f64, max_iter: usize) -> Result<CumulativeSaddle> {
    let joint = dom.joint();
    let l1 = fns.iter().map(|f| f.constants().l1).sum::<f64>() / fns.len() as f64;
    let mut eta = if l1 > 0.0 { 0.5 / l1 } else { 1.0 };
    let mut z = joint.center();
    let mut avg = z.clone() * 0.0;
    let mut weight = 0.0;
    let mut best = f64::INFINITY;
    for it in 1..=max_iter {
        let p = dom.split(&z);
        let fz = avg_operator(fns, &p)?;
        let (w, fw) = loop {
            let w = joint.project_euclidean(&(&z - &fz * eta))?;
            let fw = avg_operator(fns, &dom.split(&w))?;
            let dw = (&w - &z).norm();
            if eta * (&fw - &fz).norm() <= 0.9 * dw || dw == 0.0 {
                break (w, fw);
            }
            eta *= 0.5;
        };
        z = joint.project_euclidean(&(&z - &fw * eta))?;
        avg += &w * eta;
        weight += eta;
        if it % CHECK_EVERY == 0 {
            eta *= 1.5;
            for cand in [z.clone(), &avg / weight] {
                let q = dom.split(&cand);
                let gap = averaged_gap(fns, dom, &q)?;
                best = best.min(gap);
                if gap <= tol {
                    let value = fns.iter().map(|f| f.value(&q.x, &q.y)).sum::<Result<f64>>()?;
                    return Ok(CumulativeSaddle { point: q, value, gap, approximate: true, iterations: it });
                }
            }
        }
    }
    Err(Error::NonConvergence { what: "cumulative saddle", iterations: max_iter, residual: best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{make_log_portfolio, make_sc_sc_quadratic};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn single_symmetric_round() {
        let dom = GameDomain::new(Domain::cube(1, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap());
        let f: Arc<dyn GameFunction> =
            Arc::new(make_sc_sc_quadratic(1.0, &dv(&[0.0]), &dv(&[0.0]), &DMatrix::zeros(1, 1), dom).unwrap());
        let s = cumulative_saddle(&[f], SADDLE_TOL).unwrap();
        assert_eq!(s.point.joint(), dv(&[0.0, 0.0]));
        assert!(!s.approximate);
    }

    #[test]
    fn shifts_average_out() {
        let dom = GameDomain::new(Domain::cube(1, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap());
        let fns: Vec<Arc<dyn GameFunction>> = [0.2, -0.2]
            .iter()
            .map(|a| {
                Arc::new(make_sc_sc_quadratic(1.0, &dv(&[*a]), &dv(&[0.0]), &DMatrix::zeros(1, 1), dom.clone()).unwrap())
                    as Arc<dyn GameFunction>
            })
            .collect();
        let s = cumulative_saddle(&fns, SADDLE_TOL).unwrap();
        assert_abs_diff_eq!(s.point.joint(), dv(&[0.0, 0.0]), epsilon = 1e-12);
    }

    #[test]
    fn symmetric_portfolio_pair() {
        let dom = GameDomain::new(Domain::simplex(2, 1.0).unwrap(), Domain::new_box(vec![0.5; 2], vec![1.0; 2]).unwrap());
        let fns: Vec<Arc<dyn GameFunction>> = [[2.0, 1.0], [1.0, 2.0]]
            .iter()
            .map(|a| Arc::new(make_log_portfolio(dv(a), dom.clone()).unwrap()) as Arc<dyn GameFunction>)
            .collect();
        let s = cumulative_saddle(&fns, SADDLE_TOL).unwrap();
        assert!(s.approximate);
        assert_abs_diff_eq!(s.point.x, dv(&[0.5, 0.5]), epsilon = 1e-3);
        assert_abs_diff_eq!(s.point.y, dv(&[1.0, 1.0]), epsilon = 1e-6);
        let grid_best = dom
            .x
            .grid(1001)
            .iter()
            .map(|x| fns.iter().map(|f| f.value(x, &s.point.y).unwrap()).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!(s.value <= grid_best + 1e-9);
    }
}
