use std::sync::Arc;

use rayon::prelude::*;

use super::{dynamic_gap, saddle, static_gap, NUMERIC_TOL};
use crate::error::{Error, Result};
use crate::functions::{best_response_x, best_response_y, DecisionPoint, GameFunction, QuadForm, Vector};
use crate::rng::{stream, streams};

/// Default number of sampled points behind the sampled maxima.
pub const VARIATION_SAMPLES: usize = 10_000;
/// Longest horizon for which every interval is scored.
pub const SASP_EXHAUSTIVE_MAX: usize = 512;

/// Drift of the payoff sequence and of the play path.
#[derive(Clone, Debug, PartialEq)]
pub struct VariationReport {
    /// `sum_t max_z (g*_{t+1}(z) - g*_t(z))`.
    pub u_t: f64,
    /// `sum_t max_z |g'_t(z) - g'_{t-1}(z)|`, when a comparator is given.
    pub v_t: Option<f64>,
    /// `sum_t max_z |f_t(z) - f_{t-1}(z)|`.
    pub v_t_prime: f64,
    pub c_t: f64,
    pub c_t_prime: f64,
    /// `sum_t |z_{t+1} - z_t|`.
    pub delta_t: f64,
    /// Points behind each sampled maximum.
    pub samples: usize,
    pub approximate: bool,
}

fn eval_points(fns: &[Arc<dyn GameFunction>], plays: &[DecisionPoint], n: usize, seed: u64) -> Result<Vec<DecisionPoint>> {
    let dom = fns[0].domain();
    let mut rng = stream(seed, streams::VARIATION);
    let mut pts: Vec<DecisionPoint> = (0..n).map(|_| DecisionPoint::new(dom.x.sample(&mut rng), dom.y.sample(&mut rng))).collect();
    pts.extend(plays.iter().cloned());
    if let Some(vs) = dom.joint().vertices() {
        pts.extend(vs.iter().map(|v| dom.split(v)));
    }
    let mut seen: Vec<*const ()> = Vec::new();
    for f in fns {
        let key = Arc::as_ptr(f) as *const ();
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        if let Some(s) = f.saddle() {
            pts.push(s?.point);
        }
    }
    Ok(pts)
}

/// Sampled drift measures: maxima run over `n_samples` seeded points plus
/// all plays, domain vertices and per-round saddles, so each is a lower bound
/// on the true maximum.
pub fn variation_report(
    fns: &[Arc<dyn GameFunction>],
    plays: &[DecisionPoint],
    saddle_ref: Option<&DecisionPoint>,
    n_samples: usize,
    seed: u64,
    numeric: bool,
) -> Result<VariationReport> {
    if fns.is_empty() || fns.len() != plays.len() {
        return Err(Error::DimensionMismatch { expected: fns.len(), got: plays.len() });
    }
    let pts = eval_points(fns, plays, n_samples, seed)?;
    let changes: Vec<usize> = (1..fns.len()).filter(|&t| !Arc::ptr_eq(&fns[t], &fns[t - 1])).collect();

    let terms: Vec<(f64, f64, Option<f64>, bool)> = changes
        .par_iter()
        .map(|&t| -> Result<_> {
            let (prev, cur) = (&fns[t - 1], &fns[t]);
            let mut u = f64::NEG_INFINITY;
            let mut vp = 0.0f64;
            let mut v = saddle_ref.map(|_| 0.0f64);
            let mut approx = false;
            for p in &pts {
                let a = dynamic_gap(cur.as_ref(), p, numeric)?;
                let b = dynamic_gap(prev.as_ref(), p, numeric)?;
                approx |= a.approximate || b.approximate;
                u = u.max(a.value - b.value);
                vp = vp.max((cur.value(&p.x, &p.y)? - prev.value(&p.x, &p.y)?).abs());
                if let (Some(v), Some(r)) = (v.as_mut(), saddle_ref) {
                    *v = v.max((static_gap(cur.as_ref(), p, r)? - static_gap(prev.as_ref(), p, r)?).abs());
                }
            }
            Ok((u, vp, v, approx))
        })
        .collect::<Result<_>>()?;

    let mut report = VariationReport {
        u_t: 0.0,
        v_t: saddle_ref.map(|_| 0.0),
        v_t_prime: 0.0,
        c_t: 0.0,
        c_t_prime: 0.0,
        delta_t: 0.0,
        samples: pts.len(),
        approximate: false,
    };
    for (u, vp, v, approx) in terms {
        report.u_t += u;
        report.v_t_prime += vp;
        if let (Some(acc), Some(v)) = (report.v_t.as_mut(), v) {
            *acc += v;
        }
        report.approximate |= approx;
    }
    for t in 1..plays.len() {
        report.delta_t += (plays[t].joint() - plays[t - 1].joint()).norm();
        let (f0, f1) = (fns[t - 1].as_ref(), fns[t].as_ref());
        let (z0, z1) = (&plays[t - 1], &plays[t]);
        let x1 = best_response_x(f1, &z1.y, numeric)?;
        let y1 = best_response_y(f1, &z1.x, numeric)?;
        let x0 = best_response_x(f0, &z0.y, numeric)?;
        let y0 = best_response_y(f0, &z0.x, numeric)?;
        let x0b = best_response_x(f0, &z1.y, numeric)?;
        let y0b = best_response_y(f0, &z1.x, numeric)?;
        report.approximate |= [&x1, &y1, &x0, &y0, &x0b, &y0b].iter().any(|r| r.approximate);
        report.c_t += (&x1.point - &x0.point).norm() + (&y1.point - &y0.point).norm();
        report.c_t_prime += (&x1.point - &x0b.point).norm() + (&y1.point - &y0b.point).norm();
    }
    Ok(report)
}

/// Worst interval of the adaptive regret on `g'_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SaspRegret {
    pub value: f64,
    /// `(r, s)`, 1-based and inclusive.
    pub interval: (usize, usize),
    pub intervals: usize,
    /// All `O(T^2)` intervals were scored rather than a dyadic subset.
    pub exhaustive: bool,
    pub approximate: bool,
}

/// Intervals of length `2^j` starting at multiples of `2^(j-1)`, plus `[1, T]`.
fn dyadic_intervals(horizon: usize) -> Vec<(usize, usize)> {
    let mut out = vec![(1, horizon)];
    let mut len = 1;
    while len <= horizon {
        let stride = (len / 2).max(1);
        let mut r = 1;
        while r + len - 1 <= horizon {
            out.push((r, r + len - 1));
            r += stride;
        }
        len *= 2;
    }
    out
}

/// Prefix sums of `(c, l, k)` slice coefficients.
struct Prefix {
    c: Vec<f64>,
    l: Vec<Vector>,
    k: Vec<f64>,
}

impl Prefix {
    fn new(slices: impl Iterator<Item = (f64, Vector, f64)>, dim: usize) -> Self {
        let mut p = Prefix { c: vec![0.0], l: vec![Vector::zeros(dim)], k: vec![0.0] };
        for (c, l, k) in slices {
            p.c.push(p.c.last().unwrap() + c);
            let next = p.l.last().unwrap() + l;
            p.l.push(next);
            p.k.push(p.k.last().unwrap() + k);
        }
        p
    }

    fn range(&self, r: usize, s: usize) -> (f64, Vector, f64) {
        (self.c[s] - self.c[r - 1], &self.l[s] - &self.l[r - 1], self.k[s] - self.k[r - 1])
    }
}

/// `max_{[r,s]} sum_{t=r}^s g'_t(z_t) - min_z sum_{t=r}^s g'_t(z)`.
///
/// Quadratic rounds are scored on every interval up to
/// [`SASP_EXHAUSTIVE_MAX`] rounds through prefix sums; otherwise a dyadic
/// family of intervals is scored with numeric inner solves.
pub fn sasp_regret(fns: &[Arc<dyn GameFunction>], plays: &[DecisionPoint], saddle_ref: &DecisionPoint) -> Result<SaspRegret> {
    let n = fns.len();
    if n == 0 || n != plays.len() {
        return Err(Error::DimensionMismatch { expected: n, got: plays.len() });
    }
    let dom = fns[0].domain();
    let mut played = vec![0.0];
    for (f, z) in fns.iter().zip(plays) {
        played.push(played.last().unwrap() + static_gap(f.as_ref(), z, saddle_ref)?);
    }
    let quads: Option<Vec<&QuadForm>> = fns.iter().map(|f| f.as_quadratic().map(|q| q.form())).collect();
    let exhaustive = quads.is_some() && n <= SASP_EXHAUSTIVE_MAX;
    let intervals: Vec<(usize, usize)> = if exhaustive {
        (1..=n).flat_map(|r| (r..=n).map(move |s| (r, s))).collect()
    } else {
        dyadic_intervals(n)
    };

    let score: Vec<(f64, bool)> = match &quads {
        Some(qs) => {
            let px = Prefix::new(qs.iter().map(|q| q.slice_x(&saddle_ref.y)), dom.x_dim());
            let py = Prefix::new(qs.iter().map(|q| q.slice_y(&saddle_ref.x)), dom.y_dim());
            intervals
                .par_iter()
                .map(|&(r, s)| -> Result<(f64, bool)> {
                    let (cx, lx, kx) = px.range(r, s);
                    let (cy, ly, ky) = py.range(r, s);
                    let x = dom.x.project_euclidean(&(-&lx / cx))?;
                    let y = dom.y.project_euclidean(&(&ly / cy))?;
                    let lo = 0.5 * cx * x.norm_squared() + lx.dot(&x) + kx;
                    let hi = -0.5 * cy * y.norm_squared() + ly.dot(&y) + ky;
                    Ok((played[s] - played[r - 1] - (lo - hi), false))
                })
                .collect::<Result<_>>()?
        }
        None => intervals
            .par_iter()
            .map(|&(r, s)| -> Result<(f64, bool)> {
                let part = &fns[r - 1..s];
                let ys = vec![&saddle_ref.y; part.len()];
                let xs = vec![&saddle_ref.x; part.len()];
                let (lo, _) = saddle::numeric_min_x(part, &ys, &dom.x, NUMERIC_TOL)?;
                let (hi, _) = saddle::numeric_max_y(part, &xs, &dom.y, NUMERIC_TOL)?;
                let m = part.len() as f64;
                Ok((played[s] - played[r - 1] - m * (lo - hi), true))
            })
            .collect::<Result<_>>()?,
    };
    let (i, &(value, approximate)) = score
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("at least one interval");
    Ok(SaspRegret { value, interval: intervals[i], intervals: intervals.len(), exhaustive, approximate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{make_sc_sc_quadratic, GameDomain};
    use crate::geometry::Domain;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn dom() -> GameDomain {
        GameDomain::new(Domain::cube(1, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap())
    }

    fn quad(a: f64) -> crate::functions::QuadraticGame {
        make_sc_sc_quadratic(1.0, &DVector::from_element(1, a), &DVector::zeros(1), &DMatrix::zeros(1, 1), dom()).unwrap()
    }

    fn plays(n: usize, x: f64) -> Vec<DecisionPoint> {
        vec![DecisionPoint::new(DVector::from_element(1, x), DVector::zeros(1)); n]
    }

    #[test]
    fn stationary_sequence_has_no_drift() {
        let f: Arc<dyn GameFunction> = Arc::new(quad(0.3));
        let fns = vec![f; 6];
        let r = variation_report(&fns, &plays(6, 0.1), None, 100, 1, false).unwrap();
        assert_eq!((r.u_t, r.v_t_prime, r.delta_t, r.c_t, r.c_t_prime), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(r.v_t, None);
    }

    #[test]
    fn offset_toggle() {
        let base = quad(0.0);
        let f: Arc<dyn GameFunction> = Arc::new(base.with_offset(0.0));
        let g: Arc<dyn GameFunction> = Arc::new(base.with_offset(0.25));
        let r = variation_report(&[f, g], &plays(2, 0.0), None, 100, 1, false).unwrap();
        assert_abs_diff_eq!(r.v_t_prime, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(r.u_t, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dyadic_family_covers_the_horizon() {
        let iv = dyadic_intervals(8);
        assert!(iv.contains(&(1, 8)));
        assert!(iv.contains(&(3, 6)));
        assert!(iv.iter().all(|&(r, s)| 1 <= r && r <= s && s <= 8));
    }

    #[test]
    fn sasp_is_zero_at_the_comparator() {
        let f: Arc<dyn GameFunction> = Arc::new(quad(0.0));
        let fns = vec![f; 10];
        let o = DecisionPoint::new(DVector::zeros(1), DVector::zeros(1));
        let s = sasp_regret(&fns, &vec![o.clone(); 10], &o).unwrap();
        assert!(s.exhaustive);
        assert_eq!(s.intervals, 55);
        assert_abs_diff_eq!(s.value, 0.0, epsilon = 1e-15);
        let s = sasp_regret(&fns, &plays(10, 0.5), &o).unwrap();
        assert_abs_diff_eq!(s.value, 10.0 * 0.125, epsilon = 1e-12);
        assert_eq!(s.interval, (1, 10));
    }
}
