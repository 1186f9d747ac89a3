//! Regret measurement against the cumulative saddle point.

mod saddle;
mod variation;

pub use saddle::{cumulative_saddle, CumulativeSaddle, SADDLE_MAX_ITER, SADDLE_TOL};
pub use variation::{sasp_regret, variation_report, SaspRegret, VariationReport, VARIATION_SAMPLES};

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functions::{best_response_x, best_response_y, Check, DecisionPoint, GameFunction, Vector};
use crate::learners::StepReport;
use crate::rng::{stream, streams};

/// Lower tolerance on the dynamic gap.
pub const GAP_FLOOR: f64 = -1e-9;
/// Slack of the ordering chain between regret notions.
pub const ORDERING_SLACK: f64 = 1e-6;
const NUMERIC_TOL: f64 = 1e-11;

/// A value and whether a numeric inner solve produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub approximate: bool,
}

/// `g'_t(z) = f_t(x, y') - f_t(x', y)`.
pub fn static_gap(f: &dyn GameFunction, z: &DecisionPoint, saddle_ref: &DecisionPoint) -> Result<f64> {
    Ok(f.value(&z.x, &saddle_ref.y)? - f.value(&saddle_ref.x, &z.y)?)
}

/// `g*_t(z) = max_y f_t(x, y) - min_x f_t(x, y)`.
pub fn dynamic_gap(f: &dyn GameFunction, z: &DecisionPoint, numeric: bool) -> Result<Measured> {
    let ys = best_response_y(f, &z.x, numeric)?;
    let xs = best_response_x(f, &z.y, numeric)?;
    Ok(Measured {
        value: f.value(&z.x, &ys.point)? - f.value(&xs.point, &z.y)?,
        approximate: ys.approximate || xs.approximate,
    })
}

/// `min_z g'_t(z) = min_x f_t(x, y') - max_y f_t(x', y)`.
pub fn min_static_gap(f: &dyn GameFunction, saddle_ref: &DecisionPoint, numeric: bool) -> Result<Measured> {
    let xs = best_response_x(f, &saddle_ref.y, numeric)?;
    let ys = best_response_y(f, &saddle_ref.x, numeric)?;
    Ok(Measured {
        value: f.value(&xs.point, &saddle_ref.y)? - f.value(&saddle_ref.x, &ys.point)?,
        approximate: xs.approximate || ys.approximate,
    })
}

/// `min_x max_y f_t`.
pub fn round_value(f: &Arc<dyn GameFunction>, numeric: bool) -> Result<Measured> {
    if let Some(s) = f.saddle() {
        return Ok(Measured { value: s?.value, approximate: false });
    }
    if !numeric {
        return Err(Error::MissingOracle("saddle"));
    }
    let s = cumulative_saddle(std::slice::from_ref(f), SADDLE_TOL)?;
    Ok(Measured { value: s.value, approximate: true })
}

/// `|| (1/T) sum_t z_t - z' ||^2`.
pub fn average_iterate_distance(plays: &[DecisionPoint], saddle_ref: &DecisionPoint) -> Result<f64> {
    let first = plays.first().ok_or_else(|| Error::InvalidParameter("no plays".into()))?;
    let mut mean = first.joint() * 0.0;
    for p in plays {
        mean += p.joint();
    }
    mean /= plays.len() as f64;
    Ok((mean - saddle_ref.joint()).norm_squared())
}

/// `min_x sum_t f_t(x, y_t)`: closed form for quadratic rounds.
fn min_sum_x(fns: &[Arc<dyn GameFunction>], ys: &[&Vector], numeric: bool) -> Result<Measured> {
    let dom = fns[0].domain();
    if let Some(qs) = fns.iter().map(|f| f.as_quadratic()).collect::<Option<Vec<_>>>() {
        let (_, l0, _) = qs[0].form().slice_x(ys[0]);
        let (mut c, mut l, mut k) = (0.0, l0 * 0.0, 0.0);
        for (q, y) in qs.iter().zip(ys) {
            let (ci, li, ki) = q.form().slice_x(y);
            c += ci;
            l += li;
            k += ki;
        }
        if c > 0.0 {
            let x = dom.x.project_euclidean(&(-&l / c))?;
            return Ok(Measured { value: 0.5 * c * x.norm_squared() + l.dot(&x) + k, approximate: false });
        }
    }
    if !numeric {
        return Err(Error::MissingOracle("best_response_x"));
    }
    let (v, _) = saddle::numeric_min_x(fns, ys, &dom.x, NUMERIC_TOL)?;
    Ok(Measured { value: v * fns.len() as f64, approximate: true })
}

/// `max_y sum_t f_t(x_t, y)`: closed form for quadratic rounds.
fn max_sum_y(fns: &[Arc<dyn GameFunction>], xs: &[&Vector], numeric: bool) -> Result<Measured> {
    let dom = fns[0].domain();
    if let Some(qs) = fns.iter().map(|f| f.as_quadratic()).collect::<Option<Vec<_>>>() {
        let (_, l0, _) = qs[0].form().slice_y(xs[0]);
        let (mut c, mut l, mut k) = (0.0, l0 * 0.0, 0.0);
        for (q, x) in qs.iter().zip(xs) {
            let (ci, li, ki) = q.form().slice_y(x);
            c += ci;
            l += li;
            k += ki;
        }
        if c > 0.0 {
            let y = dom.y.project_euclidean(&(&l / c))?;
            return Ok(Measured { value: -0.5 * c * y.norm_squared() + l.dot(&y) + k, approximate: false });
        }
    }
    if !numeric {
        return Err(Error::MissingOracle("best_response_y"));
    }
    let (v, _) = saddle::numeric_max_y(fns, xs, &dom.y, NUMERIC_TOL)?;
    Ok(Measured { value: v * fns.len() as f64, approximate: true })
}

/// `max_w sum_t <F_t(w), z_t - w>` over the given comparators, with the
/// maximizing comparator.
pub fn vi_regret(fns: &[Arc<dyn GameFunction>], plays: &[DecisionPoint], comparators: &[Vector]) -> Result<(f64, Vector)> {
    if fns.len() != plays.len() || comparators.is_empty() {
        return Err(Error::DimensionMismatch { expected: fns.len(), got: plays.len() });
    }
    let dom = fns[0].domain();
    let joints: Vec<Vector> = plays.iter().map(|p| p.joint()).collect();
    let scores: Vec<f64> = comparators
        .par_iter()
        .map(|w| -> Result<f64> {
            let p = dom.split(w);
            let mut s = 0.0;
            for (f, z) in fns.iter().zip(&joints) {
                s += f.operator(&p)?.dot(&(z - w));
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let (i, v) = scores.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    Ok((*v, comparators[i].clone()))
}

/// One ledger row.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerRow {
    pub t: usize,
    pub point: DecisionPoint,
    /// `f_t(z_t)`.
    pub value: f64,
    pub g_prime: f64,
    pub g_star: f64,
    /// `min_z g'_t(z)`.
    pub min_g_prime: f64,
    /// `min_x max_y f_t`.
    pub round_value: f64,
    pub sdual_gap: f64,
    pub dual_gap: f64,
    pub dsp_reg: f64,
    pub approximate: bool,
    pub inner_steps: Option<usize>,
    pub cap_hit: bool,
    pub clipped: usize,
}

/// Final regret sums.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RegretTotals {
    pub sdual_gap: f64,
    pub dual_gap: f64,
    pub dsp_reg: f64,
    pub reg1: f64,
    pub reg2: f64,
    pub sne_reg: f64,
    pub dne_reg: f64,
}

/// Per-round measurements and their running sums.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretLedger {
    pub rows: Vec<LedgerRow>,
    pub totals: RegretTotals,
    /// Cumulative saddle point and value of `sum_t f_t` there.
    pub saddle: CumulativeSaddle,
    pub approximate: bool,
}

/// Named inequality between two ledger quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct Ordering {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl Ordering {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + ORDERING_SLACK
    }
}

impl RegretLedger {
    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    pub fn plays(&self) -> Vec<DecisionPoint> {
        self.rows.iter().map(|r| r.point.clone()).collect()
    }

    /// Copies learner diagnostics into the rows.
    pub fn attach_reports(&mut self, reports: &[StepReport]) -> Result<()> {
        if reports.len() != self.rows.len() {
            return Err(Error::DimensionMismatch { expected: self.rows.len(), got: reports.len() });
        }
        for (row, r) in self.rows.iter_mut().zip(reports) {
            row.inner_steps = r.inner_steps;
            row.cap_hit = r.cap_hit;
            row.clipped = r.clipped;
        }
        Ok(())
    }

    pub fn cap_hits(&self) -> usize {
        self.rows.iter().filter(|r| r.cap_hit).count()
    }

    pub fn clip_events(&self) -> usize {
        self.rows.iter().map(|r| r.clipped).sum()
    }

    /// `DNEReg <= DualGap`, `Reg1 + Reg2 <= DualGap`, and on separable runs
    /// `DualGap <= DSPReg`.
    pub fn ordering(&self, separable: bool) -> Vec<Ordering> {
        let t = &self.totals;
        let mut out = vec![
            Ordering { name: "dne-reg <= dual-gap", lhs: t.dne_reg, rhs: t.dual_gap },
            Ordering { name: "reg1 + reg2 <= dual-gap", lhs: t.reg1 + t.reg2, rhs: t.dual_gap },
        ];
        if separable {
            out.push(Ordering { name: "dual-gap <= dsp-reg", lhs: t.dual_gap, rhs: t.dsp_reg });
        }
        out
    }

    /// Smallest dynamic gap over the run.
    pub fn min_dynamic_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.g_star).fold(f64::INFINITY, f64::min)
    }
}

/// Fills every regret column for the given rounds and plays.
pub fn regret_report(
    fns: &[Arc<dyn GameFunction>],
    plays: &[DecisionPoint],
    saddle: &CumulativeSaddle,
    numeric: bool,
) -> Result<RegretLedger> {
    if fns.len() != plays.len() || fns.is_empty() {
        return Err(Error::DimensionMismatch { expected: fns.len(), got: plays.len() });
    }
    let z_ref = &saddle.point;
    let per_round: Vec<(f64, f64, Measured, Measured, Measured)> = fns
        .par_iter()
        .zip(plays.par_iter())
        .map(|(f, z)| -> Result<_> {
            Ok((
                f.value(&z.x, &z.y)?,
                static_gap(f.as_ref(), z, z_ref)?,
                dynamic_gap(f.as_ref(), z, numeric)?,
                min_static_gap(f.as_ref(), z_ref, numeric)?,
                round_value(f, numeric)?,
            ))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(fns.len());
    let (mut sg, mut dg, mut dsp, mut sum_f, mut sum_v) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut approximate = saddle.approximate;
    for (i, (value, gp, gs, mg, rv)) in per_round.into_iter().enumerate() {
        sg += gp;
        dg += gs.value;
        dsp += gp - mg.value;
        sum_f += value;
        sum_v += rv.value;
        let approx = gs.approximate || mg.approximate || rv.approximate;
        approximate |= approx;
        rows.push(LedgerRow {
            t: i + 1,
            point: plays[i].clone(),
            value,
            g_prime: gp,
            g_star: gs.value,
            min_g_prime: mg.value,
            round_value: rv.value,
            sdual_gap: sg,
            dual_gap: dg,
            dsp_reg: dsp,
            approximate: approx,
            inner_steps: None,
            cap_hit: false,
            clipped: 0,
        });
    }
    let ys: Vec<&Vector> = plays.iter().map(|p| &p.y).collect();
    let xs: Vec<&Vector> = plays.iter().map(|p| &p.x).collect();
    let lo = min_sum_x(fns, &ys, numeric)?;
    let hi = max_sum_y(fns, &xs, numeric)?;
    approximate |= lo.approximate || hi.approximate;
    let totals = RegretTotals {
        sdual_gap: sg,
        dual_gap: dg,
        dsp_reg: dsp,
        reg1: sum_f - lo.value,
        reg2: hi.value - sum_f,
        sne_reg: (sum_f - saddle.value).abs(),
        dne_reg: (sum_f - sum_v).abs(),
    };
    Ok(RegretLedger { rows, totals, saddle: saddle.clone(), approximate })
}

/// `sum_t g'_t(z) >= -tol T` at `n` sampled points and `sum_t g'_t(z') = 0`.
pub fn check_cumulative_saddle(fns: &[Arc<dyn GameFunction>], saddle: &CumulativeSaddle, n: usize, seed: u64) -> Result<Check> {
    let dom = fns.first().ok_or_else(|| Error::InvalidParameter("empty function sequence".into()))?.domain();
    let tol = saddle.gap.max(SADDLE_TOL) * fns.len() as f64;
    let mut check = Check::new("cumulative-saddle");
    let at_ref: f64 = fns.iter().map(|f| static_gap(f.as_ref(), &saddle.point, &saddle.point)).sum::<Result<f64>>()?;
    check.record(-at_ref.abs() + tol, || "z = z'".into());
    let mut rng = stream(seed, streams::SADDLE_CHECK);
    for _ in 0..n {
        let z = DecisionPoint::new(dom.x.sample(&mut rng), dom.y.sample(&mut rng));
        let s: f64 = fns.iter().map(|f| static_gap(f.as_ref(), &z, &saddle.point)).sum::<Result<f64>>()?;
        check.record(s + tol, || format!("z = {:?}", z.joint().as_slice()));
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{make_sc_sc_quadratic, GameDomain};
    use crate::geometry::Domain;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn at(x: f64, y: f64) -> DecisionPoint {
        DecisionPoint::new(dv(&[x]), dv(&[y]))
    }

    fn half_square() -> Arc<dyn GameFunction> {
        let dom = GameDomain::new(Domain::cube(1, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap());
        Arc::new(make_sc_sc_quadratic(1.0, &dv(&[0.0]), &dv(&[0.0]), &DMatrix::zeros(1, 1), dom).unwrap())
    }

    #[test]
    fn gap_examples() {
        let f = half_square();
        let o = at(0.0, 0.0);
        assert_eq!(static_gap(f.as_ref(), &o, &o).unwrap(), 0.0);
        assert_eq!(static_gap(f.as_ref(), &at(1.0, 1.0), &o).unwrap(), 1.0);
        assert_eq!(dynamic_gap(f.as_ref(), &o, false).unwrap().value, 0.0);
        assert_abs_diff_eq!(dynamic_gap(f.as_ref(), &at(1.0, 0.0), false).unwrap().value, 0.5);
    }

    #[test]
    fn dynamic_gap_dominates_static_gap() {
        let dom = GameDomain::new(Domain::cube(2, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap());
        let f = make_sc_sc_quadratic(1.0, &dv(&[0.3, -0.2]), &dv(&[0.1]), &DMatrix::from_element(2, 1, 0.5), dom.clone()).unwrap();
        let s = f.saddle().unwrap().unwrap();
        let mut rng = stream(3, streams::VERIFY);
        for _ in 0..200 {
            let z = DecisionPoint::new(dom.x.sample(&mut rng), dom.y.sample(&mut rng));
            let d = dynamic_gap(&f, &z, false).unwrap().value;
            assert!(d >= GAP_FLOOR);
            assert!(d >= static_gap(&f, &z, &s.point).unwrap() - 1e-12);
        }
    }

    #[test]
    fn vi_regret_vanishes_at_the_saddle() {
        let f = half_square();
        let fns = vec![f.clone(); 3];
        let plays = vec![at(0.0, 0.0); 3];
        let grid = f.domain().joint().grid(5);
        let (v, w) = vi_regret(&fns, &plays, &grid).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn average_iterate_examples() {
        let o = at(0.0, 0.0);
        assert_eq!(average_iterate_distance(&[o.clone(), o.clone()], &o).unwrap(), 0.0);
        assert_eq!(average_iterate_distance(&[at(1.0, 1.0), at(-1.0, -1.0)], &o).unwrap(), 0.0);
        assert!(average_iterate_distance(&[], &o).is_err());
    }

    #[test]
    fn saddle_plays_have_zero_dynamic_regret() {
        let f = half_square();
        let fns = vec![f.clone(); 5];
        let s = cumulative_saddle(&fns, SADDLE_TOL).unwrap();
        let plays = vec![at(0.0, 0.0); 5];
        let l = regret_report(&fns, &plays, &s, false).unwrap();
        assert_eq!(l.totals.dual_gap, 0.0);
        assert_eq!(l.totals.dne_reg, 0.0);
        assert!(l.ordering(true).iter().all(Ordering::holds));
        assert!(check_cumulative_saddle(&fns, &s, 100, 1).unwrap().passed());
    }

    #[test]
    fn regret_columns_on_a_moving_play() {
        let f = half_square();
        let fns = vec![f.clone(); 2];
        let s = cumulative_saddle(&fns, SADDLE_TOL).unwrap();
        let plays = vec![at(1.0, 1.0), at(1.0, 0.0)];
        let l = regret_report(&fns, &plays, &s, false).unwrap();
        assert_abs_diff_eq!(l.totals.sdual_gap, 1.0 + 0.5);
        assert_abs_diff_eq!(l.totals.dual_gap, 1.0 + 0.5);
        assert_abs_diff_eq!(l.totals.reg1, 0.5 + 0.5);
        assert_abs_diff_eq!(l.totals.reg2, 1.0 - 0.5);
        assert_abs_diff_eq!(l.totals.sne_reg, 0.5);
        assert_eq!(l.rows[1].sdual_gap, l.totals.sdual_gap);
    }
}
