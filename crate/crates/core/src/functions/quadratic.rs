use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::{
    sampled_constants, ConstantsSource, DecisionPoint, FunctionClass, FunctionConstants, GameDomain, GameFunction,
    Saddle, Vector,
};
use crate::error::{check_dim, Error, Result};
use crate::linalg::spectral_norm;

/// Iteration cap of the constrained quadratic saddle solver.
const SADDLE_MAX_ITER: usize = 1_000_000;

/// Coefficients of
/// `cx/2 |x|^2 - cy/2 |y|^2 + x^T C y + lx^T x + ly^T y + c0`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadForm {
    pub cx: f64,
    pub cy: f64,
    pub coupling: DMatrix<f64>,
    pub lx: Vector,
    pub ly: Vector,
    pub c0: f64,
}

impl QuadForm {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            cx: 0.0,
            cy: 0.0,
            coupling: DMatrix::zeros(m, n),
            lx: DVector::zeros(m),
            ly: DVector::zeros(n),
            c0: 0.0,
        }
    }

    /// Expanded form of `lx/2 |x-a|^2 - ly/2 |y-b|^2 + (x-a)^T B (y-b) + offset`.
    pub fn centered(lambda_x: f64, lambda_y: f64, a: &Vector, b: &Vector, coupling: &DMatrix<f64>, offset: f64) -> Self {
        let bb = coupling * b;
        let bta = coupling.transpose() * a;
        Self {
            cx: lambda_x,
            cy: lambda_y,
            coupling: coupling.clone(),
            lx: -a * lambda_x - &bb,
            ly: b * lambda_y - &bta,
            c0: 0.5 * lambda_x * a.norm_squared() - 0.5 * lambda_y * b.norm_squared() + a.dot(&bb) + offset,
        }
    }

    pub fn add_assign(&mut self, o: &QuadForm) {
        self.cx += o.cx;
        self.cy += o.cy;
        self.coupling += &o.coupling;
        self.lx += &o.lx;
        self.ly += &o.ly;
        self.c0 += o.c0;
    }

    pub fn scale(&mut self, s: f64) {
        self.cx *= s;
        self.cy *= s;
        self.coupling *= s;
        self.lx *= s;
        self.ly *= s;
        self.c0 *= s;
    }

    pub fn value(&self, x: &Vector, y: &Vector) -> f64 {
        0.5 * self.cx * x.norm_squared() - 0.5 * self.cy * y.norm_squared()
            + x.dot(&(&self.coupling * y))
            + self.lx.dot(x)
            + self.ly.dot(y)
            + self.c0
    }

    pub fn grad_x(&self, x: &Vector, y: &Vector) -> Vector {
        x * self.cx + &self.coupling * y + &self.lx
    }

    pub fn grad_y(&self, x: &Vector, y: &Vector) -> Vector {
        -y * self.cy + self.coupling.transpose() * x + &self.ly
    }

    /// Slice in `x` at fixed `y`: `(curvature, linear, constant)`.
    pub fn slice_x(&self, y: &Vector) -> (f64, Vector, f64) {
        (
            self.cx,
            &self.coupling * y + &self.lx,
            -0.5 * self.cy * y.norm_squared() + self.ly.dot(y) + self.c0,
        )
    }

    /// Slice in `y` at fixed `x`: `(concavity, linear, constant)`, i.e. `-c/2 |y|^2 + l^T y + k`.
    pub fn slice_y(&self, x: &Vector) -> (f64, Vector, f64) {
        (
            self.cy,
            self.coupling.transpose() * x + &self.ly,
            0.5 * self.cx * x.norm_squared() + self.lx.dot(x) + self.c0,
        )
    }

    pub fn best_response_x(&self, y: &Vector, dom: &GameDomain) -> Result<Vector> {
        if !(self.cx > 0.0) {
            return Err(Error::InvalidParameter("x curvature must be positive for a best response".into()));
        }
        let (c, l, _) = self.slice_x(y);
        dom.x.project_euclidean(&(-l / c))
    }

    pub fn best_response_y(&self, x: &Vector, dom: &GameDomain) -> Result<Vector> {
        if !(self.cy > 0.0) {
            return Err(Error::InvalidParameter("y curvature must be positive for a best response".into()));
        }
        let (c, l, _) = self.slice_y(x);
        dom.y.project_euclidean(&(l / c))
    }

    /// `max_y f(x, y) - min_x f(x, y)`.
    pub fn gap(&self, p: &DecisionPoint, dom: &GameDomain) -> Result<f64> {
        let ys = self.best_response_y(&p.x, dom)?;
        let xs = self.best_response_x(&p.y, dom)?;
        Ok(self.value(&p.x, &ys) - self.value(&xs, &p.y))
    }

    /// Saddle point on `dom`: linear solve, then projected extragradient when
    /// the unconstrained solution is infeasible. Stops at gap <= `tol`.
    pub fn saddle_on(&self, dom: &GameDomain, tol: f64) -> Result<Saddle> {
        let (m, n) = (dom.x_dim(), dom.y_dim());
        check_dim(m, self.lx.len())?;
        check_dim(n, self.ly.len())?;
        let mut k = DMatrix::zeros(m + n, m + n);
        k.view_mut((0, 0), (m, m)).fill_diagonal(self.cx);
        k.view_mut((m, m), (n, n)).fill_diagonal(-self.cy);
        k.view_mut((0, m), (m, n)).copy_from(&self.coupling);
        k.view_mut((m, 0), (n, m)).copy_from(&self.coupling.transpose());
        let rhs = -crate::geometry::concat_vectors([self.lx.clone(), self.ly.clone()]);
        let z = k.lu().solve(&rhs).ok_or(Error::Singular)?;
        let p = dom.split(&z);
        if dom.contains(&p, 1e-12)? {
            let p = dom.split(&dom.joint().project_euclidean(&z)?);
            let value = self.value(&p.x, &p.y);
            return Ok(Saddle { point: p, value });
        }
        let joint = dom.joint();
        let lip = self.cx.max(self.cy) + spectral_norm(&self.coupling);
        let eta = 0.5 / lip;
        let op = |p: &DecisionPoint| {
            crate::geometry::concat_vectors([self.grad_x(&p.x, &p.y), -self.grad_y(&p.x, &p.y)])
        };
        let mut z = joint.project_euclidean(&z)?;
        let mut gap = f64::INFINITY;
        for it in 0..SADDLE_MAX_ITER {
            let p = dom.split(&z);
            if it % 16 == 0 {
                gap = self.gap(&p, dom)?;
                if gap <= tol {
                    let value = self.value(&p.x, &p.y);
                    return Ok(Saddle { point: p, value });
                }
            }
            let half = joint.project_euclidean(&(&z - op(&p) * eta))?;
            z = joint.project_euclidean(&(&z - op(&dom.split(&half)) * eta))?;
        }
        Err(Error::NonConvergence { what: "quadratic saddle", iterations: SADDLE_MAX_ITER, residual: gap })
    }
}

/// Isotropic convex-concave quadratic payoff on a product domain.
#[derive(Debug)]
pub struct QuadraticGame {
    form: QuadForm,
    domain: GameDomain,
    constants: FunctionConstants,
    saddle: OnceLock<std::result::Result<Saddle, String>>,
}

impl QuadraticGame {
    pub fn new(form: QuadForm, domain: GameDomain) -> Result<Self> {
        check_dim(domain.x_dim(), form.lx.len())?;
        check_dim(domain.y_dim(), form.ly.len())?;
        if form.coupling.nrows() != domain.x_dim() || form.coupling.ncols() != domain.y_dim() {
            return Err(Error::DimensionMismatch { expected: domain.x_dim(), got: form.coupling.nrows() });
        }
        if !(form.cx >= 0.0 && form.cy >= 0.0) {
            return Err(Error::InvalidParameter("quadratic curvatures must be nonnegative".into()));
        }
        let op_norm = |p: &DecisionPoint| {
            (form.grad_x(&p.x, &p.y).norm_squared() + form.grad_y(&p.x, &p.y).norm_squared()).sqrt()
        };
        // ||F||^2 is a convex function of z, so on a polytope the maximum sits at a vertex.
        let (l0, source) = match domain.joint().vertices() {
            Some(vs) => (vs.iter().map(|v| op_norm(&domain.split(v))).fold(0.0, f64::max), ConstantsSource::Exact),
            None => {
                let samples = super::domain_samples(&domain, super::SAMPLE_COUNT, 0);
                (sampled_constants(&domain, &samples, op_norm, |_, _| 0.0).0, ConstantsSource::Sampled)
            }
        };
        let lambda = form.cx.min(form.cy);
        let constants = FunctionConstants {
            l0,
            l1: form.cx.max(form.cy).max(spectral_norm(&form.coupling)),
            lambda,
            alpha: if l0 > 0.0 { lambda / (l0 * l0) } else { f64::INFINITY },
            mu1: form.cx,
            mu2: form.cy,
            diameter: domain.diameter(),
            source,
        };
        Ok(Self { form, domain, constants, saddle: OnceLock::new() })
    }

    /// `lx/2 |x-a|^2 - ly/2 |y-b|^2 + (x-a)^T B (y-b) + offset`.
    pub fn centered(
        lambda_x: f64,
        lambda_y: f64,
        a: &Vector,
        b: &Vector,
        coupling: &DMatrix<f64>,
        offset: f64,
        domain: GameDomain,
    ) -> Result<Self> {
        check_dim(domain.x_dim(), a.len())?;
        check_dim(domain.y_dim(), b.len())?;
        if coupling.nrows() != a.len() || coupling.ncols() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), got: coupling.nrows() });
        }
        Self::new(QuadForm::centered(lambda_x, lambda_y, a, b, coupling, offset), domain)
    }

    pub fn form(&self) -> &QuadForm {
        &self.form
    }

    /// Same payoff shifted by a constant.
    pub fn with_offset(&self, c: f64) -> Self {
        let mut form = self.form.clone();
        form.c0 += c;
        Self { form, domain: self.domain.clone(), constants: self.constants, saddle: OnceLock::new() }
    }
}

impl GameFunction for QuadraticGame {
    fn domain(&self) -> &GameDomain {
        &self.domain
    }

    fn value(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.domain.check(x, y)?;
        Ok(self.form.value(x, y))
    }

    fn grad_x(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.domain.check(x, y)?;
        Ok(self.form.grad_x(x, y))
    }

    fn grad_y(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.domain.check(x, y)?;
        Ok(self.form.grad_y(x, y))
    }

    fn classes(&self) -> Vec<FunctionClass> {
        let mut c = vec![FunctionClass::ConvexConcave];
        if self.constants.lambda > 0.0 {
            c.push(FunctionClass::StronglyConvexConcave { lambda: self.constants.lambda });
            c.push(FunctionClass::MinMaxEc { alpha: self.constants.alpha });
            c.push(FunctionClass::TwoSidedPl { mu1: self.form.cx, mu2: self.form.cy });
        }
        if self.form.coupling.iter().all(|v| *v == 0.0) {
            c.push(FunctionClass::Separable);
        }
        c
    }

    fn constants(&self) -> &FunctionConstants {
        &self.constants
    }

    fn best_response_x(&self, y: &Vector) -> Option<Result<Vector>> {
        (self.form.cx > 0.0).then(|| {
            check_dim(self.domain.y_dim(), y.len())?;
            self.form.best_response_x(y, &self.domain)
        })
    }

    fn best_response_y(&self, x: &Vector) -> Option<Result<Vector>> {
        (self.form.cy > 0.0).then(|| {
            check_dim(self.domain.x_dim(), x.len())?;
            self.form.best_response_y(x, &self.domain)
        })
    }

    fn saddle(&self) -> Option<Result<Saddle>> {
        if !(self.form.cx > 0.0 && self.form.cy > 0.0) {
            return None;
        }
        let tol = 1e-13 * (1.0 + self.form.c0.abs());
        let cached = self.saddle.get_or_init(|| self.form.saddle_on(&self.domain, tol).map_err(|e| e.to_string()));
        Some(cached.clone().map_err(Error::Invariant))
    }

    fn as_quadratic(&self) -> Option<&QuadraticGame> {
        Some(self)
    }
}

/// `f(x,y) = (lambda/2)|x-a|^2 - (lambda/2)|y-b|^2 + (x-a)^T B (y-b)`.
pub fn make_sc_sc_quadratic(lambda: f64, a: &Vector, b: &Vector, coupling: &DMatrix<f64>, domain: GameDomain) -> Result<QuadraticGame> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    QuadraticGame::centered(lambda, lambda, a, b, coupling, 0.0, domain)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::gradient_error;
    use super::*;
    use crate::geometry::Domain;
    use nalgebra::dmatrix;

    fn dv(x: &[f64]) -> Vector {
        DVector::from_column_slice(x)
    }

    fn unit_box(m: usize, n: usize, r: f64) -> GameDomain {
        GameDomain::new(Domain::cube(m, r).unwrap(), Domain::cube(n, r).unwrap())
    }

    #[test]
    fn symmetric_instance() {
        let f = make_sc_sc_quadratic(1.0, &dv(&[0.0]), &dv(&[0.0]), &DMatrix::zeros(1, 1), unit_box(1, 1, 1.0)).unwrap();
        assert_eq!(f.value(&dv(&[0.5]), &dv(&[0.5])).unwrap(), 0.0);
        let s = f.saddle().unwrap().unwrap();
        assert_eq!((s.point.x[0], s.point.y[0], s.value), (0.0, 0.0, 0.0));
        let op = f.operator(&DecisionPoint::new(dv(&[1.0]), dv(&[1.0]))).unwrap();
        assert_eq!(op, dv(&[1.0, 1.0]));
    }

    #[test]
    fn coupled_gradient() {
        let f = make_sc_sc_quadratic(2.0, &dv(&[0.3]), &dv(&[-0.2]), &dmatrix![0.5], unit_box(1, 1, 1.0)).unwrap();
        let g = f.grad_x(&dv(&[0.0]), &dv(&[0.0])).unwrap();
        assert!((g[0] + 0.5).abs() < 1e-15);
        assert!(gradient_error(&f, &DecisionPoint::new(dv(&[0.1]), dv(&[-0.7]))) < 1e-4);
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let r = make_sc_sc_quadratic(0.0, &dv(&[0.0]), &dv(&[0.0]), &DMatrix::zeros(1, 1), unit_box(1, 1, 1.0));
        assert!(r.is_err());
    }

    #[test]
    fn constrained_saddle_is_a_saddle() {
        // centers outside the box push the saddle to the boundary
        let f = make_sc_sc_quadratic(1.0, &dv(&[2.0, 0.1]), &dv(&[-3.0, 0.2]), &dmatrix![0.5, -0.3; 0.2, 0.4], unit_box(2, 2, 1.0))
            .unwrap();
        let s = f.saddle().unwrap().unwrap();
        let q = f.form();
        assert!(q.gap(&s.point, f.domain()).unwrap() <= 1e-12);
        assert!(f.domain().contains(&s.point, 1e-12).unwrap());
    }

    #[test]
    fn constants_are_exact_on_boxes() {
        let f = make_sc_sc_quadratic(1.0, &dv(&[0.0]), &dv(&[0.0]), &DMatrix::zeros(1, 1), unit_box(1, 1, 1.0)).unwrap();
        let c = f.constants();
        assert_eq!(c.source, ConstantsSource::Exact);
        assert!((c.l0 - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.l1, 1.0);
        assert!((c.alpha - 0.5).abs() < 1e-15);
    }

    #[test]
    fn separable_tag_only_without_coupling() {
        let d = unit_box(1, 1, 1.0);
        let f = make_sc_sc_quadratic(1.0, &dv(&[0.0]), &dv(&[0.0]), &DMatrix::zeros(1, 1), d.clone()).unwrap();
        assert!(f.classes().contains(&FunctionClass::Separable));
        let g = make_sc_sc_quadratic(1.0, &dv(&[0.0]), &dv(&[0.0]), &dmatrix![1.0], d).unwrap();
        assert!(!g.classes().contains(&FunctionClass::Separable));
    }
}
