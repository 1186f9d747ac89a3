//! Regularity matrices with a maintained inverse.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Rank-one updates between two direct re-inversions.
pub const REFRESH_EVERY: usize = 256;
/// Sherman-Morrison denominators at or below this trigger direct inversion.
pub const MIN_DENOMINATOR: f64 = 1e-14;
/// Eigenvalues below this reject a matrix as non-PSD.
pub const PSD_TOL: f64 = -1e-10;

#[derive(Clone, Debug)]
enum Repr {
    /// `c * I`, inverse implicit.
    Scalar { d: usize, c: f64 },
    Dense { a: DMatrix<f64>, a_inv: DMatrix<f64> },
}

/// Symmetric positive definite matrix `A` together with `A^{-1}`.
#[derive(Clone, Debug)]
pub struct RegularityMatrix {
    repr: Repr,
    since_refresh: usize,
}

impl RegularityMatrix {
    /// `epsilon * I`.
    pub fn init(d: usize, epsilon: f64) -> Result<Self> {
        if d == 0 || !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "regularity needs d >= 1 and epsilon > 0 (got d={d}, epsilon={epsilon})"
            )));
        }
        Ok(Self { repr: Repr::Scalar { d, c: epsilon }, since_refresh: 0 })
    }

    /// Dense matrix; must be symmetric positive definite.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidParameter("regularity matrix must be square".into()));
        }
        let a = symmetrize(&a);
        let min = min_eigenvalue(&a);
        if min < PSD_TOL {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        let a_inv = invert(&a)?;
        Ok(Self { repr: Repr::Dense { a, a_inv }, since_refresh: 0 })
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Scalar { d, .. } => *d,
            Repr::Dense { a, .. } => a.nrows(),
        }
    }

    /// `Some(c)` while the matrix is still `c * I`.
    pub fn as_scalar(&self) -> Option<f64> {
        match self.repr {
            Repr::Scalar { c, .. } => Some(c),
            Repr::Dense { .. } => None,
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Scalar { d, c } => DMatrix::identity(*d, *d) * *c,
            Repr::Dense { a, .. } => a.clone(),
        }
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Scalar { d, c } => DMatrix::identity(*d, *d) / *c,
            Repr::Dense { a_inv, .. } => a_inv.clone(),
        }
    }

    /// `A^{-1} v`.
    pub fn solve(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), v.len())?;
        Ok(match &self.repr {
            Repr::Scalar { c, .. } => v / *c,
            Repr::Dense { a_inv, .. } => a_inv * v,
        })
    }

    /// `v^T A^{-1} v`.
    pub fn inv_quad(&self, v: &DVector<f64>) -> Result<f64> {
        Ok(v.dot(&self.solve(v)?))
    }

    /// `v^T A v`.
    pub fn quad(&self, v: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        Ok(match &self.repr {
            Repr::Scalar { c, .. } => c * v.norm_squared(),
            Repr::Dense { a, .. } => v.dot(&(a * v)),
        })
    }

    /// Replace with `c * I` (OGDA's `A_t = tI`).
    pub fn scalar_update(&mut self, c: f64) -> Result<()> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("scalar regularity needs c > 0, got {c}")));
        }
        self.repr = Repr::Scalar { d: self.dim(), c };
        self.since_refresh = 0;
        Ok(())
    }

    /// `A += v v^T` with a Sherman-Morrison inverse update.
    pub fn rank_one_update(&mut self, v: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), v.len())?;
        self.densify();
        let Repr::Dense { a, a_inv } = &mut self.repr else { unreachable!() };
        a.ger(1.0, v, v, 1.0);
        let w = &*a_inv * v;
        let denom = 1.0 + v.dot(&w);
        self.since_refresh += 1;
        if denom <= MIN_DENOMINATOR || self.since_refresh >= REFRESH_EVERY {
            return self.refresh();
        }
        a_inv.ger(-1.0 / denom, &w, &w, 1.0);
        Ok(())
    }

    /// `A += M_s(F)`, applied as one rank-one update per split block.
    pub fn add_block_split(&mut self, f: &DVector<f64>, split: &Split) -> Result<()> {
        check_dim(split.total(), f.len())?;
        let mut off = 0;
        for &n in split.sizes() {
            let mut v = DVector::zeros(f.len());
            v.rows_mut(off, n).copy_from(&f.rows(off, n));
            if v.iter().any(|x| *x != 0.0) {
                self.rank_one_update(&v)?;
            }
            off += n;
        }
        Ok(())
    }

    /// `A += M` for a general PSD `M`, followed by direct re-inversion.
    pub fn add_psd(&mut self, m: &DMatrix<f64>) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: m.nrows() });
        }
        let min = min_eigenvalue(m);
        if min < PSD_TOL {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        if m.iter().all(|x| *x == 0.0) {
            return Ok(());
        }
        self.densify();
        let Repr::Dense { a, .. } = &mut self.repr else { unreachable!() };
        *a += m;
        *a = symmetrize(a);
        self.refresh()
    }

    /// Recompute the inverse directly from `A`.
    pub fn refresh(&mut self) -> Result<()> {
        self.since_refresh = 0;
        if let Repr::Dense { a, a_inv } = &mut self.repr {
            *a_inv = invert(a)?;
        }
        Ok(())
    }

    /// `max |A A^{-1} - I|`.
    pub fn inverse_residual(&self) -> f64 {
        match &self.repr {
            Repr::Scalar { .. } => 0.0,
            Repr::Dense { a, a_inv } => {
                let d = a.nrows();
                (a * a_inv - DMatrix::<f64>::identity(d, d)).amax()
            }
        }
    }

    fn densify(&mut self) {
        if let Repr::Scalar { d, c } = self.repr {
            self.repr = Repr::Dense {
                a: DMatrix::identity(d, d) * c,
                a_inv: DMatrix::identity(d, d) / c,
            };
        }
    }
}

/// Partition `(s_1, ..., s_m)` of the coordinates into consecutive blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split(Vec<usize>);

impl Split {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidParameter("split sizes must be positive".into()));
        }
        Ok(Self(sizes))
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Block-diagonal matrix whose i-th block is `F_i F_i^T`.
pub fn block_split_matrix(f: &DVector<f64>, split: &Split) -> Result<DMatrix<f64>> {
    check_dim(split.total(), f.len())?;
    let d = f.len();
    let mut m = DMatrix::zeros(d, d);
    let mut off = 0;
    for &n in split.sizes() {
        let b = f.rows(off, n);
        m.view_mut((off, off), (n, n)).copy_from(&(b * b.transpose()));
        off += n;
    }
    Ok(m)
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    symmetrize(a).symmetric_eigenvalues().min()
}

pub fn max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    symmetrize(a).symmetric_eigenvalues().max()
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}

fn invert(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(symmetrize(&ch.inverse()));
    }
    a.clone().try_inverse().map(|m| symmetrize(&m)).ok_or(Error::Singular)
}
