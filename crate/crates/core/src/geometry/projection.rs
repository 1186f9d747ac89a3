use nalgebra::{DMatrix, DVector};

use super::domain::Domain;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{max_eigenvalue, min_eigenvalue, RegularityMatrix, PSD_TOL};

/// Stop threshold on the projected-gradient residual of the general solver.
pub const PROJECTION_TOL: f64 = 1e-10;
pub const PROJECTION_MAX_ITER: usize = 10_000;
const POLISH_EVERY: usize = 20;

/// `argmin_{z in domain} (u - z)^T A (u - z)` for the matrix held by `a`.
pub fn project_weighted(u: &DVector<f64>, a: &RegularityMatrix, domain: &Domain) -> Result<DVector<f64>> {
    check_dim(domain.dim(), u.len())?;
    check_dim(domain.dim(), a.dim())?;
    if a.as_scalar().is_some() {
        return domain.project_euclidean(u);
    }
    project_weighted_matrix(u, &a.matrix(), domain)
}

/// Same as [`project_weighted`] for an explicit PSD matrix.
pub fn project_weighted_matrix(u: &DVector<f64>, a: &DMatrix<f64>, domain: &Domain) -> Result<DVector<f64>> {
    check_dim(domain.dim(), u.len())?;
    if a.nrows() != u.len() || a.ncols() != u.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: a.nrows() });
    }
    let min = min_eigenvalue(a);
    if min < PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    project_inner(u, a, domain)
}

fn project_inner(u: &DVector<f64>, a: &DMatrix<f64>, domain: &Domain) -> Result<DVector<f64>> {
    let diag = is_diagonal(a);
    match domain {
        Domain::Box { .. } if diag => domain.project_euclidean(u),
        Domain::Simplex { scale, .. } if diag && a.diagonal().iter().all(|x| *x > 0.0) => {
            Ok(weighted_simplex(u, &a.diagonal(), *scale))
        }
        Domain::Ball { .. } if diag && is_scaled_identity(a) => domain.project_euclidean(u),
        Domain::Product { factors } if is_block_diagonal(a, &domain.factor_dims()) => {
            let mut out = Vec::with_capacity(u.len());
            let mut off = 0;
            for f in factors {
                let n = f.dim();
                let block = a.view((off, off), (n, n)).into_owned();
                let p = project_inner(&u.rows(off, n).into_owned(), &block, f)?;
                out.extend(p.iter().copied());
                off += n;
            }
            Ok(DVector::from_vec(out))
        }
        _ => project_general(u, a, domain),
    }
}

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0))
}

fn is_scaled_identity(a: &DMatrix<f64>) -> bool {
    let c = a[(0, 0)];
    c > 0.0 && a.diagonal().iter().all(|x| (x - c).abs() <= 1e-15 * c)
}

fn is_block_diagonal(a: &DMatrix<f64>, dims: &[usize]) -> bool {
    let mut block = Vec::with_capacity(a.nrows());
    for (b, &n) in dims.iter().enumerate() {
        block.extend(std::iter::repeat_n(b, n));
    }
    let n = a.nrows();
    (0..n).all(|i| (0..n).all(|j| block[i] == block[j] || a[(i, j)] == 0.0))
}

/// Diagonal-weight simplex projection via the sorted KKT threshold.
fn weighted_simplex(u: &DVector<f64>, w: &DVector<f64>, scale: f64) -> DVector<f64> {
    let n = u.len();
    let mut order: Vec<usize> = (0..n).collect();
    let bp: Vec<f64> = (0..n).map(|i| w[i] * u[i]).collect();
    order.sort_by(|&i, &j| bp[j].total_cmp(&bp[i]).then(i.cmp(&j)));
    let (mut su, mut sinv) = (0.0, 0.0);
    let mut theta = 0.0;
    for &i in &order {
        su += u[i];
        sinv += 1.0 / w[i];
        let t = (su - scale) / sinv;
        if t < bp[i] {
            theta = t;
        }
    }
    DVector::from_iterator(n, (0..n).map(|i| (u[i] - theta / w[i]).max(0.0)))
}

fn objective(z: &DVector<f64>, u: &DVector<f64>, a: &DMatrix<f64>) -> f64 {
    let d = z - u;
    d.dot(&(a * &d))
}

/// Distance moved by one projected-gradient step of length `1/l`.
fn residual(z: &DVector<f64>, u: &DVector<f64>, a: &DMatrix<f64>, l: f64, domain: &Domain) -> Result<f64> {
    let g = a * (z - u) * 2.0;
    Ok((z - domain.project_euclidean(&(z - g / l))?).norm())
}

/// Accelerated projected gradient with adaptive restart, polished by an
/// exact equality-constrained solve on the detected active set.
fn project_general(u: &DVector<f64>, a: &DMatrix<f64>, domain: &Domain) -> Result<DVector<f64>> {
    let lmax = max_eigenvalue(a);
    let mut z = domain.project_euclidean(u)?;
    if lmax <= f64::MIN_POSITIVE {
        return Ok(z);
    }
    let l = 2.0 * lmax;
    let mut y = z.clone();
    let mut t = 1.0f64;
    let mut res = f64::INFINITY;
    for k in 1..=PROJECTION_MAX_ITER {
        let g = a * (&y - u) * 2.0;
        let z_next = domain.project_euclidean(&(&y - g / l))?;
        if (&y - &z_next).dot(&(&z_next - &z)) > 0.0 {
            t = 1.0;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &z_next + (&z_next - &z) * ((t - 1.0) / t_next);
        z = z_next;
        t = t_next;
        res = residual(&z, u, a, l, domain)?;
        if res <= PROJECTION_TOL {
            return Ok(polish(&z, u, a, domain, l).unwrap_or(z));
        }
        if k % POLISH_EVERY == 0 {
            if let Some(p) = polish(&z, u, a, domain, l) {
                return Ok(p);
            }
        }
    }
    Err(Error::NonConvergence { what: "weighted projection", iterations: PROJECTION_MAX_ITER, residual: res })
}

/// Per-coordinate bounds plus equality groups of a polyhedral domain.
struct Polyhedron {
    lo: Vec<f64>,
    hi: Vec<f64>,
    groups: Vec<(Vec<usize>, f64)>,
}

fn polyhedron(domain: &Domain) -> Option<Polyhedron> {
    let mut p = Polyhedron { lo: vec![], hi: vec![], groups: vec![] };
    fn walk(d: &Domain, p: &mut Polyhedron) -> bool {
        match d {
            Domain::Box { lower, upper } => {
                p.lo.extend(lower);
                p.hi.extend(upper);
                true
            }
            Domain::Simplex { dim, scale } => {
                let start = p.lo.len();
                p.lo.extend(std::iter::repeat_n(0.0, *dim));
                p.hi.extend(std::iter::repeat_n(f64::INFINITY, *dim));
                p.groups.push(((start..start + dim).collect(), *scale));
                true
            }
            Domain::Ball { .. } => false,
            Domain::Product { factors } => factors.iter().all(|f| walk(f, p)),
        }
    }
    walk(domain, &mut p).then_some(p)
}

fn polish(z: &DVector<f64>, u: &DVector<f64>, a: &DMatrix<f64>, domain: &Domain, l: f64) -> Option<DVector<f64>> {
    let poly = polyhedron(domain)?;
    let n = z.len();
    let mut fixed = vec![None; n];
    for i in 0..n {
        let (lo, hi) = (poly.lo[i], poly.hi[i]);
        if lo.is_finite() && z[i] <= lo + 1e-9 * (1.0 + lo.abs()) {
            fixed[i] = Some(lo);
        } else if hi.is_finite() && z[i] >= hi - 1e-9 * (1.0 + hi.abs()) {
            fixed[i] = Some(hi);
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut cand = z.clone();
    for i in 0..n {
        if let Some(v) = fixed[i] {
            cand[i] = v;
        }
    }
    if !free.is_empty() {
        let mut pos = vec![usize::MAX; n];
        for (k, &i) in free.iter().enumerate() {
            pos[i] = k;
        }
        let mut rows: Vec<(Vec<usize>, f64)> = Vec::new();
        for (idx, scale) in &poly.groups {
            let f: Vec<usize> = idx.iter().copied().filter(|&i| pos[i] != usize::MAX).collect();
            if f.is_empty() {
                continue;
            }
            let fixed_sum: f64 = idx.iter().filter_map(|&i| fixed[i]).sum();
            rows.push((f, scale - fixed_sum));
        }
        let (nf, nc) = (free.len(), rows.len());
        let mut kkt = DMatrix::zeros(nf + nc, nf + nc);
        let mut rhs = DVector::zeros(nf + nc);
        let shift = &cand - u;
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                kkt[(r, c)] = a[(i, j)];
            }
            let pinned: f64 = (0..n).filter(|&j| pos[j] == usize::MAX).map(|j| a[(i, j)] * shift[j]).sum();
            rhs[r] = free.iter().map(|&j| a[(i, j)] * u[j]).sum::<f64>() - pinned;
        }
        for (k, (idx, r)) in rows.iter().enumerate() {
            for &i in idx {
                kkt[(nf + k, pos[i])] = 1.0;
                kkt[(pos[i], nf + k)] = 1.0;
            }
            rhs[nf + k] = *r;
        }
        let sol = kkt.lu().solve(&rhs)?;
        for (k, &i) in free.iter().enumerate() {
            cand[i] = sol[k];
        }
    }
    if !domain.contains(&cand, 1e-12).ok()? {
        return None;
    }
    let cand = domain.project_euclidean(&cand).ok()?;
    let ok = residual(&cand, u, a, l, domain).ok()? <= PROJECTION_TOL
        && objective(&cand, u, a) <= objective(z, u, a) + 1e-12 * (1.0 + objective(z, u, a).abs());
    ok.then_some(cand)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn interior_point_is_fixed() {
        let b = Domain::cube(2, 1.0).unwrap();
        let p = project_weighted_matrix(&dv(&[0.2, -0.3]), &DMatrix::identity(2, 2), &b).unwrap();
        assert_eq!(p, dv(&[0.2, -0.3]));
    }

    #[test]
    fn diagonal_box_clamps() {
        let b = Domain::cube(2, 1.0).unwrap();
        let p = project_weighted_matrix(&dv(&[2.0, 0.0]), &dmatrix![3.0, 0.0; 0.0, 1.0], &b).unwrap();
        assert_eq!(p, dv(&[1.0, 0.0]));
    }

    #[test]
    fn diagonal_simplex_kkt() {
        let s = Domain::simplex(2, 1.0).unwrap();
        let p = project_weighted_matrix(&dv(&[0.8, 0.8]), &dmatrix![2.0, 0.0; 0.0, 1.0], &s).unwrap();
        assert!((p - dv(&[0.6, 0.4])).norm() < 1e-14);
    }

    #[test]
    fn general_solver_matches_diagonal_closed_form() {
        let s = Domain::simplex(3, 1.0).unwrap();
        let u = dv(&[0.9, -0.2, 0.7]);
        let a = dmatrix![2.0, 0.0, 0.0; 0.0, 1.0, 0.0; 0.0, 0.0, 3.0];
        let closed = weighted_simplex(&u, &a.diagonal(), 1.0);
        let general = project_general(&u, &a, &s).unwrap();
        assert!((closed - general).norm() < 1e-9);
    }

    #[test]
    fn dense_weight_on_box_product() {
        let d = Domain::product(vec![Domain::cube(1, 1.0).unwrap(), Domain::cube(1, 1.0).unwrap()]).unwrap();
        let a = dmatrix![2.0, 1.0; 1.0, 2.0];
        let p = project_weighted_matrix(&dv(&[2.0, 2.0]), &a, &d).unwrap();
        assert!((p - dv(&[1.0, 1.0])).norm() < 1e-12);
        let p = project_weighted_matrix(&dv(&[3.0, -0.5]), &a, &d).unwrap();
        // x pinned at 1; y minimizes 2(y+0.5)^2 + 2(1-3)(y+0.5) => y = 0.5
        assert!((p - dv(&[1.0, 0.5])).norm() < 1e-10);
    }

    #[test]
    fn rejects_indefinite() {
        let b = Domain::cube(2, 1.0).unwrap();
        let r = project_weighted_matrix(&dv(&[0.0, 0.0]), &dmatrix![1.0, 0.0; 0.0, -0.1], &b);
        assert!(matches!(r, Err(Error::NotPsd { .. })));
    }
}
