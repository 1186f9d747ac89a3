use nalgebra::DVector;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::Rng;

/// Vertex enumeration is skipped past this many vertices.
pub const MAX_VERTICES: usize = 4096;

/// A compact convex constraint set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Simplex { dim: usize, scale: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Product { factors: Vec<Domain> },
}

impl Domain {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let d = Domain::Box { lower, upper };
        d.validate()?;
        Ok(d)
    }

    /// `[-r, r]^dim`.
    pub fn cube(dim: usize, r: f64) -> Result<Self> {
        Self::new_box(vec![-r; dim], vec![r; dim])
    }

    pub fn simplex(dim: usize, scale: f64) -> Result<Self> {
        let d = Domain::Simplex { dim, scale };
        d.validate()?;
        Ok(d)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let d = Domain::Ball { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn product(factors: Vec<Domain>) -> Result<Self> {
        let d = Domain::Product { factors };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Box { lower, upper } => {
                check_dim(lower.len(), upper.len())?;
                if lower.is_empty() {
                    return Err(Error::InvalidParameter("empty box".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
                    return Err(Error::InvalidParameter("box needs finite lower < upper".into()));
                }
            }
            Domain::Simplex { dim, scale } => {
                if *dim == 0 || !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::InvalidParameter("simplex needs dim >= 1 and scale > 0".into()));
                }
            }
            Domain::Ball { center, radius } => {
                if center.is_empty() || !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidParameter("ball needs dim >= 1 and radius > 0".into()));
                }
            }
            Domain::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidParameter("empty product".into()));
                }
                for f in factors {
                    f.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Simplex { dim, .. } => *dim,
            Domain::Ball { center, .. } => center.len(),
            Domain::Product { factors } => factors.iter().map(Domain::dim).sum(),
        }
    }

    /// Factor dimensions of a product, or the whole dimension otherwise.
    pub fn factor_dims(&self) -> Vec<usize> {
        match self {
            Domain::Product { factors } => factors.iter().map(Domain::dim).collect(),
            other => vec![other.dim()],
        }
    }

    pub fn contains(&self, z: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim(), z.len())?;
        Ok(match self {
            Domain::Box { lower, upper } => z
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            Domain::Simplex { scale, .. } => {
                z.iter().all(|v| *v >= -tol) && (z.sum() - scale).abs() <= tol
            }
            Domain::Ball { center, radius } => {
                let c = DVector::from_column_slice(center);
                (z - c).norm() <= radius + tol
            }
            Domain::Product { factors } => {
                let mut off = 0;
                for f in factors {
                    let n = f.dim();
                    if !f.contains(&z.rows(off, n).into_owned(), tol)? {
                        return Ok(false);
                    }
                    off += n;
                }
                true
            }
        })
    }

    /// Upper bound on the Euclidean distance between two member points.
    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) * (u - l))
                .sum::<f64>()
                .sqrt(),
            Domain::Simplex { dim, scale } => {
                if *dim == 1 {
                    *scale
                } else {
                    scale * std::f64::consts::SQRT_2
                }
            }
            Domain::Ball { radius, .. } => 2.0 * radius,
            Domain::Product { factors } => factors.iter().map(Domain::diameter).sum(),
        }
    }

    /// Box midpoint, simplex barycenter, ball center.
    pub fn center(&self) -> DVector<f64> {
        match self {
            Domain::Box { lower, upper } => {
                DVector::from_iterator(lower.len(), lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)))
            }
            Domain::Simplex { dim, scale } => DVector::from_element(*dim, scale / *dim as f64),
            Domain::Ball { center, .. } => DVector::from_column_slice(center),
            Domain::Product { factors } => concat(factors.iter().map(Domain::center)),
        }
    }

    /// Euclidean projection.
    pub fn project_euclidean(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), u.len())?;
        Ok(match self {
            Domain::Box { lower, upper } => DVector::from_iterator(
                u.len(),
                u.iter().zip(lower.iter().zip(upper)).map(|(v, (l, h))| v.clamp(*l, *h)),
            ),
            Domain::Simplex { scale, .. } => project_simplex(u, *scale),
            Domain::Ball { center, radius } => {
                let c = DVector::from_column_slice(center);
                let r = u - &c;
                let n = r.norm();
                if n <= *radius {
                    u.clone()
                } else {
                    c + r * (radius / n)
                }
            }
            Domain::Product { factors } => {
                let mut out = Vec::with_capacity(factors.len());
                let mut off = 0;
                for f in factors {
                    let n = f.dim();
                    out.push(f.project_euclidean(&u.rows(off, n).into_owned())?);
                    off += n;
                }
                concat(out)
            }
        })
    }

    /// Extreme points of polytopes; `None` for balls or when there are more than [`MAX_VERTICES`].
    pub fn vertices(&self) -> Option<Vec<DVector<f64>>> {
        match self {
            Domain::Box { lower, upper } => {
                let d = lower.len();
                if d >= 63 || (1usize << d) > MAX_VERTICES {
                    return None;
                }
                Some(
                    (0..1usize << d)
                        .map(|mask| {
                            DVector::from_iterator(
                                d,
                                (0..d).map(|i| if mask >> i & 1 == 1 { upper[i] } else { lower[i] }),
                            )
                        })
                        .collect(),
                )
            }
            Domain::Simplex { dim, scale } => Some(
                (0..*dim)
                    .map(|i| {
                        let mut v = DVector::zeros(*dim);
                        v[i] = *scale;
                        v
                    })
                    .collect(),
            ),
            Domain::Ball { .. } => None,
            Domain::Product { factors } => {
                let lists = factors.iter().map(Domain::vertices).collect::<Option<Vec<_>>>()?;
                let count = lists.iter().try_fold(1usize, |acc, l| acc.checked_mul(l.len()))?;
                if count > MAX_VERTICES {
                    return None;
                }
                Some(cartesian(&lists))
            }
        }
    }

    /// Random member point (uniform for boxes and balls, flat Dirichlet on simplices).
    pub fn sample(&self, rng: &mut Rng) -> DVector<f64> {
        match self {
            Domain::Box { lower, upper } => DVector::from_iterator(
                lower.len(),
                lower.iter().zip(upper).map(|(l, u)| rng.random_range(*l..=*u)),
            ),
            Domain::Simplex { dim, scale } => {
                let e: Vec<f64> = (0..*dim).map(|_| Exp1.sample(rng)).collect();
                let s: f64 = e.iter().sum();
                DVector::from_iterator(*dim, e.into_iter().map(|v| scale * v / s))
            }
            Domain::Ball { center, radius } => {
                let d = center.len();
                let g = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
                let n: f64 = g.norm();
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                DVector::from_column_slice(center) + g * (r / n.max(f64::MIN_POSITIVE))
            }
            Domain::Product { factors } => concat(factors.iter().map(|f| f.sample(rng))),
        }
    }

    /// Regular grid with `k` points per axis intersected with the set.
    ///
    /// Simplices use the lattice of compositions with step `scale/(k-1)`.
    pub fn grid(&self, k: usize) -> Vec<DVector<f64>> {
        assert!(k >= 2, "grid needs at least two points per axis");
        match self {
            Domain::Box { lower, upper } => {
                let axes: Vec<Vec<DVector<f64>>> = lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| {
                        (0..k)
                            .map(|i| DVector::from_element(1, l + (u - l) * i as f64 / (k - 1) as f64))
                            .collect()
                    })
                    .collect();
                cartesian(&axes)
            }
            Domain::Simplex { dim, scale } => {
                let steps = k - 1;
                let mut out = Vec::new();
                let mut cur = vec![0usize; *dim];
                compositions(steps, 0, &mut cur, &mut |c| {
                    out.push(DVector::from_iterator(
                        c.len(),
                        c.iter().map(|&n| scale * n as f64 / steps as f64),
                    ))
                });
                out
            }
            Domain::Ball { center, radius } => {
                let cube = Domain::Box {
                    lower: center.iter().map(|c| c - radius).collect(),
                    upper: center.iter().map(|c| c + radius).collect(),
                };
                let c = DVector::from_column_slice(center);
                cube.grid(k)
                    .into_iter()
                    .filter(|p| (p - &c).norm() <= *radius + 1e-12)
                    .collect()
            }
            Domain::Product { factors } => {
                let lists: Vec<_> = factors.iter().map(|f| f.grid(k)).collect();
                cartesian(&lists)
            }
        }
    }
}

fn compositions(remaining: usize, idx: usize, cur: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    if idx + 1 == cur.len() {
        cur[idx] = remaining;
        emit(cur);
        return;
    }
    for n in 0..=remaining {
        cur[idx] = n;
        compositions(remaining - n, idx + 1, cur, emit);
    }
}

pub(crate) fn concat<I: IntoIterator<Item = DVector<f64>>>(parts: I) -> DVector<f64> {
    let mut v = Vec::new();
    for p in parts {
        v.extend(p.iter().copied());
    }
    DVector::from_vec(v)
}

fn cartesian(lists: &[Vec<DVector<f64>>]) -> Vec<DVector<f64>> {
    let mut acc: Vec<DVector<f64>> = vec![DVector::zeros(0)];
    for list in lists {
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for a in &acc {
            for b in list {
                next.push(concat([a.clone(), b.clone()]));
            }
        }
        acc = next;
    }
    acc
}

/// Euclidean projection onto `{z >= 0, sum z = scale}` by sorting.
pub(crate) fn project_simplex(u: &DVector<f64>, scale: f64) -> DVector<f64> {
    let mut s: Vec<f64> = u.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, v) in s.iter().enumerate() {
        cum += v;
        let t = (cum - scale) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    u.map(|v| (v - theta).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn contains_examples() {
        let b = Domain::cube(2, 1.0).unwrap();
        assert!(b.contains(&v(&[0.0, 0.0]), 0.0).unwrap());
        let s = Domain::simplex(2, 1.0).unwrap();
        assert!(s.contains(&v(&[0.6, 0.4]), 0.0).unwrap());
        let ball = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        assert!(!ball.contains(&v(&[1.1, 0.0]), 0.05).unwrap());
        assert!(b.contains(&v(&[0.0]), 0.0).is_err());
    }

    #[test]
    fn diameters() {
        assert!((Domain::cube(2, 1.0).unwrap().diameter() - 8f64.sqrt()).abs() < 1e-15);
        assert_eq!(Domain::ball(vec![0.0; 3], 2.0).unwrap().diameter(), 4.0);
        let p = Domain::product(vec![Domain::cube(1, 1.0).unwrap(), Domain::simplex(2, 1.0).unwrap()]).unwrap();
        assert!((p.diameter() - (2.0 + 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(p.dim(), 3);
    }

    #[test]
    fn simplex_projection_sums_to_scale() {
        let p = project_simplex(&v(&[3.0, -1.0, 0.5]), 2.0);
        assert!((p.sum() - 2.0).abs() < 1e-12);
        assert!(p.iter().all(|x| *x >= 0.0));
        let q = project_simplex(&v(&[0.2, 0.3]), 1.0);
        assert!((q - v(&[0.45, 0.55])).norm() < 1e-12);
    }

    #[test]
    fn samples_are_members() {
        let mut rng = stream(3, 0);
        let d = Domain::product(vec![
            Domain::simplex(3, 2.0).unwrap(),
            Domain::ball(vec![1.0, 1.0], 0.5).unwrap(),
            Domain::cube(2, 1.0).unwrap(),
        ])
        .unwrap();
        for _ in 0..200 {
            let z = d.sample(&mut rng);
            assert!(d.contains(&z, 1e-12).unwrap());
        }
    }

    #[test]
    fn grid_and_vertices() {
        let s = Domain::simplex(2, 1.0).unwrap();
        assert_eq!(s.grid(21).len(), 21);
        assert_eq!(Domain::simplex(3, 1.0).unwrap().grid(5).len(), 15);
        let p = Domain::product(vec![s.clone(), Domain::cube(2, 1.0).unwrap()]).unwrap();
        assert_eq!(p.grid(3).len(), 3 * 9);
        assert_eq!(p.vertices().unwrap().len(), 2 * 4);
        assert!(Domain::ball(vec![0.0], 1.0).unwrap().vertices().is_none());
    }
}
