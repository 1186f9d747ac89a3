//! Projections in the norm induced by a positive definite matrix, onto a
//! box, a simplex and a ball, checked against a grid-search oracle.

use nalgebra::{dmatrix, dvector};
use ommo::geometry::{project_weighted_matrix, Domain};
use ommo::harness::grid_search_projection;

fn main() -> ommo::Result<()> {
    let a = dmatrix![4.0, 1.0, 0.0; 1.0, 2.0, 0.5; 0.0, 0.5, 1.0];
    let u = dvector![1.2, -0.7, 0.9];
    for dom in [Domain::cube(3, 0.5)?, Domain::simplex(3, 1.0)?, Domain::ball(vec![0.0; 3], 1.0)?] {
        let p = project_weighted_matrix(&u, &a, &dom)?;
        let oracle = grid_search_projection(&u, &a, &dom)?;
        println!("{:?}\n  projection {:.5?}\n  distance to oracle {:.2e}", dom, p.as_slice(), (&p - oracle).norm());
    }
    Ok(())
}
