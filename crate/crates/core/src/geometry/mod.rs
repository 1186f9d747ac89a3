//! Constraint sets and the weighted-norm projection used by every LRA-family update.

mod domain;
mod minimize;
mod projection;

pub use domain::{Domain, MAX_VERTICES};
pub(crate) use domain::concat as concat_vectors;
pub use minimize::{minimize_convex, Minimum};
pub use projection::{project_weighted, project_weighted_matrix, PROJECTION_MAX_ITER, PROJECTION_TOL};
