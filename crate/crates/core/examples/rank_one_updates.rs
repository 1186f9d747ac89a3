//! Regularity matrices with a maintained inverse: rank-one and block-split
//! updates, checked against a fresh inversion.

use nalgebra::dvector;
use ommo::linalg::{RegularityMatrix, Split};

fn main() -> ommo::Result<()> {
    let mut a = RegularityMatrix::init(3, 0.5)?;
    let grads = [dvector![1.0, 0.0, -1.0], dvector![0.2, 0.4, 0.1], dvector![-0.3, 1.0, 0.5]];
    for g in &grads {
        a.rank_one_update(g)?;
    }
    let direct = a.matrix().try_inverse().expect("positive definite");
    println!("after {} rank-one updates: max |inverse - direct| = {:.2e}", grads.len(), (a.inverse() - direct).amax());
    println!("inverse residual ||A A^-1 - I|| = {:.2e}", a.inverse_residual());

    let split = Split::new(vec![2, 1])?;
    a.add_block_split(&dvector![1.0, -1.0, 2.0], &split)?;
    println!("after a block-split update: A =\n{:.3}", a.matrix());
    println!("F^T A^-1 F for F = (1, 1, 1): {:.4}", a.inv_quad(&dvector![1.0, 1.0, 1.0])?);
    Ok(())
}
