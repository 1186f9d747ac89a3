//! The online VI learner on a low-rank monotone operator: regret on the
//! variational-inequality objective against every point of a grid.

use ommo::functions::{sc_sc_sequence, FunctionSequence, ScScParams, Schedule};
use ommo::learners::{play_rounds, Learner};
use ommo::linalg::Split;
use ommo::metrics::vi_regret;

fn main() -> ommo::Result<()> {
    let params = ScScParams {
        lambda: 1.0,
        dim_x: 1,
        dim_y: 1,
        radius: 1.0,
        spread: 0.5,
        coupling: 0.3,
        schedule: Schedule::Iid,
        segments: 1,
    };
    let horizon = 1024;
    let mut seq = sc_sc_sequence(&params, horizon, 5)?;
    let c = seq.constants().expect("quadratic constants are exact");
    let split = Split::new(vec![1, 1])?;
    let mut learner = Learner::online_vi(seq.domain().clone(), split, c.ec_gamma(), None)?;
    let rounds = play_rounds(&mut seq, &mut learner)?;
    let grid = seq.domain().joint().grid(21);
    let (regret, worst) = vi_regret(&rounds.functions, &rounds.plays, &grid)?;
    let d = seq.domain().dim() as f64;
    let bound = (1.0 / c.alpha + c.l0 * c.diameter) * (d * (horizon as f64).ln() + 1.0);
    println!("max over {} grid points of sum <F_t(z_t), z_t - z> = {regret:.4} at z = {:?}", grid.len(), worst.as_slice());
    println!("bound = {bound:.2}");
    Ok(())
}
