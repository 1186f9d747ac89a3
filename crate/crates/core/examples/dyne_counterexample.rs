//! The adaptive adversary that keeps per-round regret small while the
//! average play stays away from the cumulative saddle point.

use ommo::functions::{make_dyne_sequence, DecisionPoint, FunctionSequence};
use ommo::learners::{play_rounds, Learner};
use ommo::metrics::{average_iterate_distance, cumulative_saddle, regret_report, SADDLE_TOL};
use nalgebra::dvector;

fn main() -> ommo::Result<()> {
    let mut seq = make_dyne_sequence(1000, 2.0)?;
    let point = DecisionPoint::new(dvector![0.5], dvector![0.5]);
    let mut player = Learner::constant(seq.domain().clone(), point)?;
    let rounds = play_rounds(&mut seq, &mut player)?;
    let saddle = cumulative_saddle(&rounds.functions, SADDLE_TOL)?;
    let ledger = regret_report(&rounds.functions, &rounds.plays, &saddle, false)?;
    let dist = average_iterate_distance(&rounds.plays, &saddle.point)?.sqrt();
    println!("DNE-Reg = {:.3}", ledger.totals.dne_reg);
    println!("||mean play - z'|| = {dist:.4} with z' = ({:.3}, {:.3})", saddle.point.x[0], saddle.point.y[0]);
    for row in ledger.rows.iter().take(4) {
        println!("  t = {}: f_t(z_t) = {:+.1}, round value = {:+.1}", row.t, row.value, row.round_value);
    }
    Ok(())
}
