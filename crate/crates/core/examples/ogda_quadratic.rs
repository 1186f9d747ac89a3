//! OGDA on a stream of i.i.d. strongly convex-strongly concave quadratics,
//! compared against its logarithmic saddle-point regret bound.

use ommo::functions::{sc_sc_sequence, FunctionSequence, ScScParams, Schedule};
use ommo::learners::{play_rounds, Learner};
use ommo::metrics::{cumulative_saddle, regret_report, SADDLE_TOL};

fn main() -> ommo::Result<()> {
    let params = ScScParams {
        lambda: 1.0,
        dim_x: 2,
        dim_y: 2,
        radius: 1.0,
        spread: 0.5,
        coupling: 0.3,
        schedule: Schedule::Iid,
        segments: 1,
    };
    for horizon in [64, 256, 1024, 4096] {
        let mut seq = sc_sc_sequence(&params, horizon, 7)?;
        let c = seq.constants().expect("quadratic constants are exact");
        let mut learner = Learner::ogda(seq.domain().clone(), c.lambda)?;
        let rounds = play_rounds(&mut seq, &mut learner)?;
        let saddle = cumulative_saddle(&rounds.functions, SADDLE_TOL)?;
        let ledger = regret_report(&rounds.functions, &rounds.plays, &saddle, false)?;
        let bound = c.l0 * c.l0 / c.lambda * (horizon as f64).ln();
        println!(
            "T = {horizon:5}  SDual-Gap = {:8.4}  bound = {bound:8.3}  DSP-Reg = {:9.3}",
            ledger.totals.sdual_gap, ledger.totals.dsp_reg
        );
    }
    Ok(())
}
