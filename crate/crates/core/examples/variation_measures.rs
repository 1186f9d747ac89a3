//! Path-length and drift measures of a payoff sequence, plus the regret
//! against the cumulative saddle point over the worst interval.

use ommo::functions::{sc_sc_sequence, FunctionSequence, ScScParams, Schedule};
use ommo::learners::{play_rounds, Learner};
use ommo::metrics::{cumulative_saddle, sasp_regret, variation_report, SADDLE_TOL};

fn main() -> ommo::Result<()> {
    for (schedule, segments) in [(Schedule::Stationary, 1), (Schedule::Piecewise, 4), (Schedule::Iid, 1)] {
        let params = ScScParams { lambda: 1.0, dim_x: 1, dim_y: 1, radius: 1.0, spread: 0.5, coupling: 0.0, schedule, segments };
        let mut seq = sc_sc_sequence(&params, 256, 4)?;
        let mut learner = Learner::ogda(seq.domain().clone(), 1.0)?;
        let rounds = play_rounds(&mut seq, &mut learner)?;
        let saddle = cumulative_saddle(&rounds.functions, SADDLE_TOL)?;
        let v = variation_report(&rounds.functions, &rounds.plays, Some(&saddle.point), 2000, 4, false)?;
        let s = sasp_regret(&rounds.functions, &rounds.plays, &saddle.point)?;
        println!(
            "{schedule:?}: U_T = {:.3}, V_T = {:.3}, V_T' = {:.3}, C_T = {:.3}, Delta_T = {:.3}, SASP = {:.3} on {:?}",
            v.u_t,
            v.v_t.unwrap_or(f64::NAN),
            v.v_t_prime,
            v.c_t,
            v.delta_t,
            s.value,
            s.interval
        );
    }
    Ok(())
}
