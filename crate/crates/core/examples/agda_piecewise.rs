//! Online AGDA on a piecewise-stationary sequence: each round runs enough
//! inner alternating steps to shrink the duality gap by four.

use ommo::functions::{sc_sc_sequence, FunctionSequence, ScScParams, Schedule};
use ommo::learners::{play_rounds, AgdaConfig, Learner, DEFAULT_K_CAP};
use ommo::metrics::{cumulative_saddle, dynamic_gap, regret_report, variation_report, SADDLE_TOL, VARIATION_SAMPLES};

fn main() -> ommo::Result<()> {
    let params = ScScParams {
        lambda: 1.0,
        dim_x: 2,
        dim_y: 2,
        radius: 1.0,
        spread: 0.5,
        coupling: 0.3,
        schedule: Schedule::Piecewise,
        segments: 5,
    };
    let mut seq = sc_sc_sequence(&params, 500, 3)?;
    let c = seq.constants().expect("quadratic constants are exact");
    let cfg = AgdaConfig::new(c.mu1, c.mu2, c.l1, DEFAULT_K_CAP)?;
    println!("tau1 = {:.3e}, tau2 = {:.3}, rho = {:.6}", cfg.tau1, cfg.tau2, cfg.rho);
    let mut learner = Learner::agda(seq.domain().clone(), cfg)?;
    let rounds = play_rounds(&mut seq, &mut learner)?;

    let worst = rounds
        .reports
        .iter()
        .filter_map(|r| Some(r.gap_after? - 0.25 * r.gap_before?))
        .fold(f64::NEG_INFINITY, f64::max);
    let steps: usize = rounds.reports.iter().filter_map(|r| r.inner_steps).sum();
    let caps = rounds.reports.iter().filter(|r| r.cap_hit).count();
    println!("inner steps = {steps}, cap hits = {caps}, worst g*(z_next) - g*(z)/4 = {worst:.3e}");

    let saddle = cumulative_saddle(&rounds.functions, SADDLE_TOL)?;
    let ledger = regret_report(&rounds.functions, &rounds.plays, &saddle, false)?;
    let v = variation_report(&rounds.functions, &rounds.plays, Some(&saddle.point), VARIATION_SAMPLES, 3, false)?;
    let last = dynamic_gap(rounds.functions.last().unwrap().as_ref(), &rounds.next, false)?.value;
    let bound = 2.0 * v.u_t + 2.0 * (ledger.rows[0].g_star - last);
    println!("Dual-Gap = {:.4}, 2 U_T + 2 (g*_1 - g*_T) = {bound:.4}", ledger.totals.dual_gap);
    Ok(())
}
