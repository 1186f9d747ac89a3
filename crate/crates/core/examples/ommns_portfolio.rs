//! OMMNS on the log-portfolio game: the investor picks weights on the
//! simplex, the adversary rescales prices inside a box.

use ommo::functions::{log_portfolio_sequence, FunctionSequence, LogPortfolioParams};
use ommo::learners::{play_rounds, Learner};
use ommo::metrics::{average_iterate_distance, cumulative_saddle, regret_report, SADDLE_TOL};

fn main() -> ommo::Result<()> {
    let params = LogPortfolioParams { assets: 2, price_low: 0.5, price_high: 1.5, y_low: 0.5, y_high: 1.5 };
    let horizon = 512;
    let mut seq = log_portfolio_sequence(&params, horizon, 11)?;
    let c = seq.constants().expect("portfolio constants are sampled at construction");
    let gamma = Learner::ommns_gamma(&c);
    let mut learner = Learner::ommns(seq.domain().clone(), gamma, None)?;
    let rounds = play_rounds(&mut seq, &mut learner)?;
    let saddle = cumulative_saddle(&rounds.functions, SADDLE_TOL)?;
    let ledger = regret_report(&rounds.functions, &rounds.plays, &saddle, true)?;
    let d = seq.domain().dim() as f64;
    let bound = 2.0 * d * (1.0 / c.alpha + c.l0 * c.diameter) * (horizon as f64).ln();
    println!("gamma = {gamma:.4}, L0 = {:.3}, D = {:.3}", c.l0, c.diameter);
    println!("cumulative saddle x' = {:?}, y' = {:?}", saddle.point.x.as_slice(), saddle.point.y.as_slice());
    println!("SDual-Gap = {:.4} (bound {bound:.1})", ledger.totals.sdual_gap);
    println!("||mean iterate - z'||^2 = {:.3e}", average_iterate_distance(&rounds.plays, &saddle.point)?);
    println!("last portfolio: {:?}", rounds.next.x.as_slice());
    Ok(())
}
