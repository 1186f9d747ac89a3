//! Sampled checks of the inequalities each payoff class promises, and of
//! the regularity of the static gap function around a saddle point.

use ommo::functions::{check_class_membership, check_gap_regularity, log_portfolio_sequence, LogPortfolioParams};
use ommo::metrics::{cumulative_saddle, SADDLE_TOL};

fn main() -> ommo::Result<()> {
    let params = LogPortfolioParams { assets: 3, price_low: 0.5, price_high: 1.5, y_low: 0.5, y_high: 1.5 };
    let seq = log_portfolio_sequence(&params, 1, 2)?;
    let f = seq.functions()[0].clone();
    println!("classes: {:?}", f.classes());
    let report = check_class_membership(f.as_ref(), 500, 2)?;
    for c in &report.checks {
        println!("  {:16} {} samples, {} violations, worst margin {:.3e}", c.name, c.evaluated, c.violations, c.worst_margin);
    }
    let z = cumulative_saddle(std::slice::from_ref(&f), SADDLE_TOL)?.point;
    for c in check_gap_regularity(f.as_ref(), &z, 200, 2)? {
        println!("  {:22} {} violations over {} points", c.name, c.violations, c.evaluated);
    }
    Ok(())
}
