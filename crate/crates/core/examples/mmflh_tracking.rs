//! MMFLH with OGDA experts on a sequence whose saddle point jumps four
//! times: the pool of sleeping experts follows the moving target.

use ommo::functions::{sc_sc_sequence, FunctionSequence, ScScParams, Schedule};
use ommo::learners::{play_rounds, Learner};
use ommo::meta::{BaseLearner, Mmflh, MmflhConfig};
use ommo::metrics::{cumulative_saddle, regret_report, SADDLE_TOL};

fn main() -> ommo::Result<()> {
    let params = ScScParams {
        lambda: 1.0,
        dim_x: 2,
        dim_y: 2,
        radius: 1.0,
        spread: 0.5,
        coupling: 0.3,
        schedule: Schedule::Piecewise,
        segments: 4,
    };
    let horizon = 512;
    let mut seq = sc_sc_sequence(&params, horizon, 9)?;
    let fns = seq.materialized().expect("oblivious sequence").to_vec();
    let saddle = cumulative_saddle(&fns, SADDLE_TOL)?;
    let c = seq.constants().expect("quadratic constants are exact");

    let cfg = MmflhConfig::from_constants(BaseLearner::Ogda { lambda: c.lambda }, 2, &c);
    let mut meta = Mmflh::new(seq.domain().clone(), cfg, Some(saddle.point.clone()))?;
    let rounds = play_rounds(&mut seq, &mut meta)?;
    let ledger = regret_report(&rounds.functions, &rounds.plays, &saddle, false)?;
    println!("MMFLH: DSP-Reg = {:.3}, {} experts alive, {} clipped losses", ledger.totals.dsp_reg, meta.alive(), meta.clipped());

    let mut single = Learner::ogda(seq.domain().clone(), c.lambda)?;
    let mut replay = sc_sc_sequence(&params, horizon, 9)?;
    let solo = play_rounds(&mut replay, &mut single)?;
    let solo_ledger = regret_report(&solo.functions, &solo.plays, &saddle, false)?;
    println!("single OGDA: DSP-Reg = {:.3}", solo_ledger.totals.dsp_reg);
    for (start, end) in meta.lifetimes().iter().take(5) {
        println!("  expert born at {start}, sleeps after {end}");
    }
    Ok(())
}
