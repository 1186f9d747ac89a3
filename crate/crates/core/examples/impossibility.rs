//! Two payoff sequences that agree on their first half: no learner keeps
//! SNE-Reg and both individual regrets small on both of them.

use ommo::harness::{impossibility_floor, impossibility_regrets, AlgorithmConfig, IMPOSSIBILITY_HORIZON};
use ommo::learners::DEFAULT_K_CAP;

fn main() -> ommo::Result<()> {
    let t = IMPOSSIBILITY_HORIZON;
    for alg in [
        AlgorithmConfig::Ogda { gamma: None },
        AlgorithmConfig::Ommns { gamma: None, epsilon: None },
        AlgorithmConfig::Agda { k_cap: DEFAULT_K_CAP },
    ] {
        let [a, b] = impossibility_regrets(alg.clone(), t, 0)?;
        println!("{:6}: max(SNE-Reg, Reg1, Reg2) = {a:7.3} on sequence 1, {b:7.3} on sequence 2", alg.name());
    }
    let rho: Vec<f64> = (0..t).map(|i| (i as f64 / t as f64).sin().abs()).collect();
    println!("sum rho^2 + (1 - rho)^2 = {:.3} >= T/2 = {}", impossibility_floor(&rho), t / 2);
    Ok(())
}
