//! Bounded strategy iteration, traced round by round. Every reported bound is
//! the exact value of a strategy, so both certificates are checked at the end.

use csg_bounds::bsi::{eval_reach_strategy, eval_safe_strategy, run_bsi, SiConfig};
use csg_bounds::fixtures;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = fixtures::irrational_value();
    let s0 = game.state_index("s0").ok_or("s0 missing")?;
    let res = run_bsi(&game, &SiConfig { epsilon: 1e-8, trace: true, ..SiConfig::default() })?;
    for row in res.trace.iter().flatten() {
        println!("round {:>2}: s0 in [{:.12}, {:.12}]", row.iteration, row.lower[s0], row.upper[s0]);
    }
    println!("{:?}; sqrt(2) - 1 = {:.12}", res.termination, 2f64.sqrt() - 1.0);

    let guaranteed = eval_reach_strategy(&game, &res.reach_strategy)?;
    let conceded = eval_safe_strategy(&game, &res.safe_strategy)?.complement();
    println!("reach strategy guarantees {:.12}", guaranteed[s0]);
    println!("safe strategy concedes at most {:.12}", conceded[s0]);
    Ok(())
}
