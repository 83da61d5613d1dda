//! Without deflation the upper bound of an end component that the safe player
//! can never be forced out of stays at 1. Deflation lowers it to the best exit.

use csg_bounds::bvi::{run_bvi, BviConfig};
use csg_bounds::fixtures;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = fixtures::ec_trap();
    let naive = run_bvi(&game, &BviConfig { naive_upper: true, max_iters: 200, ..BviConfig::default() })?;
    let deflated = run_bvi(&game, &BviConfig::default())?;

    println!("state   naive upper   deflated [lower, upper]");
    for s in 0..game.num_states() {
        println!(
            "{:>5}   {:>11.6}   [{:.6}, {:.6}]",
            game.state_name(s),
            naive.upper[s],
            deflated.lower[s],
            deflated.upper[s]
        );
    }
    println!("naive: {:?} after {} iterations", naive.termination, naive.iterations);
    println!("deflated: {:?} after {} iterations", deflated.termination, deflated.iterations);
    Ok(())
}
