//! Fixes both strategies, builds the induced Markov chain, and compares its
//! exact reachability probability with a seeded Monte Carlo estimate.

use csg_bounds::oracle::{chain_reach, induced_chain, monte_carlo};
use csg_bounds::{fixtures, MixedStrategy, Player};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = fixtures::irrational_value();
    let sigma = MixedStrategy::uniform(&game, Player::Reach);
    let tau = MixedStrategy::uniform(&game, Player::Safe);
    let chain = induced_chain(&game, &sigma, &tau)?;
    let exact = chain_reach(&chain, &game.targets())?;
    let s0 = game.state_index("s0").ok_or("s0 missing")?;
    for samples in [100, 1_000, 10_000, 100_000] {
        let mc = monte_carlo(&chain, &game.targets(), s0, samples, 100_000, 42);
        println!(
            "{samples:>7} runs: {:.5} ± {:.5} (exact {:.5})",
            mc.estimate, mc.half_width, exact[s0]
        );
    }
    Ok(())
}
