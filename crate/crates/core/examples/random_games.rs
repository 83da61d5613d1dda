//! Random games solved by both engines. The intervals must overlap. Strategy
//! iteration stops as soon as either player has no improving state, so its
//! final gap can exceed the one value iteration reaches.
//!
//! cargo run --release --example random_games -- [count]

use csg_bounds::bsi::{run_bsi, SiConfig};
use csg_bounds::bvi::{run_bvi, BviConfig};
use csg_bounds::oracle::{gen_random_game, RandomGameSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count: u64 = std::env::args().nth(1).map(|c| c.parse()).transpose()?.unwrap_or(10);
    let epsilon = 1e-4;
    for seed in 0..count {
        let spec = RandomGameSpec { state_count: 8, max_moves_per_player: 2, ec_bias: 0.4, seed, ..RandomGameSpec::default() };
        // bounds are compared at every state, not just the initial one
        let game = gen_random_game(&spec).compile()?.with_init(None);
        let a = run_bvi(&game, &BviConfig { epsilon, max_iters: 20_000, ..BviConfig::default() })?;
        let b = run_bsi(&game, &SiConfig { epsilon, ..SiConfig::default() })?;
        let overlap = (0..game.num_states()).all(|s| a.lower[s].max(b.lower[s]) <= a.upper[s].min(b.upper[s]) + 1e-9);
        let gap = |lo: &[f64], hi: &[f64]| lo.iter().zip(hi).map(|(l, h)| h - l).fold(0.0, f64::max);
        println!(
            "seed {seed:>3}: bvi {:?} in {:>5} (gap {:.1e}), bsi {:?} in {:>3} (gap {:.1e}), overlap {overlap}",
            a.termination,
            a.iterations,
            gap(a.lower.values(), a.upper.values()),
            b.termination,
            b.iterations,
            gap(b.lower.values(), b.upper.values()),
        );
    }
    Ok(())
}
