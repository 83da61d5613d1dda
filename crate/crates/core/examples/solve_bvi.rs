//! Bounded value iteration on a game file, or on the bundled irrational-value
//! game when no path is given.
//!
//! cargo run --example solve_bvi -- [game.json] [epsilon]

use csg_bounds::bvi::{run_bvi, BviConfig};
use csg_bounds::cli::format::parse_game;
use csg_bounds::{fixtures, Game, Player};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let game: Game = match args.next() {
        Some(path) => parse_game(&std::fs::read_to_string(path)?, false)?.compile()?,
        None => fixtures::irrational_value(),
    };
    let epsilon = args.next().map(|e| e.parse()).transpose()?.unwrap_or(1e-6);

    let res = run_bvi(&game, &BviConfig { epsilon, ..BviConfig::default() })?;
    println!("{:?} after {} iterations", res.termination, res.iterations);
    for s in 0..game.num_states() {
        let sigma = res.reach_strategy.probs(s);
        let moves = game.moves(Player::Reach, s);
        let mix: Vec<String> = moves.iter().zip(sigma).filter(|(_, &p)| p > 0.0).map(|(m, p)| format!("{m}:{p:.4}")).collect();
        println!(
            "{:>4}  [{:.8}, {:.8}]  reach plays {}",
            game.state_name(s),
            res.lower[s],
            res.upper[s],
            mix.join(" ")
        );
    }
    for d in &res.diagnostics {
        eprintln!("note: {d}");
    }
    Ok(())
}
