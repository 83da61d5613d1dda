//! Qualitative structure of a game: the safe player's sure-winning region and
//! the maximal end components with their stay pairs.
//!
//! cargo run --example graph_analysis -- [game.json]

use csg_bounds::graph::{mec_decompose, sure_winning};
use csg_bounds::cli::format::parse_game;
use csg_bounds::{fixtures, Game, Player};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let games: Vec<(String, Game)> = match std::env::args().nth(1) {
        Some(path) => {
            let game = parse_game(&std::fs::read_to_string(&path)?, false)?.compile()?;
            vec![(path, game)]
        }
        None => vec![
            ("irrational value".into(), fixtures::irrational_value()),
            ("mixed exit".into(), fixtures::mixed_exit()),
            ("end-component trap".into(), fixtures::ec_trap()),
        ],
    };
    for (label, game) in games {
        let name = |s: &usize| game.state_name(*s).to_string();
        println!("{label}");
        println!("  sure-winning for safe: {:?}", sure_winning(&game).iter().map(name).collect::<Vec<_>>());
        for c in mec_decompose(&game).components {
            println!("  end component {:?}", c.states.iter().map(name).collect::<Vec<_>>());
            for (s, pairs) in &c.stay_pairs {
                let pairs: Vec<String> = pairs
                    .iter()
                    .map(|&(a, b)| format!("({}, {})", game.moves(Player::Reach, *s)[a], game.moves(Player::Safe, *s)[b]))
                    .collect();
                println!("    {} stays with {}", game.state_name(*s), pairs.join(" "));
            }
        }
    }
    Ok(())
}
