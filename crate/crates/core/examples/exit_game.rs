//! The exit game at a state of an end component: staying rows are dropped and
//! the remaining one-shot game is solved, preferring strategies that leave.

use csg_bounds::graph::mec_decompose;
use csg_bounds::matrix_game::{classify_moves, solve_exit};
use csg_bounds::{fixtures, Player, Valuation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = fixtures::mixed_exit();
    let v = Valuation::new((0..game.num_states()).map(|s| if game.is_target(s) { 1.0 } else { 0.5 }).collect());
    for c in mec_decompose(&game).components {
        for &s in &c.states {
            let tags = classify_moves(&game, s, &c.states);
            let moves = game.moves(Player::Reach, s);
            let tagged: Vec<String> = moves.iter().zip(&tags.tags).map(|(m, t)| format!("{m}={t:?}")).collect();
            print!("{:>4} in {:?}: {}", game.state_name(s), c.states, tagged.join(" "));
            match solve_exit(&game, &v, s, &c.states)? {
                Some(sol) => println!(
                    "  exit value {:.6}, strategy {:?}, exit mass {:.6}",
                    sol.value,
                    sol.row_strategy,
                    sol.exit_certificate.unwrap_or(0.0)
                ),
                None => println!("  no exit"),
            }
        }
    }
    Ok(())
}
