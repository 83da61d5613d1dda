//! Small reference games used throughout tests and examples.
//!
//! * [`irrational_value`]: value `√2 − 1` at `s0`, an end component `{s3, s4}`
//!   whose states are owned by different players.
//! * [`mixed_exit`]: state `s5` can only be left by randomizing.
//! * [`ec_trap`]: a one-player end component where the naive upper bound
//!   stays at 1 forever.

use crate::cli::format::parse_game;
use crate::game::{Game, GameDef};

pub const IRRATIONAL_VALUE_JSON: &str = include_str!("../fixtures/irrational_value.json");
pub const MIXED_EXIT_JSON: &str = include_str!("../fixtures/mixed_exit.json");
pub const EC_TRAP_JSON: &str = include_str!("../fixtures/ec_trap.json");

fn load(src: &str) -> GameDef {
    parse_game(src, true).expect("bundled fixture parses")
}

pub fn irrational_value_def() -> GameDef {
    load(IRRATIONAL_VALUE_JSON)
}

pub fn mixed_exit_def() -> GameDef {
    load(MIXED_EXIT_JSON)
}

pub fn ec_trap_def() -> GameDef {
    load(EC_TRAP_JSON)
}

pub fn irrational_value() -> Game {
    irrational_value_def().compile().expect("bundled fixture is valid")
}

pub fn mixed_exit() -> Game {
    mixed_exit_def().compile().expect("bundled fixture is valid")
}

pub fn ec_trap() -> Game {
    ec_trap_def().compile().expect("bundled fixture is valid")
}
