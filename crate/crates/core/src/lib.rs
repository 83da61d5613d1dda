//! Certified value intervals for two-player concurrent stochastic games with
//! reachability and safety objectives.
//!
//! Two engines are provided: bounded value iteration ([`bvi::run_bvi`]) and
//! bounded strategy iteration ([`bsi::run_bsi`]). Both keep a lower and an
//! upper bound on the reachability value at every state, and both rely on
//! end-component deflation to make the upper bound converge.
//!
//! ```
//! use csg_bounds::{bvi, fixtures};
//!
//! let game = fixtures::irrational_value();
//! let res = bvi::run_bvi(&game, &bvi::BviConfig { epsilon: 1e-6, ..Default::default() }).unwrap();
//! let s0 = game.state_index("s0").unwrap();
//! assert!(res.lower[s0] <= 2f64.sqrt() - 1.0 && 2f64.sqrt() - 1.0 <= res.upper[s0]);
//! ```

pub mod bsi;
pub mod bvi;
pub mod cli;
pub mod fixtures;
pub mod game;
pub mod graph;
mod linalg;
pub mod lp;
pub mod matrix_game;
pub mod oracle;

pub use game::{
    dest_strat, payoff_matrix, pre_opt, pre_pair, validate_game, Diagnostic, Distribution, Game, GameDef,
    GameError, MixedStrategy, Player, StateSet, Valuation,
};
pub use lp::LpError;

/// Tolerance for LP value comparisons and fixpoint detection.
pub const LP_TOL: f64 = 1e-9;

/// Witness margin when selecting best-exit states.
pub const BEST_EXIT_TOL: f64 = 1e-9;

/// Minimal exit mass accepted when extracting a leaving strategy.
pub const EXIT_FLOOR: f64 = 1e-9;

/// Strict-improvement margin for strategy iteration.
pub const IMPROVE_TOL: f64 = 1e-9;

/// Agreement tolerance between reported bounds and re-evaluated strategies.
pub const EVAL_TOL: f64 = 1e-8;

use thiserror::Error;

/// Failures of the solving engines.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("end component {states:?} has no exit")]
    NoExit { states: Vec<usize> },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("singular linear system during strategy evaluation")]
    Singular,
    #[error("invalid configuration: {0}")]
    Config(String),
}
