//! Generators and property checks shared by the property suite and the
//! acceptance runner.
#![allow(dead_code)]

use csg_bounds::bsi::{eval_reach_strategy, eval_safe_strategy, inflate, run_bsi, SiConfig};
use csg_bounds::bvi::{deflate, run_bvi, BviConfig, Prepared};
use csg_bounds::fixtures;
use csg_bounds::game::{pre_opt, Game, Player, Valuation};
use csg_bounds::oracle::{gen_random_game, RandomGameSpec};
use csg_bounds::{EVAL_TOL, LP_TOL};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const CASES: u32 = 1000;

/// On the fixtures with dyadic inputs both operators solve the same games;
/// the only difference left is the rounding of `x ↦ 1 - x` on their outputs.
pub const COMPLEMENT_TOL_FIXTURES: f64 = f64::EPSILON;

/// On random games the two operators solve transposed LPs whose round-off
/// differs by a few ulps.
pub const COMPLEMENT_TOL_RANDOM: f64 = 1e-12;

pub fn random_game(seed: u64, states: usize, moves: usize, branching: usize, ec_bias: f64) -> Game {
    let spec = RandomGameSpec {
        state_count: states,
        max_moves_per_player: moves,
        branching,
        ec_bias,
        seed,
        ..RandomGameSpec::default()
    };
    gen_random_game(&spec).compile().expect("generator output is valid")
}

/// Small random games with a bias towards end components.
pub fn small_game() -> impl Strategy<Value = Game> {
    (any::<u64>(), 3usize..=10, 1usize..=3, 1usize..=3, 0.5f64..0.95)
        .prop_map(|(seed, n, m, b, ec)| random_game(seed, n, m, b, ec))
}

/// Valuation on a dyadic grid, so `1 - (1 - x) == x` holds exactly.
pub fn dyadic(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..=1024).prop_map(|k| k as f64 / 1024.0), n)
}

pub fn game_with_valuation() -> impl Strategy<Value = (Game, Vec<f64>)> {
    small_game().prop_flat_map(|g| {
        let n = g.num_states();
        (Just(g), dyadic(n))
    })
}

pub fn game_with_ordered_pair() -> impl Strategy<Value = (Game, Vec<f64>, Vec<f64>)> {
    small_game().prop_flat_map(|g| {
        let n = g.num_states();
        (Just(g), dyadic(n), dyadic(n)).prop_map(|(g, a, d)| {
            let hi = a.iter().zip(&d).map(|(x, y)| (x + y).min(1.0)).collect();
            (g, a, hi)
        })
    })
}

pub fn fixture(i: usize) -> Game {
    match i % 3 {
        0 => fixtures::irrational_value(),
        1 => fixtures::mixed_exit(),
        _ => fixtures::ec_trap(),
    }
}

pub fn fixture_with_valuation() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (0usize..3).prop_flat_map(|i| (Just(i), dyadic(fixture(i).num_states())))
}

/// Every traced iterate: lower rises, upper falls, lower stays below upper.
pub fn check_bvi_monotone(game: &Game) -> Result<(), TestCaseError> {
    let cfg = BviConfig { epsilon: 1e-6, max_iters: 40, trace: true, ..BviConfig::default() };
    let res = run_bvi(game, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let prep = Prepared::new(game);
    let mut lower = prep.initial_lower().values().to_vec();
    let mut upper = prep.initial_upper().values().to_vec();
    for row in res.trace.unwrap() {
        for s in 0..game.num_states() {
            prop_assert!(row.lower[s] >= lower[s], "lower fell at state {s} in iteration {}", row.iteration);
            prop_assert!(row.upper[s] <= upper[s], "upper rose at state {s} in iteration {}", row.iteration);
            prop_assert!(row.lower[s] <= row.upper[s] + LP_TOL, "lower above upper at state {s}");
        }
        lower = row.lower;
        upper = row.upper;
    }
    Ok(())
}

/// `1 - Pre(v)` for the reach player equals `Pre(1 - v)` for the safe player.
pub fn check_duality(game: &Game, v: &[f64]) -> Result<(), TestCaseError> {
    let v = Valuation::new(v.to_vec());
    let w = v.complement();
    for s in 0..game.num_states() {
        let reach = pre_opt(game, &v, s, Player::Reach).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let safe = pre_opt(game, &w, s, Player::Safe).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!((1.0 - reach.value - safe.value).abs() <= 2.0 * LP_TOL, "state {s}: {} vs {}", reach.value, safe.value);
    }
    Ok(())
}

/// `lo <= hi` implies `deflate(lo) <= deflate(hi)` on every deflated component.
pub fn check_deflate_order(game: &Game, lo: &[f64], hi: &[f64]) -> Result<(), TestCaseError> {
    let prep = Prepared::new(game);
    let lo = Valuation::new(lo.to_vec());
    let hi = Valuation::new(hi.to_vec());
    for c in &prep.mecs.components {
        let a = deflate(&prep.game, &lo, c).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let b = deflate(&prep.game, &hi, c).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for s in 0..game.num_states() {
            prop_assert!(a[s] <= b[s] + LP_TOL, "state {s}: {} > {}", a[s], b[s]);
            prop_assert!(a[s] <= lo[s] && b[s] <= hi[s], "deflation raised state {s}");
        }
    }
    Ok(())
}

/// Deflating an upper bound equals inflating the complementary safety bound,
/// up to `tol`.
pub fn check_complement_identity(game: &Game, u: &[f64], tol: f64) -> Result<(), TestCaseError> {
    let prep = Prepared::new(game);
    let u = Valuation::new(u.to_vec());
    for c in &prep.mecs.components {
        let d = deflate(&prep.game, &u, c).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let i = inflate(&prep.game, &u.complement(), c).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let back = i.complement();
        for s in 0..game.num_states() {
            prop_assert!((d[s] - back[s]).abs() <= tol, "state {s}: {} vs {}", d[s], back[s]);
        }
    }
    Ok(())
}

/// Extracted strategies guarantee the reported bounds.
pub fn check_certificates(game: &Game) -> Result<(), TestCaseError> {
    let fail = |e: csg_bounds::SolverError| TestCaseError::fail(e.to_string());
    let n = game.num_states();

    let bvi = run_bvi(game, &BviConfig { epsilon: 1e-6, ..BviConfig::default() }).map_err(fail)?;
    let lo = eval_reach_strategy(game, &bvi.reach_strategy).map_err(fail)?;
    let hi = eval_safe_strategy(game, &bvi.safe_strategy).map_err(fail)?.complement();
    for s in 0..n {
        prop_assert!(lo[s] >= bvi.lower[s] - EVAL_TOL, "bvi reach strategy at {s}: {} < {}", lo[s], bvi.lower[s]);
        prop_assert!(hi[s] <= bvi.upper[s] + EVAL_TOL, "bvi safe strategy at {s}: {} > {}", hi[s], bvi.upper[s]);
    }

    let bsi = run_bsi(game, &SiConfig { epsilon: 1e-6, ..SiConfig::default() }).map_err(fail)?;
    let lo = eval_reach_strategy(game, &bsi.reach_strategy).map_err(fail)?;
    let hi = eval_safe_strategy(game, &bsi.safe_strategy).map_err(fail)?.complement();
    for s in 0..n {
        prop_assert!((lo[s] - bsi.lower[s]).abs() <= EVAL_TOL, "bsi reach strategy at {s}: {} vs {}", lo[s], bsi.lower[s]);
        prop_assert!((hi[s] - bsi.upper[s]).abs() <= EVAL_TOL, "bsi safe strategy at {s}: {} vs {}", hi[s], bsi.upper[s]);
    }
    Ok(())
}
