//! Zero-sum one-shot matrix games and their exit-constrained variant.

use serde::{Deserialize, Serialize};

use crate::game::{clean_probabilities, Game, Player, StateSet, Valuation};
use crate::lp::{LinearProgram, LpError, Relation};
use crate::LP_TOL;

/// Dense payoff matrix; the row player maximizes.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix {
    rows: Vec<String>,
    cols: Vec<String>,
    entries: Vec<f64>,
}

impl PayoffMatrix {
    pub fn with_labels(rows: Vec<String>, cols: Vec<String>, entries: Vec<f64>) -> Self {
        assert!(!rows.is_empty() && !cols.is_empty(), "payoff matrix needs a row and a column");
        assert_eq!(entries.len(), rows.len() * cols.len(), "payoff matrix shape");
        PayoffMatrix { rows, cols, entries }
    }

    /// Matrix with generated labels `r0, r1, ...` and `c0, c1, ...`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged payoff matrix");
        PayoffMatrix::with_labels(
            (0..rows.len()).map(|i| format!("r{i}")).collect(),
            (0..ncols).map(|j| format!("c{j}")).collect(),
            rows.concat(),
        )
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.rows
    }

    pub fn col_labels(&self) -> &[String] {
        &self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols.len() + c]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.cols.len()).map(<[f64]>::to_vec).collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn transpose(&self) -> PayoffMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.ncols() {
            for r in 0..self.nrows() {
                entries.push(self.get(r, c));
            }
        }
        PayoffMatrix::with_labels(self.cols.clone(), self.rows.clone(), entries)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PayoffMatrix {
        PayoffMatrix::with_labels(self.rows.clone(), self.cols.clone(), self.entries.iter().map(|&x| f(x)).collect())
    }

    /// Submatrix keeping only the given rows, in the given order.
    pub fn restrict_rows(&self, keep: &[usize]) -> PayoffMatrix {
        let mut entries = Vec::with_capacity(keep.len() * self.ncols());
        for &r in keep {
            entries.extend_from_slice(&self.entries[r * self.ncols()..(r + 1) * self.ncols()]);
        }
        PayoffMatrix::with_labels(keep.iter().map(|&r| self.rows[r].clone()).collect(), self.cols.clone(), entries)
    }

    /// Worst-case payoff of a row strategy.
    pub fn guarantee_row(&self, x: &[f64]) -> f64 {
        (0..self.ncols())
            .map(|c| (0..self.nrows()).map(|r| x[r] * self.get(r, c)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    /// Worst-case payoff (for the column player) of a column strategy.
    pub fn guarantee_col(&self, y: &[f64]) -> f64 {
        (0..self.nrows())
            .map(|r| (0..self.ncols()).map(|c| y[c] * self.get(r, c)).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGameSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
    /// Worst-case exit mass of `row_strategy`; only set by [`solve_exit`].
    pub exit_certificate: Option<f64>,
}

fn dirac(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Pure saddle point, if one exists. Ties resolve to the lowest index.
fn saddle(m: &PayoffMatrix) -> Option<MatrixGameSolution> {
    let (mut best_r, mut maximin) = (0, f64::NEG_INFINITY);
    for r in 0..m.nrows() {
        let lo = (0..m.ncols()).map(|c| m.get(r, c)).fold(f64::INFINITY, f64::min);
        if lo > maximin {
            best_r = r;
            maximin = lo;
        }
    }
    let (mut best_c, mut minimax) = (0, f64::INFINITY);
    for c in 0..m.ncols() {
        let hi = (0..m.nrows()).map(|r| m.get(r, c)).fold(f64::NEG_INFINITY, f64::max);
        if hi < minimax {
            best_c = c;
            minimax = hi;
        }
    }
    (maximin == minimax).then(|| MatrixGameSolution {
        value: maximin,
        row_strategy: dirac(m.nrows(), best_r),
        col_strategy: dirac(m.ncols(), best_c),
        exit_certificate: None,
    })
}

fn wrap(m: &PayoffMatrix) -> impl Fn(LpError) -> LpError + '_ {
    move |e| LpError::Matrix { matrix: m.to_rows(), source: Box::new(e) }
}

/// Optimal column strategy of the minimizing player.
///
/// With `N = M + shift >= 1`, solves `max Σy s.t. Ny <= 1, y >= 0`. The
/// slack basis is feasible, so no phase one runs, and `y / Σy` is optimal.
fn min_player_lp(m: &PayoffMatrix) -> Result<Vec<f64>, LpError> {
    let (nr, nc) = (m.nrows(), m.ncols());
    let shift = 1.0 - m.min_entry();
    let mut lp = LinearProgram::maximize(vec![1.0; nc]);
    for r in 0..nr {
        lp.constrain((0..nc).map(|c| m.get(r, c) + shift).collect(), Relation::Le, 1.0);
    }
    let sol = lp.solve()?;
    let total: f64 = sol.x.iter().sum();
    let mut y: Vec<f64> = sol.x.iter().map(|v| v / total).collect();
    clean_probabilities(&mut y);
    Ok(y)
}

/// Value and a pair of optimal mixed strategies.
///
/// The row strategy is the column solution of `-Mᵀ`. The value is the
/// midpoint of the two strategies' exact guarantees.
pub fn solve_matrix(m: &PayoffMatrix) -> Result<MatrixGameSolution, LpError> {
    if let Some(sol) = saddle(m) {
        return Ok(sol);
    }
    let col_strategy = min_player_lp(m).map_err(wrap(m))?;
    let row_strategy = min_player_lp(&m.transpose().map(|v| -v)).map_err(wrap(m))?;
    let lo = m.guarantee_row(&row_strategy);
    let hi = m.guarantee_col(&col_strategy);
    Ok(MatrixGameSolution {
        value: (0.5 * (lo + hi)).clamp(m.min_entry(), m.max_entry()),
        row_strategy,
        col_strategy,
        exit_certificate: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveTag {
    Staying,
    Leaving,
    Ambiguous,
}

/// Tags of one player's moves at a state relative to a state set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveClassification {
    pub tags: Vec<MoveTag>,
}

impl MoveClassification {
    pub fn non_staying(&self) -> Vec<usize> {
        (0..self.tags.len()).filter(|&i| self.tags[i] != MoveTag::Staying).collect()
    }
}

fn in_mask(game: &Game, c: &StateSet) -> Vec<bool> {
    let mut mask = vec![false; game.num_states()];
    for &s in c {
        mask[s] = true;
    }
    mask
}

/// Classifies the reach player's moves at `s` relative to `c`.
pub fn classify_moves(game: &Game, s: usize, c: &StateSet) -> MoveClassification {
    classify_moves_for(game, Player::Reach, s, c)
}

/// Classifies `player`'s moves at `s` relative to `c`.
pub fn classify_moves_for(game: &Game, player: Player, s: usize, c: &StateSet) -> MoveClassification {
    classify_with_mask(game, player, s, &in_mask(game, c))
}

fn classify_with_mask(game: &Game, player: Player, s: usize, inside: &[bool]) -> MoveClassification {
    let others = game.num_moves(player.opponent(), s);
    let tags = (0..game.num_moves(player, s))
        .map(|a| {
            let stays = (0..others).filter(|&b| game.delta_for(player, s, a, b).support_within(inside)).count();
            if stays == others {
                MoveTag::Staying
            } else if stays == 0 {
                MoveTag::Leaving
            } else {
                MoveTag::Ambiguous
            }
        })
        .collect();
    MoveClassification { tags }
}

/// Exit-constrained one-shot game at `s` for the reach player.
pub fn solve_exit(game: &Game, v: &Valuation, s: usize, c: &StateSet) -> Result<Option<MatrixGameSolution>, LpError> {
    solve_exit_for(game, Player::Reach, v, s, c)
}

/// Exit-constrained one-shot game at `s` with `player` maximizing `v`.
///
/// Staying rows are dropped. The result is absent when no row remains, or
/// when some opposing move keeps every remaining row inside `c`: no strategy
/// then leaves `c` against all opposing moves.
///
/// `col_strategy` is optimal for the opponent in the restricted game.
pub fn solve_exit_for(
    game: &Game,
    player: Player,
    v: &Valuation,
    s: usize,
    c: &StateSet,
) -> Result<Option<MatrixGameSolution>, LpError> {
    let inside = in_mask(game, c);
    let class = classify_with_mask(game, player, s, &inside);
    let keep = class.non_staying();
    if keep.is_empty() {
        return Ok(None);
    }
    let others = game.num_moves(player.opponent(), s);
    // leaving[b][i]: kept row keep[i] leaves c against opposing move b
    let leaving: Vec<Vec<bool>> = (0..others)
        .map(|b| {
            keep.iter()
                .map(|&a| !game.delta_for(player, s, a, b).support_within(&inside))
                .collect()
        })
        .collect();
    if leaving.iter().any(|col| !col.contains(&true)) {
        return Ok(None);
    }

    let full = crate::game::payoff_matrix_for(game, v, s, player);
    let m = full.restrict_rows(&keep);
    let base = solve_matrix(&m)?;
    // the base row strategy stays feasible
    let floor = base.value.min(m.guarantee_row(&base.row_strategy)) - LP_TOL;

    // phase 2: maximize the worst-case exit mass among near-optimal rows
    let k = keep.len();
    let mut obj = vec![0.0; k + 1];
    obj[k] = 1.0;
    let mut lp = LinearProgram::maximize(obj);
    for b in 0..others {
        let mut row: Vec<f64> = (0..k).map(|i| m.get(i, b)).collect();
        row.push(0.0);
        lp.constrain(row, Relation::Ge, floor);
        let mut exit: Vec<f64> = leaving[b].iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        exit.push(-1.0);
        lp.constrain(exit, Relation::Ge, 0.0);
    }
    let mut sum = vec![1.0; k];
    sum.push(0.0);
    lp.constrain(sum, Relation::Eq, 1.0);
    let sol = lp.solve().map_err(wrap(&m))?;
    let mut x = sol.x[..k].to_vec();
    clean_probabilities(&mut x);
    let mut row_strategy = vec![0.0; game.num_moves(player, s)];
    for (i, &a) in keep.iter().enumerate() {
        row_strategy[a] = x[i];
    }
    let exit_mass = (0..others)
        .map(|b| (0..k).filter(|&i| leaving[b][i]).map(|i| x[i]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(Some(MatrixGameSolution {
        value: base.value,
        row_strategy,
        col_strategy: base.col_strategy,
        exit_certificate: Some(exit_mass),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_game() {
        let sol = solve_matrix(&PayoffMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]])).unwrap();
        assert!(close(sol.value, 0.5, LP_TOL));
        assert!(close(sol.row_strategy[0], 0.5, LP_TOL) && close(sol.row_strategy[1], 0.5, LP_TOL));
        assert!(close(sol.col_strategy[0], 0.5, LP_TOL));
    }

    #[test]
    fn dominant_row_is_pure() {
        let sol = solve_matrix(&PayoffMatrix::from_rows(vec![vec![1.0, 1.0], vec![0.0, 0.0]])).unwrap();
        assert_eq!(sol.value, 1.0);
        assert_eq!(sol.row_strategy, vec![1.0, 0.0]);
    }

    #[test]
    fn closed_form_two_by_two() {
        let sol = solve_matrix(&PayoffMatrix::from_rows(vec![vec![0.0, 0.5], vec![1.0, 0.0]])).unwrap();
        assert!(close(sol.value, 1.0 / 3.0, LP_TOL));
        // x = (2/3, 1/3), y = (1/3, 2/3)
        assert!(close(sol.row_strategy[0], 2.0 / 3.0, 1e-9));
        assert!(close(sol.col_strategy[0], 1.0 / 3.0, 1e-9));
    }

    #[test]
    fn rock_paper_scissors() {
        let m = PayoffMatrix::from_rows(vec![vec![0.5, 0.0, 1.0], vec![1.0, 0.5, 0.0], vec![0.0, 1.0, 0.5]]);
        let sol = solve_matrix(&m).unwrap();
        assert!(close(sol.value, 0.5, LP_TOL));
        for p in sol.row_strategy.iter().chain(&sol.col_strategy) {
            assert!(close(*p, 1.0 / 3.0, 1e-9));
        }
    }

    #[test]
    fn near_tied_entries_keep_guarantees_together() {
        let cases = [
            vec![
                vec![0.9286713286713286, 0.36363636363636365, 0.5324675324675324],
                vec![0.4, 0.4000795159722428, 0.5545454545454545],
                vec![0.9602272727272727, 0.0, 0.0],
            ],
            vec![
                vec![0.3333589763807242, 0.450992459473282, 0.5833493602379527],
                vec![0.33335897638072426, 0.33335897549517435, 0.3333589763807242],
            ],
        ];
        for rows in cases {
            let m = PayoffMatrix::from_rows(rows);
            let sol = solve_matrix(&m).unwrap();
            let lo = m.guarantee_row(&sol.row_strategy);
            let hi = m.guarantee_col(&sol.col_strategy);
            assert!(hi - lo <= 1e-12, "guarantees {lo} and {hi}");
            assert!(lo <= sol.value && sol.value <= hi);
        }
    }

    #[test]
    fn classification_examples() {
        use MoveTag::*;
        let g = fixtures::ec_trap();
        let i = |n| g.state_index(n).unwrap();
        let c = StateSet::from([i("s1"), i("s2")]);
        assert_eq!(classify_moves(&g, i("s1"), &c).tags, vec![Staying, Leaving]);

        let g = fixtures::mixed_exit();
        let i = |n| g.state_index(n).unwrap();
        let c = StateSet::from([i("s5")]);
        assert_eq!(classify_moves(&g, i("s5"), &c).tags, vec![Ambiguous, Ambiguous]);
        let c = StateSet::from([i("s1"), i("s2")]);
        assert_eq!(classify_moves(&g, i("s1"), &c).tags, vec![Ambiguous]);
    }

    #[test]
    fn exit_game_at_mixed_state() {
        let g = fixtures::mixed_exit();
        let i = |n| g.state_index(n).unwrap();
        let mut v = Valuation::constant(g.num_states(), 0.0);
        v[i("s5")] = 1.0;
        v[i("s3")] = 1.0;
        let sol = solve_exit(&g, &v, i("s5"), &StateSet::from([i("s5")])).unwrap().unwrap();
        assert!(close(sol.value, 0.75, LP_TOL));
        assert!(close(sol.row_strategy[0], 0.5, 1e-9) && close(sol.row_strategy[1], 0.5, 1e-9));
        assert!(close(sol.exit_certificate.unwrap(), 0.5, 1e-9));
    }

    #[test]
    fn exit_game_drops_staying_row() {
        let g = fixtures::ec_trap();
        let i = |n| g.state_index(n).unwrap();
        let mut v = Valuation::constant(g.num_states(), 1.0);
        v[i("s4")] = 0.0;
        let c = StateSet::from([i("s1"), i("s2")]);
        let sol = solve_exit(&g, &v, i("s1"), &c).unwrap().unwrap();
        assert!(close(sol.value, 0.5, LP_TOL));
        assert_eq!(sol.row_strategy, vec![0.0, 1.0]);
        assert_eq!(sol.exit_certificate, Some(1.0));
    }

    #[test]
    fn all_staying_means_no_exit() {
        let g = fixtures::ec_trap();
        let i = |n| g.state_index(n).unwrap();
        let v = Valuation::constant(g.num_states(), 1.0);
        let c = StateSet::from([i("s0"), i("s1"), i("s2")]);
        assert_eq!(solve_exit(&g, &v, i("s2"), &c).unwrap(), None);
    }

    #[test]
    fn opponent_can_block_every_exit() {
        let g = fixtures::irrational_value();
        let i = |n| g.state_index(n).unwrap();
        let v = Valuation::constant(g.num_states(), 1.0);
        let c = StateSet::from([i("s3"), i("s4")]);
        // safe's move a keeps s3 inside regardless of reach
        assert_eq!(solve_exit(&g, &v, i("s3"), &c).unwrap(), None);
    }
}
