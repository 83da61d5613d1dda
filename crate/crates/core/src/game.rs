//! Concurrent game model.
//!
//! A [`GameDef`] is the name-level description of a game as it comes out of a
//! file or a builder. [`GameDef::compile`] validates it and interns states and
//! moves into dense indices, producing an immutable [`Game`] that every solver
//! works on.
//!
//! The reachability player ([`Player::Reach`]) always owns the *first* move of
//! a transition triple `(state, m1, m2)`; the safety player owns the second.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix_game::{solve_matrix, PayoffMatrix};
use crate::LpError;

/// Tolerance on distribution sums when a game is loaded.
pub const PROB_TOL: f64 = 1e-9;

/// Probabilities below this are treated as zero when strategies are stored.
pub const CLIP_TOL: f64 = 1e-12;

/// Sums closer than this to one are left untouched by normalization, which
/// keeps normalization idempotent.
const NORMALIZED_SLACK: f64 = 1e-12;

pub type StateSet = BTreeSet<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Reach,
    Safe,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Reach => Player::Safe,
            Player::Safe => Player::Reach,
        }
    }

    fn slot(self) -> usize {
        match self {
            Player::Reach => 0,
            Player::Safe => 1,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Reach => f.write_str("reach"),
            Player::Safe => f.write_str("safe"),
        }
    }
}

/// A probability distribution over states, kept sorted by state index with
/// zero-probability entries removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    entries: Vec<(usize, f64)>,
}

impl Distribution {
    pub fn dirac(state: usize) -> Self {
        Distribution {
            entries: vec![(state, 1.0)],
        }
    }

    /// Builds a distribution from raw entries. Duplicates are merged, zeros
    /// dropped, and the result is rescaled when its sum is not already one.
    ///
    /// Callers are responsible for checking that the raw sum is close to one.
    pub fn from_entries(raw: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (s, p) in raw {
            *merged.entry(s).or_insert(0.0) += p;
        }
        let mut entries: Vec<(usize, f64)> = merged.into_iter().filter(|&(_, p)| p > 0.0).collect();
        let sum: f64 = entries.iter().map(|&(_, p)| p).sum();
        if sum > 0.0 && (sum - 1.0).abs() > NORMALIZED_SLACK {
            for e in &mut entries {
                e.1 /= sum;
            }
        }
        Distribution { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(s, _)| s)
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.entries
            .binary_search_by_key(&state, |&(s, _)| s)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Expected value of `values` under this distribution.
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.entries.iter().map(|&(s, p)| p * values[s]).sum()
    }

    pub fn support_within(&self, set: &[bool]) -> bool {
        self.entries.iter().all(|&(s, _)| set[s])
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }
}

/// One `(from, m1, m2) -> to` entry of a [`GameDef`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDef {
    pub from: String,
    pub m1: String,
    pub m2: String,
    pub to: Vec<(String, f64)>,
}

/// Name-level game description.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GameDef {
    pub states: Vec<String>,
    pub moves1: BTreeMap<String, Vec<String>>,
    pub moves2: BTreeMap<String, Vec<String>>,
    pub transitions: Vec<TransitionDef>,
    pub target: Vec<String>,
    pub init: Option<String>,
}

/// A single violated game invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    DuplicateState(String),
    DuplicateMove { state: String, player: Player, name: String },
    EmptyMoveSet { state: String, player: Player },
    UnknownState { context: String, name: String },
    UnknownMove { state: String, player: Player, name: String },
    MissingTransition { state: String, m1: String, m2: String },
    DuplicateTransition { state: String, m1: String, m2: String },
    BadProbability { state: String, m1: String, m2: String, to: String, prob: f64 },
    DistributionSum { state: String, m1: String, m2: String, sum: f64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicateState(s) => write!(f, "duplicate state '{s}'"),
            Diagnostic::DuplicateMove { state, player, name } => {
                write!(f, "duplicate {player} move '{name}' at state '{state}'")
            }
            Diagnostic::EmptyMoveSet { state, player } => {
                write!(f, "empty move set: {player} has no moves at state '{state}'")
            }
            Diagnostic::UnknownState { context, name } => {
                write!(f, "unknown state '{name}' referenced in {context}")
            }
            Diagnostic::UnknownMove { state, player, name } => {
                write!(f, "unknown move: '{name}' is not a {player} move at state '{state}'")
            }
            Diagnostic::MissingTransition { state, m1, m2 } => {
                write!(f, "missing transition for ({state}, {m1}, {m2})")
            }
            Diagnostic::DuplicateTransition { state, m1, m2 } => {
                write!(f, "duplicate transition for ({state}, {m1}, {m2})")
            }
            Diagnostic::BadProbability { state, m1, m2, to, prob } => {
                write!(f, "probability {prob} to '{to}' in ({state}, {m1}, {m2}) is outside [0,1]")
            }
            Diagnostic::DistributionSum { state, m1, m2, sum } => {
                write!(f, "distribution sum of ({state}, {m1}, {m2}) is {sum}, expected 1")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid game ({} problem(s)): {}", .0.len(), .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("move {index} is not available to {player} at state {state}")]
    UnavailableMove { state: usize, player: Player, index: usize },
    #[error("strategy for {player} is malformed at state {state}: {reason}")]
    BadStrategy { state: usize, player: Player, reason: String },
}

/// Checks every [`GameDef`] invariant, returning one diagnostic per violation.
pub fn validate_game(def: &GameDef) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut known: HashSet<&str> = HashSet::new();
    for s in &def.states {
        if !known.insert(s.as_str()) {
            diags.push(Diagnostic::DuplicateState(s.clone()));
        }
    }

    for (player, table) in [(Player::Reach, &def.moves1), (Player::Safe, &def.moves2)] {
        for name in table.keys() {
            if !known.contains(name.as_str()) {
                diags.push(Diagnostic::UnknownState {
                    context: format!("{player} move table"),
                    name: name.clone(),
                });
            }
        }
        for s in &def.states {
            match table.get(s) {
                None => diags.push(Diagnostic::EmptyMoveSet { state: s.clone(), player }),
                Some(ms) if ms.is_empty() => {
                    diags.push(Diagnostic::EmptyMoveSet { state: s.clone(), player })
                }
                Some(ms) => {
                    let mut seen = HashSet::new();
                    for m in ms {
                        if !seen.insert(m) {
                            diags.push(Diagnostic::DuplicateMove {
                                state: s.clone(),
                                player,
                                name: m.clone(),
                            });
                        }
                    }
                }
            }
        }
    }

    let mut covered: HashSet<(&str, &str, &str)> = HashSet::new();
    for t in &def.transitions {
        if !known.contains(t.from.as_str()) {
            diags.push(Diagnostic::UnknownState {
                context: "transition source".into(),
                name: t.from.clone(),
            });
            continue;
        }
        let mut moves_ok = true;
        for (player, table, m) in [(Player::Reach, &def.moves1, &t.m1), (Player::Safe, &def.moves2, &t.m2)] {
            let available = table.get(&t.from).map(|ms| ms.contains(m)).unwrap_or(false);
            if !available {
                moves_ok = false;
                diags.push(Diagnostic::UnknownMove {
                    state: t.from.clone(),
                    player,
                    name: m.clone(),
                });
            }
        }
        if moves_ok && !covered.insert((t.from.as_str(), t.m1.as_str(), t.m2.as_str())) {
            diags.push(Diagnostic::DuplicateTransition {
                state: t.from.clone(),
                m1: t.m1.clone(),
                m2: t.m2.clone(),
            });
        }
        let mut sum = 0.0;
        for (to, p) in &t.to {
            if !known.contains(to.as_str()) {
                diags.push(Diagnostic::UnknownState {
                    context: format!("transition ({}, {}, {})", t.from, t.m1, t.m2),
                    name: to.clone(),
                });
            }
            if !(0.0..=1.0).contains(p) || !p.is_finite() {
                diags.push(Diagnostic::BadProbability {
                    state: t.from.clone(),
                    m1: t.m1.clone(),
                    m2: t.m2.clone(),
                    to: to.clone(),
                    prob: *p,
                });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_TOL || !sum.is_finite() {
            diags.push(Diagnostic::DistributionSum {
                state: t.from.clone(),
                m1: t.m1.clone(),
                m2: t.m2.clone(),
                sum,
            });
        }
    }

    for s in &def.states {
        let (Some(ms1), Some(ms2)) = (def.moves1.get(s), def.moves2.get(s)) else {
            continue;
        };
        for m1 in ms1 {
            for m2 in ms2 {
                if !covered.contains(&(s.as_str(), m1.as_str(), m2.as_str())) {
                    diags.push(Diagnostic::MissingTransition {
                        state: s.clone(),
                        m1: m1.clone(),
                        m2: m2.clone(),
                    });
                }
            }
        }
    }

    for name in def.target.iter().chain(def.init.iter()) {
        if !known.contains(name.as_str()) {
            diags.push(Diagnostic::UnknownState {
                context: "target/init".into(),
                name: name.clone(),
            });
        }
    }
    diags
}

impl GameDef {
    /// Validates and interns the description.
    pub fn compile(&self) -> Result<Game, GameError> {
        let diags = validate_game(self);
        if !diags.is_empty() {
            return Err(GameError::Invalid(diags));
        }
        let index: HashMap<String, usize> =
            self.states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let n = self.states.len();
        let moves1: Vec<Vec<String>> = self.states.iter().map(|s| self.moves1[s].clone()).collect();
        let moves2: Vec<Vec<String>> = self.states.iter().map(|s| self.moves2[s].clone()).collect();

        let mut delta: Vec<Vec<Option<Distribution>>> = (0..n)
            .map(|s| vec![None; moves1[s].len() * moves2[s].len()])
            .collect();
        for t in &self.transitions {
            let s = index[&t.from];
            let a = moves1[s].iter().position(|m| *m == t.m1).expect("validated");
            let b = moves2[s].iter().position(|m| *m == t.m2).expect("validated");
            let dist = Distribution::from_entries(t.to.iter().map(|(name, p)| (index[name], *p)));
            delta[s][a * moves2[s].len() + b] = Some(dist);
        }
        let delta = delta
            .into_iter()
            .map(|row| row.into_iter().map(|d| d.expect("validated")).collect())
            .collect();

        let mut target = vec![false; n];
        for t in &self.target {
            target[index[t]] = true;
        }
        let init = self.init.as_ref().map(|s| index[s]);
        Ok(Game {
            names: self.states.clone(),
            index,
            moves: [moves1, moves2],
            delta,
            target,
            init,
        })
    }
}

/// Compiled, index-based concurrent game. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    names: Vec<String>,
    index: HashMap<String, usize>,
    moves: [Vec<Vec<String>>; 2],
    /// Per state, row-major over (reach move, safe move).
    delta: Vec<Vec<Distribution>>,
    target: Vec<bool>,
    init: Option<usize>,
}

impl Game {
    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn state_names(&self) -> &[String] {
        &self.names
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn moves(&self, player: Player, s: usize) -> &[String] {
        &self.moves[player.slot()][s]
    }

    pub fn num_moves(&self, player: Player, s: usize) -> usize {
        self.moves[player.slot()][s].len()
    }

    pub fn move_index(&self, player: Player, s: usize, name: &str) -> Option<usize> {
        self.moves(player, s).iter().position(|m| m == name)
    }

    /// Transition distribution for reach move `a` and safe move `b`.
    /// Panics on out-of-range indices; use [`Game::dest`] for checked access.
    pub fn delta(&self, s: usize, a: usize, b: usize) -> &Distribution {
        &self.delta[s][a * self.moves[1][s].len() + b]
    }

    /// Transition distribution with the two moves given by role: `own` for
    /// `player`, `other` for the opponent.
    pub fn delta_for(&self, player: Player, s: usize, own: usize, other: usize) -> &Distribution {
        match player {
            Player::Reach => self.delta(s, own, other),
            Player::Safe => self.delta(s, other, own),
        }
    }

    pub fn is_target(&self, s: usize) -> bool {
        self.target[s]
    }

    pub fn target_mask(&self) -> &[bool] {
        &self.target
    }

    pub fn targets(&self) -> StateSet {
        (0..self.num_states()).filter(|&s| self.target[s]).collect()
    }

    pub fn init(&self) -> Option<usize> {
        self.init
    }

    /// Potential successors `Supp(δ(s, a, b))`.
    pub fn dest(&self, s: usize, a: usize, b: usize) -> Result<StateSet, GameError> {
        if a >= self.num_moves(Player::Reach, s) {
            return Err(GameError::UnavailableMove { state: s, player: Player::Reach, index: a });
        }
        if b >= self.num_moves(Player::Safe, s) {
            return Err(GameError::UnavailableMove { state: s, player: Player::Safe, index: b });
        }
        Ok(self.delta(s, a, b).support().collect())
    }

    /// Copy of this game in which every state of `states` only loops to itself.
    /// Move sets are kept so strategies remain compatible.
    pub fn with_absorbing(&self, states: &StateSet) -> Game {
        let mut g = self.clone();
        for &s in states {
            for d in &mut g.delta[s] {
                *d = Distribution::dirac(s);
            }
        }
        g
    }

    /// One-player game obtained by fixing `strategy`: its owner gets the single
    /// move `_` everywhere and each remaining move pair mixes the transitions
    /// by the strategy's probabilities.
    pub fn fix_strategy(&self, strategy: &MixedStrategy) -> Game {
        let owner = strategy.owner();
        let other = owner.opponent();
        let mut g = self.clone();
        for s in 0..self.num_states() {
            let k = self.num_moves(other, s);
            let mixed: Vec<Distribution> = (0..k)
                .map(|b| {
                    Distribution::from_entries(strategy.probs(s).iter().enumerate().flat_map(|(a, &p)| {
                        self.delta_for(owner, s, a, b).entries().iter().map(move |&(t, q)| (t, p * q))
                    }))
                })
                .collect();
            g.moves[owner.slot()][s] = vec!["_".to_string()];
            g.delta[s] = mixed;
        }
        g
    }

    pub fn with_init(mut self, init: Option<usize>) -> Game {
        self.init = init;
        self
    }

    /// Converts back to a name-level description in canonical order.
    pub fn to_def(&self) -> GameDef {
        let mut def = GameDef {
            states: self.names.clone(),
            target: self.targets().into_iter().map(|s| self.names[s].clone()).collect(),
            init: self.init.map(|s| self.names[s].clone()),
            ..GameDef::default()
        };
        for s in 0..self.num_states() {
            def.moves1.insert(self.names[s].clone(), self.moves[0][s].clone());
            def.moves2.insert(self.names[s].clone(), self.moves[1][s].clone());
            for (a, m1) in self.moves[0][s].iter().enumerate() {
                for (b, m2) in self.moves[1][s].iter().enumerate() {
                    def.transitions.push(TransitionDef {
                        from: self.names[s].clone(),
                        m1: m1.clone(),
                        m2: m2.clone(),
                        to: self
                            .delta(s, a, b)
                            .entries()
                            .iter()
                            .map(|&(t, p)| (self.names[t].clone(), p))
                            .collect(),
                    });
                }
            }
        }
        def
    }
}

/// Per-state estimate in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Valuation(Vec<f64>);

impl Valuation {
    pub fn new(values: Vec<f64>) -> Self {
        Valuation(values)
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Valuation(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `1 - v` pointwise.
    pub fn complement(&self) -> Valuation {
        Valuation(self.0.iter().map(|x| 1.0 - x).collect())
    }

    /// Max-norm distance.
    pub fn max_diff(&self, other: &Valuation) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `self <= other + tol` pointwise.
    pub fn le(&self, other: &Valuation, tol: f64) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a <= *b + tol)
    }
}

impl Index<usize> for Valuation {
    type Output = f64;
    fn index(&self, s: usize) -> &f64 {
        &self.0[s]
    }
}

impl IndexMut<usize> for Valuation {
    fn index_mut(&mut self, s: usize) -> &mut f64 {
        &mut self.0[s]
    }
}

/// Clips near-zero probabilities and renormalizes.
pub fn clean_probabilities(probs: &mut [f64]) {
    for p in probs.iter_mut() {
        if *p < CLIP_TOL {
            *p = 0.0;
        }
    }
    let sum: f64 = probs.iter().sum();
    if sum > 0.0 {
        for p in probs.iter_mut() {
            *p /= sum;
        }
    }
}

/// Memoryless randomized strategy: one distribution over the owner's moves
/// per state, stored densely by move index.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    owner: Player,
    dist: Vec<Vec<f64>>,
}

impl MixedStrategy {
    pub fn uniform(game: &Game, owner: Player) -> Self {
        let dist = (0..game.num_states())
            .map(|s| {
                let k = game.num_moves(owner, s);
                vec![1.0 / k as f64; k]
            })
            .collect();
        MixedStrategy { owner, dist }
    }

    /// Pure strategy choosing move `choice(s)` at every state.
    pub fn pure(game: &Game, owner: Player, choice: impl Fn(usize) -> usize) -> Self {
        let dist = (0..game.num_states())
            .map(|s| {
                let mut d = vec![0.0; game.num_moves(owner, s)];
                d[choice(s)] = 1.0;
                d
            })
            .collect();
        MixedStrategy { owner, dist }
    }

    pub fn from_dists(game: &Game, owner: Player, dist: Vec<Vec<f64>>) -> Result<Self, GameError> {
        if dist.len() != game.num_states() {
            return Err(GameError::BadStrategy {
                state: dist.len().min(game.num_states()),
                player: owner,
                reason: format!("expected {} states, got {}", game.num_states(), dist.len()),
            });
        }
        let mut strategy = MixedStrategy { owner, dist: Vec::with_capacity(dist.len()) };
        for (s, d) in dist.into_iter().enumerate() {
            strategy.dist.push(Vec::new());
            strategy.set(game, s, d)?;
        }
        Ok(strategy)
    }

    pub fn owner(&self) -> Player {
        self.owner
    }

    pub fn probs(&self, s: usize) -> &[f64] {
        &self.dist[s]
    }

    /// Replaces the distribution at `s` after clipping and renormalizing.
    pub fn set(&mut self, game: &Game, s: usize, mut probs: Vec<f64>) -> Result<(), GameError> {
        let bad = |reason: String| GameError::BadStrategy { state: s, player: self.owner, reason };
        if probs.len() != game.num_moves(self.owner, s) {
            return Err(bad(format!(
                "{} probabilities for {} available moves",
                probs.len(),
                game.num_moves(self.owner, s)
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(bad("negative or non-finite probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(bad(format!("probabilities sum to {sum}")));
        }
        clean_probabilities(&mut probs);
        self.dist[s] = probs;
        Ok(())
    }

    pub fn support(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.dist[s].iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, _)| i)
    }

    pub fn is_pure(&self) -> bool {
        self.dist.iter().all(|d| d.iter().filter(|p| **p > 0.0).count() == 1)
    }
}

fn check_owner(strategy: &MixedStrategy, player: Player) -> Result<(), GameError> {
    if strategy.owner != player {
        return Err(GameError::BadStrategy {
            state: 0,
            player,
            reason: format!("strategy belongs to {}", strategy.owner),
        });
    }
    Ok(())
}

/// `Dest(s, σ, τ)`: union of successors over both strategies' supports.
pub fn dest_strat(
    game: &Game,
    s: usize,
    sigma: &MixedStrategy,
    tau: &MixedStrategy,
) -> Result<StateSet, GameError> {
    check_owner(sigma, Player::Reach)?;
    check_owner(tau, Player::Safe)?;
    let mut out = StateSet::new();
    for a in sigma.support(s) {
        for b in tau.support(s) {
            out.extend(game.delta(s, a, b).support());
        }
    }
    Ok(out)
}

/// Expected value of `v` after one step from `s` under both strategies.
pub fn pre_pair(
    game: &Game,
    v: &Valuation,
    s: usize,
    sigma: &MixedStrategy,
    tau: &MixedStrategy,
) -> Result<f64, GameError> {
    check_owner(sigma, Player::Reach)?;
    check_owner(tau, Player::Safe)?;
    let mut total = 0.0;
    for (a, pa) in sigma.probs(s).iter().enumerate() {
        if *pa == 0.0 {
            continue;
        }
        for (b, pb) in tau.probs(s).iter().enumerate() {
            if *pb == 0.0 {
                continue;
            }
            total += pa * pb * game.delta(s, a, b).expect(v.values());
        }
    }
    Ok(total)
}

/// One-shot payoff matrix at `s`: rows are reach moves, columns safe moves.
pub fn payoff_matrix(game: &Game, v: &Valuation, s: usize) -> PayoffMatrix {
    payoff_matrix_for(game, v, s, Player::Reach)
}

/// One-shot payoff matrix with `maximizer`'s moves as rows.
pub fn payoff_matrix_for(game: &Game, v: &Valuation, s: usize, maximizer: Player) -> PayoffMatrix {
    let minimizer = maximizer.opponent();
    let rows = game.moves(maximizer, s).to_vec();
    let cols = game.moves(minimizer, s).to_vec();
    let mut entries = Vec::with_capacity(rows.len() * cols.len());
    for r in 0..rows.len() {
        for c in 0..cols.len() {
            entries.push(game.delta_for(maximizer, s, r, c).expect(v.values()));
        }
    }
    PayoffMatrix::with_labels(rows, cols, entries)
}

/// Value and optimal strategies of the one-shot game at `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreSolution {
    pub value: f64,
    /// Distribution over the maximizer's moves.
    pub max_strategy: Vec<f64>,
    /// Distribution over the minimizer's moves.
    pub min_strategy: Vec<f64>,
}

/// Optimal one-step operator: `sup_σ inf_τ Pre_{σ,τ}(v)(s)` where the
/// sup ranges over `maximizer`'s strategies.
///
/// For `maximizer = Safe` the caller passes the safety estimate (typically
/// `1 - v` of a reachability valuation).
pub fn pre_opt(game: &Game, v: &Valuation, s: usize, maximizer: Player) -> Result<PreSolution, LpError> {
    let m = payoff_matrix_for(game, v, s, maximizer);
    let sol = solve_matrix(&m)?;
    Ok(PreSolution {
        value: sol.value,
        max_strategy: sol.row_strategy,
        min_strategy: sol.col_strategy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn idx(g: &Game, name: &str) -> usize {
        g.state_index(name).unwrap()
    }

    #[test]
    fn fixtures_validate_clean() {
        for def in [fixtures::irrational_value_def(), fixtures::mixed_exit_def(), fixtures::ec_trap_def()] {
            assert_eq!(validate_game(&def), vec![]);
        }
    }

    #[test]
    fn bad_sum_gives_one_diagnostic() {
        let mut def = fixtures::irrational_value_def();
        let t = def.transitions.iter_mut().find(|t| t.from == "s5").unwrap();
        t.to = vec![("s1".into(), 0.5), ("s2".into(), 0.4)];
        let diags = validate_game(&def);
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert!(matches!(diags[0], Diagnostic::DistributionSum { .. }));
        assert!(def.compile().is_err());
    }

    #[test]
    fn unknown_state_gives_one_diagnostic() {
        let mut def = fixtures::irrational_value_def();
        let t = def.transitions.iter_mut().find(|t| t.from == "s5").unwrap();
        t.to = vec![("s1".into(), 0.6), ("nowhere".into(), 0.4)];
        let diags = validate_game(&def);
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert!(matches!(diags[0], Diagnostic::UnknownState { .. }));
    }

    #[test]
    fn missing_pair_and_empty_moves_are_reported() {
        let mut def = fixtures::irrational_value_def();
        def.transitions.retain(|t| !(t.from == "s0" && t.m1 == "a" && t.m2 == "c"));
        def.moves2.insert("s1".into(), vec![]);
        let diags = validate_game(&def);
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::MissingTransition { .. })));
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::EmptyMoveSet { .. })));
        // the s1 transition now names an unavailable safe move
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::UnknownMove { .. })));
    }

    #[test]
    fn dest_on_running_example() {
        let g = fixtures::irrational_value();
        let s0 = idx(&g, "s0");
        let (a, b) = (0, 1);
        let (c, d) = (0, 1);
        let ad: Vec<_> = g.dest(s0, a, d).unwrap().into_iter().map(|s| g.state_name(s).to_string()).collect();
        assert_eq!(ad, ["s0", "s2"]);
        let bc = g.dest(s0, b, c).unwrap();
        assert_eq!(bc, StateSet::from([idx(&g, "s2")]));
        let s2 = idx(&g, "s2");
        assert_eq!(g.dest(s2, 0, 0).unwrap(), StateSet::from([s2]));
        assert!(matches!(g.dest(s0, 5, 0), Err(GameError::UnavailableMove { .. })));
    }

    #[test]
    fn dest_strat_unions_supports() {
        let g = fixtures::mixed_exit();
        let s5 = idx(&g, "s5");
        let sigma = MixedStrategy::uniform(&g, Player::Reach);
        let tau = MixedStrategy::pure(&g, Player::Safe, |_| 0);
        let got = dest_strat(&g, s5, &sigma, &tau).unwrap();
        assert_eq!(got, StateSet::from([idx(&g, "s3"), idx(&g, "s4"), s5]));

        let g = fixtures::irrational_value();
        let s0 = idx(&g, "s0");
        let sigma = MixedStrategy::pure(&g, Player::Reach, |_| 0);
        let tau = MixedStrategy::pure(&g, Player::Safe, |_| 0);
        assert_eq!(dest_strat(&g, s0, &sigma, &tau).unwrap(), StateSet::from([idx(&g, "s1")]));
    }

    #[test]
    fn pre_pair_examples() {
        let g = fixtures::irrational_value();
        let s0 = idx(&g, "s0");
        let mut v = Valuation::constant(g.num_states(), 0.0);
        v[idx(&g, "s2")] = 1.0;
        let b = MixedStrategy::pure(&g, Player::Reach, |s| if s == s0 { 1 } else { 0 });
        let c = MixedStrategy::pure(&g, Player::Safe, |_| 0);
        assert_eq!(pre_pair(&g, &v, s0, &b, &c).unwrap(), 1.0);

        let a = MixedStrategy::pure(&g, Player::Reach, |_| 0);
        let d = MixedStrategy::pure(&g, Player::Safe, |s| if s == s0 { 1 } else { 0 });
        assert_eq!(pre_pair(&g, &v, s0, &a, &d).unwrap(), 0.5);

        let u = MixedStrategy::uniform(&g, Player::Reach);
        let w = MixedStrategy::uniform(&g, Player::Safe);
        let c7 = Valuation::constant(g.num_states(), 0.7);
        for s in 0..g.num_states() {
            assert!((pre_pair(&g, &c7, s, &u, &w).unwrap() - 0.7).abs() < 1e-15);
        }
        assert!(pre_pair(&g, &v, s0, &w_as_reach(&g), &w).is_err());
    }

    fn w_as_reach(g: &Game) -> MixedStrategy {
        MixedStrategy::uniform(g, Player::Safe)
    }

    #[test]
    fn payoff_matrices() {
        let g = fixtures::mixed_exit();
        let mut v = Valuation::constant(g.num_states(), 0.0);
        v[idx(&g, "s5")] = 1.0;
        v[idx(&g, "s3")] = 1.0;
        let m = payoff_matrix(&g, &v, idx(&g, "s5"));
        assert_eq!(m.to_rows(), vec![vec![1.0, 0.5], vec![0.5, 1.0]]);

        let zero = Valuation::constant(g.num_states(), 0.0);
        assert!(payoff_matrix(&g, &zero, idx(&g, "s5")).entries().iter().all(|x| *x == 0.0));

        let g = fixtures::irrational_value();
        let mut l = Valuation::constant(g.num_states(), 0.0);
        l[idx(&g, "s2")] = 1.0;
        let m = payoff_matrix(&g, &l, idx(&g, "s0"));
        assert_eq!(m.to_rows(), vec![vec![0.0, 0.5], vec![1.0, 0.0]]);
    }

    #[test]
    fn pre_opt_examples() {
        let g = fixtures::irrational_value();
        let mut l = Valuation::constant(g.num_states(), 0.0);
        l[idx(&g, "s2")] = 1.0;
        let sol = pre_opt(&g, &l, idx(&g, "s0"), Player::Reach).unwrap();
        assert!((sol.value - 1.0 / 3.0).abs() < 1e-12);

        // single move each: s5 is a pure chance node
        let s5 = idx(&g, "s5");
        let sol = pre_opt(&g, &l, s5, Player::Reach).unwrap();
        assert!((sol.value - 0.4).abs() < 1e-15);
        assert_eq!(sol.max_strategy, vec![1.0]);
        assert_eq!(sol.min_strategy, vec![1.0]);
    }

    #[test]
    fn strategy_setters_reject_garbage() {
        let g = fixtures::irrational_value();
        let mut s = MixedStrategy::uniform(&g, Player::Reach);
        assert!(s.set(&g, 0, vec![0.5]).is_err());
        assert!(s.set(&g, 0, vec![0.7, 0.7]).is_err());
        assert!(s.set(&g, 0, vec![-0.1, 1.1]).is_err());
        s.set(&g, 0, vec![1.0 - 1e-13, 1e-13]).unwrap();
        assert_eq!(s.probs(0), &[1.0, 0.0]);
        assert!(!MixedStrategy::uniform(&g, Player::Reach).is_pure());
        assert!(MixedStrategy::pure(&g, Player::Reach, |_| 0).is_pure());
    }

    #[test]
    fn compile_round_trips_through_def() {
        let g = fixtures::irrational_value();
        assert_eq!(g.to_def().compile().unwrap(), g);
    }
}
