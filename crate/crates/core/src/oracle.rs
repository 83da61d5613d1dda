//! Reference machinery independent of the solving engines: induced Markov
//! chains with exact reachability, Monte Carlo simulation, seeded random
//! games and a brute-force solver for one-player games.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::bvi::{run_bvi, BviConfig, Termination};
use crate::game::{Game, GameDef, GameError, MixedStrategy, Player, StateSet, TransitionDef, Valuation};
use crate::graph::sure_winning;
use crate::SolverError;

/// Markov chain obtained by fixing both players' strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    /// Sparse rows sorted by successor.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl InducedChain {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn prob(&self, s: usize, t: usize) -> f64 {
        self.rows[s].iter().find(|&&(u, _)| u == t).map_or(0.0, |&(_, p)| p)
    }

    /// One-step expectation of `v` from `s`.
    pub fn expect(&self, v: &Valuation, s: usize) -> f64 {
        self.rows[s].iter().map(|&(t, p)| p * v[t]).sum()
    }
}

/// `P(s, s') = Σ_{a,b} σ(s)(a) τ(s)(b) δ(s,a,b)(s')`, with target and
/// sure-winning states turned into self-loops.
pub fn induced_chain(game: &Game, sigma: &MixedStrategy, tau: &MixedStrategy) -> Result<InducedChain, GameError> {
    if sigma.owner() != Player::Reach || tau.owner() != Player::Safe {
        return Err(GameError::BadStrategy { state: 0, player: Player::Reach, reason: "owners swapped".into() });
    }
    let w = sure_winning(game);
    let rows = (0..game.num_states())
        .map(|s| {
            if game.is_target(s) || w.contains(&s) {
                return vec![(s, 1.0)];
            }
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            for (a, &pa) in sigma.probs(s).iter().enumerate() {
                for (b, &pb) in tau.probs(s).iter().enumerate() {
                    if pa == 0.0 || pb == 0.0 {
                        continue;
                    }
                    for &(t, p) in game.delta(s, a, b).entries() {
                        *row.entry(t).or_insert(0.0) += pa * pb * p;
                    }
                }
            }
            row.into_iter().filter(|&(_, p)| p > 0.0).collect()
        })
        .collect();
    Ok(InducedChain { rows })
}

/// States that can reach `target` with positive probability.
fn can_reach(chain: &InducedChain, target: &StateSet) -> Vec<bool> {
    let n = chain.num_states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, row) in chain.rows.iter().enumerate() {
        for &(t, _) in row {
            preds[t].push(s);
        }
    }
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = target.iter().copied().collect();
    for &t in &stack {
        seen[t] = true;
    }
    while let Some(t) = stack.pop() {
        for &s in &preds[t] {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    seen
}

/// Exact probability of eventually visiting `target` from every state.
pub fn chain_reach(chain: &InducedChain, target: &StateSet) -> Result<Valuation, SolverError> {
    let n = chain.num_states();
    let live = can_reach(chain, target);
    let unknown: Vec<usize> = (0..n).filter(|&s| live[s] && !target.contains(&s)).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        pos[s] = i;
    }
    let m = unknown.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (i, &s) in unknown.iter().enumerate() {
        for &(t, p) in &chain.rows[s] {
            if target.contains(&t) {
                b[i] += p;
            } else if pos[t] != usize::MAX {
                a[(i, pos[t])] -= p;
            }
        }
    }
    let x = a.lu().solve(&b).ok_or(SolverError::Singular)?;
    let mut out = vec![0.0; n];
    for &t in target {
        out[t] = 1.0;
    }
    for (i, &s) in unknown.iter().enumerate() {
        out[s] = x[i].clamp(0.0, 1.0);
    }
    Ok(Valuation::new(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct McEstimate {
    pub estimate: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    pub samples: u64,
    pub hits: u64,
    /// Runs cut off by the horizon cap; counted as misses.
    pub truncated: u64,
}

pub const DEFAULT_HORIZON: u64 = 100_000;

const BLOCK: u64 = 1024;

/// Simulates `samples` runs from `start` and counts visits to `target`.
/// Runs are split into blocks with independent streams, so the result only
/// depends on `seed`.
pub fn monte_carlo(
    chain: &InducedChain,
    target: &StateSet,
    start: usize,
    samples: u64,
    horizon_cap: u64,
    seed: u64,
) -> McEstimate {
    let live = can_reach(chain, target);
    let cumulative: Vec<Vec<(usize, f64)>> = chain
        .rows
        .iter()
        .map(|row| {
            let mut acc = 0.0;
            row.iter()
                .map(|&(t, p)| {
                    acc += p;
                    (t, acc)
                })
                .collect()
        })
        .collect();
    let blocks = samples.div_ceil(BLOCK);
    let (hits, truncated) = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(blk);
            let runs = BLOCK.min(samples - blk * BLOCK);
            let (mut hits, mut truncated) = (0u64, 0u64);
            for _ in 0..runs {
                let mut s = start;
                let mut steps = 0;
                loop {
                    if target.contains(&s) {
                        hits += 1;
                        break;
                    }
                    if !live[s] {
                        break;
                    }
                    if steps == horizon_cap {
                        truncated += 1;
                        break;
                    }
                    let row = &cumulative[s];
                    let total = row.last().map_or(1.0, |&(_, c)| c);
                    let u: f64 = rng.gen::<f64>() * total;
                    s = row.iter().find(|&&(_, c)| u < c).unwrap_or(row.last().expect("nonempty row")).0;
                    steps += 1;
                }
            }
            (hits, truncated)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let p = hits as f64 / samples as f64;
    McEstimate {
        estimate: p,
        half_width: 1.96 * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        hits,
        truncated,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RandomGameSpec {
    pub state_count: usize,
    pub max_moves_per_player: usize,
    /// Maximal support size of each transition distribution.
    pub branching: usize,
    pub target_fraction: f64,
    /// Per-state chance of wiring a two-state stay cycle.
    pub ec_bias: f64,
    pub seed: u64,
    /// Give the safety player a single move everywhere.
    #[serde(default)]
    pub single_player: bool,
    /// Only allow transitions towards higher state indices, so the only end
    /// components are the absorbing sinks.
    #[serde(default)]
    pub acyclic: bool,
}

impl Default for RandomGameSpec {
    fn default() -> Self {
        RandomGameSpec {
            state_count: 10,
            max_moves_per_player: 2,
            branching: 2,
            target_fraction: 0.2,
            ec_bias: 0.2,
            seed: 0,
            single_player: false,
            acyclic: false,
        }
    }
}

impl RandomGameSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.state_count < 2 {
            return Err("state count must be at least 2".into());
        }
        if self.max_moves_per_player == 0 || self.branching == 0 {
            return Err("moves and branching must be at least 1".into());
        }
        if !(self.target_fraction > 0.0 && self.target_fraction < 1.0) {
            return Err("target fraction must lie in (0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.ec_bias) {
            return Err("ec bias must lie in [0, 1)".into());
        }
        Ok(())
    }
}

/// Random game, deterministic in `spec.seed`. Always valid.
///
/// The last `round(target_fraction · n)` states form the target (at least
/// one); the state before them is a losing sink, so both objectives are
/// usually nontrivial.
pub fn gen_random_game(spec: &RandomGameSpec) -> GameDef {
    let n = spec.state_count.max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let targets = ((spec.target_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let first_target = n - targets;
    let sink = first_target.checked_sub(1).filter(|&s| s > 0);

    let mut def = GameDef {
        states: names.clone(),
        target: names[first_target..].to_vec(),
        init: Some(names[0].clone()),
        ..GameDef::default()
    };
    let moves = |rng: &mut ChaCha8Rng, trivial: bool| -> usize {
        if trivial {
            1
        } else {
            rng.gen_range(1..=spec.max_moves_per_player.max(1))
        }
    };
    // two-cycle partners for injected stay pairs
    let mut partner: Vec<Option<usize>> = vec![None; n];
    if !spec.acyclic {
        for s in 0..first_target {
            if Some(s) == sink || partner[s].is_some() || !rng.gen_bool(spec.ec_bias) {
                continue;
            }
            let t = rng.gen_range(0..first_target);
            if t != s && Some(t) != sink && partner[t].is_none() {
                partner[s] = Some(t);
                partner[t] = Some(s);
            }
        }
    }

    for s in 0..n {
        let absorbing = s >= first_target || Some(s) == sink;
        let m1 = if absorbing { 1 } else { moves(&mut rng, false) };
        let m2 = if absorbing { 1 } else { moves(&mut rng, spec.single_player) };
        let ms1: Vec<String> = (0..m1).map(|i| format!("a{i}")).collect();
        let ms2: Vec<String> = (0..m2).map(|i| format!("b{i}")).collect();
        for (i, a) in ms1.iter().enumerate() {
            for (j, b) in ms2.iter().enumerate() {
                let to: Vec<(String, f64)> = if absorbing {
                    vec![(names[s].clone(), 1.0)]
                } else if let (Some(t), 0, 0) = (partner[s], i, j) {
                    vec![(names[t].clone(), 1.0)]
                } else {
                    random_distribution(&mut rng, spec, s, n).into_iter().map(|(t, p)| (names[t].clone(), p)).collect()
                };
                def.transitions.push(TransitionDef { from: names[s].clone(), m1: a.clone(), m2: b.clone(), to });
            }
        }
        def.moves1.insert(names[s].clone(), ms1);
        def.moves2.insert(names[s].clone(), ms2);
    }
    def
}

fn random_distribution(rng: &mut ChaCha8Rng, spec: &RandomGameSpec, s: usize, n: usize) -> Vec<(usize, f64)> {
    let k = rng.gen_range(1..=spec.branching.max(1));
    let lo = if spec.acyclic { s + 1 } else { 0 };
    let mut picked: BTreeMap<usize, u32> = BTreeMap::new();
    for _ in 0..k {
        let t = rng.gen_range(lo..n);
        *picked.entry(t).or_insert(0) += rng.gen_range(1..=8);
    }
    let total: u32 = picked.values().sum();
    picked.into_iter().map(|(t, w)| (t, w as f64 / total as f64)).collect()
}

/// Exact value of a game where one player has a single move everywhere, by
/// enumerating the other player's pure memoryless strategies. Returns `None`
/// when neither player is trivial or there are more than `limit` policies.
pub fn brute_force_one_player(game: &Game, limit: usize) -> Result<Option<Valuation>, SolverError> {
    let n = game.num_states();
    let trivial = |p: Player| (0..n).all(|s| game.num_moves(p, s) == 1);
    let chooser = if trivial(Player::Safe) {
        Player::Reach
    } else if trivial(Player::Reach) {
        Player::Safe
    } else {
        return Ok(None);
    };
    let counts: Vec<usize> = (0..n).map(|s| game.num_moves(chooser, s)).collect();
    let total = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c).filter(|&x| x <= limit));
    let Some(total) = total else {
        return Ok(None);
    };
    let target = game.targets();
    let mut best: Option<Vec<f64>> = None;
    let mut choice = vec![0usize; n];
    for _ in 0..total {
        let own = MixedStrategy::pure(game, chooser, |s| choice[s]);
        let other = MixedStrategy::uniform(game, chooser.opponent());
        let (sigma, tau) = match chooser {
            Player::Reach => (own, other),
            Player::Safe => (other, own),
        };
        let v = chain_reach(&induced_chain(game, &sigma, &tau)?, &target)?;
        best = Some(match best {
            None => v.values().to_vec(),
            Some(b) => b
                .iter()
                .zip(v.values())
                .map(|(x, y)| if chooser == Player::Reach { x.max(*y) } else { x.min(*y) })
                .collect(),
        });
        // odometer increment
        for s in 0..n {
            choice[s] += 1;
            if choice[s] < counts[s] {
                break;
            }
            choice[s] = 0;
        }
    }
    Ok(best.map(Valuation::new))
}

/// High-precision reference: bounded value iteration at `1e-8` over all
/// states, stopped after `max_iters` sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub lower: Valuation,
    pub upper: Valuation,
    /// Whether the gap fell below `1e-8` everywhere.
    pub converged: bool,
}

impl Reference {
    pub fn midpoint(&self, s: usize) -> f64 {
        0.5 * (self.lower[s] + self.upper[s])
    }
}

pub fn reference_values(game: &Game, max_iters: usize) -> Result<Reference, SolverError> {
    let res = run_bvi(
        &game.clone().with_init(None),
        &BviConfig { epsilon: 1e-8, max_iters, lp_tol: 1e-11, best_exit_tol: 1e-11, ..BviConfig::default() },
    )?;
    Ok(Reference { converged: res.termination == Termination::Gap, lower: res.lower, upper: res.upper })
}
