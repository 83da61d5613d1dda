//! Bounded strategy iteration.
//!
//! Both players keep a memoryless randomized strategy. Each round the two
//! strategies are evaluated exactly, giving a certified lower bound (what the
//! reach strategy guarantees) and a certified upper bound (one minus what the
//! safety strategy guarantees). End components are deflated on the upper
//! side, which also rewrites the safety strategy, and both strategies are then
//! improved at the states where the one-step operator still moves.

use serde::{Deserialize, Serialize};

use crate::bvi::{play_winning, best_exit_over, deflate_with_strategy, gap, run_bvi, BoundsResult, BviConfig, Prepared, Termination, TraceEntry};
use crate::game::{pre_opt, Game, MixedStrategy, Player, StateSet, Valuation};
use crate::graph::{attractor, sure_winning, EndComponent};
use crate::{linalg, SolverError, BEST_EXIT_TOL, IMPROVE_TOL, LP_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Policy iteration over pure counter-strategies with linear solves.
    #[default]
    Exact,
    /// Bounded value iteration on the induced one-player game.
    Iterative,
}

#[derive(Debug, Clone)]
pub struct SiConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    pub improve_tol: f64,
    pub eval_mode: EvalMode,
    /// Initial `(reach, safe)` strategies; uniform when absent.
    pub seed: Option<(MixedStrategy, MixedStrategy)>,
    pub trace: bool,
}

impl Default for SiConfig {
    fn default() -> Self {
        SiConfig {
            epsilon: 1e-6,
            max_iters: 10_000,
            improve_tol: IMPROVE_TOL,
            eval_mode: EvalMode::Exact,
            seed: None,
            trace: false,
        }
    }
}

impl SiConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0) {
            return Err(SolverError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(SolverError::Config("max_iters must be at least 1".into()));
        }
        if !(self.improve_tol > 0.0 && self.improve_tol < self.epsilon) {
            return Err(SolverError::Config(format!(
                "improve_tol must lie in (0, epsilon), got {}",
                self.improve_tol
            )));
        }
        Ok(())
    }
}

/// Snapshot of one strategy-iteration round.
#[derive(Debug, Clone)]
pub struct SiState {
    pub sigma_reach: MixedStrategy,
    pub sigma_safe: MixedStrategy,
    pub lower: Valuation,
    pub upper: Valuation,
    pub lower_set: StateSet,
    pub upper_set: StateSet,
}

/// Switching threshold inside policy iteration; smaller gains are noise.
const SWITCH_TOL: f64 = 1e-12;

/// Hard bound on policy-iteration rounds; each round strictly improves.
const MAX_POLICY_ROUNDS: usize = 100_000;

/// Per-state, per-action successor distributions of a one-player process.
type Actions = Vec<Vec<Vec<(usize, f64)>>>;

fn induced_actions(game: &Game, strategy: &MixedStrategy) -> Actions {
    let fixed = game.fix_strategy(strategy);
    let chooser = strategy.owner().opponent();
    (0..game.num_states())
        .map(|s| {
            (0..fixed.num_moves(chooser, s))
                .map(|b| fixed.delta_for(chooser, s, b, 0).entries().to_vec())
                .collect()
        })
        .collect()
}

/// Exact reachability value of `target` in a one-player process where the
/// chooser maximizes (`maximize`) or minimizes. Every state outside `unknown`
/// has value 1 on `target` and 0 otherwise.
fn policy_iteration(
    actions: &Actions,
    target: &[bool],
    unknown: &[bool],
    mut policy: Vec<usize>,
    maximize: bool,
) -> Result<Vec<f64>, SolverError> {
    let n = target.len();
    let ids: Vec<usize> = (0..n).filter(|&s| unknown[s]).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &s) in ids.iter().enumerate() {
        pos[s] = i;
    }
    let base: Vec<f64> = (0..n).map(|s| if target[s] { 1.0 } else { 0.0 }).collect();
    let q = |x: &[f64], s: usize, a: usize| -> f64 { actions[s][a].iter().map(|&(t, p)| p * x[t]).sum() };

    for _ in 0..MAX_POLICY_ROUNDS {
        let m = ids.len();
        let mut a = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for (i, &s) in ids.iter().enumerate() {
            a[i][i] += 1.0;
            for &(t, p) in &actions[s][policy[s]] {
                if unknown[t] {
                    a[i][pos[t]] -= p;
                } else {
                    b[i] += p * base[t];
                }
            }
        }
        let sol = linalg::solve(a, b).ok_or(SolverError::Singular)?;
        let mut x = base.clone();
        for (i, &s) in ids.iter().enumerate() {
            x[s] = sol[i].clamp(0.0, 1.0);
        }
        let mut changed = false;
        for &s in &ids {
            let mut best = policy[s];
            let mut best_q = q(&x, s, best);
            for act in 0..actions[s].len() {
                let v = q(&x, s, act);
                let better = if maximize { v > best_q + SWITCH_TOL } else { v < best_q - SWITCH_TOL };
                if better {
                    best = act;
                    best_q = v;
                }
            }
            if best != policy[s] {
                policy[s] = best;
                changed = true;
            }
        }
        if !changed {
            return Ok(x);
        }
    }
    Err(SolverError::Internal("policy iteration did not converge".into()))
}

fn check_strategy(game: &Game, strategy: &MixedStrategy, owner: Player) -> Result<(), SolverError> {
    let ok = strategy.owner() == owner
        && (0..game.num_states()).all(|s| strategy.probs(s).len() == game.num_moves(owner, s));
    if ok {
        Ok(())
    } else {
        Err(crate::GameError::BadStrategy {
            state: 0,
            player: owner,
            reason: "strategy does not match the game".into(),
        }
        .into())
    }
}

/// Minimal probability of reaching the target when the reach player plays
/// `sigma` and the safety player responds optimally.
pub fn eval_reach_strategy(game: &Game, sigma: &MixedStrategy) -> Result<Valuation, SolverError> {
    check_strategy(game, sigma, Player::Reach)?;
    let actions = induced_actions(game, sigma);
    let n = game.num_states();
    let target = game.target_mask().to_vec();
    // zero states: the safety player can avoid the target forever
    let mut zero: Vec<bool> = target.iter().map(|t| !t).collect();
    loop {
        let next: Vec<bool> = (0..n)
            .map(|s| zero[s] && actions[s].iter().any(|act| act.iter().all(|&(t, _)| zero[t])))
            .collect();
        if next == zero {
            break;
        }
        zero = next;
    }
    let unknown: Vec<bool> = (0..n).map(|s| !target[s] && !zero[s]).collect();
    // any counter-policy is absorbed into target or zero states from here
    let x = policy_iteration(&actions, &target, &unknown, vec![0; n], false)?;
    Ok(Valuation::new(x))
}

/// Probability of staying outside the target forever that the safety player
/// guarantees with `tau` against every reach strategy.
pub fn eval_safe_strategy(game: &Game, tau: &MixedStrategy) -> Result<Valuation, SolverError> {
    check_strategy(game, tau, Player::Safe)?;
    let actions = induced_actions(game, tau);
    let n = game.num_states();
    let target = game.target_mask().to_vec();
    // backward BFS: distance to the target over any action
    let mut dist = vec![usize::MAX; n];
    let mut frontier: Vec<usize> = (0..n).filter(|&s| target[s]).collect();
    for &s in &frontier {
        dist[s] = 0;
    }
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for s in 0..n {
            if dist[s] == usize::MAX
                && actions[s].iter().any(|act| act.iter().any(|&(t, _)| dist[t] == d - 1))
            {
                next.push(s);
            }
        }
        for &s in &next {
            dist[s] = d;
        }
        frontier = next;
    }
    let unknown: Vec<bool> = (0..n).map(|s| !target[s] && dist[s] != usize::MAX).collect();
    // proper start: every state moves closer to the target with positive probability
    let policy: Vec<usize> = (0..n)
        .map(|s| {
            if !unknown[s] {
                return 0;
            }
            (0..actions[s].len())
                .find(|&a| actions[s][a].iter().any(|&(t, _)| dist[t] < dist[s]))
                .unwrap_or(0)
        })
        .collect();
    let reach = policy_iteration(&actions, &target, &unknown, policy, true)?;
    Ok(Valuation::new(reach.iter().map(|r| 1.0 - r).collect()))
}

/// Like [`eval_reach_strategy`], choosing the evaluation method. The
/// iterative result is a sound lower bound within `epsilon / 10`.
pub fn eval_reach_with(game: &Game, sigma: &MixedStrategy, mode: EvalMode, epsilon: f64) -> Result<Valuation, SolverError> {
    match mode {
        EvalMode::Exact => eval_reach_strategy(game, sigma),
        EvalMode::Iterative => {
            check_strategy(game, sigma, Player::Reach)?;
            let induced = game.fix_strategy(sigma).with_init(None);
            Ok(run_bvi(&induced, &iterative_config(epsilon))?.lower)
        }
    }
}

/// Like [`eval_safe_strategy`], choosing the evaluation method. The
/// iterative result is a sound lower bound on the safety value.
pub fn eval_safe_with(game: &Game, tau: &MixedStrategy, mode: EvalMode, epsilon: f64) -> Result<Valuation, SolverError> {
    match mode {
        EvalMode::Exact => eval_safe_strategy(game, tau),
        EvalMode::Iterative => {
            check_strategy(game, tau, Player::Safe)?;
            let induced = game.fix_strategy(tau).with_init(None);
            Ok(run_bvi(&induced, &iterative_config(epsilon))?.upper.complement())
        }
    }
}

fn iterative_config(epsilon: f64) -> BviConfig {
    let eps = epsilon / 10.0;
    BviConfig {
        epsilon: eps,
        lp_tol: LP_TOL.min(eps / 10.0),
        best_exit_tol: BEST_EXIT_TOL.min(eps / 10.0),
        ..BviConfig::default()
    }
}

/// States outside target and sure-winning region where the one-step operator
/// improves `l` (reach side) or `1 - u` (safe side) by more than `tol`.
pub fn improvement_sets(game: &Game, l: &Valuation, u: &Valuation, tol: f64) -> Result<(StateSet, StateSet), SolverError> {
    let w = sure_winning(game);
    let safety = u.complement();
    let mut lower_set = StateSet::new();
    let mut upper_set = StateSet::new();
    for s in 0..game.num_states() {
        if game.is_target(s) || w.contains(&s) {
            continue;
        }
        if pre_opt(game, l, s, Player::Reach)?.value > l[s] + tol {
            lower_set.insert(s);
        }
        if pre_opt(game, &safety, s, Player::Safe)?.value > safety[s] + tol {
            upper_set.insert(s);
        }
    }
    Ok((lower_set, upper_set))
}

/// Deflates the upper bound `u` inside `c` and rewrites `tau` at every peeled
/// state to a best response against the leaving strategy.
pub fn deflate_si(
    game: &Game,
    mut tau: MixedStrategy,
    u: &Valuation,
    c: &EndComponent,
) -> Result<(Valuation, MixedStrategy), SolverError> {
    let mut out = u.clone();
    let mut diagnostics = Vec::new();
    deflate_with_strategy(game, &mut out, &mut tau, &c.states, BEST_EXIT_TOL, &mut diagnostics)?;
    Ok((out, tau))
}

/// Safety-side counterpart of deflation, acting on a safety valuation `w`:
/// each round raises `w` inside the remaining set to one minus the best exit
/// of `1 - w`.
pub fn inflate(game: &Game, w: &Valuation, c: &EndComponent) -> Result<Valuation, SolverError> {
    let mut out = w.clone();
    let mut x = c.states.clone();
    while !x.is_empty() {
        let (best, witnesses, _) = best_exit_over(game, &out.complement(), &x, BEST_EXIT_TOL)?;
        let peeled = attractor(game, &x, &witnesses);
        if peeled.is_empty() {
            return Err(SolverError::Internal("inflation made no progress".into()));
        }
        for &s in &x {
            out[s] = out[s].max(1.0 - best);
        }
        x = x.difference(&peeled).copied().collect();
    }
    Ok(out)
}

pub fn run_bsi(game: &Game, cfg: &SiConfig) -> Result<BoundsResult, SolverError> {
    cfg.validate()?;
    let prep = Prepared::new(game);
    let g = &prep.game;
    let n = g.num_states();
    let init = game.init();
    let (mut sigma, mut tau) = match &cfg.seed {
        Some((s, t)) => {
            check_strategy(g, s, Player::Reach)?;
            check_strategy(g, t, Player::Safe)?;
            (s.clone(), t.clone())
        }
        None => (MixedStrategy::uniform(g, Player::Reach), MixedStrategy::uniform(g, Player::Safe)),
    };
    let mut trace = cfg.trace.then(Vec::new);
    let mut diagnostics = Vec::new();
    let mut iterations = 0;

    let (lower, upper, termination) = loop {
        iterations += 1;
        let lower = eval_reach_with(g, &sigma, cfg.eval_mode, cfg.epsilon)?;
        let raw_upper = eval_safe_with(g, &tau, cfg.eval_mode, cfg.epsilon)?.complement();
        let mut deflated = raw_upper.clone();
        for c in &prep.mecs.components {
            deflate_with_strategy(g, &mut deflated, &mut tau, &c.states, BEST_EXIT_TOL, &mut diagnostics)?;
        }
        // the certificate is what the rewritten strategy guarantees
        let upper = eval_safe_with(g, &tau, cfg.eval_mode, cfg.epsilon)?.complement();

        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry {
                iteration: iterations,
                lower: lower.values().to_vec(),
                upper_swept: raw_upper.values().to_vec(),
                upper: upper.values().to_vec(),
            });
        }

        if gap(&lower, &upper, init) < cfg.epsilon {
            break (lower, upper, Termination::Gap);
        }
        let safety = deflated.complement();
        let mut lower_set = Vec::new();
        let mut upper_set = Vec::new();
        for s in 0..n {
            if prep.fixed[s] {
                continue;
            }
            let up = pre_opt(g, &lower, s, Player::Reach)?;
            if up.value > lower[s] + cfg.improve_tol {
                lower_set.push((s, up.max_strategy));
            }
            let down = pre_opt(g, &safety, s, Player::Safe)?;
            if down.value > safety[s] + cfg.improve_tol {
                upper_set.push((s, down.max_strategy));
            }
        }
        if lower_set.is_empty() {
            break (lower, upper, Termination::LowerFix);
        }
        if upper_set.is_empty() {
            break (lower, upper, Termination::UpperFix);
        }
        if iterations >= cfg.max_iters {
            break (lower, upper, Termination::IterCap);
        }
        for (s, strat) in lower_set {
            sigma.set(g, s, strat)?;
        }
        for (s, strat) in upper_set {
            tau.set(g, s, strat)?;
        }
    };
    diagnostics.dedup();
    play_winning(game, &prep.winning, &mut tau)?;

    Ok(BoundsResult {
        lower,
        upper,
        iterations,
        termination,
        trace,
        reach_strategy: sigma,
        safe_strategy: tau,
        winning: prep.winning.clone(),
        mecs: prep.mecs.clone(),
        diagnostics,
    })
}

/// Runs one round of strategy iteration from the given strategies and
/// reports the intermediate state, including the improvement sets.
pub fn si_round(game: &Game, sigma: &MixedStrategy, tau: &MixedStrategy, improve_tol: f64) -> Result<SiState, SolverError> {
    let prep = Prepared::new(game);
    let g = &prep.game;
    let lower = eval_reach_strategy(g, sigma)?;
    let mut upper = eval_safe_strategy(g, tau)?.complement();
    let mut tau = tau.clone();
    let mut diagnostics = Vec::new();
    for c in &prep.mecs.components {
        deflate_with_strategy(g, &mut upper, &mut tau, &c.states, BEST_EXIT_TOL, &mut diagnostics)?;
    }
    let (lower_set, upper_set) = improvement_sets(g, &lower, &upper, improve_tol)?;
    Ok(SiState { sigma_reach: sigma.clone(), sigma_safe: tau, lower, upper, lower_set, upper_set })
}
