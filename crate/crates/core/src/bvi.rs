//! Bounded value iteration with end-component deflation.
//!
//! The lower bound starts at the indicator of the target and climbs by the
//! optimal one-step operator. The upper bound starts at 1 outside the
//! sure-winning region and descends by the same operator; after every sweep
//! each maximal end component is deflated to the best value its states can
//! obtain when forced to leave it.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::game::{payoff_matrix_for, pre_opt, Game, MixedStrategy, Player, PreSolution, StateSet, Valuation};
use crate::graph::{attractor, keeping_moves, mec_decompose_excluding, sure_winning, EndComponent, MecDecomposition};
use crate::lp::LpError;
use crate::matrix_game::{solve_exit, MatrixGameSolution};
use crate::{SolverError, BEST_EXIT_TOL, EXIT_FLOOR, LP_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct BviConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    pub lp_tol: f64,
    pub best_exit_tol: f64,
    /// Skip deflation. The upper bound may then stall above the value.
    pub naive_upper: bool,
    /// Worker threads for the per-state matrix games of one sweep.
    pub threads: usize,
    pub trace: bool,
}

impl Default for BviConfig {
    fn default() -> Self {
        BviConfig {
            epsilon: 1e-6,
            max_iters: 1_000_000,
            lp_tol: LP_TOL,
            best_exit_tol: BEST_EXIT_TOL,
            naive_upper: false,
            threads: 1,
            trace: false,
        }
    }
}

impl BviConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0) {
            return Err(SolverError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(SolverError::Config("max_iters must be at least 1".into()));
        }
        for (name, tol) in [("lp_tol", self.lp_tol), ("best_exit_tol", self.best_exit_tol)] {
            if !(tol > 0.0 && tol < self.epsilon) {
                return Err(SolverError::Config(format!("{name} must lie in (0, epsilon), got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Termination {
    Gap,
    LowerFix,
    UpperFix,
    IterCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceEntry {
    pub iteration: usize,
    pub lower: Vec<f64>,
    /// Upper bound after the sweep, before deflation.
    pub upper_swept: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BoundsResult {
    pub lower: Valuation,
    pub upper: Valuation,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Option<Vec<TraceEntry>>,
    pub reach_strategy: MixedStrategy,
    pub safe_strategy: MixedStrategy,
    pub winning: StateSet,
    /// End components that were deflated.
    pub mecs: MecDecomposition,
    pub diagnostics: Vec<String>,
}

impl BoundsResult {
    pub fn gap(&self, init: Option<usize>) -> f64 {
        gap(&self.lower, &self.upper, init)
    }
}

pub(crate) fn gap(lower: &Valuation, upper: &Valuation, init: Option<usize>) -> f64 {
    match init {
        Some(s) => upper[s] - lower[s],
        None => (0..lower.len()).map(|s| upper[s] - lower[s]).fold(0.0, f64::max),
    }
}

/// Game with target and sure-winning states made absorbing, plus the
/// qualitative data both engines need.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub game: Game,
    pub winning: StateSet,
    /// True on target and sure-winning states; their values never change.
    pub fixed: Vec<bool>,
    pub mecs: MecDecomposition,
}

impl Prepared {
    pub fn new(game: &Game) -> Prepared {
        let winning = sure_winning(game);
        let sinks: StateSet = game.targets().union(&winning).copied().collect();
        let game = game.with_absorbing(&sinks);
        let mut fixed = vec![false; game.num_states()];
        for &s in &sinks {
            fixed[s] = true;
        }
        let mecs = mec_decompose_excluding(&game, &sinks);
        Prepared { game, winning, fixed, mecs }
    }

    pub fn initial_lower(&self) -> Valuation {
        Valuation::new((0..self.game.num_states()).map(|s| if self.game.is_target(s) { 1.0 } else { 0.0 }).collect())
    }

    pub fn initial_upper(&self) -> Valuation {
        Valuation::new((0..self.game.num_states()).map(|s| if self.winning.contains(&s) { 0.0 } else { 1.0 }).collect())
    }
}

pub(crate) struct Sweeper {
    pool: Option<rayon::ThreadPool>,
}

impl Sweeper {
    pub(crate) fn new(threads: usize) -> Result<Sweeper, SolverError> {
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| SolverError::Internal(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Sweeper { pool })
    }

    /// Optimal one-step games at every non-fixed state.
    pub(crate) fn sweep(
        &self,
        game: &Game,
        v: &Valuation,
        fixed: &[bool],
        maximizer: Player,
    ) -> Result<Vec<Option<PreSolution>>, LpError> {
        let solve = |s: usize| -> Result<Option<PreSolution>, LpError> {
            if fixed[s] {
                Ok(None)
            } else {
                pre_opt(game, v, s, maximizer).map(Some)
            }
        };
        match &self.pool {
            Some(pool) => pool.install(|| (0..game.num_states()).into_par_iter().map(solve).collect()),
            None => (0..game.num_states()).map(solve).collect(),
        }
    }
}

fn apply(v: &Valuation, sols: &[Option<PreSolution>]) -> Valuation {
    Valuation::new(
        (0..v.len())
            .map(|s| sols[s].as_ref().map_or(v[s], |p| p.value))
            .collect(),
    )
}

fn fixed_mask(game: &Game) -> Vec<bool> {
    let w = sure_winning(game);
    (0..game.num_states()).map(|s| game.is_target(s) || w.contains(&s)).collect()
}

/// One lower-bound sweep: `L'(s) = Pre(L)(s)` outside target and
/// sure-winning states.
pub fn lower_step(game: &Game, l: &Valuation) -> Result<Valuation, LpError> {
    let sols = Sweeper { pool: None }.sweep(game, l, &fixed_mask(game), Player::Reach)?;
    Ok(apply(l, &sols))
}

/// Makes `tau` play uniformly over the keeping moves on the sure-winning
/// region `w` of `game` (the original, not the absorbing copy).
pub(crate) fn play_winning(game: &Game, w: &StateSet, tau: &mut MixedStrategy) -> Result<(), SolverError> {
    for &s in w {
        let keep = keeping_moves(game, s, w);
        let mut probs = vec![0.0; game.num_moves(Player::Safe, s)];
        for &b in &keep {
            probs[b] = 1.0 / keep.len() as f64;
        }
        tau.set(game, s, probs)?;
    }
    Ok(())
}

/// One naive upper-bound sweep. Identical operator to [`lower_step`].
pub fn upper_step(game: &Game, u: &Valuation) -> Result<Valuation, LpError> {
    lower_step(game, u)
}

/// Smallest guaranteed gain that lets the lower bound switch strategies.
const SWITCH_MARGIN: f64 = 1e-12;

/// One round of deflation.
pub(crate) struct DeflateRound<'a> {
    pub witnesses: &'a StateSet,
    pub attracted: &'a StateSet,
    pub exits: &'a BTreeMap<usize, MatrixGameSolution>,
}

/// Best exit over `x` with respect to `v`.
pub(crate) fn best_exit_over(
    game: &Game,
    v: &Valuation,
    x: &StateSet,
    tol: f64,
) -> Result<(f64, StateSet, BTreeMap<usize, MatrixGameSolution>), SolverError> {
    let mut exits = BTreeMap::new();
    for &s in x {
        if let Some(sol) = solve_exit(game, v, s, x)? {
            exits.insert(s, sol);
        }
    }
    let best = exits.values().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    if exits.is_empty() {
        return Err(SolverError::NoExit { states: x.iter().copied().collect() });
    }
    let witnesses = exits.iter().filter(|(_, e)| e.value >= best - tol).map(|(&s, _)| s).collect();
    Ok((best, witnesses, exits))
}

/// Best exit value of `c` and the states attaining it.
pub fn best_exit(game: &Game, v: &Valuation, c: &EndComponent) -> Result<(f64, StateSet), SolverError> {
    let (best, witnesses, _) = best_exit_over(game, v, &c.states, BEST_EXIT_TOL)?;
    Ok((best, witnesses))
}

/// Peels `states` layer by layer, lowering `v` to the best exit of the
/// remaining set each round.
pub(crate) fn deflate_rounds(
    game: &Game,
    v: &mut Valuation,
    states: &StateSet,
    tol: f64,
    mut on_round: impl FnMut(&Valuation, DeflateRound<'_>) -> Result<(), SolverError>,
) -> Result<(), SolverError> {
    let mut x = states.clone();
    while !x.is_empty() {
        let (best, witnesses, exits) = best_exit_over(game, v, &x, tol)?;
        let attracted = attractor(game, &x, &witnesses);
        if attracted.is_empty() {
            return Err(SolverError::Internal("deflation made no progress".into()));
        }
        on_round(
            v,
            DeflateRound { witnesses: &witnesses, attracted: &attracted, exits: &exits },
        )?;
        for &s in &x {
            v[s] = v[s].min(best);
        }
        x = x.difference(&attracted).copied().collect();
    }
    Ok(())
}

/// Lowers `v` inside `c` to what its states can achieve when forced to leave.
pub fn deflate(game: &Game, v: &Valuation, c: &EndComponent) -> Result<Valuation, SolverError> {
    let mut out = v.clone();
    deflate_rounds(game, &mut out, &c.states, BEST_EXIT_TOL, |_, _| Ok(()))?;
    Ok(out)
}

/// Deflation that also rewrites the safety strategy at every peeled state to
/// a best response against the leaving strategy.
pub(crate) fn deflate_with_strategy(
    game: &Game,
    v: &mut Valuation,
    tau: &mut MixedStrategy,
    states: &StateSet,
    tol: f64,
    diagnostics: &mut Vec<String>,
) -> Result<(), SolverError> {
    deflate_rounds(game, v, states, tol, |cur, round| {
        for &s in round.attracted {
            let col = match round.exits.get(&s) {
                Some(exit) => {
                    if round.witnesses.contains(&s) && exit.exit_certificate.unwrap_or(0.0) <= EXIT_FLOOR {
                        diagnostics.push(format!(
                            "non-attained exit at state '{}': exit mass {:e}",
                            game.state_name(s),
                            exit.exit_certificate.unwrap_or(0.0)
                        ));
                    }
                    exit.col_strategy.clone()
                }
                None => pre_opt(game, cur, s, Player::Reach)?.min_strategy,
            };
            tau.set(game, s, col)?;
        }
        Ok(())
    })
}

pub fn run_bvi(game: &Game, cfg: &BviConfig) -> Result<BoundsResult, SolverError> {
    cfg.validate()?;
    let prep = Prepared::new(game);
    let g = &prep.game;
    let n = g.num_states();
    let init = game.init();
    let sweeper = Sweeper::new(cfg.threads)?;

    let mut lower = prep.initial_lower();
    let mut upper = prep.initial_upper();
    let mut sigma = MixedStrategy::uniform(g, Player::Reach);
    let mut trace = cfg.trace.then(Vec::new);
    let mut iterations = 0;

    let termination = loop {
        iterations += 1;
        let lsols = sweeper.sweep(g, &lower, &prep.fixed, Player::Reach)?;
        let mut next_lower = lower.clone();
        for s in 0..n {
            if let Some(sol) = &lsols[s] {
                if sol.value <= lower[s] {
                    continue;
                }
                // Switching only on strict increase keeps sigma attaining the
                // bound. The increase is measured on what the new strategy
                // guarantees, since near convergence the LP value can exceed
                // lower[s] by noise alone.
                let guaranteed = payoff_matrix_for(g, &lower, s, Player::Reach).guarantee_row(&sol.max_strategy);
                if guaranteed > lower[s] + SWITCH_MARGIN {
                    next_lower[s] = guaranteed.min(1.0);
                    sigma.set(g, s, sol.max_strategy.clone())?;
                }
            }
        }

        let usols = sweeper.sweep(g, &upper, &prep.fixed, Player::Reach)?;
        let swept = Valuation::new((0..n).map(|s| usols[s].as_ref().map_or(upper[s], |p| p.value.min(upper[s]))).collect());
        let mut next_upper = swept.clone();
        if !cfg.naive_upper {
            for c in &prep.mecs.components {
                deflate_rounds(g, &mut next_upper, &c.states, cfg.best_exit_tol, |_, _| Ok(()))?;
            }
        }

        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry {
                iteration: iterations,
                lower: next_lower.values().to_vec(),
                upper_swept: swept.values().to_vec(),
                upper: next_upper.values().to_vec(),
            });
        }

        let lower_moved = next_lower.max_diff(&lower);
        let upper_moved = next_upper.max_diff(&upper);
        lower = next_lower;
        upper = next_upper;

        if gap(&lower, &upper, init) <= cfg.epsilon {
            break Termination::Gap;
        }
        // a stationary upper bound alone is not enough: the lower bound may
        // still be rising towards it
        if !cfg.naive_upper && lower_moved < cfg.lp_tol && upper_moved < cfg.lp_tol {
            break Termination::UpperFix;
        }
        if iterations >= cfg.max_iters {
            break Termination::IterCap;
        }
    };

    // safety strategy: optimal columns on the final upper bound, rewritten
    // inside end components by the deflation best responses
    let mut diagnostics = Vec::new();
    if termination == Termination::UpperFix {
        diagnostics.push(format!(
            "both bounds stopped moving with gap {:e} above epsilon; an end component may have a best exit that no exiting strategy attains",
            gap(&lower, &upper, init)
        ));
    }
    let usols = sweeper.sweep(g, &upper, &prep.fixed, Player::Reach)?;
    let mut tau = MixedStrategy::uniform(g, Player::Safe);
    for s in 0..n {
        if let Some(sol) = &usols[s] {
            tau.set(g, s, sol.min_strategy.clone())?;
        }
    }
    if !cfg.naive_upper {
        let mut scratch = upper.clone();
        for c in &prep.mecs.components {
            deflate_with_strategy(g, &mut scratch, &mut tau, &c.states, cfg.best_exit_tol, &mut diagnostics)?;
        }
    }
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn idx(g: &Game, n: &str) -> usize {
        g.state_index(n).unwrap()
    }

    fn vals(v: &[(f64, f64)]) -> bool {
        v.iter().all(|(a, b)| (a - b).abs() <= 1e-9)
    }

    #[test]
    fn first_lower_sweep() {
        let g = fixtures::irrational_value();
        let prep = Prepared::new(&g);
        let l1 = lower_step(&prep.game, &prep.initial_lower()).unwrap();
        assert!(vals(&[(l1[idx(&g, "s5")], 0.4), (l1[idx(&g, "s0")], 1.0 / 3.0)]));
    }

    #[test]
    fn lower_step_keeps_exact_value_of_trap() {
        let g = fixtures::ec_trap();
        let mut v = Valuation::constant(g.num_states(), 0.5);
        v[idx(&g, "s3")] = 1.0;
        v[idx(&g, "s4")] = 0.0;
        let next = lower_step(&g, &v).unwrap();
        assert!(next.max_diff(&v) <= 1e-12);
    }

    #[test]
    fn unreachable_target_stays_zero() {
        let g = fixtures::mixed_exit();
        let v = Valuation::constant(g.num_states(), 0.0);
        let next = lower_step(&g, &v).unwrap();
        assert_eq!(next[idx(&g, "s1")], 0.0);
        assert_eq!(next[idx(&g, "s2")], 0.0);
    }

    #[test]
    fn deflate_running_example() {
        let g = fixtures::irrational_value();
        let u = Valuation::new(vec![0.5, 0.0, 1.0, 1.0, 1.0, 0.4]);
        let c = EndComponent::try_new(&g, [idx(&g, "s3"), idx(&g, "s4")].into()).unwrap();
        let (value, witnesses) = best_exit(&g, &u, &c).unwrap();
        assert!((value - 0.4).abs() <= 1e-12);
        assert_eq!(witnesses, StateSet::from([idx(&g, "s4")]));
        let d = deflate(&g, &u, &c).unwrap();
        let expect = [0.5, 0.0, 1.0, 0.4, 0.4, 0.4];
        assert!(d.values().iter().zip(expect).all(|(a, b)| (a - b).abs() <= LP_TOL), "{d:?}");
        // already below every exit value
        assert_eq!(deflate(&g, &d, &c).unwrap(), d);
    }

    #[test]
    fn best_exit_of_mixed_state() {
        let g = fixtures::mixed_exit();
        let mut v = Valuation::constant(g.num_states(), 0.0);
        v[idx(&g, "s5")] = 1.0;
        v[idx(&g, "s3")] = 1.0;
        let c = EndComponent::try_new(&g, [idx(&g, "s5")].into()).unwrap();
        let (value, witnesses) = best_exit(&g, &v, &c).unwrap();
        assert!((value - 0.75).abs() <= LP_TOL);
        assert_eq!(witnesses, StateSet::from([idx(&g, "s5")]));
        assert!((deflate(&g, &v, &c).unwrap()[idx(&g, "s5")] - 0.75).abs() <= LP_TOL);
    }

    #[test]
    fn best_exit_of_trap_through_s0() {
        let g = fixtures::ec_trap();
        let mut v = Valuation::constant(g.num_states(), 1.0);
        v[idx(&g, "s4")] = 0.0;
        let c = EndComponent::try_new(&g, [idx(&g, "s1"), idx(&g, "s2")].into()).unwrap();
        let (value, witnesses) = best_exit(&g, &v, &c).unwrap();
        assert_eq!(value, 1.0);
        assert_eq!(witnesses, StateSet::from([idx(&g, "s2")]));
    }

    #[test]
    fn solves_running_example() {
        let g = fixtures::irrational_value();
        let res = run_bvi(&g, &BviConfig { epsilon: 0.01, ..Default::default() }).unwrap();
        let s0 = idx(&g, "s0");
        assert_eq!(res.termination, Termination::Gap);
        assert!(res.upper[s0] - res.lower[s0] <= 0.01);
        assert!(res.lower[s0] <= 2f64.sqrt() - 1.0 && 2f64.sqrt() - 1.0 <= res.upper[s0]);
    }

    #[test]
    fn rejects_bad_config() {
        let g = fixtures::irrational_value();
        assert!(run_bvi(&g, &BviConfig { epsilon: 0.0, ..Default::default() }).is_err());
        assert!(run_bvi(&g, &BviConfig { max_iters: 0, ..Default::default() }).is_err());
        assert!(run_bvi(&g, &BviConfig { epsilon: 1e-10, ..Default::default() }).is_err());
    }

    #[test]
    fn parallel_sweeps_match_sequential() {
        let g = fixtures::irrational_value();
        let cfg = BviConfig { epsilon: 1e-6, trace: true, ..Default::default() };
        let a = run_bvi(&g, &cfg).unwrap();
        let b = run_bvi(&g, &BviConfig { threads: 4, ..cfg }).unwrap();
        assert_eq!(a.trace, b.trace);
    }
}
