//! Qualitative analysis: sure-winning region, attractors, end components.

use std::collections::BTreeMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::game::{Game, Player, StateSet};

fn mask(game: &Game, set: &StateSet) -> Vec<bool> {
    let mut m = vec![false; game.num_states()];
    for &s in set {
        m[s] = true;
    }
    m
}

/// Whether `player` has a move at `s` that keeps every successor in `inside`
/// against all opposing moves.
fn can_force(game: &Game, player: Player, s: usize, inside: &[bool]) -> bool {
    let others = game.num_moves(player.opponent(), s);
    (0..game.num_moves(player, s))
        .any(|a| (0..others).all(|b| game.delta_for(player, s, a, b).support_within(inside)))
}

/// States from which the safety player keeps the play outside the target
/// with certainty. These are exactly the states of reachability value 0.
pub fn sure_winning(game: &Game) -> StateSet {
    let mut inside: Vec<bool> = (0..game.num_states()).map(|s| !game.is_target(s)).collect();
    loop {
        let next: Vec<bool> = (0..game.num_states())
            .map(|s| inside[s] && can_force(game, Player::Safe, s, &inside))
            .collect();
        if next == inside {
            break;
        }
        inside = next;
    }
    (0..game.num_states()).filter(|&s| inside[s]).collect()
}

/// Safe moves at `s` that keep every successor in `w` against all reach moves.
/// Nonempty for every state of the sure-winning region `w`.
pub fn keeping_moves(game: &Game, s: usize, w: &StateSet) -> Vec<usize> {
    let inside = mask(game, w);
    (0..game.num_moves(Player::Safe, s))
        .filter(|&b| (0..game.num_moves(Player::Reach, s)).all(|a| game.delta(s, a, b).support_within(&inside)))
        .collect()
}

/// States of `c` from which the reach player surely reaches `b` without
/// leaving `c`.
pub fn attractor(game: &Game, c: &StateSet, b: &StateSet) -> StateSet {
    attractor_for(game, Player::Reach, c, b)
}

/// Attractor of `b` inside `c` for `player`.
pub fn attractor_for(game: &Game, player: Player, c: &StateSet, b: &StateSet) -> StateSet {
    let mut attr = mask(game, b);
    loop {
        let added: Vec<usize> = c
            .iter()
            .copied()
            .filter(|&s| !attr[s] && can_force(game, player, s, &attr))
            .collect();
        if added.is_empty() {
            break;
        }
        for s in added {
            attr[s] = true;
        }
    }
    (0..game.num_states()).filter(|&s| attr[s]).collect()
}

/// Move pairs `(reach, safe)` at `s` whose successors all lie in `set`.
pub fn stay_pairs(game: &Game, s: usize, set: &StateSet) -> Vec<(usize, usize)> {
    stay_pairs_masked(game, s, &mask(game, set))
}

fn stay_pairs_masked(game: &Game, s: usize, inside: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..game.num_moves(Player::Reach, s) {
        for b in 0..game.num_moves(Player::Safe, s) {
            if game.delta(s, a, b).support_within(inside) {
                out.push((a, b));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndComponent {
    pub states: StateSet,
    /// Stay pairs per state, in `(reach move, safe move)` index order.
    pub stay_pairs: BTreeMap<usize, Vec<(usize, usize)>>,
}

impl EndComponent {
    /// Builds the component on `states` if it satisfies the end-component
    /// invariants under the pair relation.
    pub fn try_new(game: &Game, states: StateSet) -> Option<EndComponent> {
        if states.is_empty() {
            return None;
        }
        let inside = mask(game, &states);
        let stay_pairs: BTreeMap<usize, Vec<(usize, usize)>> =
            states.iter().map(|&s| (s, stay_pairs_masked(game, s, &inside))).collect();
        if stay_pairs.values().any(Vec::is_empty) {
            return None;
        }
        let ec = EndComponent { states, stay_pairs };
        (sccs(game, &ec.states, &ec.stay_pairs).len() == 1).then_some(ec)
    }

    pub fn contains(&self, s: usize) -> bool {
        self.states.contains(&s)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Checks every invariant directly against `game`.
    pub fn check(&self, game: &Game) -> Result<(), String> {
        let inside = mask(game, &self.states);
        for &s in &self.states {
            let pairs = self.stay_pairs.get(&s).ok_or_else(|| format!("state {s} has no stay-pair entry"))?;
            if pairs.is_empty() {
                return Err(format!("state {s} has no stay pair"));
            }
            for &(a, b) in pairs {
                if !game.delta(s, a, b).support_within(&inside) {
                    return Err(format!("pair ({a},{b}) at state {s} leaves the component"));
                }
            }
        }
        if sccs(game, &self.states, &self.stay_pairs).len() != 1 {
            return Err("stay-pair graph is not strongly connected".into());
        }
        Ok(())
    }
}

/// Strongly connected components of the stay-pair graph on `states`.
fn sccs(game: &Game, states: &StateSet, pairs: &BTreeMap<usize, Vec<(usize, usize)>>) -> Vec<StateSet> {
    let order: Vec<usize> = states.iter().copied().collect();
    let mut graph = DiGraph::<usize, ()>::with_capacity(order.len(), 0);
    let nodes: BTreeMap<usize, _> = order.iter().map(|&s| (s, graph.add_node(s))).collect();
    for &s in &order {
        for &(a, b) in pairs.get(&s).map(Vec::as_slice).unwrap_or(&[]) {
            for t in game.delta(s, a, b).support() {
                if let Some(&nt) = nodes.get(&t) {
                    graph.update_edge(nodes[&s], nt, ());
                }
            }
        }
    }
    let mut out: Vec<StateSet> = tarjan_scc(&graph)
        .into_iter()
        .map(|comp| comp.into_iter().map(|n| graph[n]).collect())
        .collect();
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MecDecomposition {
    pub components: Vec<EndComponent>,
}

impl MecDecomposition {
    pub fn nontrivial(&self) -> impl Iterator<Item = &EndComponent> {
        self.components.iter().filter(|c| c.len() > 1)
    }

    pub fn state_sets(&self) -> Vec<StateSet> {
        self.components.iter().map(|c| c.states.clone()).collect()
    }
}

/// Maximal end components of the whole game, absorbing states included.
pub fn mec_decompose(game: &Game) -> MecDecomposition {
    mec_decompose_excluding(game, &StateSet::new())
}

/// Maximal end components of the subgame on the states outside `excluded`.
pub fn mec_decompose_excluding(game: &Game, excluded: &StateSet) -> MecDecomposition {
    let all: StateSet = (0..game.num_states()).filter(|s| !excluded.contains(s)).collect();
    let mut work = vec![all];
    let mut found = Vec::new();
    while let Some(mut cand) = work.pop() {
        // prune states without a stay pair until stable
        let pairs = loop {
            let inside = mask(game, &cand);
            let pairs: BTreeMap<usize, Vec<(usize, usize)>> =
                cand.iter().map(|&s| (s, stay_pairs_masked(game, s, &inside))).collect();
            let dead: Vec<usize> = pairs.iter().filter(|(_, p)| p.is_empty()).map(|(&s, _)| s).collect();
            if dead.is_empty() {
                break pairs;
            }
            for s in dead {
                cand.remove(&s);
            }
        };
        if cand.is_empty() {
            continue;
        }
        let comps = sccs(game, &cand, &pairs);
        if comps.len() == 1 {
            found.push(EndComponent { states: cand, stay_pairs: pairs });
        } else {
            work.extend(comps);
        }
    }
    found.sort_by(|a, b| a.states.cmp(&b.states));
    MecDecomposition { components: found }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn names(g: &Game, set: &StateSet) -> Vec<String> {
        set.iter().map(|&s| g.state_name(s).to_string()).collect()
    }

    fn set(g: &Game, names: &[&str]) -> StateSet {
        names.iter().map(|n| g.state_index(n).unwrap()).collect()
    }

    #[test]
    fn sure_winning_examples() {
        let g = fixtures::irrational_value();
        assert_eq!(names(&g, &sure_winning(&g)), ["s1"]);
        let g = fixtures::ec_trap();
        assert_eq!(names(&g, &sure_winning(&g)), ["s4"]);
        let g = fixtures::mixed_exit();
        assert_eq!(names(&g, &sure_winning(&g)), ["s1", "s2", "s4"]);
    }

    #[test]
    fn sure_winning_is_closed_for_safe() {
        for g in [fixtures::irrational_value(), fixtures::ec_trap(), fixtures::mixed_exit()] {
            let w = sure_winning(&g);
            let m = mask(&g, &w);
            for &s in &w {
                assert!(can_force(&g, Player::Safe, s, &m));
            }
        }
    }

    #[test]
    fn attractor_examples() {
        let g = fixtures::irrational_value();
        let c = set(&g, &["s3", "s4"]);
        assert_eq!(attractor(&g, &c, &set(&g, &["s4"])), set(&g, &["s4"]));
        assert_eq!(attractor(&g, &c, &c), c);

        let g = fixtures::ec_trap();
        let c = set(&g, &["s1", "s2"]);
        assert_eq!(attractor(&g, &c, &set(&g, &["s1"])), c);
    }

    #[test]
    fn mecs_of_irrational_value() {
        let g = fixtures::irrational_value();
        let mecs = mec_decompose(&g).state_sets();
        assert_eq!(mecs, vec![set(&g, &["s1"]), set(&g, &["s2"]), set(&g, &["s3", "s4"])]);
    }

    #[test]
    fn mecs_of_mixed_exit() {
        let g = fixtures::mixed_exit();
        let mecs = mec_decompose(&g).state_sets();
        assert!(mecs.contains(&set(&g, &["s5"])));
        assert!(mecs.contains(&set(&g, &["s3"])));
        assert!(mecs.contains(&set(&g, &["s4"])));
    }

    #[test]
    fn mecs_of_ec_trap() {
        let g = fixtures::ec_trap();
        let mecs = mec_decompose(&g).state_sets();
        assert_eq!(mecs, vec![set(&g, &["s0", "s1", "s2"]), set(&g, &["s3"]), set(&g, &["s4"])]);
        assert!(EndComponent::try_new(&g, set(&g, &["s1", "s2"])).is_some());
    }

    #[test]
    fn excluding_sinks() {
        let g = fixtures::irrational_value();
        let excl = set(&g, &["s1", "s2"]);
        let mecs = mec_decompose_excluding(&g, &excl).state_sets();
        assert_eq!(mecs, vec![set(&g, &["s3", "s4"])]);
    }

    #[test]
    fn components_check_and_are_idempotent() {
        for g in [fixtures::irrational_value(), fixtures::ec_trap(), fixtures::mixed_exit()] {
            for c in mec_decompose(&g).components {
                c.check(&g).unwrap();
                let outside: StateSet = (0..g.num_states()).filter(|s| !c.contains(*s)).collect();
                assert_eq!(mec_decompose_excluding(&g, &outside).components, vec![c]);
            }
        }
    }
}
