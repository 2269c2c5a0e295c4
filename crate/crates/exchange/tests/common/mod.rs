//! Shared oracles for integration tests. Everything here recomputes results
//! from first principles, independent of the library's production paths.

use std::collections::BTreeSet;

use exchange::core::{AgentId, ObjectId, Preference};
use exchange::games::{earliest_departures, feasible_set, GameForm, NodeId, Strategy};

/// Every strategy of one agent: the full cartesian product of action
/// choices over all of the agent's decision nodes.
pub fn enumerate_strategies(game: &GameForm, agent: AgentId) -> Vec<Strategy> {
    let nodes: Vec<NodeId> = game.decision_nodes_of(agent);
    let mut out: Vec<Strategy> = vec![Strategy::new()];
    for id in nodes {
        let actions = &game.decision(id).expect("decision node").actions;
        let mut next = Vec::with_capacity(out.len() * actions.len());
        for partial in &out {
            for &(a, _) in actions {
                let mut s = partial.clone();
                s.insert(id, a);
                next.push(s);
            }
        }
        out = next;
    }
    out
}

/// Textbook obvious dominance of `s` over `s2`: at every earliest
/// departure, the worst object reachable under `s` is weakly preferred to
/// the best object reachable under `s2`.
pub fn dominates_direct(
    game: &GameForm,
    agent: AgentId,
    s: &Strategy,
    s2: &Strategy,
    pref: &Preference,
) -> bool {
    let departures = earliest_departures(game, agent, s, s2).expect("strategies total");
    for h in departures {
        let own: BTreeSet<ObjectId> =
            feasible_set(game, agent, h, s).expect("h is on-path for s");
        let other: BTreeSet<ObjectId> =
            feasible_set(game, agent, h, s2).expect("h is on-path for s2");
        let worst = pref.worst_in(own.iter().copied()).expect("nonempty");
        let best = pref.best_in(other.iter().copied()).expect("nonempty");
        if !pref.prefers_weak(worst, best) {
            return false;
        }
    }
    true
}

/// Obvious dominance by exhaustive enumeration of alternative strategies.
pub fn obviously_dominant_direct(
    game: &GameForm,
    agent: AgentId,
    s: &Strategy,
    pref: &Preference,
    all_strategies: &[Strategy],
) -> bool {
    all_strategies.iter().all(|s2| dominates_direct(game, agent, s, s2, pref))
}
