//! Extensive game forms of perfect information over object allocations:
//! construction of the designator game, greedy plans, pruning, feasible
//! sets, node-wise obvious-dominance checking, and verification that a game
//! plus plans implements a given rule.

mod analysis;
mod designator;
mod form;

pub use analysis::{
    earliest_departures, feasible_set, obviously_dominant_node_wise, on_path_nodes, prune,
    verify_osp_implementation, DominanceViolation, OspReport,
};
pub use designator::{
    build_designator_game, build_designator_game_with_limit, greedy_plans, greedy_strategy,
    PlanSet,
};
pub use form::{
    game_to_json, parse_game, Action, DecisionNode, GameError, GameForm, Node, NodeId, NodeKind,
    NodeLabel, Phase, Strategy, MAX_GAME_NODES,
};

/// The checked-in three-agent millipede game over objects `o_1 < o_2 < o_3`:
/// clinch actions plus at most one Pass per node.
pub fn three_agent_millipede() -> GameForm {
    parse_game(include_str!("../../fixtures/millipede3.json"))
        .expect("bundled game file is well formed")
}

#[cfg(test)]
mod tests;
