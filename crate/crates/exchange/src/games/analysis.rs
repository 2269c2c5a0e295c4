//! Strategy analysis over game forms: on-path node sets, feasible sets,
//! earliest departures, the node-wise obvious-dominance criterion, plan
//! pruning, and end-to-end implementation verification.

use std::collections::BTreeSet;

use crate::core::{AgentId, Allocation, ObjectId, Preference, Profile};
use crate::domains::{Domain, ProfileSpace};
use crate::games::designator::PlanSet;
use crate::games::form::{
    Action, DecisionNode, GameError, GameForm, Node, NodeId, NodeKind, Strategy,
};
use crate::rules::RuleError;

/// Decision nodes of `agent` reachable while the agent follows `strategy`
/// and the others play arbitrarily.
pub fn on_path_nodes(
    game: &GameForm,
    agent: AgentId,
    strategy: &Strategy,
) -> Result<BTreeSet<NodeId>, GameError> {
    let mut reached = BTreeSet::new();
    let mut stack = vec![game.root()];
    while let Some(id) = stack.pop() {
        if let Some(d) = game.decision(id) {
            if d.player == agent {
                reached.insert(id);
                let action = strategy.get(&id).copied().ok_or(GameError::MissingStrategy(id.0))?;
                stack.push(d.child(action).ok_or(GameError::InvalidAction(id.0))?);
            } else {
                stack.extend(d.actions.iter().map(|&(_, c)| c));
            }
        }
    }
    Ok(reached)
}

/// Objects attainable for `agent` from `node` when it follows `strategy`
/// and the others play arbitrarily. The node must be one of the agent's and
/// reachable under the strategy.
pub fn feasible_set(
    game: &GameForm,
    agent: AgentId,
    node: NodeId,
    strategy: &Strategy,
) -> Result<BTreeSet<ObjectId>, GameError> {
    match game.decision(node) {
        Some(d) if d.player == agent => {}
        _ => return Err(GameError::NotAgentsNode(node.0)),
    }
    if !on_path_nodes(game, agent, strategy)?.contains(&node) {
        return Err(GameError::NodeOffPath(node.0));
    }
    game.subtree_outcomes(agent, node, Some(strategy))
}

/// Nodes where two strategies of the same agent first part ways: reachable
/// under both, choosing differently. Empty exactly when the strategies are
/// effectively identical.
pub fn earliest_departures(
    game: &GameForm,
    agent: AgentId,
    s: &Strategy,
    s2: &Strategy,
) -> Result<BTreeSet<NodeId>, GameError> {
    let alpha_s = on_path_nodes(game, agent, s)?;
    let alpha_s2 = on_path_nodes(game, agent, s2)?;
    Ok(alpha_s
        .intersection(&alpha_s2)
        .copied()
        .filter(|id| s.get(id) != s2.get(id))
        .collect())
}

/// A failed dominance comparison at one node and deviating action.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DominanceViolation {
    pub node: NodeId,
    pub action: Action,
    pub truthful_worst: ObjectId,
    pub deviation_best: ObjectId,
}

/// Node-wise obvious-dominance check: at every on-path node of the agent
/// and every alternative action there, the worst object attainable by
/// sticking to the strategy must be weakly preferred to the best object
/// anywhere in the subtree the alternative opens.
///
/// Equivalent to obvious dominance against every other strategy: an
/// arbitrary deviation's earliest departure is such a node/action pair, and
/// its feasible set is contained in that subtree's outcome range.
pub fn obviously_dominant_node_wise(
    game: &GameForm,
    agent: AgentId,
    strategy: &Strategy,
    pref: &Preference,
) -> Result<Option<DominanceViolation>, GameError> {
    for id in on_path_nodes(game, agent, strategy)? {
        let truthful = game.subtree_outcomes(agent, id, Some(strategy))?;
        let worst = pref.worst_in(truthful.iter().copied()).map_err(GameError::Core)?;
        let d = game.decision(id).expect("on-path nodes are decisions");
        let chosen = strategy.get(&id).copied().ok_or(GameError::MissingStrategy(id.0))?;
        for &(action, child) in &d.actions {
            if action == chosen {
                continue;
            }
            let deviation = game.subtree_outcomes(agent, child, None)?;
            let best = pref.best_in(deviation.iter().copied()).map_err(GameError::Core)?;
            if pref.prefers(best, worst) {
                return Ok(Some(DominanceViolation {
                    node: id,
                    action,
                    truthful_worst: worst,
                    deviation_best: best,
                }));
            }
        }
    }
    Ok(None)
}

/// Deletes every history no plan-strategy profile can reach, then splices
/// out decision nodes left with a single action. Play outcomes of all plan
/// strategy tuples are unchanged.
///
/// Reachability is tracked per player: walking down the tree, a player's
/// candidate set holds the plan strategies consistent with every move the
/// player has made on the path so far, and an action survives exactly when
/// some remaining candidate picks it. This makes every path of the pruned
/// game the play path of some profile of plan strategies.
pub fn prune(game: &GameForm, plans: &PlanSet) -> Result<GameForm, GameError> {
    if plans.agents() != game.players() {
        return Err(GameError::Malformed(format!(
            "{} plans for {} players",
            plans.agents(),
            game.players()
        )));
    }

    fn copy(
        game: &GameForm,
        plans: &PlanSet,
        id: NodeId,
        consistent: &[Vec<usize>],
        out: &mut Vec<Node>,
    ) -> Result<NodeId, GameError> {
        let node = game.node(id)?;
        match &node.kind {
            NodeKind::Terminal(_) => {
                out.push(node.clone());
                Ok(NodeId(out.len() - 1))
            }
            NodeKind::Decision(d) => {
                let plan = plans.plan(d.player)?;
                let strategies: Vec<&Strategy> = plan.values().collect();
                let mut kept: Vec<(Action, NodeId, Vec<usize>)> = Vec::new();
                for &(a, child) in &d.actions {
                    let followers: Vec<usize> = consistent[d.player.0]
                        .iter()
                        .copied()
                        .filter(|&k| strategies[k].get(&id) == Some(&a))
                        .collect();
                    if !followers.is_empty() {
                        kept.push((a, child, followers));
                    }
                }
                if kept.is_empty() {
                    return Err(GameError::MissingStrategy(id.0));
                }
                if kept.len() == 1 {
                    // No reachable plan distinguishes here; splice the node
                    // out. All remaining candidates chose the action, so
                    // the candidate sets pass through unchanged.
                    return copy(game, plans, kept[0].1, consistent, out);
                }
                let slot = out.len();
                out.push(Node {
                    kind: NodeKind::Decision(DecisionNode {
                        player: d.player,
                        label: d.label.clone(),
                        actions: Vec::new(),
                    }),
                    phase2_entry: node.phase2_entry.clone(),
                });
                let mut actions = Vec::with_capacity(kept.len());
                for (a, child, followers) in kept {
                    let mut narrowed = consistent.to_vec();
                    narrowed[d.player.0] = followers;
                    actions.push((a, copy(game, plans, child, &narrowed, out)?));
                }
                match &mut out[slot].kind {
                    NodeKind::Decision(dn) => dn.actions = actions,
                    NodeKind::Terminal(_) => unreachable!("slot was pushed as a decision"),
                }
                Ok(NodeId(slot))
            }
        }
    }

    let consistent: Vec<Vec<usize>> = (0..game.players())
        .map(|p| {
            let plan = plans.plan(AgentId(p))?;
            if plan.is_empty() {
                return Err(GameError::MissingPlan(AgentId(p)));
            }
            Ok((0..plan.len()).collect())
        })
        .collect::<Result<_, GameError>>()?;
    let mut nodes = Vec::new();
    let root = copy(game, plans, game.root(), &consistent, &mut nodes)?;
    debug_assert_eq!(root, NodeId(0));
    GameForm::from_parts(game.players(), game.order().cloned(), nodes)
}

/// Outcome of an implementation check: play/rule mismatches and dominance
/// violations, if any.
#[derive(Clone, Debug, Default)]
pub struct OspReport {
    /// Profile keys (per-agent domain indices) where the played terminal
    /// disagrees with the rule, with both allocations.
    pub outcome_mismatches: Vec<(Vec<usize>, Allocation, Allocation)>,
    /// Agent, preference, and the failed comparison.
    pub dominance_violations: Vec<(AgentId, Preference, DominanceViolation)>,
    pub profiles_checked: usize,
    pub dominance_checks: usize,
}

impl OspReport {
    pub fn passed(&self) -> bool {
        self.outcome_mismatches.is_empty() && self.dominance_violations.is_empty()
    }
}

/// Verifies that the game and plans implement `rule` over the product
/// domain: every profile's plan tuple plays to the rule's allocation, and
/// every plan strategy is obviously dominant (node-wise criterion).
pub fn verify_osp_implementation<F>(
    game: &GameForm,
    plans: &PlanSet,
    rule: F,
    domains: &[Domain],
) -> Result<OspReport, GameError>
where
    F: Fn(&Profile) -> Result<Allocation, RuleError>,
{
    if domains.len() != game.players() {
        return Err(GameError::Malformed(format!(
            "{} domains for {} players",
            domains.len(),
            game.players()
        )));
    }
    let space = ProfileSpace::new(domains.to_vec())
        .map_err(|e| GameError::Malformed(e.to_string()))?;
    let mut report = OspReport::default();
    for (key, profile) in space.iter() {
        let strategies: Vec<&Strategy> = profile
            .agents()
            .map(|a| plans.strategy(a, profile.pref(a)))
            .collect::<Result<_, _>>()?;
        let played = game.play(&strategies)?;
        let direct = rule(&profile).map_err(GameError::Rule)?;
        if played != direct {
            report.outcome_mismatches.push((key, played, direct));
        }
        report.profiles_checked += 1;
    }
    for (a, domain) in domains.iter().enumerate() {
        let agent = AgentId(a);
        for pref in domain.iter() {
            let strategy = plans.strategy(agent, pref)?;
            if let Some(violation) =
                obviously_dominant_node_wise(game, agent, strategy, pref)?
            {
                report.dominance_violations.push((agent, pref.clone(), violation));
            }
            report.dominance_checks += 1;
        }
    }
    Ok(report)
}
