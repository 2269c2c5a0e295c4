//! Construction of the designator game and of greedy plans.
//!
//! The game has two phases. In phase one the agents are visited in index
//! order and each either clinches its endowment or passes. In phase two the
//! holder of the smallest remaining object moves: it may take any remaining
//! object weakly below its own (plain object action, followed by a crawling
//! update), take one while designating an agent holding an object between
//! the taken one and its own to inherit its object (object-agent action,
//! designating update), or pass to the holder of the next object up.
//! The holder of the largest remaining object cannot pass.

use std::collections::BTreeMap;

use crate::core::{adjacent_larger, AgentId, LinearOrder, ObjectId, Preference, SubAllocation};
use crate::domains::{is_single_peaked, Domain};
use crate::games::form::{
    Action, DecisionNode, GameError, GameForm, Node, NodeId, NodeKind, NodeLabel, Phase, Strategy,
    MAX_GAME_NODES,
};
use crate::rules::{crawl_update, designate_update};

struct Builder {
    order: LinearOrder,
    n: usize,
    limit: usize,
    nodes: Vec<Node>,
}

impl Builder {
    fn push(&mut self, node: Node) -> Result<NodeId, GameError> {
        if self.nodes.len() >= self.limit {
            return Err(GameError::SizeLimit { limit: self.limit });
        }
        self.nodes.push(node);
        Ok(NodeId(self.nodes.len() - 1))
    }

    fn reserve_decision(&mut self) -> Result<NodeId, GameError> {
        // Placeholder; actions are filled in after the subtree is built so
        // that ids stay allocation-ordered parent first.
        self.push(Node {
            kind: NodeKind::Decision(DecisionNode {
                player: AgentId(0),
                label: None,
                actions: Vec::new(),
            }),
            phase2_entry: None,
        })
    }

    fn terminal(&mut self, outcome: &SubAllocation) -> Result<NodeId, GameError> {
        let allocation = outcome.to_allocation(self.n).map_err(GameError::Core)?;
        self.push(Node { kind: NodeKind::Terminal(allocation), phase2_entry: None })
    }

    fn phase_one(
        &mut self,
        departed: &SubAllocation,
        remaining: &SubAllocation,
        mover: AgentId,
    ) -> Result<NodeId, GameError> {
        let id = self.reserve_decision()?;
        let own = remaining.get(mover).expect("phase-one mover holds its endowment");
        let last = mover.0 + 1 == self.n;

        // Clinch branch: the mover leaves with its endowment.
        let mut departed_clinch = departed.clone();
        departed_clinch.insert(mover, own);
        let mut remaining_clinch = remaining.clone();
        remaining_clinch.remove(mover);
        let clinch_child = if !last {
            self.phase_one(&departed_clinch, &remaining_clinch, AgentId(mover.0 + 1))?
        } else if remaining_clinch.is_empty() {
            self.terminal(&departed_clinch)?
        } else {
            self.phase_two_entry(&departed_clinch, &remaining_clinch)?
        };

        // Pass branch: nothing changes but the mover.
        let pass_child = if !last {
            self.phase_one(departed, remaining, AgentId(mover.0 + 1))?
        } else {
            self.phase_two_entry(departed, remaining)?
        };

        self.nodes[id.0].kind = NodeKind::Decision(DecisionNode {
            player: mover,
            label: Some(NodeLabel {
                kappa: Phase::One,
                departed: departed.clone(),
                remaining: remaining.clone(),
                mover,
            }),
            actions: vec![(Action::Object(own), clinch_child), (Action::Pass, pass_child)],
        });
        Ok(id)
    }

    fn phase_two_entry(
        &mut self,
        departed: &SubAllocation,
        remaining: &SubAllocation,
    ) -> Result<NodeId, GameError> {
        let min = self.order.min_of(remaining.objects()).map_err(GameError::Core)?;
        let mover = remaining.holder_of(min).expect("minimum is held");
        self.phase_two(departed, remaining, mover, remaining)
    }

    fn phase_two(
        &mut self,
        departed: &SubAllocation,
        remaining: &SubAllocation,
        mover: AgentId,
        entry: &SubAllocation,
    ) -> Result<NodeId, GameError> {
        let id = self.reserve_decision()?;
        let held = remaining.get(mover).expect("mover holds an object");
        let is_max = held == self.order.max_of(remaining.objects()).map_err(GameError::Core)?;

        let mut actions: Vec<(Action, NodeId)> = Vec::new();

        // Plain object actions: any remaining object weakly below the
        // mover's, ascending.
        let mut takeable: Vec<ObjectId> =
            remaining.objects().filter(|&o| self.order.leq(o, held)).collect();
        takeable.sort_by_key(|o| self.order.position(*o));
        for &o in &takeable {
            let source = remaining.holder_of(o).expect("held");
            let mut departed_next = departed.clone();
            departed_next.insert(mover, o);
            let remaining_next = crawl_update(remaining, &self.order, source, mover);
            let child = if remaining_next.is_empty() {
                self.terminal(&departed_next)?
            } else {
                let min =
                    self.order.min_of(remaining_next.objects()).map_err(GameError::Core)?;
                let next_mover = remaining_next.holder_of(min).expect("minimum is held");
                self.phase_two(&departed_next, &remaining_next, next_mover, entry)?
            };
            actions.push((Action::Object(o), child));
        }

        // Object-agent actions: take `o` and designate an agent whose
        // current object lies in [o, held).
        for &o in &takeable {
            let source = remaining.holder_of(o).expect("held");
            let mut designees: Vec<AgentId> = remaining
                .iter()
                .filter(|&(_, held_d)| {
                    self.order.leq(o, held_d) && self.order.lt(held_d, held)
                })
                .map(|(a, _)| a)
                .collect();
            designees.sort();
            for designee in designees {
                let mut departed_next = departed.clone();
                departed_next.insert(mover, o);
                let remaining_next =
                    designate_update(remaining, &self.order, source, mover, designee);
                let child = if remaining_next.is_empty() {
                    self.terminal(&departed_next)?
                } else {
                    let min = self
                        .order
                        .min_of(remaining_next.objects())
                        .map_err(GameError::Core)?;
                    let next_mover = remaining_next.holder_of(min).expect("minimum is held");
                    self.phase_two(&departed_next, &remaining_next, next_mover, entry)?
                };
                actions.push((Action::ObjectAgent(o, designee), child));
            }
        }

        if !is_max {
            let up = adjacent_larger(remaining, &self.order, held)
                .map_err(GameError::Core)?
                .expect("a larger object remains");
            let next_mover = remaining.holder_of(up).expect("held");
            let child = self.phase_two(departed, remaining, next_mover, entry)?;
            actions.push((Action::Pass, child));
        }

        self.nodes[id.0] = Node {
            kind: NodeKind::Decision(DecisionNode {
                player: mover,
                label: Some(NodeLabel {
                    kappa: Phase::Two,
                    departed: departed.clone(),
                    remaining: remaining.clone(),
                    mover,
                }),
                actions,
            }),
            phase2_entry: Some(entry.clone()),
        };
        Ok(id)
    }
}

/// Builds the full (unpruned) designator game for `n` agents under `order`.
pub fn build_designator_game(n: usize, order: &LinearOrder) -> Result<GameForm, GameError> {
    build_designator_game_with_limit(n, order, MAX_GAME_NODES)
}

/// As [`build_designator_game`] with an explicit node budget.
pub fn build_designator_game_with_limit(
    n: usize,
    order: &LinearOrder,
    limit: usize,
) -> Result<GameForm, GameError> {
    if order.n() != n || n == 0 {
        return Err(GameError::Malformed(format!(
            "order over {} objects cannot drive a {n}-agent game",
            order.n()
        )));
    }
    let mut builder = Builder { order: order.clone(), n, limit, nodes: Vec::new() };
    let endowments = SubAllocation::endowments((0..n).map(AgentId));
    let root = builder.phase_one(&SubAllocation::empty(), &endowments, AgentId(0))?;
    debug_assert_eq!(root, NodeId(0));
    GameForm::from_parts(n, Some(order.clone()), builder.nodes)
}

/// The greedy strategy of one agent for one preference, defined at every
/// decision node of the agent in the game.
///
/// On labeled (designator-game) nodes the choice is read off the label: in
/// phase one, clinch the endowment exactly when it is the preference's
/// peak; in phase two, when the best remaining object sits weakly below the
/// held one, take it, designating the original owner of the best
/// phase-two-entry object whenever that owner still holds an object between
/// the two; otherwise pass.
///
/// On unlabeled (millipede) nodes, clinch the most preferred object still
/// attainable in the subtree if it is directly clinchable here, else pass.
pub fn greedy_strategy(
    game: &GameForm,
    agent: AgentId,
    pref: &Preference,
) -> Result<Strategy, GameError> {
    let mut strategy = Strategy::new();
    let mut fallback_nodes = Vec::new();
    for id in game.decision_nodes_of(agent) {
        let d = game.decision(id).expect("decision node");
        let action = match &d.label {
            Some(label) => greedy_at_labeled(game, id, label, pref)?,
            None => greedy_at_millipede(game, agent, id, pref)?,
        };
        if d.child(action).is_some() {
            strategy.insert(id, action);
        } else {
            // Pruning can remove the greedy action at nodes this strategy
            // never reaches; any available action completes the strategy
            // there. Off-path status is verified below.
            fallback_nodes.push(id);
            strategy.insert(id, d.actions[0].0);
        }
    }
    if !fallback_nodes.is_empty() {
        let on_path = crate::games::analysis::on_path_nodes(game, agent, &strategy)?;
        if let Some(id) = fallback_nodes.into_iter().find(|id| on_path.contains(id)) {
            return Err(GameError::GreedyUndefined(id.0));
        }
    }
    Ok(strategy)
}

fn greedy_at_labeled(
    game: &GameForm,
    id: NodeId,
    label: &NodeLabel,
    pref: &Preference,
) -> Result<Action, GameError> {
    let order = game.order().ok_or(GameError::NoOrder)?;
    let mover = label.mover;
    let held = label.remaining.get(mover).expect("mover holds an object");
    match label.kappa {
        Phase::One => {
            if pref.top() == mover.endowment() {
                Ok(Action::Object(held))
            } else {
                Ok(Action::Pass)
            }
        }
        Phase::Two => {
            let best = pref.best_in(label.remaining.objects()).map_err(GameError::Core)?;
            if order.lt(held, best) {
                return Ok(Action::Pass);
            }
            let entry = game
                .node(id)?
                .phase2_entry
                .as_ref()
                .ok_or(GameError::MissingEntry(id.0))?;
            let entry_best = pref.best_in(entry.objects()).map_err(GameError::Core)?;
            // At phase-two entry every agent holds its endowment, so the
            // owner of the favorite entry object is its original endower.
            let designee = entry_best.owner();
            let designee_eligible = match label.remaining.get(designee) {
                Some(held_d) if designee != mover => {
                    order.leq(best, held_d) && order.lt(held_d, held)
                }
                _ => false,
            };
            if designee_eligible {
                Ok(Action::ObjectAgent(best, designee))
            } else {
                Ok(Action::Object(best))
            }
        }
    }
}

fn greedy_at_millipede(
    game: &GameForm,
    agent: AgentId,
    id: NodeId,
    pref: &Preference,
) -> Result<Action, GameError> {
    let feasible = game.subtree_outcomes(agent, id, None)?;
    let top = pref.best_in(feasible.iter().copied()).map_err(GameError::Core)?;
    let d = game.decision(id).expect("decision node");
    if d.child(Action::Object(top)).is_some() {
        Ok(Action::Object(top))
    } else if d.child(Action::Pass).is_some() {
        Ok(Action::Pass)
    } else {
        Err(GameError::GreedyUndefined(id.0))
    }
}

/// Greedy strategies for every agent and every preference of its domain.
#[derive(Clone, Debug)]
pub struct PlanSet {
    per_agent: Vec<BTreeMap<Preference, Strategy>>,
}

impl PlanSet {
    pub fn agents(&self) -> usize {
        self.per_agent.len()
    }

    pub fn plan(&self, agent: AgentId) -> Result<&BTreeMap<Preference, Strategy>, GameError> {
        self.per_agent.get(agent.0).ok_or(GameError::MissingPlan(agent))
    }

    pub fn strategy(&self, agent: AgentId, pref: &Preference) -> Result<&Strategy, GameError> {
        self.plan(agent)?.get(pref).ok_or(GameError::MissingPreference(agent))
    }
}

/// Builds the greedy plan of every agent over its domain. For labeled games
/// each preference must be single-peaked under the game's order; greedy
/// phase-two choices are only well formed there.
pub fn greedy_plans(game: &GameForm, domains: &[Domain]) -> Result<PlanSet, GameError> {
    if domains.len() != game.players() {
        return Err(GameError::Malformed(format!(
            "{} domains for {} players",
            domains.len(),
            game.players()
        )));
    }
    if let Some(order) = game.order() {
        for (a, dom) in domains.iter().enumerate() {
            if dom.iter().any(|pref| !is_single_peaked(pref, order)) {
                return Err(GameError::Rule(crate::rules::RuleError::NotSinglePeaked(
                    AgentId(a),
                )));
            }
        }
    }
    let per_agent = (0..game.players())
        .map(|a| {
            domains[a]
                .iter()
                .map(|pref| Ok((pref.clone(), greedy_strategy(game, AgentId(a), pref)?)))
                .collect::<Result<BTreeMap<_, _>, GameError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PlanSet { per_agent })
}
