//! Game-form representation: a finite rooted tree of decision nodes with
//! labeled actions and terminal allocations, plus the JSON game format.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{AgentId, Allocation, CoreError, LinearOrder, ObjectId, SubAllocation};
use crate::rules::RuleError;

/// Hard ceiling on materialized tree size; runaway inputs become clean
/// errors instead of memory exhaustion.
pub const MAX_GAME_NODES: usize = 1_000_000;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("game exceeds the {limit}-node construction limit")]
    SizeLimit { limit: usize },
    #[error("node {0} does not exist")]
    NodeNotFound(usize),
    #[error("node {0} is not a decision node of the given agent")]
    NotAgentsNode(usize),
    #[error("node {0} is not reachable while the agent follows the strategy")]
    NodeOffPath(usize),
    #[error("strategy has no entry for decision node {0}")]
    MissingStrategy(usize),
    #[error("strategy picks an action unavailable at node {0}")]
    InvalidAction(usize),
    #[error("no plan provided for agent {0}")]
    MissingPlan(AgentId),
    #[error("plan for agent {0} does not cover one of the profile preferences")]
    MissingPreference(AgentId),
    #[error("labeled game carries no object order; greedy plans need one")]
    NoOrder,
    #[error("phase-two node {0} has no recorded entry sub-allocation")]
    MissingEntry(usize),
    #[error("greedy choice undefined at node {0}: top feasible object not clinchable and no pass")]
    GreedyUndefined(usize),
    #[error("malformed game: {0}")]
    Malformed(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// An action at a decision node. `Object(o)` takes `o` and leaves;
/// `ObjectAgent(o, d)` additionally designates `d` to inherit the mover's
/// current object; `Pass` waits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Object(ObjectId),
    ObjectAgent(ObjectId, AgentId),
    Pass,
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Object(o) => write!(f, "take({o:?})"),
            Action::ObjectAgent(o, a) => write!(f, "take({o:?},designate {a:?})"),
            Action::Pass => write!(f, "pass"),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Object(o) => write!(f, "{o}"),
            Action::ObjectAgent(o, a) => write!(f, "({o}, {a})"),
            Action::Pass => write!(f, "Pass"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Phase {
    One,
    Two,
}

/// Construction label of a designator-game node: the phase, the departed
/// and remaining sub-allocations, and the mover.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NodeLabel {
    pub kappa: Phase,
    pub departed: SubAllocation,
    pub remaining: SubAllocation,
    pub mover: AgentId,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DecisionNode {
    pub player: AgentId,
    pub label: Option<NodeLabel>,
    pub actions: Vec<(Action, NodeId)>,
}

impl DecisionNode {
    pub fn child(&self, action: Action) -> Option<NodeId> {
        self.actions.iter().find(|(a, _)| *a == action).map(|&(_, c)| c)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum NodeKind {
    Decision(DecisionNode),
    Terminal(Allocation),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Node {
    pub kind: NodeKind,
    /// For phase-two nodes of the designator game: the sub-allocation at
    /// the moment this history entered phase two.
    pub phase2_entry: Option<SubAllocation>,
}

/// A finite rooted game tree. Node 0 is the root.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GameForm {
    players: usize,
    order: Option<LinearOrder>,
    nodes: Vec<Node>,
}

/// A strategy of one player: an action for each of the player's decision
/// nodes.
pub type Strategy = BTreeMap<NodeId, Action>;

impl GameForm {
    pub(crate) fn from_parts(
        players: usize,
        order: Option<LinearOrder>,
        nodes: Vec<Node>,
    ) -> Result<GameForm, GameError> {
        let game = GameForm { players, order, nodes };
        game.validate()?;
        Ok(game)
    }

    pub fn players(&self) -> usize {
        self.players
    }

    /// The object order the game was built against, when known.
    pub fn order(&self) -> Option<&LinearOrder> {
        self.order.as_ref()
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, GameError> {
        self.nodes.get(id.0).ok_or(GameError::NodeNotFound(id.0))
    }

    pub fn decision(&self, id: NodeId) -> Option<&DecisionNode> {
        match &self.nodes.get(id.0)?.kind {
            NodeKind::Decision(d) => Some(d),
            NodeKind::Terminal(_) => None,
        }
    }

    pub fn terminal(&self, id: NodeId) -> Option<&Allocation> {
        match &self.nodes.get(id.0)?.kind {
            NodeKind::Decision(_) => None,
            NodeKind::Terminal(a) => Some(a),
        }
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// All decision nodes of one player, ascending by id.
    pub fn decision_nodes_of(&self, agent: AgentId) -> Vec<NodeId> {
        self.node_ids()
            .filter(|&id| self.decision(id).is_some_and(|d| d.player == agent))
            .collect()
    }

    pub fn decision_node_count(&self) -> usize {
        self.node_ids().filter(|&id| self.decision(id).is_some()).count()
    }

    /// Structural checks: dense tree reachable from the root, every leaf a
    /// terminal with a valid allocation, players in range, labels
    /// consistent with the mover.
    pub fn validate(&self) -> Result<(), GameError> {
        if self.nodes.is_empty() {
            return Err(GameError::Malformed("game has no nodes".into()));
        }
        let mut indegree = vec![0usize; self.nodes.len()];
        for id in self.node_ids() {
            match &self.node(id)?.kind {
                NodeKind::Terminal(outcome) => {
                    if outcome.n() != self.players {
                        return Err(GameError::Malformed(format!(
                            "terminal {} allocates {} objects for {} players",
                            id.0,
                            outcome.n(),
                            self.players
                        )));
                    }
                }
                NodeKind::Decision(d) => {
                    if d.player.0 >= self.players {
                        return Err(GameError::Malformed(format!(
                            "node {} moved by out-of-range player {}",
                            id.0, d.player.0
                        )));
                    }
                    if d.actions.is_empty() {
                        return Err(GameError::Malformed(format!(
                            "decision node {} has no actions",
                            id.0
                        )));
                    }
                    if let Some(label) = &d.label {
                        if label.mover != d.player {
                            return Err(GameError::Malformed(format!(
                                "node {} label mover disagrees with player",
                                id.0
                            )));
                        }
                        if label.remaining.get(label.mover).is_none() {
                            return Err(GameError::Malformed(format!(
                                "node {} mover holds nothing in the remaining sub-allocation",
                                id.0
                            )));
                        }
                        // Departed and remaining must partition both the
                        // agents and the objects.
                        let mut agents: std::collections::BTreeSet<AgentId> =
                            label.departed.agents().collect();
                        let mut objects: std::collections::BTreeSet<ObjectId> =
                            label.departed.objects().collect();
                        for (a, o) in label.remaining.iter() {
                            if !agents.insert(a) || !objects.insert(o) {
                                return Err(GameError::Malformed(format!(
                                    "node {} label repeats an agent or object across \
                                     departed and remaining",
                                    id.0
                                )));
                            }
                        }
                        if agents.len() != self.players
                            || objects.len() != self.players
                            || agents.iter().any(|a| a.0 >= self.players)
                            || objects.iter().any(|o| o.0 >= self.players)
                        {
                            return Err(GameError::Malformed(format!(
                                "node {} label does not cover the {}-agent universe",
                                id.0, self.players
                            )));
                        }
                    }
                    let mut seen = std::collections::BTreeSet::new();
                    for &(a, child) in &d.actions {
                        if !seen.insert(a) {
                            return Err(GameError::Malformed(format!(
                                "node {} repeats action {a}",
                                id.0
                            )));
                        }
                        if child.0 >= self.nodes.len() {
                            return Err(GameError::NodeNotFound(child.0));
                        }
                        if child.0 == 0 {
                            return Err(GameError::Malformed("root has a parent".into()));
                        }
                        indegree[child.0] += 1;
                    }
                }
            }
        }
        if indegree[0] != 0 || indegree.iter().skip(1).any(|&d| d != 1) {
            return Err(GameError::Malformed(
                "nodes must form a tree rooted at node 0".into(),
            ));
        }
        Ok(())
    }

    /// Plays the game from the root: at every decision node the mover's
    /// strategy picks the action. `strategies[p]` is player `p`'s strategy.
    pub fn play(&self, strategies: &[&Strategy]) -> Result<Allocation, GameError> {
        if strategies.len() != self.players {
            return Err(GameError::Malformed(format!(
                "{} strategies for {} players",
                strategies.len(),
                self.players
            )));
        }
        let mut at = self.root();
        loop {
            match &self.node(at)?.kind {
                NodeKind::Terminal(outcome) => return Ok(outcome.clone()),
                NodeKind::Decision(d) => {
                    let action = strategies[d.player.0]
                        .get(&at)
                        .copied()
                        .ok_or(GameError::MissingStrategy(at.0))?;
                    at = d.child(action).ok_or(GameError::InvalidAction(at.0))?;
                }
            }
        }
    }

    /// Objects `agent` receives at some terminal of the subtree under
    /// `from`. With `follow`, the agent's own moves are fixed to that
    /// strategy; other players branch freely.
    pub fn subtree_outcomes(
        &self,
        agent: AgentId,
        from: NodeId,
        follow: Option<&Strategy>,
    ) -> Result<std::collections::BTreeSet<ObjectId>, GameError> {
        let mut out = std::collections::BTreeSet::new();
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            match &self.node(id)?.kind {
                NodeKind::Terminal(outcome) => {
                    out.insert(outcome.get(agent));
                }
                NodeKind::Decision(d) => {
                    if d.player == agent {
                        if let Some(s) = follow {
                            let action =
                                s.get(&id).copied().ok_or(GameError::MissingStrategy(id.0))?;
                            stack.push(d.child(action).ok_or(GameError::InvalidAction(id.0))?);
                            continue;
                        }
                    }
                    stack.extend(d.actions.iter().map(|&(_, c)| c));
                }
            }
        }
        Ok(out)
    }

    /// Recomputes `phase2_entry` on every labeled node: a phase-two node
    /// whose path so far stayed in phase one records its own remaining
    /// sub-allocation; deeper phase-two nodes inherit it. Assumes the tree
    /// is as constructed (not pruned), which holds for freshly parsed
    /// files.
    pub(crate) fn recompute_phase2_entries(&mut self) {
        let mut stack: Vec<(NodeId, Option<SubAllocation>)> = vec![(self.root(), None)];
        while let Some((id, entry)) = stack.pop() {
            let next_entry = match &self.nodes[id.0].kind {
                NodeKind::Terminal(_) => entry,
                NodeKind::Decision(d) => match &d.label {
                    Some(label) if label.kappa == Phase::Two => match entry {
                        Some(e) => Some(e),
                        None => Some(label.remaining.clone()),
                    },
                    Some(_) => None,
                    None => entry,
                },
            };
            self.nodes[id.0].phase2_entry = next_entry.clone();
            if let NodeKind::Decision(d) = &self.nodes[id.0].kind {
                for &(_, child) in &d.actions {
                    stack.push((child, next_entry.clone()));
                }
            }
        }
        // Phase-one and terminal nodes do not need an entry.
        for node in &mut self.nodes {
            let keep = match &node.kind {
                NodeKind::Decision(d) => {
                    matches!(&d.label, Some(l) if l.kappa == Phase::Two)
                }
                NodeKind::Terminal(_) => false,
            };
            if !keep {
                node.phase2_entry = None;
            }
        }
    }
}

// --- JSON game format -----------------------------------------------------
//
// `{"players": n, "nodes": [{"id": int, "player": int?, "label": {...}?,
//   "actions": [{"kind": "pass"|"object"|"objectAgent", "object": int?,
//   "agent": int?, "child": int}], "outcome": [int,...]?}]}`
// with node 0 the root and exactly one of `actions`/`outcome` per node.
// Games built against an object order carry it in an optional top-level
// `"order"` field.

#[derive(Serialize, Deserialize)]
struct GameFile {
    players: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<Vec<usize>>,
    nodes: Vec<NodeFile>,
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    id: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    player: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<LabelFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    actions: Option<Vec<ActionFile>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outcome: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct LabelFile {
    kappa: String,
    hat: Vec<(usize, usize)>,
    bar: Vec<(usize, usize)>,
    mover: usize,
}

#[derive(Serialize, Deserialize)]
struct ActionFile {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    object: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agent: Option<usize>,
    child: usize,
}

fn pairs_to_sub(pairs: &[(usize, usize)]) -> Result<SubAllocation, GameError> {
    SubAllocation::from_pairs(pairs.iter().map(|&(a, o)| (AgentId(a), ObjectId(o))))
        .map_err(GameError::Core)
}

pub fn parse_game(json: &str) -> Result<GameForm, GameError> {
    let file: GameFile =
        serde_json::from_str(json).map_err(|e| GameError::Malformed(e.to_string()))?;
    let mut nodes: Vec<Option<Node>> = vec![None; file.nodes.len()];
    for nf in &file.nodes {
        if nf.id >= nodes.len() {
            return Err(GameError::Malformed(format!(
                "node ids must be dense 0..{}, found {}",
                nodes.len(),
                nf.id
            )));
        }
        let kind = match (&nf.actions, &nf.outcome) {
            (Some(actions), None) => {
                let player = AgentId(nf.player.ok_or_else(|| {
                    GameError::Malformed(format!("decision node {} has no player", nf.id))
                })?);
                let label = match &nf.label {
                    None => None,
                    Some(lf) => Some(NodeLabel {
                        kappa: match lf.kappa.as_str() {
                            "I" => Phase::One,
                            "II" => Phase::Two,
                            other => {
                                return Err(GameError::Malformed(format!(
                                    "unknown phase {other:?}"
                                )))
                            }
                        },
                        departed: pairs_to_sub(&lf.hat)?,
                        remaining: pairs_to_sub(&lf.bar)?,
                        mover: AgentId(lf.mover),
                    }),
                };
                let actions = actions
                    .iter()
                    .map(|af| {
                        let action = match af.kind.as_str() {
                            "pass" => Action::Pass,
                            "object" => Action::Object(ObjectId(af.object.ok_or_else(
                                || GameError::Malformed("object action without object".into()),
                            )?)),
                            "objectAgent" => Action::ObjectAgent(
                                ObjectId(af.object.ok_or_else(|| {
                                    GameError::Malformed(
                                        "objectAgent action without object".into(),
                                    )
                                })?),
                                AgentId(af.agent.ok_or_else(|| {
                                    GameError::Malformed(
                                        "objectAgent action without agent".into(),
                                    )
                                })?),
                            ),
                            other => {
                                return Err(GameError::Malformed(format!(
                                    "unknown action kind {other:?}"
                                )))
                            }
                        };
                        Ok((action, NodeId(af.child)))
                    })
                    .collect::<Result<Vec<_>, GameError>>()?;
                NodeKind::Decision(DecisionNode { player, label, actions })
            }
            (None, Some(outcome)) => {
                NodeKind::Terminal(Allocation::from_indices(outcome).map_err(GameError::Core)?)
            }
            _ => {
                return Err(GameError::Malformed(format!(
                    "node {} must have exactly one of actions/outcome",
                    nf.id
                )))
            }
        };
        if nodes[nf.id].replace(Node { kind, phase2_entry: None }).is_some() {
            return Err(GameError::Malformed(format!("duplicate node id {}", nf.id)));
        }
    }
    let nodes = nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.ok_or(GameError::Malformed(format!("missing node id {i}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let order = match file.order {
        None => None,
        Some(o) => Some(LinearOrder::from_indices(&o).map_err(GameError::Core)?),
    };
    let mut game = GameForm::from_parts(file.players, order, nodes)?;
    game.recompute_phase2_entries();
    Ok(game)
}

pub fn game_to_json(game: &GameForm) -> String {
    let nodes = game
        .node_ids()
        .map(|id| {
            let node = game.node(id).expect("id in range");
            match &node.kind {
                NodeKind::Terminal(outcome) => NodeFile {
                    id: id.0,
                    player: None,
                    label: None,
                    actions: None,
                    outcome: Some(outcome.indices()),
                },
                NodeKind::Decision(d) => NodeFile {
                    id: id.0,
                    player: Some(d.player.0),
                    label: d.label.as_ref().map(|l| LabelFile {
                        kappa: match l.kappa {
                            Phase::One => "I".into(),
                            Phase::Two => "II".into(),
                        },
                        hat: l.departed.iter().map(|(a, o)| (a.0, o.0)).collect(),
                        bar: l.remaining.iter().map(|(a, o)| (a.0, o.0)).collect(),
                        mover: l.mover.0,
                    }),
                    actions: Some(
                        d.actions
                            .iter()
                            .map(|&(a, child)| match a {
                                Action::Pass => ActionFile {
                                    kind: "pass".into(),
                                    object: None,
                                    agent: None,
                                    child: child.0,
                                },
                                Action::Object(o) => ActionFile {
                                    kind: "object".into(),
                                    object: Some(o.0),
                                    agent: None,
                                    child: child.0,
                                },
                                Action::ObjectAgent(o, a) => ActionFile {
                                    kind: "objectAgent".into(),
                                    object: Some(o.0),
                                    agent: Some(a.0),
                                    child: child.0,
                                },
                            })
                            .collect(),
                    ),
                    outcome: None,
                },
            }
        })
        .collect();
    let file = GameFile {
        players: game.players(),
        order: game.order().map(|o| o.objects_in_order().iter().map(|x| x.0).collect()),
        nodes,
    };
    serde_json::to_string(&file).expect("game serialization cannot fail")
}
