//! The three exchange rules as executable algorithms with full step traces,
//! plus serial dictatorship.
//!
//! Top trading cycles needs no geometry. The crawler and the designator run
//! relative to a linear order over objects; the crawler is exposed on
//! arbitrary domains, while the designator insists on a single-peaked
//! profile because its designating update is only well defined there.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{
    adjacent_larger, agents_between_inclusive, AgentId, Allocation, LinearOrder, ObjectId,
    Profile, SubAllocation,
};
use crate::domains::is_single_peaked;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("agent {0} reports a preference that is not single-peaked under the given order")]
    NotSinglePeaked(AgentId),
    #[error("profile ranks {0} objects but the order covers {1}")]
    UniverseMismatch(usize, usize),
    #[error("priority sequence is not a permutation of the agents")]
    InvalidPriority,
}

/// How a step updated the running sub-allocation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    /// A null agent left with its endowment before the main loop.
    Stage1,
    Crawl,
    Designate,
}

impl std::fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UpdateKind::Stage1 => write!(f, "stage1"),
            UpdateKind::Crawl => write!(f, "crawl"),
            UpdateKind::Designate => write!(f, "designate"),
        }
    }
}

/// One step of a crawler or designator run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceStep {
    /// 0 for stage-1 departures, then 1, 2, ... for main-loop steps.
    pub step_index: usize,
    pub leaver: AgentId,
    pub taken: ObjectId,
    pub update_kind: UpdateKind,
    /// The agent that inherited the leaver's object, for designating steps.
    pub designated: Option<AgentId>,
    /// The sub-allocation immediately before the step.
    pub snapshot_before: SubAllocation,
}

impl TraceStep {
    /// Human-readable line: agents and objects 1-indexed,
    /// `step=<s> kind=<k> leaver=<a> takes=<o> designated=<a|->`.
    pub fn human(&self) -> String {
        let designated = match self.designated {
            Some(a) => a.to_string(),
            None => "-".to_string(),
        };
        format!(
            "step={} kind={} leaver={} takes={} designated={}",
            self.step_index, self.update_kind, self.leaver, self.taken, designated
        )
    }
}

/// Full run record of a crawler or designator execution.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn human(&self) -> String {
        self.steps.iter().map(TraceStep::human).collect::<Vec<_>>().join("\n")
    }

    /// Leavers in departure order; stage-1 departures come first.
    pub fn leave_order(&self) -> Vec<AgentId> {
        self.steps.iter().map(|s| s.leaver).collect()
    }
}

#[derive(Serialize)]
struct TraceStepJson {
    step: usize,
    kind: UpdateKind,
    leaver: usize,
    takes: usize,
    designated: Option<usize>,
    before: Vec<(usize, usize)>,
}

/// Machine form of a trace, for embedding in audit reports.
pub fn trace_to_json_value(trace: &Trace) -> serde_json::Value {
    let steps: Vec<TraceStepJson> = trace
        .steps
        .iter()
        .map(|s| TraceStepJson {
            step: s.step_index,
            kind: s.update_kind,
            leaver: s.leaver.0,
            takes: s.taken.0,
            designated: s.designated.map(|a| a.0),
            before: s.snapshot_before.iter().map(|(a, o)| (a.0, o.0)).collect(),
        })
        .collect();
    serde_json::to_value(steps).expect("trace serialization cannot fail")
}

/// Top trading cycles: every agent points to the owner of its favorite
/// remaining object; all cycles of the pointing graph trade and leave, and
/// the process repeats on the rest.
pub fn ttc(profile: &Profile) -> Allocation {
    let n = profile.n();
    let mut remaining_agents: Vec<bool> = vec![true; n];
    let mut remaining_objects: Vec<bool> = vec![true; n];
    let mut assignment: Vec<Option<ObjectId>> = vec![None; n];
    let mut left = n;
    while left > 0 {
        // Each remaining agent points at the owner of its favorite
        // remaining object. Owners of remaining objects are exactly the
        // remaining agents, so the pointing graph is functional and every
        // agent reaches a cycle.
        let mut points_to: Vec<Option<AgentId>> = vec![None; n];
        for a in 0..n {
            if remaining_agents[a] {
                let best = profile
                    .pref(AgentId(a))
                    .best_in((0..n).filter(|&o| remaining_objects[o]).map(ObjectId))
                    .expect("remaining set is nonempty");
                points_to[a] = Some(best.owner());
            }
        }
        // Resolve every current cycle in the same round, scanning agents in
        // index order.
        let mut on_cycle = vec![false; n];
        for start in 0..n {
            if !remaining_agents[start] || on_cycle[start] {
                continue;
            }
            // Walk the functional graph until a repeat; mark the cycle part.
            let mut seen_at = vec![usize::MAX; n];
            let mut walk = AgentId(start);
            let mut step = 0;
            while seen_at[walk.0] == usize::MAX {
                seen_at[walk.0] = step;
                step += 1;
                walk = points_to[walk.0].expect("remaining agent points somewhere");
            }
            let cycle_entry = walk;
            if !on_cycle[cycle_entry.0] {
                let mut cur = cycle_entry;
                loop {
                    on_cycle[cur.0] = true;
                    cur = points_to[cur.0].expect("cycle member points");
                    if cur == cycle_entry {
                        break;
                    }
                }
            }
        }
        for a in 0..n {
            if on_cycle[a] {
                let target = points_to[a].expect("cycle member");
                assignment[a] = Some(target.endowment());
            }
        }
        for a in 0..n {
            if on_cycle[a] {
                remaining_agents[a] = false;
                remaining_objects[a] = false; // object o_a leaves with its taker
                left -= 1;
            }
        }
    }
    Allocation::new(assignment.into_iter().map(|o| o.expect("all assigned")).collect())
        .expect("cycle trading yields a bijection")
}

fn check_universe(profile: &Profile, order: &LinearOrder) -> Result<(), RuleError> {
    if profile.n() != order.n() {
        return Err(RuleError::UniverseMismatch(profile.n(), order.n()));
    }
    Ok(())
}

/// The leaver of the current step: the agent whose held object is
/// `<`-minimal among agents whose best remaining object is weakly below
/// their held object. Also returns the holder of the leaver's best
/// remaining object.
fn find_leaver(
    sub: &SubAllocation,
    profile: &Profile,
    order: &LinearOrder,
) -> (AgentId, AgentId) {
    let mut leaver: Option<(AgentId, ObjectId)> = None;
    for (a, held) in sub.iter() {
        let best = profile
            .pref(a)
            .best_in(sub.objects())
            .expect("sub-allocation nonempty");
        if order.leq(best, held) && leaver.is_none_or(|(_, cur)| order.lt(held, cur)) {
            leaver = Some((a, held));
        }
    }
    let (leaver, _) = leaver.expect("the agent holding the largest object is always eligible");
    let best = profile.pref(leaver).best_in(sub.objects()).expect("nonempty");
    let source = sub.holder_of(best).expect("best remaining object is held");
    (leaver, source)
}

/// Crawling update: the leaver departs with `source`'s object, every agent
/// from `source` up to (excluding) the leaver moves to the adjacently larger
/// object, everyone else keeps theirs.
pub(crate) fn crawl_update(
    sub: &SubAllocation,
    order: &LinearOrder,
    source: AgentId,
    leaver: AgentId,
) -> SubAllocation {
    let span = agents_between_inclusive(sub, order, source, leaver);
    let mut next = SubAllocation::empty();
    for (a, o) in sub.iter() {
        if a == leaver {
            continue;
        }
        if span.contains(&a) {
            let up = adjacent_larger(sub, order, o)
                .expect("object held")
                .expect("a larger object exists below the leaver");
            next.insert(a, up);
        } else {
            next.insert(a, o);
        }
    }
    next
}

/// Designating update: `designated` inherits the leaver's object, agents
/// from `source` up to (excluding) `designated` crawl, everyone else keeps
/// theirs.
pub(crate) fn designate_update(
    sub: &SubAllocation,
    order: &LinearOrder,
    source: AgentId,
    leaver: AgentId,
    designated: AgentId,
) -> SubAllocation {
    let leaver_object = sub.get(leaver).expect("leaver holds an object");
    let span = agents_between_inclusive(sub, order, source, designated);
    let mut next = SubAllocation::empty();
    for (a, o) in sub.iter() {
        if a == leaver {
            continue;
        }
        if a == designated {
            next.insert(a, leaver_object);
        } else if span.contains(&a) {
            let up = adjacent_larger(sub, order, o)
                .expect("object held")
                .expect("a larger object exists below the designated agent");
            next.insert(a, up);
        } else {
            next.insert(a, o);
        }
    }
    next
}

/// The crawler. Runs on any profile over the order's universe; single
/// departure per step, `n` steps total.
pub fn crawler(
    profile: &Profile,
    order: &LinearOrder,
) -> Result<(Allocation, Trace), RuleError> {
    check_universe(profile, order)?;
    let n = profile.n();
    let mut sub = SubAllocation::endowments(profile.agents());
    let mut assignment: Vec<Option<ObjectId>> = vec![None; n];
    let mut trace = Trace::default();
    for step in 1..=n {
        let snapshot = sub.clone();
        let (leaver, source) = find_leaver(&sub, profile, order);
        let taken = sub.get(source).expect("source holds the best object");
        assignment[leaver.0] = Some(taken);
        sub = crawl_update(&sub, order, source, leaver);
        trace.steps.push(TraceStep {
            step_index: step,
            leaver,
            taken,
            update_kind: UpdateKind::Crawl,
            designated: None,
            snapshot_before: snapshot,
        });
    }
    let allocation =
        Allocation::new(assignment.into_iter().map(|o| o.expect("all assigned")).collect())
            .expect("crawler yields a bijection");
    Ok((allocation, trace))
}

/// The designator. Stage 1 sends every null agent home and fixes, once, the
/// map from each active agent to the owner of its favorite active object.
/// The main loop is the crawler except that when that owner currently sits
/// between the departing object and the leaver, it directly inherits the
/// leaver's object instead of the whole span crawling.
pub fn designator(
    profile: &Profile,
    order: &LinearOrder,
) -> Result<(Allocation, Trace), RuleError> {
    check_universe(profile, order)?;
    for a in profile.agents() {
        if !is_single_peaked(profile.pref(a), order) {
            return Err(RuleError::NotSinglePeaked(a));
        }
    }
    let n = profile.n();
    let mut assignment: Vec<Option<ObjectId>> = vec![None; n];
    let mut trace = Trace::default();

    let mut sub = SubAllocation::empty();
    for a in profile.agents() {
        if profile.pref(a).top() == a.endowment() {
            assignment[a.0] = Some(a.endowment());
            trace.steps.push(TraceStep {
                step_index: 0,
                leaver: a,
                taken: a.endowment(),
                update_kind: UpdateKind::Stage1,
                designated: None,
                snapshot_before: SubAllocation::endowments(
                    profile.agents().filter(|x| assignment[x.0].is_none() || *x == a),
                ),
            });
        } else {
            sub.insert(a, a.endowment());
        }
    }

    // tau(i): the owner of i's favorite object among the active endowments,
    // fixed before the main loop and never recomputed.
    let mut tau: Vec<Option<AgentId>> = vec![None; n];
    if !sub.is_empty() {
        for a in sub.agents().collect::<Vec<_>>() {
            let best = profile.pref(a).best_in(sub.objects()).expect("nonempty");
            tau[a.0] = Some(sub.holder_of(best).expect("active endowment"));
        }
    }

    let mut step = 0;
    while !sub.is_empty() {
        step += 1;
        let snapshot = sub.clone();
        let (leaver, source) = find_leaver(&sub, profile, order);
        let taken = sub.get(source).expect("source holds the best object");
        assignment[leaver.0] = Some(taken);

        let target = tau[leaver.0].expect("active agent has a stage-1 target");
        // Designate when the target still holds an object weakly between
        // the departing object and strictly below the leaver's.
        let designates = match sub.get(target) {
            Some(held) if target != leaver => {
                order.leq(taken, held) && order.lt(held, sub.get(leaver).expect("holds"))
            }
            _ => false,
        };
        if designates {
            sub = designate_update(&sub, order, source, leaver, target);
            trace.steps.push(TraceStep {
                step_index: step,
                leaver,
                taken,
                update_kind: UpdateKind::Designate,
                designated: Some(target),
                snapshot_before: snapshot,
            });
        } else {
            sub = crawl_update(&sub, order, source, leaver);
            trace.steps.push(TraceStep {
                step_index: step,
                leaver,
                taken,
                update_kind: UpdateKind::Crawl,
                designated: None,
                snapshot_before: snapshot,
            });
        }
    }
    let allocation =
        Allocation::new(assignment.into_iter().map(|o| o.expect("all assigned")).collect())
            .expect("designator yields a bijection");
    Ok((allocation, trace))
}

/// Agents pick their best remaining object in priority order.
pub fn serial_dictatorship(
    profile: &Profile,
    priority: &[AgentId],
) -> Result<Allocation, RuleError> {
    let n = profile.n();
    let raw: Vec<usize> = priority.iter().map(|a| a.0).collect();
    let mut seen = vec![false; n];
    if raw.len() != n || raw.iter().any(|&a| a >= n || std::mem::replace(&mut seen[a], true)) {
        return Err(RuleError::InvalidPriority);
    }
    let mut remaining: Vec<bool> = vec![true; n];
    let mut assignment: Vec<Option<ObjectId>> = vec![None; n];
    for &a in priority {
        let best = profile
            .pref(a)
            .best_in((0..n).filter(|&o| remaining[o]).map(ObjectId))
            .expect("one object per agent remains");
        assignment[a.0] = Some(best);
        remaining[best.0] = false;
    }
    Ok(Allocation::new(assignment.into_iter().map(|o| o.expect("all assigned")).collect())
        .expect("serial dictatorship yields a bijection"))
}

/// A named rule bound to whatever context it needs, for audits and the CLI.
#[derive(Clone, Debug)]
pub enum Rule {
    Ttc,
    Crawler(LinearOrder),
    Designator(LinearOrder),
    SerialDictatorship(Vec<AgentId>),
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Ttc => "ttc",
            Rule::Crawler(_) => "crawler",
            Rule::Designator(_) => "designator",
            Rule::SerialDictatorship(_) => "serial-dictatorship",
        }
    }

    pub fn apply(&self, profile: &Profile) -> Result<Allocation, RuleError> {
        Ok(self.apply_traced(profile)?.0)
    }

    /// Applies the rule; crawler and designator also return their trace.
    pub fn apply_traced(&self, profile: &Profile) -> Result<(Allocation, Option<Trace>), RuleError> {
        match self {
            Rule::Ttc => Ok((ttc(profile), None)),
            Rule::Crawler(order) => {
                let (alloc, trace) = crawler(profile, order)?;
                Ok((alloc, Some(trace)))
            }
            Rule::Designator(order) => {
                let (alloc, trace) = designator(profile, order)?;
                Ok((alloc, Some(trace)))
            }
            Rule::SerialDictatorship(priority) => {
                Ok((serial_dictatorship(profile, priority)?, None))
            }
        }
    }
}
