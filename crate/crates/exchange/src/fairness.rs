//! Property predicates over allocations: null/active partition, acclaimed
//! agent and acclaimed pair detection, individual rationality, brute-force
//! efficiency, the three equity notions, and dynamic individual rationality
//! over algorithm traces.
//!
//! The equity predicates are implications: they hold vacuously wherever the
//! acclaimed agent or pair does not exist.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::core::{all_allocations, AgentId, Allocation, ObjectId, Profile};
use crate::rules::{Trace, UpdateKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FairnessError {
    #[error("efficiency check over {n} agents exceeds the brute-force cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("trace does not match the profile/allocation: {0}")]
    TraceMismatch(String),
}

/// Null agents top-rank their own endowment and keep it under any
/// individually rational rule; the rest are active.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ActivePartition {
    pub null_agents: BTreeSet<AgentId>,
    pub active_agents: BTreeSet<AgentId>,
    pub active_objects: BTreeSet<ObjectId>,
}

pub fn partition(profile: &Profile) -> ActivePartition {
    let mut null_agents = BTreeSet::new();
    let mut active_agents = BTreeSet::new();
    let mut active_objects = BTreeSet::new();
    for a in profile.agents() {
        if profile.pref(a).top() == a.endowment() {
            null_agents.insert(a);
        } else {
            active_agents.insert(a);
            active_objects.insert(a.endowment());
        }
    }
    ActivePartition { null_agents, active_agents, active_objects }
}

/// The agent, if any, whose object every other active agent ranks best
/// among the active objects. Requires more than two active agents and that
/// the agent itself wants some other active object. Unique by construction.
pub fn acclaimed_agent(profile: &Profile) -> Option<AgentId> {
    let part = partition(profile);
    if part.active_agents.len() <= 2 {
        return None;
    }
    for &i in &part.active_agents {
        let own_best = profile
            .pref(i)
            .best_in(part.active_objects.iter().copied())
            .expect("active objects nonempty");
        if own_best == i.endowment() {
            continue;
        }
        let unanimous = part.active_agents.iter().all(|&j| {
            j == i
                || profile
                    .pref(j)
                    .best_in(part.active_objects.iter().copied())
                    .expect("nonempty")
                    == i.endowment()
        });
        if unanimous {
            return Some(i);
        }
    }
    None
}

/// Two agents whose objects split the active agents into two equal groups,
/// each group unanimously top-ranking one of the two objects among the
/// active ones, with each pair member in the other's group.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AcclaimedPair {
    pub i: AgentId,
    pub j: AgentId,
    /// Active agents whose best active object is `i`'s endowment.
    pub group_i: BTreeSet<AgentId>,
    /// Active agents whose best active object is `j`'s endowment.
    pub group_j: BTreeSet<AgentId>,
}

pub fn acclaimed_pair(profile: &Profile) -> Option<AcclaimedPair> {
    let part = partition(profile);
    if part.active_agents.len() < 4 {
        return None;
    }
    // Group the active agents by their best active object; the pair
    // conditions force this grouping, so two groups must emerge.
    let mut by_best: std::collections::BTreeMap<ObjectId, BTreeSet<AgentId>> =
        std::collections::BTreeMap::new();
    for &a in &part.active_agents {
        let best = profile
            .pref(a)
            .best_in(part.active_objects.iter().copied())
            .expect("nonempty");
        by_best.entry(best).or_default().insert(a);
    }
    if by_best.len() != 2 {
        return None;
    }
    let mut tops = by_best.into_iter();
    let (obj_i, group_i) = tops.next().expect("two groups");
    let (obj_j, group_j) = tops.next().expect("two groups");
    let (i, j) = (obj_i.owner(), obj_j.owner());
    if group_i.len() != group_j.len() || group_i.len() <= 1 {
        return None;
    }
    if !group_j.contains(&i) || !group_i.contains(&j) {
        return None;
    }
    Some(AcclaimedPair { i, j, group_i, group_j })
}

/// Every agent weakly prefers its assigned object to its endowment.
pub fn is_individually_rational(alloc: &Allocation, profile: &Profile) -> bool {
    profile
        .agents()
        .all(|a| profile.pref(a).prefers_weak(alloc.get(a), a.endowment()))
}

/// Default cap for the brute-force efficiency scan.
pub const EFFICIENCY_CAP: usize = 8;

/// Pareto efficiency by exhaustive enumeration of all `n!` allocations.
pub fn is_efficient(alloc: &Allocation, profile: &Profile) -> Result<bool, FairnessError> {
    is_efficient_with_cap(alloc, profile, EFFICIENCY_CAP)
}

pub fn is_efficient_with_cap(
    alloc: &Allocation,
    profile: &Profile,
    cap: usize,
) -> Result<bool, FairnessError> {
    let n = profile.n();
    if n > cap {
        return Err(FairnessError::CapExceeded { n, cap });
    }
    for other in all_allocations(n) {
        let mut strict = false;
        let mut all_weak = true;
        for a in profile.agents() {
            let pref = profile.pref(a);
            if pref.prefers(other.get(a), alloc.get(a)) {
                strict = true;
            } else if other.get(a) != alloc.get(a) {
                all_weak = false;
                break;
            }
        }
        if all_weak && strict {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Equity under unanimous acclaim: the acclaimed agent, when one exists,
/// receives its favorite active object.
pub fn satisfies_eua(alloc: &Allocation, profile: &Profile) -> bool {
    match acclaimed_agent(profile) {
        None => true,
        Some(i) => {
            let part = partition(profile);
            let favorite = profile
                .pref(i)
                .best_in(part.active_objects.iter().copied())
                .expect("nonempty");
            alloc.get(i) == favorite
        }
    }
}

/// Equity under bipartite acclaim: at least one member of the acclaimed
/// pair receives the other's object.
pub fn satisfies_eba(alloc: &Allocation, profile: &Profile) -> bool {
    match acclaimed_pair(profile) {
        None => true,
        Some(pair) => {
            alloc.get(pair.i) == pair.j.endowment() || alloc.get(pair.j) == pair.i.endowment()
        }
    }
}

/// The strengthening that rewards both members: the acclaimed pair swaps.
pub fn satisfies_eba_plus(alloc: &Allocation, profile: &Profile) -> bool {
    match acclaimed_pair(profile) {
        None => true,
        Some(pair) => {
            alloc.get(pair.i) == pair.j.endowment() && alloc.get(pair.j) == pair.i.endowment()
        }
    }
}

/// Every agent weakly prefers its final object to the object it held in
/// every snapshot taken before its departure. Stage-1 leavers hold only
/// their endowment, which is also their final object.
pub fn dynamic_ir(
    trace: &Trace,
    profile: &Profile,
    alloc: &Allocation,
) -> Result<bool, FairnessError> {
    let n = profile.n();
    let mut seen = vec![false; n];
    for step in &trace.steps {
        if step.leaver.0 >= n {
            return Err(FairnessError::TraceMismatch(format!(
                "leaver {} outside universe",
                step.leaver
            )));
        }
        if std::mem::replace(&mut seen[step.leaver.0], true) {
            return Err(FairnessError::TraceMismatch(format!(
                "agent {} leaves twice",
                step.leaver
            )));
        }
        if alloc.get(step.leaver) != step.taken {
            return Err(FairnessError::TraceMismatch(format!(
                "agent {} takes {} but is allocated {}",
                step.leaver,
                step.taken,
                alloc.get(step.leaver)
            )));
        }
        if step.update_kind != UpdateKind::Stage1
            && step.snapshot_before.get(step.leaver).is_none()
        {
            return Err(FairnessError::TraceMismatch(format!(
                "leaver {} missing from its own snapshot",
                step.leaver
            )));
        }
    }
    if !seen.into_iter().all(|s| s) {
        return Err(FairnessError::TraceMismatch("leavers do not exhaust the agents".into()));
    }
    for step in &trace.steps {
        for (a, held) in step.snapshot_before.iter() {
            if !profile.pref(a).prefers_weak(alloc.get(a), held) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::LinearOrder;
    use crate::domains::{enumerate_single_peaked, ProfileSpace};
    use crate::rules::{crawler, designator, ttc};

    fn profile(rows: &[&[usize]]) -> Profile {
        Profile::from_rows(rows).unwrap()
    }

    fn table1_p() -> Profile {
        profile(&[&[2, 1, 0], &[0, 1, 2], &[0, 1, 2]])
    }

    fn table1_p_prime() -> Profile {
        profile(&[&[2, 1, 0], &[0, 1, 2], &[0, 2, 1]])
    }

    fn table4_profile() -> Profile {
        profile(&[&[3, 2, 1, 0], &[3, 2, 1, 0], &[0, 1, 2, 3], &[0, 1, 2, 3]])
    }

    #[test]
    fn partition_cases() {
        let part = partition(&table1_p());
        assert!(part.null_agents.is_empty());
        assert_eq!(part.active_agents.len(), 3);

        let all_null = profile(&[&[0, 1, 2], &[1, 0, 2], &[2, 0, 1]]);
        let part = partition(&all_null);
        assert!(part.active_agents.is_empty());
        assert_eq!(part.null_agents.len(), 3);

        assert_eq!(partition(&table4_profile()).active_agents.len(), 4);
    }

    #[test]
    fn acclaimed_agent_cases() {
        // Agent i tops o_k while j and k both top o_i.
        let p = profile(&[&[2, 1, 0], &[0, 1, 2], &[0, 2, 1]]);
        assert_eq!(acclaimed_agent(&p), Some(AgentId(0)));
        assert_eq!(acclaimed_agent(&table1_p()), Some(AgentId(0)));
        assert_eq!(acclaimed_agent(&table1_p_prime()), Some(AgentId(0)));
        assert_eq!(acclaimed_agent(&table4_profile()), None);
        // Two active agents only: below the threshold.
        let two = profile(&[&[1, 0, 2], &[0, 1, 2], &[2, 0, 1]]);
        assert_eq!(acclaimed_agent(&two), None);
    }

    #[test]
    fn acclaimed_pair_cases() {
        let pair = acclaimed_pair(&table4_profile()).unwrap();
        assert_eq!((pair.i, pair.j), (AgentId(0), AgentId(3)));
        assert_eq!(pair.group_i, BTreeSet::from([AgentId(2), AgentId(3)]));
        assert_eq!(pair.group_j, BTreeSet::from([AgentId(0), AgentId(1)]));

        let all_null = profile(&[&[0, 1, 2, 3], &[1, 0, 2, 3], &[2, 0, 1, 3], &[3, 0, 1, 2]]);
        assert!(acclaimed_pair(&all_null).is_none());

        // Three agents top o_4, one tops o_1: groups of unequal size.
        let skew = profile(&[&[3, 0, 1, 2], &[3, 0, 1, 2], &[3, 0, 1, 2], &[0, 1, 2, 3]]);
        assert!(acclaimed_pair(&skew).is_none());
    }

    #[test]
    fn individual_rationality() {
        let p = table1_p();
        assert!(is_individually_rational(&Allocation::identity(3), &p));
        let order = LinearOrder::identity(3);
        let (c, _) = crawler(&p, &order).unwrap();
        assert!(is_individually_rational(&c, &p));
        // A null agent handed a non-endowment is strictly worse off.
        let all_null = profile(&[&[0, 1, 2], &[1, 0, 2], &[2, 0, 1]]);
        let swapped = Allocation::from_indices(&[1, 0, 2]).unwrap();
        assert!(!is_individually_rational(&swapped, &all_null));
    }

    #[test]
    fn efficiency_cases() {
        let order = LinearOrder::identity(3);
        let (cp, _) = crawler(&table1_p(), &order).unwrap();
        let (cpp, _) = crawler(&table1_p_prime(), &order).unwrap();
        assert!(is_efficient(&cp, &table1_p()).unwrap());
        assert!(is_efficient(&cpp, &table1_p_prime()).unwrap());

        let single = profile(&[&[0]]);
        assert!(is_efficient(&Allocation::identity(1), &single).unwrap());

        assert!(!is_efficient(&Allocation::identity(4), &table4_profile()).unwrap());

        let big = Profile::new(vec![
            crate::core::Preference::from_indices(
                &(0..9).collect::<Vec<_>>()
            ).unwrap();
            9
        ])
        .unwrap();
        assert_eq!(
            is_efficient(&Allocation::identity(9), &big).unwrap_err(),
            FairnessError::CapExceeded { n: 9, cap: 8 }
        );
    }

    #[test]
    fn equity_under_unanimous_acclaim_example1() {
        let order = LinearOrder::identity(3);
        let (cp, _) = crawler(&table1_p(), &order).unwrap();
        assert!(satisfies_eua(&cp, &table1_p()));
        let (cpp, _) = crawler(&table1_p_prime(), &order).unwrap();
        assert!(!satisfies_eua(&cpp, &table1_p_prime()));
    }

    #[test]
    fn equity_under_bipartite_acclaim_table4() {
        let order = LinearOrder::identity(4);
        let p = table4_profile();
        let (c, _) = crawler(&p, &order).unwrap();
        assert!(!satisfies_eba(&c, &p));
        let (d, _) = designator(&p, &order).unwrap();
        assert!(satisfies_eba(&d, &p));
        assert!(!satisfies_eba_plus(&d, &p));
        let t = ttc(&p);
        assert!(satisfies_eba_plus(&t, &p));
    }

    #[test]
    fn eba_plus_implies_eba_exhaustively() {
        let order = LinearOrder::identity(4);
        let space = ProfileSpace::shared(enumerate_single_peaked(&order));
        let allocations = crate::core::all_allocations(4);
        for (_, p) in space.iter().step_by(23) {
            for m in &allocations {
                if satisfies_eba_plus(m, &p) {
                    assert!(satisfies_eba(m, &p));
                }
            }
        }
    }

    #[test]
    fn dynamic_ir_designator_table4() {
        let order = LinearOrder::identity(4);
        let p = table4_profile();
        let (alloc, trace) = designator(&p, &order).unwrap();
        assert!(dynamic_ir(&trace, &p, &alloc).unwrap());
    }

    #[test]
    fn dynamic_ir_all_null() {
        let order = LinearOrder::identity(3);
        let p = profile(&[&[0, 1, 2], &[1, 0, 2], &[2, 1, 0]]);
        let (alloc, trace) = designator(&p, &order).unwrap();
        assert!(dynamic_ir(&trace, &p, &alloc).unwrap());
    }

    #[test]
    fn dynamic_ir_rejects_mismatched_allocation() {
        let order = LinearOrder::identity(4);
        let p = table4_profile();
        let (_, trace) = designator(&p, &order).unwrap();
        let wrong = Allocation::identity(4);
        assert!(matches!(
            dynamic_ir(&trace, &p, &wrong),
            Err(FairnessError::TraceMismatch(_))
        ));
    }
}
