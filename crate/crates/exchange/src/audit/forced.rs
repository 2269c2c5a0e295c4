//! Forced-allocation derivation and first-mover contradictions.
//!
//! The engine derives, over a small product of per-agent domains, all
//! assignments any rule with the stated properties must make, using exactly
//! three inference rules:
//!
//! 1. equity forcing: where the acclaimed agent (or pair) exists, the
//!    equity notion pins its assignment(s);
//! 2. unique completion: when the facts at a profile extend to exactly one
//!    individually rational and efficient allocation, that allocation is
//!    forced;
//! 3. top transfer: a forced object that tops some deviation preference of
//!    its receiver transfers to the deviated profile, since any
//!    strategy-proof rule must keep awarding it there.
//!
//! Every derived fact therefore corresponds to a verifiable proof step; the
//! fixpoint never applies stronger reasoning.

use std::collections::BTreeMap;

use crate::audit::AuditError;
use crate::core::{all_permutations, AgentId, Allocation, ObjectId, Profile};
use crate::domains::{Domain, ProfileSpace};
use crate::fairness::{
    acclaimed_agent, acclaimed_pair, is_efficient, is_individually_rational, partition,
};

/// Per-agent indices into the derivation space's domains.
pub type ProfileKey = Vec<usize>;

/// How a fact entered the set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Derivation {
    /// Supplied as an anchor.
    Seed,
    /// Forced by the selected equity notion at this profile.
    EquityForced,
    /// Part of the unique individually rational and efficient completion.
    Completion,
    /// Transferred from the source profile by strategy-proofness after the
    /// receiver's deviation tops the forced object.
    SpTransfer { from: ProfileKey },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Fact {
    pub object: ObjectId,
    pub derivation: Derivation,
}

/// Which equity notion drives rule 1.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EquityForcing {
    /// The acclaimed agent receives its favorite active object.
    Eua,
    /// The acclaimed pair swaps endowments.
    EbaPlus,
}

/// Assignments forced at profiles of a derivation space. Facts at one
/// profile are mutually injective.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FactSet {
    facts: BTreeMap<(ProfileKey, AgentId), Fact>,
}

impl FactSet {
    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn get(&self, key: &[usize], agent: AgentId) -> Option<&Fact> {
        self.facts.get(&(key.to_vec(), agent))
    }

    pub fn object(&self, key: &[usize], agent: AgentId) -> Option<ObjectId> {
        self.get(key, agent).map(|f| f.object)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(ProfileKey, AgentId), &Fact)> {
        self.facts.iter()
    }

    /// True when `other` contains every fact of `self` with equal objects.
    pub fn subset_of(&self, other: &FactSet) -> bool {
        self.facts
            .iter()
            .all(|(k, f)| other.facts.get(k).is_some_and(|g| g.object == f.object))
    }

    /// The facts at one profile as an agent-to-object map.
    pub fn at_profile(&self, key: &[usize]) -> BTreeMap<AgentId, ObjectId> {
        self.facts
            .iter()
            .filter(|((k, _), _)| k == key)
            .map(|((_, a), f)| (*a, f.object))
            .collect()
    }

    /// The full allocation at a profile, when every agent is pinned.
    pub fn allocation_at(&self, key: &[usize], n: usize) -> Option<Allocation> {
        let partial = self.at_profile(key);
        if partial.len() != n {
            return None;
        }
        let mut assignment = vec![ObjectId(0); n];
        for (a, o) in partial {
            assignment[a.0] = o;
        }
        Allocation::new(assignment).ok()
    }

    fn insert(
        &mut self,
        key: &[usize],
        agent: AgentId,
        object: ObjectId,
        derivation: Derivation,
    ) -> Result<bool, AuditError> {
        if let Some(existing) = self.facts.get(&(key.to_vec(), agent)) {
            if existing.object != object {
                return Err(AuditError::FactClash {
                    key: key.to_vec(),
                    agent,
                    first: existing.object.to_string(),
                    second: object.to_string(),
                });
            }
            return Ok(false);
        }
        for ((k, other), f) in self.facts.iter() {
            if k == key && f.object == object && *other != agent {
                return Err(AuditError::FactInjectivity {
                    key: key.to_vec(),
                    object: object.to_string(),
                });
            }
        }
        self.facts.insert((key.to_vec(), agent), Fact { object, derivation });
        Ok(true)
    }
}

/// Allocations extending a partial agent-to-object map.
fn extensions(partial: &BTreeMap<AgentId, ObjectId>, n: usize) -> Vec<Allocation> {
    let free_agents: Vec<AgentId> =
        (0..n).map(AgentId).filter(|a| !partial.contains_key(a)).collect();
    let taken: Vec<bool> = {
        let mut t = vec![false; n];
        for &o in partial.values() {
            t[o.0] = true;
        }
        t
    };
    let free_objects: Vec<ObjectId> = (0..n).map(ObjectId).filter(|o| !taken[o.0]).collect();
    all_permutations(free_agents.len())
        .into_iter()
        .map(|perm| {
            let mut assignment = vec![ObjectId(0); n];
            for (&a, &o) in partial.iter() {
                assignment[a.0] = o;
            }
            for (slot, &a) in free_agents.iter().enumerate() {
                assignment[a.0] = free_objects[perm[slot]];
            }
            Allocation::new(assignment).expect("extension is a bijection")
        })
        .collect()
}

/// The unique individually rational and efficient allocation extending the
/// partial assignment, if exactly one exists.
fn unique_admissible_completion(
    profile: &Profile,
    partial: &BTreeMap<AgentId, ObjectId>,
) -> Result<Option<Allocation>, AuditError> {
    let mut found: Option<Allocation> = None;
    for candidate in extensions(partial, profile.n()) {
        if !is_individually_rational(&candidate, profile) {
            continue;
        }
        if !is_efficient(&candidate, profile)? {
            continue;
        }
        if found.is_some() {
            return Ok(None);
        }
        found = Some(candidate);
    }
    Ok(found)
}

/// Runs the three inference rules to their least fixpoint over the product
/// space, starting from the `anchors`. Monotone: growing the anchors never
/// removes derived facts.
pub fn derive_forced_allocations(
    space: &ProfileSpace,
    equity: EquityForcing,
    anchors: &[(ProfileKey, AgentId, ObjectId)],
) -> Result<FactSet, AuditError> {
    let size = space.len();
    let cap = 100_000;
    if size > cap {
        return Err(AuditError::CapExceeded { size, cap });
    }
    let n = space.agents();
    let mut facts = FactSet::default();
    for (key, agent, object) in anchors {
        facts.insert(key, *agent, *object, Derivation::Seed)?;
    }
    loop {
        let mut changed = false;
        // Rule 1: equity forcing.
        for (key, profile) in space.iter() {
            match equity {
                EquityForcing::Eua => {
                    if let Some(i) = acclaimed_agent(&profile) {
                        let part = partition(&profile);
                        let favorite = profile
                            .pref(i)
                            .best_in(part.active_objects.iter().copied())
                            .expect("active objects nonempty");
                        changed |= facts.insert(&key, i, favorite, Derivation::EquityForced)?;
                    }
                }
                EquityForcing::EbaPlus => {
                    if let Some(pair) = acclaimed_pair(&profile) {
                        changed |= facts.insert(
                            &key,
                            pair.i,
                            pair.j.endowment(),
                            Derivation::EquityForced,
                        )?;
                        changed |= facts.insert(
                            &key,
                            pair.j,
                            pair.i.endowment(),
                            Derivation::EquityForced,
                        )?;
                    }
                }
            }
        }
        // Rule 2: unique admissible completion.
        for (key, profile) in space.iter() {
            let partial = facts.at_profile(&key);
            if partial.len() == n {
                continue;
            }
            if let Some(full) = unique_admissible_completion(&profile, &partial)? {
                for a in profile.agents() {
                    changed |= facts.insert(&key, a, full.get(a), Derivation::Completion)?;
                }
            }
        }
        // Rule 3: top transfer under strategy-proofness.
        let snapshot: Vec<(ProfileKey, AgentId, ObjectId)> = facts
            .iter()
            .map(|((key, agent), fact)| (key.clone(), *agent, fact.object))
            .collect();
        for (key, agent, object) in snapshot {
            for (alt_idx, alt) in space.domain(agent.0).prefs().iter().enumerate() {
                if alt_idx == key[agent.0] || alt.top() != object {
                    continue;
                }
                let mut deviated = key.clone();
                deviated[agent.0] = alt_idx;
                changed |= facts.insert(
                    &deviated,
                    agent,
                    object,
                    Derivation::SpTransfer { from: key.clone() },
                )?;
            }
        }
        if !changed {
            return Ok(facts);
        }
    }
}

/// One first-mover contradiction: playing the plan for the truthful
/// preference caps the agent's worst outcome at `truthful_object`, yet the
/// deviation plan attains `deviation_object`, which the truthful preference
/// ranks strictly higher. Both profiles lie inside the restricted
/// sub-domain product, so the game over that product exhibits both plays
/// from the root.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FirstMoverWitness {
    pub agent: AgentId,
    pub truthful_pref: Vec<usize>,
    pub truthful_key: ProfileKey,
    pub truthful_object: ObjectId,
    pub deviation_pref: Vec<usize>,
    pub deviation_key: ProfileKey,
    pub deviation_object: ObjectId,
}

/// Witnesses by agent; a complete certificate has one for every agent.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FirstMoverCertificate {
    pub witnesses: Vec<Vec<FirstMoverWitness>>,
}

impl FirstMoverCertificate {
    /// All agents have a witness: whoever moves first at the root of any
    /// pruned game implementing the facts, obvious dominance fails.
    pub fn complete(&self) -> bool {
        self.witnesses.iter().all(|w| !w.is_empty())
    }

    pub fn missing_agents(&self) -> Vec<AgentId> {
        self.witnesses
            .iter()
            .enumerate()
            .filter(|(_, w)| w.is_empty())
            .map(|(a, _)| AgentId(a))
            .collect()
    }
}

/// Searches the facts for first-mover contradictions over a restriction of
/// the derivation space to two preferences per agent. For each agent, every
/// ordered pair of facts inside the restricted product is tested: one under
/// each of the two preferences, with the deviation's object strictly better
/// under the truthful preference.
pub fn verify_first_mover_contradiction(
    facts: &FactSet,
    space: &ProfileSpace,
    sub_domains: &[Domain],
) -> Result<FirstMoverCertificate, AuditError> {
    let n = space.agents();
    if sub_domains.len() != n {
        return Err(AuditError::Domain(crate::domains::DomainError::Core(
            crate::core::CoreError::UniverseMismatch(sub_domains.len(), n),
        )));
    }
    // Indices of each agent's two sub-domain preferences inside the
    // derivation domain.
    let mut allowed: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (a, sub) in sub_domains.iter().enumerate() {
        if sub.len() != 2 {
            return Err(AuditError::SubDomainSize(AgentId(a), sub.len()));
        }
        let mut indices = Vec::new();
        for pref in sub.iter() {
            let idx = space.domain(a).prefs().iter().position(|p| p == pref);
            match idx {
                Some(i) => indices.push(i),
                None => return Err(AuditError::PreferenceNotInDomain(AgentId(a))),
            }
        }
        allowed.push(indices);
    }
    let inside = |key: &ProfileKey| key.iter().enumerate().all(|(a, i)| allowed[a].contains(i));

    let mut witnesses: Vec<Vec<FirstMoverWitness>> = vec![Vec::new(); n];
    for a in 0..n {
        let agent = AgentId(a);
        let pair = &allowed[a];
        for (truth_idx, dev_idx) in [(pair[0], pair[1]), (pair[1], pair[0])] {
            let truth_pref = &space.domain(a).prefs()[truth_idx];
            let dev_pref = &space.domain(a).prefs()[dev_idx];
            for ((tk, ta), tf) in facts.iter() {
                if *ta != agent || tk[a] != truth_idx || !inside(tk) {
                    continue;
                }
                for ((dk, da), df) in facts.iter() {
                    if *da != agent || dk[a] != dev_idx || !inside(dk) {
                        continue;
                    }
                    if truth_pref.prefers(df.object, tf.object) {
                        witnesses[a].push(FirstMoverWitness {
                            agent,
                            truthful_pref: truth_pref.ranking().iter().map(|o| o.0).collect(),
                            truthful_key: tk.clone(),
                            truthful_object: tf.object,
                            deviation_pref: dev_pref.ranking().iter().map(|o| o.0).collect(),
                            deviation_key: dk.clone(),
                            deviation_object: df.object,
                        });
                    }
                }
            }
        }
    }
    Ok(FirstMoverCertificate { witnesses })
}
