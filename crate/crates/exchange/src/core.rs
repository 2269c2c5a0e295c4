//! Foundational value types: agents, objects, preferences, profiles,
//! (sub-)allocations, and the linear order underlying single-peakedness.
//!
//! Agents and objects share the index space `[0, n)`: agent `k` is endowed
//! with object `k`, so the endowment is always the identity allocation. All
//! types are immutable values and all operations are pure.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An object, identified by its index in `[0, n)`. Object `k` is the
/// endowment of agent `k`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectId(pub usize);

/// An agent, identified by its index in `[0, n)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub usize);

impl ObjectId {
    /// The agent endowed with this object.
    pub fn owner(self) -> AgentId {
        AgentId(self.0)
    }
}

impl AgentId {
    /// The object this agent is endowed with.
    pub fn endowment(self) -> ObjectId {
        ObjectId(self.0)
    }
}

impl fmt::Debug for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o{}", self.0)
    }
}

impl fmt::Debug for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Renders an object 1-indexed as `o_k`, matching the human-readable trace
/// convention.
impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o_{}", self.0 + 1)
    }
}

/// Renders an agent 1-indexed.
impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoreError {
    #[error("object universe must be nonempty")]
    EmptyUniverse,
    #[error("sequence of length {got} is not a permutation of 0..{n}")]
    NotAPermutation { n: usize, got: usize },
    #[error("object set is empty")]
    EmptyObjectSet,
    #[error("object {0:?} outside the universe of size {1}")]
    ObjectOutOfRange(ObjectId, usize),
    #[error("agent {0:?} outside the universe of size {1}")]
    AgentOutOfRange(AgentId, usize),
    #[error("object {0:?} not held in the sub-allocation")]
    NotInSubAllocation(ObjectId),
    #[error("sub-allocation maps two agents to object {0:?}")]
    DuplicateObject(ObjectId),
    #[error("preferences rank universes of different sizes: {0} vs {1}")]
    UniverseMismatch(usize, usize),
    #[error("invalid profile JSON: {0}")]
    Json(String),
}

fn check_permutation(seq: &[usize], n: usize) -> Result<(), CoreError> {
    if seq.len() != n {
        return Err(CoreError::NotAPermutation { n, got: seq.len() });
    }
    let mut seen = vec![false; n];
    for &x in seq {
        if x >= n || seen[x] {
            return Err(CoreError::NotAPermutation { n, got: seq.len() });
        }
        seen[x] = true;
    }
    Ok(())
}

/// A complete strict ranking of all objects. Position 0 is the favorite.
///
/// Stores the inverse map (object to rank) alongside the ranking so that
/// pairwise comparisons are O(1); comparisons dominate audit loops.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Preference {
    ranking: Vec<ObjectId>,
    rank_of: Vec<usize>,
}

impl Preference {
    pub fn new(ranking: Vec<ObjectId>) -> Result<Self, CoreError> {
        let n = ranking.len();
        if n == 0 {
            return Err(CoreError::EmptyUniverse);
        }
        let raw: Vec<usize> = ranking.iter().map(|o| o.0).collect();
        check_permutation(&raw, n)?;
        let mut rank_of = vec![0; n];
        for (r, &o) in ranking.iter().enumerate() {
            rank_of[o.0] = r;
        }
        Ok(Preference { ranking, rank_of })
    }

    /// Builds a preference from raw object indices, best first.
    pub fn from_indices(ranking: &[usize]) -> Result<Self, CoreError> {
        Preference::new(ranking.iter().map(|&i| ObjectId(i)).collect())
    }

    pub fn n(&self) -> usize {
        self.ranking.len()
    }

    /// The top-ranked object, `r_1`.
    pub fn top(&self) -> ObjectId {
        self.ranking[0]
    }

    /// The object at rank `k` (0-based), i.e. `r_{k+1}`.
    pub fn ranked(&self, k: usize) -> ObjectId {
        self.ranking[k]
    }

    /// The rank of `o` (0 = favorite).
    pub fn rank(&self, o: ObjectId) -> usize {
        self.rank_of[o.0]
    }

    pub fn ranking(&self) -> &[ObjectId] {
        &self.ranking
    }

    /// Strict comparison: true iff `a` is ranked above `b`. Irreflexive.
    pub fn prefers(&self, a: ObjectId, b: ObjectId) -> bool {
        self.rank_of[a.0] < self.rank_of[b.0]
    }

    /// Weak comparison: `a` ranked above `b`, or `a == b`.
    pub fn prefers_weak(&self, a: ObjectId, b: ObjectId) -> bool {
        self.rank_of[a.0] <= self.rank_of[b.0]
    }

    /// The most preferred member of a nonempty object set.
    pub fn best_in<I: IntoIterator<Item = ObjectId>>(&self, objs: I) -> Result<ObjectId, CoreError> {
        self.extreme_in(objs, true)
    }

    /// The least preferred member of a nonempty object set.
    pub fn worst_in<I: IntoIterator<Item = ObjectId>>(
        &self,
        objs: I,
    ) -> Result<ObjectId, CoreError> {
        self.extreme_in(objs, false)
    }

    fn extreme_in<I: IntoIterator<Item = ObjectId>>(
        &self,
        objs: I,
        best: bool,
    ) -> Result<ObjectId, CoreError> {
        let mut result: Option<ObjectId> = None;
        for o in objs {
            if o.0 >= self.n() {
                return Err(CoreError::ObjectOutOfRange(o, self.n()));
            }
            result = Some(match result {
                None => o,
                Some(cur) => {
                    if self.prefers(o, cur) == best {
                        o
                    } else {
                        cur
                    }
                }
            });
        }
        result.ok_or(CoreError::EmptyObjectSet)
    }

    /// The completely reversed preference.
    pub fn reversed(&self) -> Preference {
        let mut ranking = self.ranking.clone();
        ranking.reverse();
        Preference { rank_of: ranking.iter().rev().map(|o| o.0).collect(), ranking }
            .recompute_inverse()
    }

    fn recompute_inverse(mut self) -> Preference {
        for (r, &o) in self.ranking.iter().enumerate() {
            self.rank_of[o.0] = r;
        }
        self
    }
}

impl fmt::Debug for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ranking.iter().map(|o| format!("{o:?}")).collect();
        write!(f, "({})", parts.join(">"))
    }
}

impl PartialOrd for Preference {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic on the ranking; gives domains a canonical sort order.
impl Ord for Preference {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.ranking.cmp(&other.ranking)
    }
}

/// One preference per agent, all over the same object universe.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Profile {
    prefs: Vec<Preference>,
}

impl Profile {
    pub fn new(prefs: Vec<Preference>) -> Result<Self, CoreError> {
        if prefs.is_empty() {
            return Err(CoreError::EmptyUniverse);
        }
        let n = prefs[0].n();
        if prefs.len() != n {
            return Err(CoreError::UniverseMismatch(prefs.len(), n));
        }
        for p in &prefs {
            if p.n() != n {
                return Err(CoreError::UniverseMismatch(p.n(), n));
            }
        }
        Ok(Profile { prefs })
    }

    pub fn from_rows(rows: &[&[usize]]) -> Result<Self, CoreError> {
        Profile::new(
            rows.iter()
                .map(|r| Preference::from_indices(r))
                .collect::<Result<Vec<_>, _>>()?,
        )
    }

    pub fn n(&self) -> usize {
        self.prefs.len()
    }

    pub fn pref(&self, a: AgentId) -> &Preference {
        &self.prefs[a.0]
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.prefs
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.n()).map(AgentId)
    }

    pub fn objects(&self) -> impl Iterator<Item = ObjectId> {
        (0..self.n()).map(ObjectId)
    }

    /// A copy of the profile with agent `a`'s preference replaced.
    pub fn with_pref(&self, a: AgentId, pref: Preference) -> Profile {
        let mut prefs = self.prefs.clone();
        prefs[a.0] = pref;
        Profile { prefs }
    }
}

/// A bijection from agents to objects.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Allocation {
    assignment: Vec<ObjectId>,
}

impl Allocation {
    pub fn new(assignment: Vec<ObjectId>) -> Result<Self, CoreError> {
        let n = assignment.len();
        if n == 0 {
            return Err(CoreError::EmptyUniverse);
        }
        let raw: Vec<usize> = assignment.iter().map(|o| o.0).collect();
        check_permutation(&raw, n)?;
        Ok(Allocation { assignment })
    }

    pub fn from_indices(assignment: &[usize]) -> Result<Self, CoreError> {
        Allocation::new(assignment.iter().map(|&i| ObjectId(i)).collect())
    }

    /// The endowment allocation `e`, with `e(i) = o_i`.
    pub fn identity(n: usize) -> Allocation {
        Allocation { assignment: (0..n).map(ObjectId).collect() }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn get(&self, a: AgentId) -> ObjectId {
        self.assignment[a.0]
    }

    pub fn as_slice(&self) -> &[ObjectId] {
        &self.assignment
    }

    pub fn indices(&self) -> Vec<usize> {
        self.assignment.iter().map(|o| o.0).collect()
    }

    /// Renders the allocation as `(o_1, o_4, ...)`, 1-indexed by agent.
    pub fn human(&self) -> String {
        let parts: Vec<String> = self.assignment.iter().map(|o| o.to_string()).collect();
        format!("({})", parts.join(", "))
    }
}

impl fmt::Debug for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.assignment)
    }
}

/// A partial allocation: an injective map from a subset of agents to an
/// equally sized subset of objects.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct SubAllocation {
    pairs: BTreeMap<AgentId, ObjectId>,
}

impl SubAllocation {
    pub fn empty() -> SubAllocation {
        SubAllocation { pairs: BTreeMap::new() }
    }

    /// The endowment restricted to a set of agents.
    pub fn endowments<I: IntoIterator<Item = AgentId>>(agents: I) -> SubAllocation {
        SubAllocation { pairs: agents.into_iter().map(|a| (a, a.endowment())).collect() }
    }

    pub fn from_pairs<I: IntoIterator<Item = (AgentId, ObjectId)>>(
        pairs: I,
    ) -> Result<SubAllocation, CoreError> {
        let mut map = BTreeMap::new();
        let mut objects = std::collections::BTreeSet::new();
        for (a, o) in pairs {
            if !objects.insert(o) {
                return Err(CoreError::DuplicateObject(o));
            }
            map.insert(a, o);
        }
        if map.len() != objects.len() {
            // An agent listed twice with distinct objects.
            return Err(CoreError::UniverseMismatch(map.len(), objects.len()));
        }
        Ok(SubAllocation { pairs: map })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains_agent(&self, a: AgentId) -> bool {
        self.pairs.contains_key(&a)
    }

    pub fn get(&self, a: AgentId) -> Option<ObjectId> {
        self.pairs.get(&a).copied()
    }

    /// The agent currently holding `o`, if any.
    pub fn holder_of(&self, o: ObjectId) -> Option<AgentId> {
        self.pairs.iter().find(|(_, &held)| held == o).map(|(&a, _)| a)
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.pairs.keys().copied()
    }

    pub fn objects(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.pairs.values().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, ObjectId)> + '_ {
        self.pairs.iter().map(|(&a, &o)| (a, o))
    }

    pub fn insert(&mut self, a: AgentId, o: ObjectId) {
        self.pairs.insert(a, o);
    }

    pub fn remove(&mut self, a: AgentId) -> Option<ObjectId> {
        self.pairs.remove(&a)
    }

    /// Interprets a full-size sub-allocation as an allocation.
    pub fn to_allocation(&self, n: usize) -> Result<Allocation, CoreError> {
        if self.pairs.len() != n {
            return Err(CoreError::UniverseMismatch(self.pairs.len(), n));
        }
        let mut assignment = vec![ObjectId(0); n];
        for (a, o) in self.iter() {
            if a.0 >= n {
                return Err(CoreError::AgentOutOfRange(a, n));
            }
            assignment[a.0] = o;
        }
        Allocation::new(assignment)
    }

    /// Renders as `{(1, o_3), (2, o_2)}`, 1-indexed.
    pub fn human(&self) -> String {
        let parts: Vec<String> =
            self.iter().map(|(a, o)| format!("({a}, {o})")).collect();
        format!("{{{}}}", parts.join(", "))
    }
}

impl fmt::Debug for SubAllocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.pairs.iter()).finish()
    }
}

impl FromIterator<(AgentId, ObjectId)> for SubAllocation {
    fn from_iter<I: IntoIterator<Item = (AgentId, ObjectId)>>(iter: I) -> Self {
        SubAllocation { pairs: iter.into_iter().collect() }
    }
}

/// The geometric linear order `<` over objects.
#[derive(Clone, PartialEq, Eq)]
pub struct LinearOrder {
    position: Vec<usize>,
    by_position: Vec<ObjectId>,
}

impl LinearOrder {
    /// Builds an order from the objects listed smallest to largest.
    pub fn new(smallest_to_largest: Vec<ObjectId>) -> Result<Self, CoreError> {
        let n = smallest_to_largest.len();
        if n == 0 {
            return Err(CoreError::EmptyUniverse);
        }
        let raw: Vec<usize> = smallest_to_largest.iter().map(|o| o.0).collect();
        check_permutation(&raw, n)?;
        let mut position = vec![0; n];
        for (p, &o) in smallest_to_largest.iter().enumerate() {
            position[o.0] = p;
        }
        Ok(LinearOrder { position, by_position: smallest_to_largest })
    }

    pub fn from_indices(smallest_to_largest: &[usize]) -> Result<Self, CoreError> {
        LinearOrder::new(smallest_to_largest.iter().map(|&i| ObjectId(i)).collect())
    }

    /// The natural order `o_1 < o_2 < ... < o_n`.
    pub fn identity(n: usize) -> LinearOrder {
        LinearOrder {
            position: (0..n).collect(),
            by_position: (0..n).map(ObjectId).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.by_position.len()
    }

    pub fn position(&self, o: ObjectId) -> usize {
        self.position[o.0]
    }

    pub fn object_at(&self, pos: usize) -> ObjectId {
        self.by_position[pos]
    }

    pub fn objects_in_order(&self) -> &[ObjectId] {
        &self.by_position
    }

    pub fn lt(&self, a: ObjectId, b: ObjectId) -> bool {
        self.position[a.0] < self.position[b.0]
    }

    pub fn leq(&self, a: ObjectId, b: ObjectId) -> bool {
        self.position[a.0] <= self.position[b.0]
    }

    pub fn min_of<I: IntoIterator<Item = ObjectId>>(&self, objs: I) -> Result<ObjectId, CoreError> {
        self.extreme_of(objs, true)
    }

    pub fn max_of<I: IntoIterator<Item = ObjectId>>(&self, objs: I) -> Result<ObjectId, CoreError> {
        self.extreme_of(objs, false)
    }

    fn extreme_of<I: IntoIterator<Item = ObjectId>>(
        &self,
        objs: I,
        min: bool,
    ) -> Result<ObjectId, CoreError> {
        let mut result: Option<ObjectId> = None;
        for o in objs {
            if o.0 >= self.n() {
                return Err(CoreError::ObjectOutOfRange(o, self.n()));
            }
            result = Some(match result {
                None => o,
                Some(cur) => {
                    if self.lt(o, cur) == min {
                        o
                    } else {
                        cur
                    }
                }
            });
        }
        result.ok_or(CoreError::EmptyObjectSet)
    }

    pub fn reversed(&self) -> LinearOrder {
        let mut by_position = self.by_position.clone();
        by_position.reverse();
        LinearOrder::new(by_position).expect("reversal preserves validity")
    }
}

impl fmt::Debug for LinearOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.by_position.iter().map(|o| format!("{o:?}")).collect();
        write!(f, "({})", parts.join("<"))
    }
}

/// The smallest object of the sub-allocation strictly above `o`, or `None`
/// when `o` is the largest object held.
pub fn adjacent_larger(
    sub: &SubAllocation,
    order: &LinearOrder,
    o: ObjectId,
) -> Result<Option<ObjectId>, CoreError> {
    if sub.objects().all(|held| held != o) {
        return Err(CoreError::NotInSubAllocation(o));
    }
    let mut next: Option<ObjectId> = None;
    for held in sub.objects() {
        if order.lt(o, held) && next.is_none_or(|cur| order.lt(held, cur)) {
            next = Some(held);
        }
    }
    Ok(next)
}

/// Agents of the sub-allocation whose objects lie weakly between `low`'s and
/// `high`'s objects, endpoints included. Requires `sub(low) <= sub(high)`.
pub fn agents_between_inclusive(
    sub: &SubAllocation,
    order: &LinearOrder,
    low: AgentId,
    high: AgentId,
) -> Vec<AgentId> {
    let lo = sub.get(low).expect("low agent present");
    let hi = sub.get(high).expect("high agent present");
    debug_assert!(order.leq(lo, hi));
    sub.iter()
        .filter(|&(_, o)| order.leq(lo, o) && order.leq(o, hi))
        .map(|(a, _)| a)
        .collect()
}

/// All permutations of `0..n` in lexicographic order. Factorial growth; keep
/// `n` small.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // Next lexicographic permutation.
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// All allocations of `n` objects to `n` agents.
pub fn all_allocations(n: usize) -> Vec<Allocation> {
    all_permutations(n)
        .into_iter()
        .map(|p| Allocation::from_indices(&p).expect("permutation is a valid allocation"))
        .collect()
}

// --- JSON profile format ------------------------------------------------
//
// `{"n": int, "order": [objIdx...], "preferences": [[objIdx,...],...]}`
// where `order` lists objects from smallest to largest and each preference
// lists objects from best to worst. `order` may be omitted; it defaults to
// the natural order.

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<Vec<usize>>,
    preferences: Vec<Vec<usize>>,
}

/// Parses the JSON profile format. Returns the profile and the embedded
/// order, when one is present.
pub fn parse_profile(json: &str) -> Result<(Profile, Option<LinearOrder>), CoreError> {
    let file: ProfileFile =
        serde_json::from_str(json).map_err(|e| CoreError::Json(e.to_string()))?;
    if file.preferences.len() != file.n {
        return Err(CoreError::Json(format!(
            "expected {} preferences, found {}",
            file.n,
            file.preferences.len()
        )));
    }
    let prefs = file
        .preferences
        .iter()
        .map(|r| Preference::from_indices(r))
        .collect::<Result<Vec<_>, _>>()?;
    let profile = Profile::new(prefs)?;
    let order = match file.order {
        None => None,
        Some(o) => Some(LinearOrder::from_indices(&o)?),
    };
    if let Some(ord) = &order {
        if ord.n() != profile.n() {
            return Err(CoreError::UniverseMismatch(ord.n(), profile.n()));
        }
    }
    Ok((profile, order))
}

/// Serializes a profile (and optionally its order) to the JSON profile
/// format.
pub fn profile_to_json(profile: &Profile, order: Option<&LinearOrder>) -> String {
    let file = ProfileFile {
        n: profile.n(),
        order: order.map(|o| o.objects_in_order().iter().map(|x| x.0).collect()),
        preferences: profile
            .prefs()
            .iter()
            .map(|p| p.ranking().iter().map(|o| o.0).collect())
            .collect(),
    };
    serde_json::to_string(&file).expect("profile serialization cannot fail")
}
