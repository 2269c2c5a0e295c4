//! Preference-domain machinery: single-peakedness tests and enumeration,
//! top-two connectivity and richness, the ternary restriction calculus, and
//! recovery of the underlying linear order from a rich domain.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{all_permutations, CoreError, LinearOrder, ObjectId, Preference};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("objects must be distinct")]
    NotDistinct,
    #[error("domain is empty")]
    EmptyDomain,
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// A deduplicated set of admissible preferences over one object universe,
/// stored sorted for canonical equality.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Domain {
    n: usize,
    prefs: Vec<Preference>,
}

impl Domain {
    pub fn new(prefs: Vec<Preference>) -> Result<Self, DomainError> {
        let mut prefs = prefs;
        prefs.sort();
        prefs.dedup();
        match prefs.first() {
            None => Err(DomainError::EmptyDomain),
            Some(first) => {
                let n = first.n();
                for p in &prefs {
                    if p.n() != n {
                        return Err(CoreError::UniverseMismatch(p.n(), n).into());
                    }
                }
                Ok(Domain { n, prefs })
            }
        }
    }

    pub fn from_rows(rows: &[&[usize]]) -> Result<Self, DomainError> {
        Domain::new(
            rows.iter()
                .map(|r| Preference::from_indices(r))
                .collect::<Result<Vec<_>, _>>()
                .map_err(DomainError::Core)?,
        )
    }

    /// A domain admitting no preference at all over `n` objects.
    pub fn empty(n: usize) -> Result<Self, DomainError> {
        if n == 0 {
            return Err(DomainError::Core(CoreError::EmptyUniverse));
        }
        Ok(Domain { n, prefs: Vec::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.prefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefs.is_empty()
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.prefs
    }

    pub fn contains(&self, p: &Preference) -> bool {
        self.prefs.binary_search(p).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Preference> {
        self.prefs.iter()
    }
}

/// Whether `pref` declines monotonically on each side of its peak under
/// `order`: for all objects, being strictly between the peak and another
/// object makes the closer one better.
pub fn is_single_peaked(pref: &Preference, order: &LinearOrder) -> bool {
    let n = pref.n();
    if n != order.n() {
        return false;
    }
    let peak = pref.top();
    for a in 0..n {
        for b in 0..n {
            let (o, o2) = (ObjectId(a), ObjectId(b));
            let between_left = order.lt(o2, o) && order.lt(o, peak);
            let between_right = order.lt(peak, o) && order.lt(o, o2);
            if (between_left || between_right) && !pref.prefers(o, o2) {
                return false;
            }
        }
    }
    true
}

/// All preferences single-peaked with respect to `order`; exactly
/// `2^{n-1}` of them. The worst object of a single-peaked preference is
/// always one of the two ends of the order, so rankings are generated worst
/// object first by repeatedly choosing an end of the shrinking interval.
pub fn enumerate_single_peaked(order: &LinearOrder) -> Domain {
    fn build(order: &LinearOrder, lo: usize, hi: usize) -> Vec<Vec<ObjectId>> {
        if lo == hi {
            return vec![vec![order.object_at(lo)]];
        }
        let mut out = Vec::new();
        for mut r in build(order, lo + 1, hi) {
            r.push(order.object_at(lo));
            out.push(r);
        }
        for mut r in build(order, lo, hi - 1) {
            r.push(order.object_at(hi));
            out.push(r);
        }
        out
    }
    let n = order.n();
    let prefs = build(order, 0, n - 1)
        .into_iter()
        .map(|ranking| Preference::new(ranking).expect("generated ranking is a permutation"))
        .collect();
    Domain::new(prefs).expect("single-peaked domain is nonempty")
}

/// Two objects are connected when the domain contains a preference topping
/// `o` with `o2` second, and one topping `o2` with `o` second.
pub fn connected(dom: &Domain, o: ObjectId, o2: ObjectId) -> Result<bool, DomainError> {
    if o == o2 {
        return Err(DomainError::NotDistinct);
    }
    if dom.n() < 2 {
        return Ok(false);
    }
    let has = |top: ObjectId, second: ObjectId| {
        dom.iter().any(|p| p.top() == top && p.ranked(1) == second)
    };
    Ok(has(o, o2) && has(o2, o))
}

/// The undirected graph over objects whose edges are the connected pairs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConnectivityGraph {
    n: usize,
    edges: BTreeSet<(ObjectId, ObjectId)>,
}

impl ConnectivityGraph {
    pub fn build(dom: &Domain) -> ConnectivityGraph {
        let n = dom.n();
        let mut edges = BTreeSet::new();
        for a in 0..n {
            for b in a + 1..n {
                if connected(dom, ObjectId(a), ObjectId(b)).expect("distinct") {
                    edges.insert((ObjectId(a), ObjectId(b)));
                }
            }
        }
        ConnectivityGraph { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(ObjectId, ObjectId)> {
        &self.edges
    }

    pub fn has_edge(&self, a: ObjectId, b: ObjectId) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.contains(&key)
    }

    pub fn neighbors(&self, o: ObjectId) -> Vec<ObjectId> {
        (0..self.n)
            .map(ObjectId)
            .filter(|&x| x != o && self.has_edge(o, x))
            .collect()
    }

    /// Whether every pair of objects is joined by a path.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([ObjectId(0)]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            for y in self.neighbors(x) {
                if !seen[y.0] {
                    seen[y.0] = true;
                    queue.push_back(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// The unique simple path between two vertices of a connected graph
    /// (BFS; shortest, unique in a tree).
    pub fn path(&self, from: ObjectId, to: ObjectId) -> Option<Vec<ObjectId>> {
        let mut prev: Vec<Option<ObjectId>> = vec![None; self.n];
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([from]);
        seen[from.0] = true;
        while let Some(x) = queue.pop_front() {
            if x == to {
                let mut path = vec![to];
                let mut cur = to;
                while let Some(p) = prev[cur.0] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            for y in self.neighbors(x) {
                if !seen[y.0] {
                    seen[y.0] = true;
                    prev[y.0] = Some(x);
                    queue.push_back(y);
                }
            }
        }
        None
    }

    /// A cycle witness: a simple cycle as a vertex list, when one exists.
    pub fn find_cycle(&self) -> Option<Vec<ObjectId>> {
        // DFS from every vertex; a back edge to a non-parent closes a cycle.
        let mut seen = vec![false; self.n];
        let mut prev: Vec<Option<ObjectId>> = vec![None; self.n];
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![(ObjectId(start), None::<ObjectId>)];
            while let Some((x, parent)) = stack.pop() {
                if seen[x.0] {
                    continue;
                }
                seen[x.0] = true;
                prev[x.0] = parent;
                for y in self.neighbors(x) {
                    if Some(y) == parent {
                        continue;
                    }
                    if seen[y.0] {
                        // Walk both branches up to the common root.
                        let chain = |mut v: ObjectId| {
                            let mut out = vec![v];
                            while let Some(p) = prev[v.0] {
                                out.push(p);
                                v = p;
                            }
                            out
                        };
                        let from_x = chain(x);
                        let from_y: BTreeSet<ObjectId> = chain(y).into_iter().collect();
                        let meet = *from_x
                            .iter()
                            .find(|v| from_y.contains(v))
                            .expect("same component");
                        let mut cycle: Vec<ObjectId> = from_x
                            .iter()
                            .copied()
                            .take_while(|&v| v != meet)
                            .collect();
                        cycle.push(meet);
                        let mut back: Vec<ObjectId> = Vec::new();
                        let mut v = y;
                        while v != meet {
                            back.push(v);
                            v = prev[v.0].expect("path to meet");
                        }
                        cycle.extend(back.into_iter().rev());
                        return Some(cycle);
                    }
                    stack.push((y, Some(x)));
                }
            }
        }
        None
    }
}

/// Path-connected and containing at least one pair of completely reversed
/// preferences.
pub fn is_rich(dom: &Domain) -> bool {
    has_reversed_pair(dom).is_some() && ConnectivityGraph::build(dom).is_connected()
}

/// The first (in canonical domain order) completely reversed pair, if any.
pub fn has_reversed_pair(dom: &Domain) -> Option<(&Preference, &Preference)> {
    for (i, p) in dom.iter().enumerate() {
        let rev = p.reversed();
        for q in dom.prefs()[i..].iter() {
            if *q == rev {
                return Some((p, q));
            }
        }
    }
    None
}

/// Whether every preference of the domain that ranks `x` above both `y` and
/// `z` also ranks `y` above `z`. Vacuously true when no such preference
/// exists.
pub fn restriction_holds(
    dom: &Domain,
    x: ObjectId,
    y: ObjectId,
    z: ObjectId,
) -> Result<bool, DomainError> {
    if x == y || y == z || x == z {
        return Err(DomainError::NotDistinct);
    }
    Ok(dom.iter().all(|p| {
        p.best_in([x, y, z]).expect("triple in universe") != x || p.prefers(y, z)
    }))
}

/// An unordered ternary relation: the directed restriction holds in both
/// directions. Stored canonically with the smaller end first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct BarTriple {
    pub ends: (ObjectId, ObjectId),
    pub middle: ObjectId,
}

impl BarTriple {
    fn canonical(x: ObjectId, y: ObjectId, z: ObjectId) -> BarTriple {
        let ends = if x < z { (x, z) } else { (z, x) };
        BarTriple { ends, middle: y }
    }
}

/// All unordered triples whose directed restriction holds in both
/// directions.
pub fn bar_relations(dom: &Domain) -> BTreeSet<BarTriple> {
    let n = dom.n();
    let mut out = BTreeSet::new();
    for x in 0..n {
        for y in 0..n {
            for z in x + 1..n {
                if y == x || y == z {
                    continue;
                }
                let (ox, oy, oz) = (ObjectId(x), ObjectId(y), ObjectId(z));
                if restriction_holds(dom, ox, oy, oz).expect("distinct")
                    && restriction_holds(dom, oz, oy, ox).expect("distinct")
                {
                    out.insert(BarTriple::canonical(ox, oy, oz));
                }
            }
        }
    }
    out
}

/// Transitivity audit over the bar relations: for distinct `x, y, z, o`,
/// bars on `(x,y,z)` and `(y,z,o)` must force bars on `(x,y,o)` and
/// `(x,z,o)`. Returns the first violating 4-tuple, scanning indices in
/// ascending order.
pub fn bar_transitivity_violation(
    dom: &Domain,
) -> Option<(ObjectId, ObjectId, ObjectId, ObjectId)> {
    let bars = bar_relations(dom);
    let has = |x: ObjectId, y: ObjectId, z: ObjectId| bars.contains(&BarTriple::canonical(x, y, z));
    let n = dom.n();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for o in 0..n {
                    let ids = [x, y, z, o];
                    let distinct = (0..4).all(|i| (i + 1..4).all(|j| ids[i] != ids[j]));
                    if !distinct {
                        continue;
                    }
                    let (ox, oy, oz, oo) =
                        (ObjectId(x), ObjectId(y), ObjectId(z), ObjectId(o));
                    if has(ox, oy, oz)
                        && has(oy, oz, oo)
                        && !(has(ox, oy, oo) && has(ox, oz, oo))
                    {
                        return Some((ox, oy, oz, oo));
                    }
                }
            }
        }
    }
    None
}

/// Why a domain was rejected as single-peaked.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum OrderFailure {
    /// No completely reversed preference pair exists.
    NoReversedPair,
    /// The connectivity graph is not connected.
    Disconnected,
    /// The connectivity graph contains this cycle.
    CycleFound(Vec<usize>),
    /// The path between the reversed pair's peaks misses this object.
    UncoveredObject(usize),
    /// This member preference is not single-peaked under the candidate
    /// order (rankings listed best first).
    NotSinglePeaked(Vec<usize>),
}

impl std::fmt::Display for OrderFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrderFailure::NoReversedPair => write!(f, "no completely reversed pair"),
            OrderFailure::Disconnected => write!(f, "connectivity graph is disconnected"),
            OrderFailure::CycleFound(c) => {
                let names: Vec<String> =
                    c.iter().map(|&i| ObjectId(i).to_string()).collect();
                write!(f, "connectivity graph has cycle ({})", names.join(", "))
            }
            OrderFailure::UncoveredObject(o) => {
                write!(f, "peak path does not cover {}", ObjectId(*o))
            }
            OrderFailure::NotSinglePeaked(r) => {
                let names: Vec<String> =
                    r.iter().map(|&i| ObjectId(i).to_string()).collect();
                write!(f, "non-single-peaked preference [{}]", names.join(" > "))
            }
        }
    }
}

/// Certifies a domain single-peaked by recovering the underlying order, or
/// rejects it with a structured witness.
///
/// Pipeline: find a completely reversed pair; build the connectivity graph;
/// require it to be a connected tree; take the unique path between the
/// reversed pair's peaks; require the path to cover every object; read the
/// candidate order off the path; finally check every member preference
/// against it. The recovered order is only determined up to reversal.
pub fn derive_single_peaked_order(dom: &Domain) -> Result<LinearOrder, OrderFailure> {
    let n = dom.n();
    if n == 1 {
        return Ok(LinearOrder::identity(1));
    }
    let Some((p_low, _)) = has_reversed_pair(dom) else {
        return Err(OrderFailure::NoReversedPair);
    };
    let low_peak = p_low.top();
    let high_peak = p_low.ranked(n - 1);
    let graph = ConnectivityGraph::build(dom);
    if !graph.is_connected() {
        return Err(OrderFailure::Disconnected);
    }
    if graph.edges().len() != n - 1 {
        let cycle = graph.find_cycle().expect("connected with |E| >= |V| has a cycle");
        return Err(OrderFailure::CycleFound(cycle.into_iter().map(|o| o.0).collect()));
    }
    let path = graph.path(low_peak, high_peak).expect("graph is connected");
    if path.len() != n {
        let on_path: BTreeSet<ObjectId> = path.iter().copied().collect();
        let missing = (0..n).map(ObjectId).find(|o| !on_path.contains(o));
        return Err(OrderFailure::UncoveredObject(missing.expect("path short of n").0));
    }
    let order = LinearOrder::new(path).expect("path of n distinct objects");
    for p in dom.iter() {
        if !is_single_peaked(p, &order) {
            return Err(OrderFailure::NotSinglePeaked(
                p.ranking().iter().map(|o| o.0).collect(),
            ));
        }
    }
    Ok(order)
}

/// Every order (as an object list, lexicographic) under which all members
/// are single-peaked. Factorial scan; intended as a checking oracle for
/// `derive_single_peaked_order`, capped at small `n`.
pub const BRUTE_FORCE_ORDER_CAP: usize = 8;

pub fn brute_force_single_peaked_orders(dom: &Domain) -> Result<Vec<LinearOrder>, DomainError> {
    let n = dom.n();
    if n > BRUTE_FORCE_ORDER_CAP {
        return Err(DomainError::Core(CoreError::UniverseMismatch(n, BRUTE_FORCE_ORDER_CAP)));
    }
    Ok(all_permutations(n)
        .into_iter()
        .map(|p| LinearOrder::from_indices(&p).expect("permutation"))
        .filter(|order| dom.iter().all(|p| is_single_peaked(p, order)))
        .collect())
}

// --- JSON domain format ---------------------------------------------------
//
// `{"n": int, "prefs": [[objIdx,...],...]}`.

#[derive(Serialize, Deserialize)]
struct DomainFile {
    n: usize,
    prefs: Vec<Vec<usize>>,
}

pub fn parse_domain(json: &str) -> Result<Domain, DomainError> {
    let file: DomainFile = serde_json::from_str(json)
        .map_err(|e| DomainError::Core(CoreError::Json(e.to_string())))?;
    let prefs = file
        .prefs
        .iter()
        .map(|r| Preference::from_indices(r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(DomainError::Core)?;
    let dom = Domain::new(prefs)?;
    if dom.n() != file.n {
        return Err(DomainError::Core(CoreError::UniverseMismatch(dom.n(), file.n)));
    }
    Ok(dom)
}

pub fn domain_to_json(dom: &Domain) -> String {
    let file = DomainFile {
        n: dom.n(),
        prefs: dom
            .iter()
            .map(|p| p.ranking().iter().map(|o| o.0).collect())
            .collect(),
    };
    serde_json::to_string(&file).expect("domain serialization cannot fail")
}

/// Per-agent domains for product-space scans; a shared domain is replicated.
#[derive(Clone, Debug)]
pub struct ProfileSpace {
    domains: Vec<Domain>,
}

impl ProfileSpace {
    pub fn new(domains: Vec<Domain>) -> Result<Self, DomainError> {
        if domains.is_empty() {
            return Err(DomainError::EmptyDomain);
        }
        let n = domains[0].n();
        if domains.len() != n {
            return Err(DomainError::Core(CoreError::UniverseMismatch(domains.len(), n)));
        }
        for d in &domains {
            if d.n() != n {
                return Err(DomainError::Core(CoreError::UniverseMismatch(d.n(), n)));
            }
        }
        Ok(ProfileSpace { domains })
    }

    /// Every agent draws from the same domain.
    pub fn shared(dom: Domain) -> ProfileSpace {
        let n = dom.n();
        ProfileSpace { domains: vec![dom; n] }
    }

    pub fn agents(&self) -> usize {
        self.domains.len()
    }

    pub fn domain(&self, agent: usize) -> &Domain {
        &self.domains[agent]
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    /// Number of profiles in the product space.
    pub fn len(&self) -> usize {
        self.domains.iter().map(|d| d.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-agent domain indices of the profile at `flat` in lexicographic
    /// order (agent 0 most significant).
    pub fn key_at(&self, flat: usize) -> Vec<usize> {
        let mut key = vec![0; self.domains.len()];
        let mut rem = flat;
        for (i, d) in self.domains.iter().enumerate().rev() {
            key[i] = rem % d.len();
            rem /= d.len();
        }
        key
    }

    pub fn profile_for(&self, key: &[usize]) -> crate::core::Profile {
        crate::core::Profile::new(
            key.iter()
                .zip(&self.domains)
                .map(|(&k, d)| d.prefs()[k].clone())
                .collect(),
        )
        .expect("domains validated at construction")
    }

    pub fn profile_at(&self, flat: usize) -> crate::core::Profile {
        self.profile_for(&self.key_at(flat))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, crate::core::Profile)> + '_ {
        (0..self.len()).map(|i| {
            let key = self.key_at(i);
            let profile = self.profile_for(&key);
            (key, profile)
        })
    }
}

/// Deterministic map from profile-space keys to values.
pub type KeyedFacts<T> = BTreeMap<Vec<usize>, T>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::Profile;
    use proptest::prelude::*;

    fn pref(r: &[usize]) -> Preference {
        Preference::from_indices(r).unwrap()
    }

    /// The five-preference domain used by the bundled `example2` case.
    fn example2_domain() -> Domain {
        Domain::from_rows(&[
            &[0, 2, 1],
            &[0, 1, 2],
            &[1, 0, 2],
            &[2, 1, 0],
            &[1, 2, 0],
        ])
        .unwrap()
    }

    #[test]
    fn single_peaked_rejects_peak_jump() {
        let order = LinearOrder::identity(3);
        // o_i > o_k > o_j with o_i < o_j < o_k: o_j sits between the peak
        // and o_k but is ranked below it.
        assert!(!is_single_peaked(&pref(&[0, 2, 1]), &order));
        // Descending preference peaks at the minimum.
        assert!(is_single_peaked(&pref(&[0, 1, 2]), &order));
        assert!(is_single_peaked(&pref(&[2, 1, 0]), &order));
    }

    #[test]
    fn enumerate_matches_known_three_object_domain() {
        let dom = enumerate_single_peaked(&LinearOrder::identity(3));
        let expected =
            Domain::from_rows(&[&[0, 1, 2], &[1, 0, 2], &[2, 1, 0], &[1, 2, 0]]).unwrap();
        assert_eq!(dom, expected);
        assert_eq!(enumerate_single_peaked(&LinearOrder::identity(1)).len(), 1);
    }

    #[test]
    fn enumerate_four_objects_all_single_peaked() {
        let order = LinearOrder::identity(4);
        let dom = enumerate_single_peaked(&order);
        assert_eq!(dom.len(), 8);
        for p in dom.iter() {
            assert!(is_single_peaked(p, &order), "{p:?}");
        }
    }

    #[test]
    fn connectivity_of_example2() {
        let dom = example2_domain();
        assert!(connected(&dom, ObjectId(0), ObjectId(1)).unwrap());
        assert!(connected(&dom, ObjectId(1), ObjectId(2)).unwrap());
        assert!(!connected(&dom, ObjectId(0), ObjectId(2)).unwrap());
        assert_eq!(
            connected(&dom, ObjectId(1), ObjectId(1)).unwrap_err(),
            DomainError::NotDistinct
        );
    }

    #[test]
    fn empty_domain_edge_cases() {
        let empty = Domain::empty(3).unwrap();
        assert!(!connected(&empty, ObjectId(0), ObjectId(1)).unwrap());
        assert!(restriction_holds(&empty, ObjectId(0), ObjectId(1), ObjectId(2)).unwrap());
        assert!(!is_rich(&empty));
        assert_eq!(
            derive_single_peaked_order(&empty).unwrap_err(),
            OrderFailure::NoReversedPair
        );
    }

    #[test]
    fn richness() {
        assert!(is_rich(&example2_domain()));
        let singleton = Domain::from_rows(&[&[0, 1, 2]]).unwrap();
        assert!(!is_rich(&singleton));
        assert!(is_rich(&enumerate_single_peaked(&LinearOrder::identity(4))));
    }

    #[test]
    fn restriction_on_unrestricted_domain_fails() {
        let all: Vec<Preference> = all_permutations(3)
            .into_iter()
            .map(|p| Preference::from_indices(&p).unwrap())
            .collect();
        let unrestricted = Domain::new(all).unwrap();
        // The preference o_i > o_k > o_j tops o_i yet ranks o_k above o_j.
        assert!(!restriction_holds(&unrestricted, ObjectId(0), ObjectId(1), ObjectId(2)).unwrap());
        let sp = enumerate_single_peaked(&LinearOrder::identity(3));
        assert!(restriction_holds(&sp, ObjectId(0), ObjectId(1), ObjectId(2)).unwrap());
        assert_eq!(
            restriction_holds(&sp, ObjectId(0), ObjectId(0), ObjectId(2)).unwrap_err(),
            DomainError::NotDistinct
        );
    }

    #[test]
    fn bar_relations_on_single_peaked_domain() {
        let dom = enumerate_single_peaked(&LinearOrder::identity(4));
        let bars = bar_relations(&dom);
        assert!(bars.contains(&BarTriple::canonical(ObjectId(0), ObjectId(1), ObjectId(2))));
        assert!(bar_transitivity_violation(&dom).is_none());
    }

    #[test]
    fn bar_transitivity_on_rich_subset() {
        let dom =
            Domain::from_rows(&[&[0, 1, 2], &[1, 0, 2], &[2, 1, 0], &[1, 2, 0]]).unwrap();
        assert!(bar_transitivity_violation(&dom).is_none());
    }

    #[test]
    fn derive_recovers_full_single_peaked_order() {
        let order = LinearOrder::from_indices(&[2, 0, 3, 1]).unwrap();
        let dom = enumerate_single_peaked(&order);
        let got = derive_single_peaked_order(&dom).unwrap();
        let fwd = got.objects_in_order() == order.objects_in_order();
        let bwd = got.objects_in_order() == order.reversed().objects_in_order();
        assert!(fwd || bwd);
    }

    #[test]
    fn derive_rejects_example2_domain() {
        let witness = derive_single_peaked_order(&example2_domain()).unwrap_err();
        assert_eq!(witness, OrderFailure::NotSinglePeaked(vec![0, 2, 1]));
    }

    #[test]
    fn derive_agrees_with_brute_force_on_subset() {
        let dom =
            Domain::from_rows(&[&[0, 1, 2], &[1, 0, 2], &[2, 1, 0], &[1, 2, 0]]).unwrap();
        let order = derive_single_peaked_order(&dom).unwrap();
        let valid = brute_force_single_peaked_orders(&dom).unwrap();
        assert_eq!(valid.len(), 2);
        assert!(valid.iter().any(|v| v.objects_in_order() == order.objects_in_order()));
        assert_eq!(order.objects_in_order()[1], ObjectId(1));
    }

    #[test]
    fn domain_json_round_trip() {
        let dom = example2_domain();
        let json = domain_to_json(&dom);
        assert_eq!(parse_domain(&json).unwrap(), dom);
    }

    #[test]
    fn profile_space_lexicographic() {
        let d = Domain::from_rows(&[&[0, 1], &[1, 0]]).unwrap();
        let space = ProfileSpace::shared(d.clone());
        assert_eq!(space.len(), 4);
        assert_eq!(space.key_at(0), vec![0, 0]);
        assert_eq!(space.key_at(1), vec![0, 1]);
        assert_eq!(space.key_at(3), vec![1, 1]);
        let p: Profile = space.profile_at(2);
        assert_eq!(p.pref(crate::core::AgentId(0)), &d.prefs()[1]);
    }

    fn arb_order(n: usize) -> impl Strategy<Value = LinearOrder> {
        Just((0..n).collect::<Vec<usize>>())
            .prop_shuffle()
            .prop_map(|r| LinearOrder::from_indices(&r).unwrap())
    }

    fn arb_pref(n: usize) -> impl Strategy<Value = Preference> {
        Just((0..n).collect::<Vec<usize>>())
            .prop_shuffle()
            .prop_map(|r| Preference::from_indices(&r).unwrap())
    }

    proptest! {
        #[test]
        fn single_peaked_invariant_under_order_reversal(
            p in arb_pref(5), order in arb_order(5)
        ) {
            prop_assert_eq!(
                is_single_peaked(&p, &order),
                is_single_peaked(&p, &order.reversed())
            );
        }

        #[test]
        fn accepted_domains_are_single_peaked(order in arb_order(5), mask in 1u32..255) {
            // Any sub-domain of a single-peaked domain that still passes the
            // pipeline must be single-peaked under the recovered order.
            let full = enumerate_single_peaked(&order);
            let prefs: Vec<Preference> = full
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, p)| p.clone())
                .collect();
            prop_assume!(!prefs.is_empty());
            let dom = Domain::new(prefs).unwrap();
            if let Ok(got) = derive_single_peaked_order(&dom) {
                for p in dom.iter() {
                    prop_assert!(is_single_peaked(p, &got));
                }
            }
        }
    }
}
