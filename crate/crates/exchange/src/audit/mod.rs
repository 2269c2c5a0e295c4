//! Exhaustive property audits over profile spaces: brute-force
//! strategy-proofness checking, per-property sweeps with witness reporting,
//! the forced-allocation fixpoint engine for impossibility certificates,
//! and reproducible named verification cases.
//!
//! Audits scan profiles in lexicographic key order. Parallel runs partition
//! the index space into contiguous chunks and merge witnesses by index, so
//! the reported first witness never depends on the thread count.

mod cases;
mod forced;

pub use cases::{reproduce, CaseReport, CASE_IDS};
pub use forced::{
    derive_forced_allocations, verify_first_mover_contradiction, Derivation, EquityForcing, Fact,
    FactSet, FirstMoverCertificate, FirstMoverWitness, ProfileKey,
};

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::core::{AgentId, Allocation, CoreError, Profile};
use crate::domains::{DomainError, ProfileSpace};
use crate::fairness::{
    dynamic_ir, is_efficient, is_individually_rational, satisfies_eba, satisfies_eba_plus,
    satisfies_eua, FairnessError,
};
use crate::games::GameError;
use crate::rules::{trace_to_json_value, Rule, RuleError};

/// Largest profile space an audit will scan.
pub const PROFILE_SPACE_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("profile space of {size} profiles exceeds the cap of {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("unknown property {0:?}")]
    UnknownProperty(String),
    #[error("unknown case {0:?}")]
    UnknownCase(String),
    #[error("rule {0} produces no trace; dyn_ir cannot be audited")]
    TraceUnavailable(&'static str),
    #[error("contradictory facts at profile {key:?}: agent {agent} forced to both {first} and {second}")]
    FactClash { key: Vec<usize>, agent: AgentId, first: String, second: String },
    #[error("facts at profile {key:?} assign {object} to two agents")]
    FactInjectivity { key: Vec<usize>, object: String },
    #[error("first-mover check needs exactly 2 preferences for agent {0}, found {1}")]
    SubDomainSize(AgentId, usize),
    #[error("sub-domain preference for agent {0} is missing from the derivation domain")]
    PreferenceNotInDomain(AgentId),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// The auditable properties.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Ir,
    Eff,
    Sp,
    Eua,
    Eba,
    EbaPlus,
    DynIr,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Ir,
        Property::Eff,
        Property::Sp,
        Property::Eua,
        Property::Eba,
        Property::EbaPlus,
        Property::DynIr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Ir => "ir",
            Property::Eff => "eff",
            Property::Sp => "sp",
            Property::Eua => "eua",
            Property::Eba => "eba",
            Property::EbaPlus => "eba_plus",
            Property::DynIr => "dyn_ir",
        }
    }

    pub fn parse(s: &str) -> Result<Property, AuditError> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| AuditError::UnknownProperty(s.to_string()))
    }

    /// Parses a comma-separated list; empty input selects nothing.
    pub fn parse_list(s: &str) -> Result<Vec<Property>, AuditError> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Property::parse)
            .collect()
    }
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A profile at which a property failed, with enough context to replay it.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    /// Per-agent indices into the audit's domains.
    pub key: Vec<usize>,
    /// The profile itself, one ranking per agent, best first.
    pub profile: Vec<Vec<usize>>,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<serde_json::Value>,
}

fn witness(key: &[usize], profile: &Profile, detail: String) -> Witness {
    Witness {
        key: key.to_vec(),
        profile: profile
            .prefs()
            .iter()
            .map(|p| p.ranking().iter().map(|o| o.0).collect())
            .collect(),
        detail,
        trace: None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub property: Property,
    pub pass: bool,
    /// First witness in lexicographic key order, or all of them in
    /// exhaustive mode.
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub rule: String,
    pub domain: String,
    pub profiles: usize,
    pub results: Vec<PropertyResult>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn result(&self, property: Property) -> Option<&PropertyResult> {
        self.results.iter().find(|r| r.property == property)
    }
}

fn check_cap(space: &ProfileSpace) -> Result<(), AuditError> {
    let size = space.len();
    if size > PROFILE_SPACE_CAP {
        return Err(AuditError::CapExceeded { size, cap: PROFILE_SPACE_CAP });
    }
    Ok(())
}

/// Scans the whole space, calling `check` on every profile; a returned
/// witness marks a failure. Short-circuits on the first witness unless
/// `exhaustive`. With `jobs > 1` the index range is split into contiguous
/// chunks and witnesses are merged in index order.
fn scan_profiles<F>(
    space: &ProfileSpace,
    exhaustive: bool,
    jobs: usize,
    check: F,
) -> Result<Vec<Witness>, AuditError>
where
    F: Fn(&[usize], &Profile) -> Result<Option<Witness>, AuditError> + Sync,
{
    let total = space.len();
    let jobs = jobs.max(1).min(total.max(1));
    let run_range = |lo: usize, hi: usize| -> Result<Vec<(usize, Witness)>, AuditError> {
        let mut found = Vec::new();
        for flat in lo..hi {
            let key = space.key_at(flat);
            let profile = space.profile_for(&key);
            if let Some(w) = check(&key, &profile)? {
                found.push((flat, w));
                if !exhaustive {
                    break;
                }
            }
        }
        Ok(found)
    };
    let mut merged: Vec<(usize, Witness)> = if jobs == 1 {
        run_range(0, total)?
    } else {
        let chunk = total.div_ceil(jobs);
        let results = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for j in 0..jobs {
                let lo = j * chunk;
                let hi = ((j + 1) * chunk).min(total);
                let run = &run_range;
                handles.push(scope.spawn(move || run(lo, hi)));
            }
            handles
                .into_iter()
                .map(|h| h.join().expect("audit worker panicked"))
                .collect::<Vec<_>>()
        });
        let mut all = Vec::new();
        for r in results {
            all.extend(r?);
        }
        all
    };
    merged.sort_by_key(|(flat, _)| *flat);
    if !exhaustive {
        merged.truncate(1);
    }
    Ok(merged.into_iter().map(|(_, w)| w).collect())
}

/// Brute-force strategy-proofness of any allocation function: at every
/// profile, no agent gains from any unilateral deviation inside its own
/// domain.
pub fn check_strategy_proof<F>(
    rule: F,
    space: &ProfileSpace,
    exhaustive: bool,
    jobs: usize,
) -> Result<PropertyResult, AuditError>
where
    F: Fn(&Profile) -> Result<Allocation, RuleError> + Sync,
{
    check_cap(space)?;
    let witnesses = scan_profiles(space, exhaustive, jobs, |key, profile| {
        let truthful = rule(profile)?;
        for a in profile.agents() {
            let dom = space.domain(a.0);
            for (alt_idx, alt) in dom.prefs().iter().enumerate() {
                if alt_idx == key[a.0] {
                    continue;
                }
                let deviated = profile.with_pref(a, alt.clone());
                let outcome = rule(&deviated)?;
                if profile.pref(a).prefers(outcome.get(a), truthful.get(a)) {
                    return Ok(Some(witness(
                        key,
                        profile,
                        format!(
                            "agent {a} gains {} over {} by reporting [{}]",
                            outcome.get(a),
                            truthful.get(a),
                            alt.ranking()
                                .iter()
                                .map(|o| o.to_string())
                                .collect::<Vec<_>>()
                                .join(" > ")
                        ),
                    )));
                }
            }
        }
        Ok(None)
    })?;
    Ok(PropertyResult { property: Property::Sp, pass: witnesses.is_empty(), witnesses })
}

/// Evaluates the selected properties of `rule` at every profile of the
/// space. Each property short-circuits on its first witness unless
/// `exhaustive` is set.
pub fn audit_rule(
    rule: &Rule,
    space: &ProfileSpace,
    properties: &[Property],
    exhaustive: bool,
    jobs: usize,
) -> Result<AuditReport, AuditError> {
    check_cap(space)?;
    let started = Instant::now();
    let mut results = Vec::new();
    for &property in properties {
        let result = match property {
            Property::Sp => check_strategy_proof(|p| rule.apply(p), space, exhaustive, jobs)?,
            Property::DynIr => {
                // Probe trace availability once, up front.
                if !space.is_empty() {
                    let (_, trace) = rule.apply_traced(&space.profile_at(0))?;
                    if trace.is_none() {
                        return Err(AuditError::TraceUnavailable(rule.name()));
                    }
                }
                let witnesses = scan_profiles(space, exhaustive, jobs, |key, profile| {
                    let (alloc, trace) = rule.apply_traced(profile)?;
                    let trace = trace.expect("probed above");
                    if dynamic_ir(&trace, profile, &alloc)? {
                        Ok(None)
                    } else {
                        let mut w = witness(
                            key,
                            profile,
                            "an agent ends below an object it once held".to_string(),
                        );
                        w.trace = Some(trace_to_json_value(&trace));
                        Ok(Some(w))
                    }
                })?;
                PropertyResult { property, pass: witnesses.is_empty(), witnesses }
            }
            Property::Ir | Property::Eff | Property::Eua | Property::Eba | Property::EbaPlus => {
                let witnesses = scan_profiles(space, exhaustive, jobs, |key, profile| {
                    let alloc = rule.apply(profile)?;
                    let (holds, what) = match property {
                        Property::Ir => (
                            is_individually_rational(&alloc, profile),
                            "allocation not individually rational",
                        ),
                        Property::Eff => {
                            (is_efficient(&alloc, profile)?, "allocation not efficient")
                        }
                        Property::Eua => (
                            satisfies_eua(&alloc, profile),
                            "acclaimed agent denied its favorite active object",
                        ),
                        Property::Eba => (
                            satisfies_eba(&alloc, profile),
                            "neither member of the acclaimed pair gets the other's object",
                        ),
                        Property::EbaPlus => (
                            satisfies_eba_plus(&alloc, profile),
                            "acclaimed pair does not swap",
                        ),
                        _ => unreachable!("handled above"),
                    };
                    if holds {
                        Ok(None)
                    } else {
                        Ok(Some(witness(key, profile, format!("{what}; allocation {}", alloc.human()))))
                    }
                })?;
                PropertyResult { property, pass: witnesses.is_empty(), witnesses }
            }
        };
        results.push(result);
    }
    Ok(AuditReport {
        rule: rule.name().to_string(),
        domain: describe_space(space),
        profiles: space.len(),
        results,
        elapsed: started.elapsed(),
    })
}

fn describe_space(space: &ProfileSpace) -> String {
    let n = space.agents();
    let sizes: Vec<String> = space.domains().iter().map(|d| d.len().to_string()).collect();
    format!("n = {n}, per-agent domain sizes [{}]", sizes.join(", "))
}
