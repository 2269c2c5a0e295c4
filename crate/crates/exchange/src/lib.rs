//! Exchange economies with indivisible objects and no money: each agent owns
//! one object and reports a strict preference over all objects, and a rule
//! picks a reallocation.
//!
//! The crate provides
//!
//! - value types for agents, objects, preferences, profiles and
//!   (sub-)allocations ([`core`]),
//! - preference-domain machinery: single-peakedness tests and enumeration,
//!   top-two connectivity, richness, and recovery of the underlying linear
//!   order from a rich domain ([`domains`]),
//! - three exchange rules with full step traces: top trading cycles, the
//!   crawler, and the designator ([`rules`]),
//! - fairness predicates: null/active partition, acclaimed agent and
//!   acclaimed pair detection, individual rationality, efficiency, the three
//!   equity notions, and dynamic individual rationality ([`fairness`]),
//! - extensive game forms, greedy plans, node-wise obvious-dominance
//!   checking, pruning, and verification that a game plus plans implements a
//!   rule ([`games`]),
//! - exhaustive audits over profile spaces, a brute-force strategy-proofness
//!   checker, a forced-allocation fixpoint engine for impossibility
//!   certificates, and reproducible named verification cases ([`audit`]).
//!
//! Everything is deterministic: audits scan profiles in lexicographic order
//! and report the first witness found.

pub mod audit;
pub mod core;
pub mod domains;
pub mod fairness;
pub mod games;
pub mod rules;

pub use crate::core::{
    AgentId, Allocation, LinearOrder, ObjectId, Preference, Profile, SubAllocation,
};
