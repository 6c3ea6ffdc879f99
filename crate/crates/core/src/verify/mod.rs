//! Brute-force oracles and counterexample generators for the lemma-level
//! claims, run exactly on small instances.

mod enumerate;
mod lemmas;
mod prop1;
mod stall;

pub use enumerate::{
    enumerate_members, enumerate_products, EnumerationReport, EnumerationStatus, FamilyKind, FamilyMember, Violation,
    ViolationKind, DEFAULT_CEILING, MAX_DEPTH,
};
pub use lemmas::{
    chain_suite, covering_block, scrambling_block_check, single_block_search, ChainSuiteReport, ScramblingReport,
};
pub use prop1::{prop1_counterexample, Prop1Counterexample, SilentDirection};
pub use stall::{stall_nodes, stall_probability_bound, StallBound};
