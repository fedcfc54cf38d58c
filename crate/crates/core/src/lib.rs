//! Bounded structural model finding over class schemas with symbolic data
//! constraints.
//!
//! A problem ([`spec::Spec`], usually parsed with [`dsl::parse_spec`])
//! fixes a schema, a finite scope, structural error patterns and data hooks.
//! [`engine::explore`] enumerates the conforming object graphs, or searches
//! for counterexamples to a declared property, by exhaustive two-phase
//! construction with satisfiability pruning.

pub mod calculus;
pub mod constraint;
pub mod emit;
pub mod dsl;
pub mod engine;
pub mod enumeration;
pub mod model;
pub mod oracle;
pub mod solver;
pub mod spec;
pub mod structural;

#[cfg(test)]
mod fixtures;
