//! An ambiguity-preserving scanner and constraint-enforcing chart parser.
//!
//! The pipeline runs in five phases: scanning (all lexically valid tokens,
//! not a single stream), lexical-graph generation (which tokens can follow
//! which), extended-graph completion (cores at token boundaries), chart
//! parsing (a shared-node implicit parse graph), and constraint enforcement
//! (expansion of the implicit graph into explicit parse trees, filtered by
//! associativity, precedence, and custom constraints).

pub mod chart;
pub mod enforcer;
pub mod graphio;
pub mod language;
pub mod matcher;
pub mod oracle;
pub mod pipeline;
pub mod scanner;
pub mod spec;
