//! Reconstruction of time-resolved memory-access behavior from sparse
//! sampled memory references.
//!
//! The pipeline reads a single-process event trace ([`trace`]), maps every
//! sampled address to the data object that owned it at that moment
//! ([`object_map`]), folds the samples of an instrumented repetitive region
//! onto one normalized iteration ([`folding`]), derives access tables,
//! latency modes, traversal patterns and bandwidth ([`analysis`]) and writes
//! plot-ready reports ([`report`]). [`synthgen`] produces traces with exact
//! ground truth for testing the rest.

pub mod trace;
pub mod object_map;
pub mod folding;
pub mod analysis;
pub mod report;
pub mod synthgen;
pub mod cli;
