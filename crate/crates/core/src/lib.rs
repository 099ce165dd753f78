//! Cyclical pedigree digraphs and directed configuration models.
//!
//! A population of `N` diploid individuals whose parent assignments are
//! drawn once and reused every generation is, collapsed to one generation,
//! a random digraph where every vertex points at two independent uniform
//! parents. This crate generates those graphs (and general directed
//! configuration models), decomposes their strongly connected component
//! structure, runs coalescing pair walks over them, and verifies the
//! quantitative predictions that come with the model: a giant component
//! holding about 79.7% of the population, logarithmic second components,
//! log-log attraction paths, and a pair-coalescence hazard near `1/(2N)`.
//!
//! Modules:
//! - [`graph`]: immutable multigraph with slot-ordered out-edges and the
//!   edge-list text format.
//! - [`sample`]: seeded samplers plus the exact graph-probability formula.
//! - [`degree`]: empirical in-degree distributions, distances to
//!   Poisson(2), properness checks.
//! - [`branching`]: survival-probability fixed points and derived
//!   constants.
//! - [`components`]: SCC decomposition and fan/reachability statistics.
//! - [`walks`]: coalescing pair walks, hazard curves, stationary
//!   distribution.
//! - [`harness`]: replicate scheduling and claim verification.

pub mod branching;
pub mod components;
pub mod degree;
pub mod error;
pub mod graph;
pub mod harness;
pub mod sample;
pub mod walks;

pub use error::{Error, Result};
pub use graph::{DegreeSequence, Digraph, Vertex};
pub use sample::RngSpec;
