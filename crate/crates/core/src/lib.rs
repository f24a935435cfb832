//! Minimum-description-length structure learning for categorical data.
//!
//! The crate learns two families of discrete probability models from
//! complete tabular data:
//!
//! - dependency forests (at most one parent per attribute), found by a
//!   Kruskal sweep that only accepts edges whose mutual information pays
//!   for the extra parameters ([`forest::learn_forest`]);
//! - Bayesian belief networks under a fixed attribute ordering, searched
//!   exhaustively or greedily per node ([`bbn`]).
//!
//! Both are scored by the two-part code length
//! `empirical entropy + k/2 * c(n)` in bits, where `k` is the number of free
//! parameters and `c(n)` the per-parameter penalty (`log2 n` for MDL).
//! Fitted models use Dirichlet-smoothed conditional tables and can be
//! sampled, serialized, and queried to impute missing values.

pub mod bbn;
pub mod dataset;
mod error;
pub mod forest;
pub mod impute;
pub mod infotheory;
pub mod model;
pub mod partitions;
pub mod rng;
pub mod scoring;

pub use bbn::BbnStructure;
pub use dataset::{AttributeSchema, CondCountTable, Dataset, PairCounts};
pub use error::{Error, Result};
pub use forest::{DendroidStructure, ForestStructure};
pub use impute::PartialRecord;
pub use model::{FittedModel, Structure};
pub use scoring::{Penalty, ScoreBreakdown};

/// Quantity measured in bits (base-2 code length).
pub type Bits = f64;
