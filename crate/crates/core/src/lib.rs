//! Near-collision analysis for binary biometric template databases.
//!
//! - [`template`]: bit-packed templates, databases, the Hamming metric.
//! - [`clustering`]: complete-link clustering under a diameter bound.
//! - [`cover`]: cover-template search (column-class reduction, exact and annealing solvers).
//! - [`partition`]: master-template-set construction, greedy baseline, add/remove users.
//! - [`bounds`]: ball volumes and database capacity bounds.
//! - [`attack`]: masterkey / master-feature set attacks under a toy XOR transform.
//! - [`experiments`]: seeded replication harness.

pub mod attack;
pub mod bounds;
pub mod clustering;
pub mod cover;
pub mod error;
pub mod experiments;
pub mod partition;
pub mod template;

pub use error::{Error, Result};
pub use template::{random_database, DissimilarityMatrix, Template, TemplateDatabase};
