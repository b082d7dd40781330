//! Linearly constrained quadratic programs: instance generation, reference
//! solvers, optimality-preserving augmentation and graph encodings.

pub mod dataset;
pub mod error;
pub mod generators;
pub mod graph;
pub mod instance;
pub mod io;
pub mod kkt;
pub mod metrics;
pub mod rng;
pub mod solver;
pub mod sparse;
pub mod transforms;

pub use error::{Error, Result};
pub use instance::{objective, LcqpInstance, ProblemKind, Solution};
pub use kkt::{kkt_residuals, partition_constraints, psd_certificate, ActivePartition, Definiteness, KktReport};
pub use solver::{solve_enumeration, solve_splitting, SolveError, SolverConfig};
pub use sparse::SparseMatrix;
