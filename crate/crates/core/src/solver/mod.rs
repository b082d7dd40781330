//! Reference solvers used to label and cross-check instances.
//!
//! [`solve_splitting`] is an operator-splitting (ADMM) method with Ruiz
//! equilibration, adaptive penalty and an active-set polish step.
//! [`solve_enumeration`] is an exhaustive active-set oracle for tiny problems.

mod enumeration;
mod linsys;
mod pivot;
mod splitting;

use serde::{Deserialize, Serialize};

pub use enumeration::{solve_enumeration, solve_enumeration_detailed, EnumerationOutput, MAX_ENUM_COLS, MAX_ENUM_ROWS};
pub use splitting::{solve_splitting, solve_splitting_detailed, SplittingOutput};

use crate::instance::Solution;
use crate::kkt::KktReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target for every relative KKT residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial ADMM penalty ρ.
    pub penalty: f64,
    /// Refine by solving the equality-constrained KKT system on the detected
    /// active set.
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            max_iter: 50_000,
            penalty: 1.0,
            polish: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.penalty > 0.0) {
            return Err(SolveError::InvalidConfig(format!(
                "tol={}, max_iter={}, penalty={}",
                self.tol, self.max_iter, self.penalty
            )));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("not converged after {iterations} iterations (worst residual {:.3e})", report.max_residual())]
    Unconverged {
        iterations: usize,
        best: Box<Solution>,
        report: KktReport,
    },
    #[error("problem appears unbounded below")]
    Unbounded,
    #[error("problem appears infeasible")]
    Infeasible,
    #[error("no feasible candidate: infeasible or unbounded")]
    InfeasibleOrUnbounded,
    #[error("quadratic term is not positive semidefinite")]
    NotConvex,
    #[error("enumeration limited to m <= {MAX_ENUM_ROWS}, n <= {MAX_ENUM_COLS}; got m={m}, n={n}")]
    TooLarge { m: usize, n: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

impl SolveError {
    /// Short machine-readable status used in manifests.
    pub fn status(&self) -> &'static str {
        match self {
            SolveError::Unconverged { .. } => "unconverged",
            SolveError::Unbounded => "unbounded",
            SolveError::Infeasible => "infeasible",
            SolveError::InfeasibleOrUnbounded => "infeasible-or-unbounded",
            SolveError::NotConvex => "not-convex",
            SolveError::TooLarge { .. } => "too-large",
            SolveError::InvalidConfig(_) => "invalid-config",
        }
    }
}
