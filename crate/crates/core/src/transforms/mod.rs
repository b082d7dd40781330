//! Optimality-preserving transforms with closed-form solution maps.
//!
//! Every transform returns a [`Transformed`] carrying the new instance, the
//! [`TransformRecord`] appended to its provenance and, when a solution of the
//! input was supplied, the mapped solution of the output. Records store every
//! sampled number, so [`replay`] reproduces the output data exactly.

mod heuristic;
mod ops;
mod policy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{LcqpInstance, Solution};
use crate::sparse::{SparseMatrix, Triplets};

pub use heuristic::{
    heuristic_accuracy, heuristic_inactive, heuristic_inactive_with, heuristic_scores, default_k, HeuristicConfig,
};
pub use ops::*;
pub use policy::{apply_policy, AugmentPolicy, OpKind, PolicyOutput};

/// Sparse nonnegative row weights, `(row, weight)` pairs.
pub type SparseWeights = Vec<(usize, f64)>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "params", rename_all = "kebab-case")]
pub enum TransformOp {
    ScaleVariables {
        alpha: Vec<f64>,
    },
    ScaleConstraints {
        d: Vec<f64>,
    },
    RemoveIdleVariables {
        tol: f64,
        removed: Vec<usize>,
    },
    RemoveInactiveConstraints {
        tol: f64,
        fraction: f64,
        removed: Vec<usize>,
    },
    /// Rows chosen by the inactivity heuristic, without solution knowledge.
    DropConstraintsHeuristic {
        removed: Vec<usize>,
    },
    /// Rows removed by explicit index.
    RemoveConstraints {
        removed: Vec<usize>,
    },
    /// One new variable per column of `q` (each of length n).
    AddVariables {
        q: Vec<Vec<f64>>,
        ridge: f64,
    },
    AddVariableBiased {
        q_diag: f64,
        a_col: Vec<f64>,
        c_new: f64,
    },
    AddVariableConstrained {
        q_diag: f64,
        a_col: Vec<f64>,
        c_new: f64,
    },
    AddConstraints {
        weights: Vec<SparseWeights>,
    },
    /// `Q + RRᵀ`, `A + B₂₁`, `b + δb`, `c + δc`; the shifts were computed
    /// from the solution at application time.
    BiasInstance {
        rank: usize,
        magnitude: f64,
        seed: u64,
        r: Vec<Vec<f64>>,
        b21: Triplets,
        delta_b: Vec<f64>,
        delta_c: Vec<f64>,
    },
}

impl TransformOp {
    pub fn name(&self) -> &'static str {
        match self {
            TransformOp::ScaleVariables { .. } => "scale-variables",
            TransformOp::ScaleConstraints { .. } => "scale-constraints",
            TransformOp::RemoveIdleVariables { .. } => "remove-idle-variables",
            TransformOp::RemoveInactiveConstraints { .. } => "remove-inactive-constraints",
            TransformOp::DropConstraintsHeuristic { .. } => "drop-constraints-heuristic",
            TransformOp::RemoveConstraints { .. } => "remove-constraints",
            TransformOp::AddVariables { .. } => "add-variables",
            TransformOp::AddVariableBiased { .. } => "add-variable-biased",
            TransformOp::AddVariableConstrained { .. } => "add-variable-constrained",
            TransformOp::AddConstraints { .. } => "add-constraints",
            TransformOp::BiasInstance { .. } => "bias-instance",
        }
    }
}

/// How to carry `(x, λ)` of the input over to the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionMap {
    Identity,
    /// `x′ = x ∘ factor`.
    PrimalScaled(Vec<f64>),
    /// `λ′ = λ ∘ factor`.
    DualScaled(Vec<f64>),
    /// Keep the listed variables and rows, in order.
    RestrictedTo {
        variables: Vec<usize>,
        constraints: Vec<usize>,
    },
    /// Append zeros; the lists are the new indices in the output.
    ExtendedWithZeros {
        variables: Vec<usize>,
        constraints: Vec<usize>,
    },
    /// Append zero variables and rows whose duals are given explicitly.
    ExplicitDual {
        variables: Vec<usize>,
        duals: Vec<f64>,
    },
    /// Append one zero variable and one bound row `x′ ≤ 0` whose dual is
    /// `−c_new − a_colᵀλ`.
    BoundedVariable {
        a_col: Vec<f64>,
        c_new: f64,
    },
}

impl SolutionMap {
    /// Maps a solution of the input instance onto `out`, the output instance.
    pub fn apply(&self, out: &LcqpInstance, sol: &Solution) -> Result<Solution> {
        let (x, lam) = match self {
            SolutionMap::Identity => (sol.x.clone(), sol.lam.clone()),
            SolutionMap::PrimalScaled(f) => {
                check_len("primal factor", f.len(), sol.x.len())?;
                (sol.x.iter().zip(f).map(|(x, f)| x * f).collect(), sol.lam.clone())
            }
            SolutionMap::DualScaled(f) => {
                check_len("dual factor", f.len(), sol.lam.len())?;
                (sol.x.clone(), sol.lam.iter().zip(f).map(|(l, f)| l * f).collect())
            }
            SolutionMap::RestrictedTo {
                variables,
                constraints,
            } => (pick(&sol.x, variables)?, pick(&sol.lam, constraints)?),
            SolutionMap::ExtendedWithZeros {
                variables,
                constraints,
            } => {
                let mut x = sol.x.clone();
                x.resize(sol.x.len() + variables.len(), 0.0);
                let mut lam = sol.lam.clone();
                lam.resize(sol.lam.len() + constraints.len(), 0.0);
                (x, lam)
            }
            SolutionMap::ExplicitDual { variables, duals } => {
                let mut x = sol.x.clone();
                x.resize(sol.x.len() + variables.len(), 0.0);
                let mut lam = sol.lam.clone();
                lam.extend_from_slice(duals);
                (x, lam)
            }
            SolutionMap::BoundedVariable { a_col, c_new } => {
                check_len("a_col", a_col.len(), sol.lam.len())?;
                let mut x = sol.x.clone();
                x.push(0.0);
                let mut lam = sol.lam.clone();
                lam.push(bounded_dual(a_col, *c_new, &sol.lam));
                (x, lam)
            }
        };
        Solution::new(out, x, lam)
    }
}

/// `−c_new − a_colᵀλ`.
pub(crate) fn bounded_dual(a_col: &[f64], c_new: f64, lam: &[f64]) -> f64 {
    let dot: f64 = a_col.iter().zip(lam).map(|(a, l)| a * l).sum();
    -c_new - dot
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

fn pick(v: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
    idx.iter()
        .map(|&i| {
            v.get(i)
                .copied()
                .ok_or_else(|| Error::Dimension(format!("index {i} out of range {}", v.len())))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    #[serde(flatten)]
    pub op: TransformOp,
    pub solution_map: SolutionMap,
}

impl TransformRecord {
    pub fn op_name(&self) -> &'static str {
        self.op.name()
    }
}

/// Output of a single transform.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub instance: LcqpInstance,
    pub solution: Option<Solution>,
    pub record: TransformRecord,
}

/// Re-applies a recorded transform to `inst`, returning bitwise the same
/// data as the original application.
pub fn replay(inst: &LcqpInstance, record: &TransformRecord) -> Result<LcqpInstance> {
    ops::build(inst, &record.op)?.derive_into(inst, record.clone())
}

pub(crate) struct Data {
    q: SparseMatrix,
    a: SparseMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl Data {
    fn derive_into(self, inst: &LcqpInstance, record: TransformRecord) -> Result<LcqpInstance> {
        if !(self.q.max_abs().is_finite() && self.a.max_abs().is_finite()) {
            return Err(Error::NonFinite("transformed matrices"));
        }
        inst.derive(self.q, self.a, self.b, self.c, record)
    }
}
