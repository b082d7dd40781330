//! Problem instances `min ½xᵀQx + cᵀx  s.t.  Ax ≤ b` and primal-dual solutions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::transforms::TransformRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Lp,
    Qp,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Lp => "lp",
            ProblemKind::Qp => "qp",
        }
    }
}

/// Flag set on instances whose quadratic term is only positive semidefinite
/// (SVM, LASSO families).
pub const FLAG_PSD_SINGULAR: &str = "psd-singular";

#[derive(Clone, Debug, PartialEq)]
pub struct LcqpInstance {
    pub name: String,
    kind: ProblemKind,
    q: SparseMatrix,
    a: SparseMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    pub provenance: Vec<TransformRecord>,
    /// A point known to satisfy `Ax ≤ b`, recorded by the generators.
    pub witness: Option<Vec<f64>>,
    pub flags: BTreeSet<String>,
}

impl LcqpInstance {
    /// Validates dimensions, finiteness and symmetry of `q`. The problem kind
    /// is `Lp` exactly when `q` has no stored entries.
    pub fn new(
        name: impl Into<String>,
        q: SparseMatrix,
        a: SparseMatrix,
        b: Vec<f64>,
        c: Vec<f64>,
    ) -> Result<Self> {
        let n = c.len();
        let m = b.len();
        if q.n_rows() != n || q.n_cols() != n {
            return Err(Error::Dimension(format!(
                "q is {}x{}, expected {n}x{n}",
                q.n_rows(),
                q.n_cols()
            )));
        }
        if a.n_rows() != m || a.n_cols() != n {
            return Err(Error::Dimension(format!(
                "a is {}x{}, expected {m}x{n}",
                a.n_rows(),
                a.n_cols()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("b"));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("c"));
        }
        q.check_symmetric()?;
        let kind = if q.nnz() == 0 {
            ProblemKind::Lp
        } else {
            ProblemKind::Qp
        };
        Ok(LcqpInstance {
            name: name.into(),
            kind,
            q,
            a,
            b,
            c,
            provenance: Vec::new(),
            witness: None,
            flags: BTreeSet::new(),
        })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }
    pub fn q(&self) -> &SparseMatrix {
        &self.q
    }
    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn c(&self) -> &[f64] {
        &self.c
    }
    /// Number of variables.
    pub fn n(&self) -> usize {
        self.c.len()
    }
    /// Number of inequality rows.
    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// True when `(Q, A, b, c)` agree bitwise; name, provenance and
    /// metadata are ignored.
    pub fn same_data(&self, other: &LcqpInstance) -> bool {
        self.q == other.q
            && self.a == other.a
            && self.b.len() == other.b.len()
            && self.c.len() == other.c.len()
            && self.b.iter().zip(&other.b).all(|(x, y)| x.to_bits() == y.to_bits())
            && self.c.iter().zip(&other.c).all(|(x, y)| x.to_bits() == y.to_bits())
    }

    /// Derived instance sharing name and history; used by the transforms.
    pub(crate) fn derive(
        &self,
        q: SparseMatrix,
        a: SparseMatrix,
        b: Vec<f64>,
        c: Vec<f64>,
        record: TransformRecord,
    ) -> Result<LcqpInstance> {
        let mut out = LcqpInstance::new(self.name.clone(), q, a, b, c)?;
        out.provenance = self.provenance.clone();
        out.provenance.push(record);
        out.flags = self.flags.clone();
        Ok(out)
    }

    /// Applies a simultaneous relabeling: variable `j` becomes
    /// `var_perm[j]`, row `i` becomes `con_perm[i]`.
    pub fn permuted(&self, var_perm: &[usize], con_perm: &[usize]) -> Result<LcqpInstance> {
        check_permutation(var_perm, self.n())?;
        check_permutation(con_perm, self.m())?;
        let mut b = vec![0.0; self.m()];
        for (i, &p) in con_perm.iter().enumerate() {
            b[p] = self.b[i];
        }
        let mut c = vec![0.0; self.n()];
        for (j, &p) in var_perm.iter().enumerate() {
            c[p] = self.c[j];
        }
        let mut out = LcqpInstance::new(
            self.name.clone(),
            self.q.permuted(var_perm, var_perm),
            self.a.permuted(con_perm, var_perm),
            b,
            c,
        )?;
        out.flags = self.flags.clone();
        Ok(out)
    }
}

fn check_permutation(p: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if p.len() != n {
        return Err(Error::Dimension(format!("permutation of length {} for {n}", p.len())));
    }
    for &k in p {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidInput("not a permutation".into()));
        }
    }
    Ok(())
}

/// `½xᵀQx + cᵀx`.
pub fn objective(inst: &LcqpInstance, x: &[f64]) -> Result<f64> {
    if x.len() != inst.n() {
        return Err(Error::Dimension(format!(
            "x has length {}, instance has {} variables",
            x.len(),
            inst.n()
        )));
    }
    let qx = inst.q().mul_vec(x);
    let quad: f64 = qx.iter().zip(x).map(|(a, b)| a * b).sum();
    let lin: f64 = inst.c().iter().zip(x).map(|(a, b)| a * b).sum();
    Ok(0.5 * quad + lin)
}

/// Primal-dual point with slacks `s = b − Ax` and the objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub lam: Vec<f64>,
    pub slack: Vec<f64>,
    pub objective: f64,
}

impl Solution {
    /// Computes slacks and objective from `x`.
    pub fn new(inst: &LcqpInstance, x: Vec<f64>, lam: Vec<f64>) -> Result<Self> {
        if lam.len() != inst.m() {
            return Err(Error::Dimension(format!(
                "lam has length {}, instance has {} rows",
                lam.len(),
                inst.m()
            )));
        }
        if x.iter().chain(&lam).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("solution"));
        }
        let objective = objective(inst, &x)?;
        let slack = slacks(inst, &x);
        Ok(Solution {
            x,
            lam,
            slack,
            objective,
        })
    }
}

/// `b − Ax`.
pub fn slacks(inst: &LcqpInstance, x: &[f64]) -> Vec<f64> {
    let ax = inst.a().mul_vec(x);
    inst.b().iter().zip(ax).map(|(b, ax)| b - ax).collect()
}
