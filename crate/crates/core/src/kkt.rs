//! KKT residuals, active-set partitioning and a definiteness certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{slacks, LcqpInstance, Solution};
use crate::sparse::SparseMatrix;

/// Default relative tolerance for calling a row active.
pub const ACTIVE_TOL: f64 = 1e-6;

/// Default pivot tolerance for [`psd_certificate`].
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// ‖Qx + Aᵀλ + c‖∞, divided by (1 + ‖c‖∞) when `relative`.
    pub stationarity_inf_norm: f64,
    /// max(0, maxᵢ (Ax − b)ᵢ), divided by (1 + ‖b‖∞) when `relative`.
    pub primal_violation: f64,
    /// max(0, −minᵢ λᵢ).
    pub dual_violation: f64,
    /// maxᵢ |λᵢ sᵢ|.
    pub complementarity: f64,
    pub relative: bool,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.stationarity_inf_norm
            .max(self.primal_violation)
            .max(self.dual_violation)
            .max(self.complementarity)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    /// Elementwise maximum, for worst-case summaries.
    pub fn worst(&self, other: &KktReport) -> KktReport {
        KktReport {
            stationarity_inf_norm: self.stationarity_inf_norm.max(other.stationarity_inf_norm),
            primal_violation: self.primal_violation.max(other.primal_violation),
            dual_violation: self.dual_violation.max(other.dual_violation),
            complementarity: self.complementarity.max(other.complementarity),
            relative: self.relative,
        }
    }

    pub fn zero(relative: bool) -> KktReport {
        KktReport {
            stationarity_inf_norm: 0.0,
            primal_violation: 0.0,
            dual_violation: 0.0,
            complementarity: 0.0,
            relative,
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Evaluates stationarity, primal feasibility, dual feasibility and
/// complementarity for `(x, λ)`. Slacks are recomputed from `x`.
pub fn kkt_residuals(inst: &LcqpInstance, sol: &Solution, relative: bool) -> Result<KktReport> {
    if sol.x.len() != inst.n() || sol.lam.len() != inst.m() {
        return Err(Error::Dimension(format!(
            "solution is ({}, {}), instance is ({}, {})",
            sol.x.len(),
            sol.lam.len(),
            inst.n(),
            inst.m()
        )));
    }
    let qx = inst.q().mul_vec(&sol.x);
    let atl = inst.a().tr_mul_vec(&sol.lam);
    let stat = qx
        .iter()
        .zip(&atl)
        .zip(inst.c())
        .fold(0.0f64, |acc, ((q, a), c)| acc.max((q + a + c).abs()));
    let s = slacks(inst, &sol.x);
    let primal = s.iter().fold(0.0f64, |acc, &si| acc.max(-si));
    let dual = sol.lam.iter().fold(0.0f64, |acc, &l| acc.max(-l));
    let comp = sol
        .lam
        .iter()
        .zip(&s)
        .fold(0.0f64, |acc, (l, si)| acc.max((l * si).abs()));
    let (stat, primal) = if relative {
        (stat / (1.0 + inf_norm(inst.c())), primal / (1.0 + inf_norm(inst.b())))
    } else {
        (stat, primal)
    };
    Ok(KktReport {
        stationarity_inf_norm: stat,
        primal_violation: primal,
        dual_violation: dual,
        complementarity: comp,
        relative,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivePartition {
    pub active: Vec<usize>,
    pub inactive: Vec<usize>,
    pub tolerance: f64,
}

/// Row `i` is active iff `sᵢ ≤ tol·(1 + |bᵢ|)`.
pub fn partition_constraints(inst: &LcqpInstance, sol: &Solution, tol: f64) -> ActivePartition {
    let (active, inactive) = (0..inst.m()).partition(|&i| sol.slack[i] <= tol * (1.0 + inst.b()[i].abs()));
    ActivePartition {
        active,
        inactive,
        tolerance: tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    PositiveDefinite,
    PositiveSemidefinite,
    Indefinite,
}

/// Classifies a symmetric matrix with a diagonally pivoted Cholesky
/// factorization.
///
/// Every pivot above `tol` is eliminated. Once the largest remaining diagonal
/// entry is at most `tol`, the remainder must be numerically zero for the
/// matrix to be semidefinite: a negative diagonal or an off-diagonal entry
/// larger than `tol` in magnitude means indefinite.
pub fn psd_certificate(q: &SparseMatrix, tol: f64) -> Result<Definiteness> {
    q.check_symmetric()?;
    let n = q.n_rows();
    let mut s = q.to_dense();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..n {
        // pick the largest remaining diagonal
        let (p, &piv_idx) = order[k..]
            .iter()
            .enumerate()
            .max_by(|a, b| s[(*a.1, *a.1)].total_cmp(&s[(*b.1, *b.1)]))
            .map(|(i, v)| (i + k, v))
            .expect("nonempty");
        order.swap(k, p);
        let piv = s[(piv_idx, piv_idx)];
        if piv <= tol {
            let rest = &order[k..];
            for &i in rest {
                if s[(i, i)] < -tol {
                    return Ok(Definiteness::Indefinite);
                }
                for &j in rest {
                    if i != j && s[(i, j)].abs() > tol {
                        return Ok(Definiteness::Indefinite);
                    }
                }
            }
            return Ok(Definiteness::PositiveSemidefinite);
        }
        let rest: Vec<usize> = order[k + 1..].to_vec();
        for &i in &rest {
            let f = s[(i, piv_idx)] / piv;
            if f == 0.0 {
                continue;
            }
            for &j in &rest {
                let v = s[(piv_idx, j)];
                if v != 0.0 {
                    s[(i, j)] -= f * v;
                }
            }
        }
    }
    Ok(Definiteness::PositiveDefinite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::*;

    #[test]
    fn e1_optimum_has_zero_residuals() {
        let r = kkt_residuals(&e1(), &e1_solution(), false).unwrap();
        assert!(r.within(1e-12), "{r:?}");
    }

    #[test]
    fn origin_is_optimal_for_slack_row() {
        let inst = LcqpInstance::new(
            "t",
            SparseMatrix::identity(1),
            SparseMatrix::identity(1),
            vec![1.0],
            vec![0.0],
        )
        .unwrap();
        let sol = Solution::new(&inst, vec![0.0], vec![0.0]).unwrap();
        let r = kkt_residuals(&inst, &sol, false).unwrap();
        assert_eq!(r.max_residual(), 0.0);
    }

    #[test]
    fn infeasible_point_reports_violation() {
        let sol = Solution::new(&e1(), vec![1.0, 1.0], vec![0.0; 3]).unwrap();
        let r = kkt_residuals(&e1(), &sol, false).unwrap();
        assert_eq!(r.primal_violation, 1.0);
        let rel = kkt_residuals(&e1(), &sol, true).unwrap();
        assert_eq!(rel.primal_violation, 0.5);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let sol = e2_solution();
        assert!(kkt_residuals(&e1(), &sol, false).is_err());
    }

    #[test]
    fn partition_examples() {
        let p = partition_constraints(&e1(), &e1_solution(), 1e-6);
        assert_eq!(p.active, vec![0]);
        assert_eq!(p.inactive, vec![1, 2]);

        let inst = e1();
        let far = Solution::new(&inst, vec![0.25, 0.25], vec![0.0; 3]).unwrap();
        assert!(partition_constraints(&inst, &far, 1e-6).active.is_empty());

        // b = Ax exactly
        let tight = LcqpInstance::new(
            "t",
            SparseMatrix::identity(2),
            SparseMatrix::identity(2),
            vec![0.3, -0.7],
            vec![0.0, 0.0],
        )
        .unwrap();
        let s = Solution::new(&tight, vec![0.3, -0.7], vec![0.0; 2]).unwrap();
        assert_eq!(partition_constraints(&tight, &s, 1e-6).active, vec![0, 1]);
    }

    #[test]
    fn certificate_examples() {
        let pd = SparseMatrix::diagonal(&[2.0, 2.0]).unwrap();
        assert_eq!(psd_certificate(&pd, PSD_TOL).unwrap(), Definiteness::PositiveDefinite);
        let psd = SparseMatrix::from_triplets(2, 2, [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(psd_certificate(&psd, PSD_TOL).unwrap(), Definiteness::PositiveSemidefinite);
        let ind = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(psd_certificate(&ind, PSD_TOL).unwrap(), Definiteness::Indefinite);
        let neg = SparseMatrix::diagonal(&[1.0, -1.0]).unwrap();
        assert_eq!(psd_certificate(&neg, PSD_TOL).unwrap(), Definiteness::Indefinite);
        let asym = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0)]).unwrap();
        assert!(psd_certificate(&asym, PSD_TOL).is_err());
        assert_eq!(
            psd_certificate(&SparseMatrix::zeros(2, 2), PSD_TOL).unwrap(),
            Definiteness::PositiveSemidefinite
        );
    }
}
