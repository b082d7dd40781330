//! Vertex refinement for LPs: basis pivoting from a guessed set of tight rows.

use nalgebra::{DMatrix, DVector};

const PRIMAL_TOL: f64 = 1e-10;
const DUAL_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;

pub(crate) enum Pivoted {
    Optimal { x: Vec<f64>, lam: Vec<f64> },
    Infeasible,
    Unbounded,
    GaveUp,
}

/// Picks up to `n` linearly independent rows, scanning `order` front to back.
pub(crate) fn independent_rows(a: &DMatrix<f64>, order: &[usize]) -> Vec<usize> {
    let n = a.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for &i in order {
        if rows.len() == n {
            break;
        }
        let row = a.row(i).transpose();
        let norm = row.norm();
        if norm == 0.0 {
            continue;
        }
        let mut v = row;
        // two passes of Gram–Schmidt for stability
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let r = v.norm();
        if r > 1e-8 * norm {
            basis.push(v / r);
            rows.push(i);
        }
    }
    rows
}

/// Pivots the basis `start` (n independent rows of `a`) to an optimal vertex of
/// `min cᵀx s.t. Ax ≤ b`. Uses dual or primal simplex steps when the current
/// basis is dual or primal feasible and least-index criss-cross steps
/// otherwise.
pub(crate) fn refine_vertex(a: &DMatrix<f64>, b: &[f64], c: &[f64], start: Vec<usize>, max_pivots: usize) -> Pivoted {
    let (m, n) = a.shape();
    debug_assert_eq!(start.len(), n);
    let mut basis = start;
    let c = DVector::from_column_slice(c);
    let lam_scale = 1.0 + c.amax();
    for _ in 0..max_pivots {
        let bmat = a.select_rows(&basis);
        let Some(binv) = bmat.try_inverse() else {
            return Pivoted::GaveUp;
        };
        let bb = DVector::from_iterator(n, basis.iter().map(|&i| b[i]));
        let x = &binv * bb;
        // c + B'λ = 0
        let lam_b = -(binv.tr_mul(&c));
        let ax = a * &x;

        let mut in_basis = vec![usize::MAX; m];
        for (k, &i) in basis.iter().enumerate() {
            in_basis[i] = k;
        }
        let violation = |i: usize| (ax[i] - b[i]) / (1.0 + b[i].abs());
        let primal_bad: Vec<usize> = (0..m)
            .filter(|&i| in_basis[i] == usize::MAX && violation(i) > PRIMAL_TOL)
            .collect();
        let dual_bad: Vec<usize> = (0..n).filter(|&k| lam_b[k] < -DUAL_TOL * lam_scale).collect();

        if primal_bad.is_empty() && dual_bad.is_empty() {
            let mut lam = vec![0.0; m];
            for (k, &i) in basis.iter().enumerate() {
                lam[i] = lam_b[k].max(0.0);
            }
            return Pivoted::Optimal {
                x: x.iter().copied().collect(),
                lam,
            };
        }

        // entering row r replaces basic position k
        let swap = if dual_bad.is_empty() {
            // dual simplex: most violated row enters, ratio test on λ
            let r = *primal_bad
                .iter()
                .max_by(|&&i, &&j| violation(i).total_cmp(&violation(j)).then(j.cmp(&i)))
                .expect("nonempty");
            let u = binv.tr_mul(&a.row(r).transpose());
            let k = (0..n)
                .filter(|&k| u[k] > PIVOT_TOL)
                .min_by(|&k, &l| (lam_b[k] / u[k]).total_cmp(&(lam_b[l] / u[l])).then(basis[k].cmp(&basis[l])));
            match k {
                Some(k) => (r, k),
                None => return Pivoted::Infeasible,
            }
        } else if primal_bad.is_empty() {
            // primal simplex: most negative multiplier leaves, ratio test on slack
            let k = *dual_bad
                .iter()
                .min_by(|&&k, &&l| lam_b[k].total_cmp(&lam_b[l]).then(basis[k].cmp(&basis[l])))
                .expect("nonempty");
            let d = -binv.column(k);
            let ad = a * d;
            let r = (0..m)
                .filter(|&i| in_basis[i] == usize::MAX && ad[i] > PIVOT_TOL)
                .min_by(|&i, &j| {
                    let si = ((b[i] - ax[i]).max(0.0)) / ad[i];
                    let sj = ((b[j] - ax[j]).max(0.0)) / ad[j];
                    si.total_cmp(&sj).then(i.cmp(&j))
                });
            match r {
                Some(r) => (r, k),
                None => return Pivoted::Unbounded,
            }
        } else {
            // criss-cross on the smallest infeasible row index
            let p = primal_bad[0];
            let dk = dual_bad.iter().copied().min_by_key(|&k| basis[k]).expect("nonempty");
            if p < basis[dk] {
                let u = binv.tr_mul(&a.row(p).transpose());
                let k = (0..n).filter(|&k| u[k] > PIVOT_TOL).min_by_key(|&k| basis[k]);
                match k {
                    Some(k) => (p, k),
                    None => return Pivoted::Infeasible,
                }
            } else {
                let d = -binv.column(dk);
                let ad = a * d;
                let r = (0..m).find(|&i| in_basis[i] == usize::MAX && ad[i] > PIVOT_TOL);
                match r {
                    Some(r) => (r, dk),
                    None => return Pivoted::Unbounded,
                }
            }
        };
        basis[swap.1] = swap.0;
    }
    Pivoted::GaveUp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_lp() -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
        // min −x − y on the unit box with x + y ≤ 1.5
        let a = DMatrix::from_row_slice(5, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0, 1.0, 1.0]);
        (a, vec![1.0, 1.0, 0.0, 0.0, 1.5], vec![-1.0, -1.0])
    }

    #[test]
    fn reaches_optimal_vertex_from_origin() {
        let (a, b, c) = box_lp();
        match refine_vertex(&a, &b, &c, vec![2, 3], 50) {
            Pivoted::Optimal { x, lam } => {
                assert!((x[0] + x[1] - 1.5).abs() < 1e-12);
                assert!((lam[4] - 1.0).abs() < 1e-12);
                assert!(lam.iter().all(|&l| l >= 0.0));
            }
            _ => panic!("expected optimum"),
        }
    }

    #[test]
    fn reaches_optimal_vertex_from_infeasible_start() {
        let (a, b, c) = box_lp();
        // x = y = 1 violates the coupling row
        match refine_vertex(&a, &b, &c, vec![0, 1], 50) {
            Pivoted::Optimal { x, .. } => assert!((x[0] + x[1] - 1.5).abs() < 1e-12),
            _ => panic!("expected optimum"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x ≤ −1 and −x ≤ 0
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        assert!(matches!(refine_vertex(&a, &[-1.0, 0.0], &[1.0], vec![1], 10), Pivoted::Infeasible));
    }

    #[test]
    fn independent_rows_skips_duplicates() {
        let (a, _, _) = box_lp();
        assert_eq!(independent_rows(&a, &[0, 2, 4, 1]), vec![0, 4]);
    }
}
