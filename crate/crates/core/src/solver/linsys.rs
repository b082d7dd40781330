//! Dense equality-constrained KKT solves shared by polish and enumeration.

use nalgebra::{DMatrix, DVector};

/// Assembles `[[Q, A_Sᵀ], [A_S, 0]]` for the rows in `active`.
pub(crate) fn kkt_matrix(q: &DMatrix<f64>, a: &DMatrix<f64>, active: &[usize]) -> DMatrix<f64> {
    let n = q.nrows();
    let k = active.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(q);
    for (r, &i) in active.iter().enumerate() {
        for j in 0..n {
            let v = a[(i, j)];
            kkt[(n + r, j)] = v;
            kkt[(j, n + r)] = v;
        }
    }
    kkt
}

pub(crate) fn kkt_rhs(c: &[f64], b: &[f64], active: &[usize]) -> DVector<f64> {
    let n = c.len();
    let mut rhs = DVector::zeros(n + active.len());
    for j in 0..n {
        rhs[j] = -c[j];
    }
    for (r, &i) in active.iter().enumerate() {
        rhs[n + r] = b[i];
    }
    rhs
}

/// Solves the KKT system with a quasi-definite regularization
/// `diag(δI, −δI)` and iterative refinement against the unregularized matrix.
/// Returns `None` when the regularized factorization fails.
pub(crate) fn solve_regularized(kkt: &DMatrix<f64>, rhs: &DVector<f64>, n: usize, refine_steps: usize) -> Option<DVector<f64>> {
    let dim = kkt.nrows();
    let scale = kkt.amax().max(1.0);
    let delta = 1e-11 * scale;
    let mut reg = kkt.clone();
    for i in 0..dim {
        reg[(i, i)] += if i < n { delta } else { -delta };
    }
    let lu = reg.lu();
    let mut sol = lu.solve(rhs)?;
    for _ in 0..refine_steps {
        let r = rhs - kkt * &sol;
        if r.amax() <= 1e-15 * (1.0 + rhs.amax()) {
            break;
        }
        let dx = lu.solve(&r)?;
        sol += dx;
    }
    sol.iter().all(|v| v.is_finite()).then_some(sol)
}

/// Minimum-norm least-squares solution via SVD, with the relative residual
/// `‖K z − rhs‖∞ / (1 + ‖rhs‖∞)`.
pub(crate) fn solve_min_norm(kkt: DMatrix<f64>, rhs: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let scale = kkt.amax().max(1.0);
    let dim = kkt.nrows();
    let check = kkt.clone();
    let svd = kkt.svd(true, true);
    let eps = 1e-11 * scale * (dim.max(1) as f64);
    let z = svd.solve(rhs, eps).ok()?;
    let resid = (&check * &z - rhs).amax() / (1.0 + rhs.amax());
    Some((z, resid))
}

/// Nonnegative least squares `min ‖M w − g‖₂, w ≥ 0` (Lawson–Hanson active set).
pub(crate) fn nnls(m: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let k = m.ncols();
    let mut w = DVector::zeros(k);
    let mut passive = vec![false; k];
    let tol = 1e-12 * m.amax().max(1.0) * g.amax().max(1.0);
    for _ in 0..3 * k + 10 {
        let grad = m.tr_mul(&(g - m * &w));
        let pick = (0..k)
            .filter(|&j| !passive[j] && grad[j] > tol)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = pick else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let sub = m.select_columns(&idx);
            let Some(s) = least_squares(&sub, g) else { return w };
            if s.iter().all(|&v| v > 0.0) {
                w.fill(0.0);
                for (r, &j) in idx.iter().enumerate() {
                    w[j] = s[r];
                }
                break;
            }
            // step back towards the feasible iterate until a coordinate hits zero
            let mut alpha = 1.0_f64;
            for (r, &j) in idx.iter().enumerate() {
                if s[r] <= 0.0 {
                    alpha = alpha.min(w[j] / (w[j] - s[r]));
                }
            }
            for (r, &j) in idx.iter().enumerate() {
                w[j] += alpha * (s[r] - w[j]);
                if w[j] <= 1e-15 {
                    w[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    w
}

fn least_squares(m: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = m.clone().svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(1.0);
    svd.solve(g, eps).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_clips_negative_direction() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let w = nnls(&m, &DVector::from_column_slice(&[2.0, -1.0]));
        assert_eq!(w.as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn nnls_finds_nonnegative_combination_of_dependent_columns() {
        // columns e1, e1 + e2, e2 - e1; target e2 has nonnegative representation
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, -1.0, 0.0, 1.0, 1.0]);
        let g = DVector::from_column_slice(&[0.0, 1.0]);
        let w = nnls(&m, &g);
        assert!(w.iter().all(|&v| v >= 0.0));
        assert!((&m * &w - g).amax() < 1e-12);
    }
}
