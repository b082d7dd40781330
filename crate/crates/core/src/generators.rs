//! Seeded instance families.
//!
//! Every generator records a feasibility witness `x̂` on the instance. The
//! random LP/QP families append variable-bound rows (see [`BoundRows`]):
//! without them a Gaussian cost over a Gaussian polyhedron is almost never
//! bounded below.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{LcqpInstance, FLAG_PSD_SINGULAR};
use crate::rng::{derive_rng, Rng};
use crate::sparse::SparseMatrix;

/// Variable bounds appended after the random rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundRows {
    /// No extra rows.
    None,
    /// `−x ≤ 0`.
    #[default]
    NonNegative,
    /// `−x ≤ 0` and `x ≤ u` with `u = x̂ + |N(0, 1)|`.
    Box,
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn check_density(name: &str, rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidInput(format!("{name} = {rho} must lie in (0, 1]")));
    }
    Ok(())
}

/// Entries `N(0,1)` kept independently with probability `density`.
fn sparse_normal(rng: &mut Rng, rows: usize, cols: usize, density: f64) -> Result<SparseMatrix> {
    let mut t = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < density {
                t.push((i, j, normal(rng)));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, t)
}

/// Random rows `Ax ≤ Ax̂ + |N(0,1)|` plus bounds; returns `(A, b, x̂)`.
fn feasible_rows(rng: &mut Rng, m: usize, n: usize, density_a: f64, bounds: BoundRows) -> Result<(SparseMatrix, Vec<f64>, Vec<f64>)> {
    let a = sparse_normal(rng, m, n, density_a)?;
    let x: Vec<f64> = (0..n).map(|_| normal(rng).abs()).collect();
    let ax = a.mul_vec(&x);
    let mut b: Vec<f64> = ax.iter().map(|v| v + normal(rng).abs()).collect();
    let a = match bounds {
        BoundRows::None => a,
        BoundRows::NonNegative => {
            b.extend(std::iter::repeat_n(0.0, n));
            a.vstack(&SparseMatrix::from_triplets(n, n, (0..n).map(|j| (j, j, -1.0)))?)?
        }
        BoundRows::Box => {
            b.extend(std::iter::repeat_n(0.0, n));
            b.extend(x.iter().map(|v| v + normal(rng).abs()));
            let lower = SparseMatrix::from_triplets(n, n, (0..n).map(|j| (j, j, -1.0)))?;
            a.vstack(&lower)?.vstack(&SparseMatrix::identity(n))?
        }
    };
    Ok((a, b, x))
}

/// Random feasible LP with box bounds on the variables.
pub fn gen_lp(m: usize, n: usize, density_a: f64, seed: u64) -> Result<LcqpInstance> {
    gen_lp_with(m, n, density_a, BoundRows::Box, seed)
}

pub fn gen_lp_with(m: usize, n: usize, density_a: f64, bounds: BoundRows, seed: u64) -> Result<LcqpInstance> {
    check_density("density_a", density_a)?;
    let mut rng = derive_rng(seed, 0, "gen-lp");
    let (a, b, x) = feasible_rows(&mut rng, m, n, density_a, bounds)?;
    let c: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let mut inst = LcqpInstance::new(format!("lp-m{m}-n{n}-s{seed}"), SparseMatrix::zeros(n, n), a, b, c)?;
    inst.witness = Some(x);
    Ok(inst)
}

/// Random feasible QP with `x ≥ 0` rows and a sparse positive definite `Q`.
pub fn gen_qp(m: usize, n: usize, density_a: f64, density_q: f64, seed: u64) -> Result<LcqpInstance> {
    gen_qp_with(m, n, density_a, density_q, BoundRows::NonNegative, seed)
}

pub fn gen_qp_with(
    m: usize,
    n: usize,
    density_a: f64,
    density_q: f64,
    bounds: BoundRows,
    seed: u64,
) -> Result<LcqpInstance> {
    check_density("density_a", density_a)?;
    check_density("density_q", density_q)?;
    let mut rng = derive_rng(seed, 0, "gen-qp");
    let (a, b, x) = feasible_rows(&mut rng, m, n, density_a, bounds)?;
    let c: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let q = make_sparse_spd(n, density_q, 0.1, 0.9, rng.random())?;
    let mut inst = LcqpInstance::new(format!("qp-m{m}-n{n}-s{seed}"), q, a, b, c)?;
    inst.witness = Some(x);
    Ok(inst)
}

/// `LDLᵀ` with unit lower-triangular `L` (off-diagonals `U(−1,1)` kept with
/// probability `density`) and `D ~ U(eig_lo, eig_hi)`. The result is
/// symmetric positive definite; its spectrum is only roughly governed by the
/// `D` range once `L` has off-diagonal mass.
pub fn make_sparse_spd(n: usize, density: f64, eig_lo: f64, eig_hi: f64, seed: u64) -> Result<SparseMatrix> {
    check_density("density", density)?;
    if !(eig_lo > 0.0 && eig_lo <= eig_hi && eig_hi.is_finite()) {
        return Err(Error::InvalidInput(format!("need 0 < eig_lo <= eig_hi, got [{eig_lo}, {eig_hi}]")));
    }
    let mut rng = derive_rng(seed, 0, "make-sparse-spd");
    // rows of L below the diagonal, as (col, value)
    let mut lower: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in lower.iter_mut().enumerate() {
        for j in 0..i {
            if rng.random::<f64>() < density {
                row.push((j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(eig_lo..=eig_hi)).collect();
    // dense L for the product; n is small in every use
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        l[i][i] = 1.0;
        for &(j, v) in &lower[i] {
            l[i][j] = v;
        }
    }
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..=j {
                if l[i][k] != 0.0 && l[j][k] != 0.0 {
                    s += l[i][k] * d[k] * l[j][k];
                }
            }
            if s != 0.0 {
                t.push((i, j, s));
                if i != j {
                    t.push((j, i, s));
                }
            }
        }
    }
    SparseMatrix::from_triplets(n, n, t)
}

/// Soft-margin SVM over `(w, ξ) ∈ ℝ^{d+n}`: `min ½‖w‖² + λ·1ᵀξ` subject to
/// `yᵢ xᵢᵀw + ξᵢ ≥ 1`. Class blocks are `N(±1/(dρ), σ = 1/(dρ))`, sparsified
/// with density `ρ`. There are no `ξ ≥ 0` rows; the problem is still
/// bounded because each `ξᵢ` is bounded below by its margin row.
pub fn gen_svm(n_samples: usize, d_features: usize, lambda: f64, density: f64, seed: u64) -> Result<LcqpInstance> {
    if !n_samples.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("n_samples = {n_samples} must be even")));
    }
    check_density("density", density)?;
    if d_features == 0 {
        return Err(Error::InvalidInput("d_features must be positive".into()));
    }
    let mut rng = derive_rng(seed, 0, "gen-svm");
    let n = n_samples;
    let d = d_features;
    let mu = 1.0 / (d as f64 * density);
    let mut t = Vec::new();
    for i in 0..n {
        let y = if i < n / 2 { 1.0 } else { -1.0 };
        for j in 0..d {
            let v = y * mu + mu * normal(&mut rng);
            if rng.random::<f64>() < density {
                // −yᵢ·xᵢⱼ
                t.push((i, j, -y * v));
            }
        }
        t.push((i, d + i, -1.0));
    }
    let a = SparseMatrix::from_triplets(n, d + n, t)?;
    let q = SparseMatrix::from_triplets(d + n, d + n, (0..d).map(|j| (j, j, 1.0)))?;
    let mut c = vec![0.0; d + n];
    for v in &mut c[d..] {
        *v = lambda;
    }
    let mut inst = LcqpInstance::new(format!("svm-n{n}-d{d}-s{seed}"), q, a, vec![-1.0; n], c)?;
    let mut w = vec![0.0; d + n];
    for v in &mut w[d..] {
        *v = 2.0;
    }
    inst.witness = Some(w);
    inst.flags.insert(FLAG_PSD_SINGULAR.into());
    Ok(inst)
}

/// Minimum-variance portfolio: `min ½xᵀQx` with one random row `aᵀx ≤ −1`
/// (`a ~ N(0, σ = 0.01)`) and the budget `0.01·1ᵀx = 1` written as the pair
/// `0.01·1ᵀx ≤ 1`, `−0.01·1ᵀx ≤ −1`.
///
/// The witness satisfies the budget pair up to rounding.
pub fn gen_portfolio(n_assets: usize, density: f64, seed: u64) -> Result<LcqpInstance> {
    if n_assets < 2 {
        return Err(Error::InvalidInput("n_assets must be at least 2".into()));
    }
    let n = n_assets;
    let mut rng = derive_rng(seed, 0, "gen-portfolio");
    let q = make_sparse_spd(n, density, 0.1, 0.9, rng.random())?;
    let a_row: Vec<f64> = (0..n).map(|_| 0.01 * normal(&mut rng)).collect();
    let mut t = Vec::new();
    for (j, &v) in a_row.iter().enumerate() {
        t.push((0, j, v));
        t.push((1, j, 0.01));
        t.push((2, j, -0.01));
    }
    let a = SparseMatrix::from_triplets(3, n, t)?;
    let mut inst = LcqpInstance::new(format!("portfolio-n{n}-s{seed}"), q, a, vec![-1.0, 1.0, -1.0], vec![0.0; n])?;

    // equal weights plus a budget-neutral move against a
    let mean = a_row.iter().sum::<f64>() / n as f64;
    let dir: Vec<f64> = a_row.iter().map(|v| -(v - mean)).collect();
    let dir_sq: f64 = dir.iter().map(|v| v * v).sum();
    let base = 100.0 / n as f64;
    let at_base = 100.0 * mean;
    let step = if dir_sq > 0.0 { ((at_base + 2.0) / dir_sq).max(0.0) } else { 0.0 };
    inst.witness = Some(dir.iter().map(|v| base + step * v).collect());
    Ok(inst)
}

/// LASSO over `(w, t) ∈ ℝ^{2d}` with `Q = blkdiag(½XᵀX, 0)`,
/// `c = (−Xᵀy, λ·1)` and rows `−w − t ≤ 0`, `w − t ≤ 0`. `X` is sparse
/// `N(0,1)` and `y = Xw* + N(0, σ = 0.5)`.
pub fn gen_lasso(n_samples: usize, d_features: usize, lambda: f64, density: f64, seed: u64) -> Result<LcqpInstance> {
    if n_samples == 0 || d_features == 0 {
        return Err(Error::InvalidInput("dimensions must be positive".into()));
    }
    check_density("density", density)?;
    let mut rng = derive_rng(seed, 0, "gen-lasso");
    let (n, d) = (n_samples, d_features);
    let x = sparse_normal(&mut rng, n, d, density)?;
    let w_true: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
    let xw = x.mul_vec(&w_true);
    let y: Vec<f64> = xw.iter().map(|v| v + 0.5 * normal(&mut rng)).collect();

    let xd = x.to_dense();
    let mut t = Vec::new();
    for i in 0..d {
        for j in 0..=i {
            let s = 0.5 * xd.column(i).dot(&xd.column(j));
            if s != 0.0 {
                t.push((i, j, s));
                if i != j {
                    t.push((j, i, s));
                }
            }
        }
    }
    let q = SparseMatrix::from_triplets(2 * d, 2 * d, t)?;
    let xty = x.tr_mul_vec(&y);
    let mut c: Vec<f64> = xty.iter().map(|v| -v).collect();
    c.extend(std::iter::repeat_n(lambda, d));
    let mut at = Vec::with_capacity(4 * d);
    for j in 0..d {
        at.push((j, j, -1.0));
        at.push((j, d + j, -1.0));
        at.push((d + j, j, 1.0));
        at.push((d + j, d + j, -1.0));
    }
    let a = SparseMatrix::from_triplets(2 * d, 2 * d, at)?;
    let mut inst = LcqpInstance::new(format!("lasso-n{n}-d{d}-s{seed}"), q, a, vec![0.0; 2 * d], c)?;
    let mut wit = vec![0.0; 2 * d];
    for v in &mut wit[d..] {
        *v = 1.0;
    }
    inst.witness = Some(wit);
    inst.flags.insert(FLAG_PSD_SINGULAR.into());
    Ok(inst)
}

/// `max(Ax̂ − b)`, or `None` without a witness.
pub fn witness_violation(inst: &LcqpInstance) -> Option<f64> {
    let w = inst.witness.as_ref()?;
    let ax = inst.a().mul_vec(w);
    Some(ax.iter().zip(inst.b()).fold(f64::NEG_INFINITY, |acc, (l, r)| acc.max(l - r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::to_json;
    use crate::kkt::{psd_certificate, Definiteness, PSD_TOL};
    use crate::solver::{solve_splitting, SolverConfig};
    use crate::ProblemKind;

    #[test]
    fn lp_shapes_and_witness() {
        let inst = gen_lp_with(100, 100, 0.05, BoundRows::None, 3).unwrap();
        assert_eq!((inst.m(), inst.n()), (100, 100));
        // Binomial(10000, 0.05): mean 500, sd ≈ 21.8
        assert!((400..600).contains(&inst.a().nnz()), "{}", inst.a().nnz());
        assert!(witness_violation(&inst).unwrap() <= 0.0);
        assert_eq!(inst.kind(), ProblemKind::Lp);

        let boxed = gen_lp(100, 100, 0.05, 3).unwrap();
        assert_eq!(boxed.m(), 300);
        assert!(witness_violation(&boxed).unwrap() <= 0.0);
        assert!(gen_lp(10, 10, 0.0, 1).is_err());
        assert!(gen_lp(10, 10, 1.5, 1).is_err());
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = to_json(&gen_qp(20, 20, 0.1, 0.1, 9).unwrap(), None).unwrap();
        let b = to_json(&gen_qp(20, 20, 0.1, 0.1, 9).unwrap(), None).unwrap();
        let c = to_json(&gen_qp(20, 20, 0.1, 0.1, 10).unwrap(), None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn qp_sizes_and_pd() {
        for (size, rho) in [(100, 0.05), (250, 0.02)] {
            let inst = gen_qp(size, size, rho, rho, 1).unwrap();
            assert_eq!(inst.n(), size);
            assert_eq!(inst.m(), 2 * size);
            assert_eq!(psd_certificate(inst.q(), PSD_TOL).unwrap(), Definiteness::PositiveDefinite);
            assert!(witness_violation(&inst).unwrap() <= 0.0);
        }
    }

    #[test]
    fn spd_always_certified() {
        for n in [5, 50] {
            for seed in 0..100 {
                let q = make_sparse_spd(n, 0.3, 0.1, 0.9, seed).unwrap();
                assert!(q.is_symmetric());
                assert_eq!(psd_certificate(&q, PSD_TOL).unwrap(), Definiteness::PositiveDefinite, "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn spd_edge_cases() {
        let q = make_sparse_spd(6, 1e-12, 0.1, 0.9, 4).unwrap();
        assert_eq!(q.nnz(), 6);
        assert!(q.diag().iter().all(|&v| (0.1..=0.9).contains(&v)));
        let one = make_sparse_spd(1, 0.5, 0.2, 0.3, 4).unwrap();
        assert!((0.2..=0.3).contains(&one.get(0, 0)));
        assert!(make_sparse_spd(3, 0.5, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn svm_structure() {
        let inst = gen_svm(100, 20, 1.0, 0.05, 2).unwrap();
        assert_eq!((inst.n(), inst.m()), (120, 100));
        let diag = inst.q().diag();
        assert!(diag[..20].iter().all(|&v| v == 1.0));
        assert!(diag[20..].iter().all(|&v| v == 0.0));
        assert!(inst.flags.contains(FLAG_PSD_SINGULAR));
        assert_eq!(psd_certificate(inst.q(), PSD_TOL).unwrap(), Definiteness::PositiveSemidefinite);
        assert!(witness_violation(&inst).unwrap() < 0.0);
        assert!(gen_svm(7, 3, 1.0, 0.5, 0).is_err());
    }

    #[test]
    fn portfolio_structure_and_budget() {
        let inst = gen_portfolio(100, 0.05, 5).unwrap();
        assert_eq!(inst.m(), 3);
        assert!(witness_violation(&inst).unwrap() <= 1e-12);
        let small = gen_portfolio(8, 0.3, 5).unwrap();
        let sol = solve_splitting(&small, &SolverConfig::default()).unwrap();
        let budget: f64 = sol.x.iter().map(|v| 0.01 * v).sum();
        assert!((budget - 1.0).abs() <= 1e-6, "{budget}");
    }

    #[test]
    fn lasso_structure() {
        let inst = gen_lasso(50, 50, 1.0, 0.05, 6).unwrap();
        assert_eq!(inst.n(), 100);
        assert_eq!(inst.a().nnz(), 200);
        assert!(witness_violation(&inst).unwrap() < 0.0);
        assert!(inst.flags.contains(FLAG_PSD_SINGULAR));
    }
}
