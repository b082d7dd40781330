use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{bounded_dual, Data, SolutionMap, SparseWeights, TransformOp, TransformRecord, Transformed};
use crate::error::{Error, Result};
use crate::instance::{LcqpInstance, ProblemKind, Solution};
use crate::kkt::{psd_certificate, Definiteness, PSD_TOL};
use crate::rng::derive_rng;
use crate::sparse::SparseMatrix;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

fn complement(len: usize, removed: &[usize]) -> Result<Vec<usize>> {
    let mut drop = vec![false; len];
    for &i in removed {
        if i >= len {
            return Err(Error::Dimension(format!("index {i} out of range {len}")));
        }
        if std::mem::replace(&mut drop[i], true) {
            return Err(invalid(format!("index {i} listed twice")));
        }
    }
    Ok((0..len).filter(|&i| !drop[i]).collect())
}

/// Column `v` of a dense list as a sparse `len×1` matrix.
fn column(v: &[f64]) -> Result<SparseMatrix> {
    SparseMatrix::from_triplets(v.len(), 1, v.iter().enumerate().map(|(i, &x)| (i, 0, x)))
}

/// Computes the output data of `op` applied to `inst`. Shared by the
/// transforms and by [`replay`](super::replay).
pub(crate) fn build(inst: &LcqpInstance, op: &TransformOp) -> Result<Data> {
    let n = inst.n();
    let m = inst.m();
    let (q, a, b, c) = (inst.q(), inst.a(), inst.b(), inst.c());
    Ok(match op {
        TransformOp::ScaleVariables { alpha } => {
            check_len("alpha", alpha.len(), n)?;
            if alpha.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(invalid("scale_variables needs alpha > 0"));
            }
            Data {
                q: q.scaled_symmetric(alpha),
                a: a.scaled(None, Some(alpha)),
                b: b.to_vec(),
                c: c.iter().zip(alpha).map(|(c, a)| c * a).collect(),
            }
        }
        TransformOp::ScaleConstraints { d } => {
            check_len("d", d.len(), m)?;
            if d.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(invalid("scale_constraints needs d > 0"));
            }
            Data {
                q: q.clone(),
                a: a.scaled(Some(d), None),
                b: b.iter().zip(d).map(|(b, d)| b * d).collect(),
                c: c.to_vec(),
            }
        }
        TransformOp::RemoveIdleVariables { removed, .. } => {
            let keep = complement(n, removed)?;
            if keep.is_empty() {
                return Err(invalid("every variable is idle; refusing to build an empty instance"));
            }
            Data {
                q: q.select_rows(&keep).select_cols(&keep),
                a: a.select_cols(&keep),
                b: b.to_vec(),
                c: keep.iter().map(|&j| c[j]).collect(),
            }
        }
        TransformOp::RemoveInactiveConstraints { removed, .. }
        | TransformOp::DropConstraintsHeuristic { removed }
        | TransformOp::RemoveConstraints { removed } => {
            let keep = complement(m, removed)?;
            Data {
                q: q.clone(),
                a: a.select_rows(&keep),
                b: keep.iter().map(|&i| b[i]).collect(),
                c: c.to_vec(),
            }
        }
        TransformOp::AddVariables { q: cols, ridge } => {
            if !(*ridge >= 0.0 && ridge.is_finite()) {
                return Err(invalid("ridge must be a finite nonnegative number"));
            }
            let k = cols.len();
            for v in cols {
                check_len("q vector", v.len(), n)?;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("q vector"));
                }
            }
            let w: Vec<Vec<f64>> = cols.iter().map(|v| q.mul_vec(v)).collect();
            let mut t: Vec<(usize, usize, f64)> = q.entries().to_vec();
            for (l, wl) in w.iter().enumerate() {
                for (i, &x) in wl.iter().enumerate() {
                    t.push((i, n + l, x));
                    t.push((n + l, i, x));
                }
            }
            for k1 in 0..k {
                for k2 in k1..k {
                    let mut v: f64 = cols[k1].iter().zip(&w[k2]).map(|(a, b)| a * b).sum();
                    if k1 == k2 {
                        v += ridge;
                    }
                    t.push((n + k1, n + k2, v));
                    if k1 != k2 {
                        t.push((n + k2, n + k1, v));
                    }
                }
            }
            let mut at: Vec<(usize, usize, f64)> = a.entries().to_vec();
            for (l, v) in cols.iter().enumerate() {
                for (i, x) in a.mul_vec(v).into_iter().enumerate() {
                    at.push((i, n + l, x));
                }
            }
            let mut c2 = c.to_vec();
            c2.extend(cols.iter().map(|v| v.iter().zip(c).map(|(a, b)| a * b).sum::<f64>()));
            Data {
                q: SparseMatrix::from_triplets(n + k, n + k, t)?,
                a: SparseMatrix::from_triplets(m, n + k, at)?,
                b: b.to_vec(),
                c: c2,
            }
        }
        TransformOp::AddVariableBiased { q_diag, a_col, c_new } => {
            check_len("a_col", a_col.len(), m)?;
            if !(*q_diag > 0.0 && q_diag.is_finite()) {
                return Err(invalid("q_diag must be positive"));
            }
            let mut c2 = c.to_vec();
            c2.push(*c_new);
            Data {
                q: q.block_diag(&SparseMatrix::diagonal(&[*q_diag])?),
                a: a.hstack(&column(a_col)?)?,
                b: b.to_vec(),
                c: c2,
            }
        }
        TransformOp::AddVariableConstrained { q_diag, a_col, c_new } => {
            check_len("a_col", a_col.len(), m)?;
            if !(*q_diag > 0.0 && q_diag.is_finite()) {
                return Err(invalid("q_diag must be positive"));
            }
            if a_col.iter().any(|&v| !(v <= 0.0)) {
                return Err(invalid("add_variable_constrained needs a_col <= 0"));
            }
            if !(*c_new <= 0.0) {
                return Err(invalid("add_variable_constrained needs c_new <= 0"));
            }
            let bound = SparseMatrix::from_triplets(1, n + 1, [(0, n, 1.0)])?;
            let mut b2 = b.to_vec();
            b2.push(0.0);
            let mut c2 = c.to_vec();
            c2.push(*c_new);
            Data {
                q: q.block_diag(&SparseMatrix::diagonal(&[*q_diag])?),
                a: a.hstack(&column(a_col)?)?.vstack(&bound)?,
                b: b2,
                c: c2,
            }
        }
        TransformOp::AddConstraints { weights } => {
            let k = weights.len();
            let mut t = Vec::new();
            let mut b2 = b.to_vec();
            let rows = row_lists(a);
            for (r, w) in weights.iter().enumerate() {
                if w.iter().all(|&(_, v)| v == 0.0) {
                    return Err(invalid(format!("weight vector {r} is all zero")));
                }
                let mut rhs = 0.0;
                for &(i, v) in w {
                    if i >= m {
                        return Err(Error::Dimension(format!("weight index {i} out of range {m}")));
                    }
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(invalid(format!("weight {v} on row {i} is negative or non-finite")));
                    }
                    rhs += v * b[i];
                    for &(j, aij) in &rows[i] {
                        t.push((r, j, v * aij));
                    }
                }
                b2.push(rhs);
            }
            let extra = SparseMatrix::from_triplets_summed(k, n, t)?;
            Data {
                q: q.clone(),
                a: a.vstack(&extra)?,
                b: b2,
                c: c.to_vec(),
            }
        }
        TransformOp::BiasInstance {
            r,
            b21,
            delta_b,
            delta_c,
            ..
        } => {
            check_len("delta_b", delta_b.len(), m)?;
            check_len("delta_c", delta_c.len(), n)?;
            let mut t: Vec<(usize, usize, f64)> = q.entries().to_vec();
            for col in r {
                check_len("R column", col.len(), n)?;
            }
            for i in 0..n {
                for j in 0..n {
                    let v: f64 = r.iter().map(|col| col[i] * col[j]).sum();
                    if v != 0.0 {
                        t.push((i, j, v));
                    }
                }
            }
            let b21 = SparseMatrix::from_parts(m, n, b21)?;
            let mut at: Vec<(usize, usize, f64)> = a.entries().to_vec();
            at.extend_from_slice(b21.entries());
            Data {
                q: SparseMatrix::from_triplets_summed(n, n, t)?,
                a: SparseMatrix::from_triplets_summed(m, n, at)?,
                b: b.iter().zip(delta_b).map(|(x, d)| x + d).collect(),
                c: c.iter().zip(delta_c).map(|(x, d)| x + d).collect(),
            }
        }
    })
}

fn row_lists(a: &SparseMatrix) -> Vec<Vec<(usize, f64)>> {
    let mut rows = vec![Vec::new(); a.n_rows()];
    for &(i, j, v) in a.entries() {
        rows[i].push((j, v));
    }
    rows
}

fn finish(
    inst: &LcqpInstance,
    sol: Option<&Solution>,
    op: TransformOp,
    map: SolutionMap,
) -> Result<Transformed> {
    let record = TransformRecord { op, solution_map: map };
    let instance = build(inst, &record.op)?.derive_into(inst, record.clone())?;
    let solution = match sol {
        Some(s) => Some(record.solution_map.apply(&instance, s)?),
        None => None,
    };
    Ok(Transformed {
        instance,
        solution,
        record,
    })
}

fn check_solution(inst: &LcqpInstance, sol: &Solution) -> Result<()> {
    if sol.x.len() != inst.n() || sol.lam.len() != inst.m() {
        return Err(Error::Dimension(format!(
            "solution is ({}, {}), instance is ({}, {})",
            sol.x.len(),
            sol.lam.len(),
            inst.n(),
            inst.m()
        )));
    }
    Ok(())
}

/// `Q′ = diag(α)Qdiag(α)`, `A′ = A diag(α)`, `c′ = α∘c`; `x′ = x/α`.
pub fn scale_variables(inst: &LcqpInstance, sol: Option<&Solution>, alpha: &[f64]) -> Result<Transformed> {
    if let Some(s) = sol {
        check_solution(inst, s)?;
    }
    let inv = alpha.iter().map(|a| 1.0 / a).collect();
    finish(
        inst,
        sol,
        TransformOp::ScaleVariables { alpha: alpha.to_vec() },
        SolutionMap::PrimalScaled(inv),
    )
}

/// `A′ = diag(d)A`, `b′ = d∘b`; `λ′ = λ/d`, primal unchanged.
pub fn scale_constraints(inst: &LcqpInstance, sol: Option<&Solution>, d: &[f64]) -> Result<Transformed> {
    if let Some(s) = sol {
        check_solution(inst, s)?;
    }
    let inv = d.iter().map(|v| 1.0 / v).collect();
    finish(
        inst,
        sol,
        TransformOp::ScaleConstraints { d: d.to_vec() },
        SolutionMap::DualScaled(inv),
    )
}

/// Indices with `|xⱼ| ≤ tol·(1 + ‖x‖∞)`.
pub fn idle_variables(sol: &Solution, tol: f64) -> Vec<usize> {
    let scale = 1.0 + sol.x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (0..sol.x.len()).filter(|&j| sol.x[j].abs() <= tol * scale).collect()
}

/// Row `i` is strictly inactive when `sᵢ > tol·(1 + |bᵢ|)`.
pub fn strictly_inactive(inst: &LcqpInstance, sol: &Solution, tol: f64) -> Vec<usize> {
    (0..inst.m())
        .filter(|&i| sol.slack[i] > tol * (1.0 + inst.b()[i].abs()))
        .collect()
}

fn remove_variables(inst: &LcqpInstance, sol: &Solution, tol: f64, removed: Vec<usize>) -> Result<Transformed> {
    let keep = complement(inst.n(), &removed)?;
    finish(
        inst,
        Some(sol),
        TransformOp::RemoveIdleVariables { tol, removed },
        SolutionMap::RestrictedTo {
            variables: keep,
            constraints: (0..inst.m()).collect(),
        },
    )
}

/// Drops every idle variable.
pub fn remove_idle_variables(inst: &LcqpInstance, sol: &Solution, tol: f64) -> Result<Transformed> {
    check_solution(inst, sol)?;
    let idle = idle_variables(sol, tol);
    if idle.len() == inst.n() && inst.n() > 0 {
        return Err(invalid("every variable is idle; refusing to build an empty instance"));
    }
    remove_variables(inst, sol, tol, idle)
}

/// Drops a uniformly sampled `⌊fraction·|idle|⌋` of the idle variables,
/// always leaving at least one variable.
pub fn remove_idle_variables_sampled(
    inst: &LcqpInstance,
    sol: &Solution,
    tol: f64,
    fraction: f64,
    seed: u64,
) -> Result<Transformed> {
    check_solution(inst, sol)?;
    check_fraction(fraction)?;
    let idle = idle_variables(sol, tol);
    let count = ((fraction * idle.len() as f64).floor() as usize).min(inst.n().saturating_sub(1));
    let removed = sample_sorted(&idle, count, seed, "remove-idle-variables");
    remove_variables(inst, sol, tol, removed)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(invalid(format!("fraction {fraction} outside [0, 1]")));
    }
    Ok(())
}

fn sample_sorted(pool: &[usize], count: usize, seed: u64, label: &str) -> Vec<usize> {
    let mut rng = derive_rng(seed, 0, label);
    let mut out: Vec<usize> = sample(&mut rng, pool.len(), count).into_iter().map(|k| pool[k]).collect();
    out.sort_unstable();
    out
}

/// Drops a uniformly sampled `⌊fraction·|inactive|⌋` of the strictly
/// inactive rows.
pub fn remove_inactive_constraints(
    inst: &LcqpInstance,
    sol: &Solution,
    tol: f64,
    fraction: f64,
    seed: u64,
) -> Result<Transformed> {
    check_solution(inst, sol)?;
    check_fraction(fraction)?;
    let inactive = strictly_inactive(inst, sol, tol);
    let count = (fraction * inactive.len() as f64).floor() as usize;
    let removed = sample_sorted(&inactive, count, seed, "remove-inactive-constraints");
    let keep = complement(inst.m(), &removed)?;
    finish(
        inst,
        Some(sol),
        TransformOp::RemoveInactiveConstraints { tol, fraction, removed },
        SolutionMap::RestrictedTo {
            variables: (0..inst.n()).collect(),
            constraints: keep,
        },
    )
}

/// Drops the listed rows. With a solution, every dropped row must carry a
/// zero multiplier, otherwise the mapped point would not be stationary.
pub fn remove_constraints(inst: &LcqpInstance, sol: Option<&Solution>, rows: &[usize]) -> Result<Transformed> {
    let mut removed = rows.to_vec();
    removed.sort_unstable();
    let keep = complement(inst.m(), &removed)?;
    if let Some(s) = sol {
        check_solution(inst, s)?;
        if let Some(&i) = removed.iter().find(|&&i| s.lam[i] != 0.0) {
            return Err(invalid(format!("row {i} has a nonzero multiplier and cannot be dropped")));
        }
    }
    finish(
        inst,
        sol,
        TransformOp::RemoveConstraints { removed },
        SolutionMap::RestrictedTo {
            variables: (0..inst.n()).collect(),
            constraints: keep,
        },
    )
}

/// Drops a sampled `⌊fraction·|candidates|⌋` of the rows the heuristic ranks
/// inactive. The solution is carried over only if every dropped row is
/// strictly inactive at it; otherwise the label is discarded.
pub fn drop_constraints_heuristic(
    inst: &LcqpInstance,
    sol: Option<&Solution>,
    candidates: &[usize],
    fraction: f64,
    seed: u64,
) -> Result<Transformed> {
    check_fraction(fraction)?;
    let count = (fraction * candidates.len() as f64).floor() as usize;
    let removed = sample_sorted(candidates, count, seed, "drop-constraints-heuristic");
    let keep = complement(inst.m(), &removed)?;
    let sol = match sol {
        Some(s) => {
            check_solution(inst, s)?;
            let tol = crate::kkt::ACTIVE_TOL;
            let safe = removed
                .iter()
                .all(|&i| s.slack[i] > tol * (1.0 + inst.b()[i].abs()));
            safe.then_some(s)
        }
        None => None,
    };
    finish(
        inst,
        sol,
        TransformOp::DropConstraintsHeuristic { removed },
        SolutionMap::RestrictedTo {
            variables: (0..inst.n()).collect(),
            constraints: keep,
        },
    )
}

/// Default ridge for [`add_variables`]: `1e-2·trace(Q)/n` for a QP, zero for
/// an LP (which keeps the output an LP).
pub fn default_ridge(inst: &LcqpInstance) -> f64 {
    match inst.kind() {
        ProblemKind::Lp => 0.0,
        ProblemKind::Qp => 1e-2 * inst.q().diag().iter().sum::<f64>() / inst.n().max(1) as f64,
    }
}

/// Appends the variable `x′` with `M₁ = [I; qᵀ]`: `Q′ = M₁QM₁ᵀ + ridge·eₙ₊₁eₙ₊₁ᵀ`,
/// `A′ = [A, Aq]`, `c′ = (c, qᵀc)`. The mapped solution is `(x, 0)`.
/// `ridge = None` uses [`default_ridge`].
pub fn add_variables(inst: &LcqpInstance, sol: Option<&Solution>, q_vec: &[f64], ridge: Option<f64>) -> Result<Transformed> {
    add_variables_many(inst, sol, &[q_vec.to_vec()], ridge)
}

/// [`add_variables`] with one new variable per vector in `q`.
///
/// A QP input must be positive definite. An LP is accepted and stays an LP
/// when the ridge is zero.
pub fn add_variables_many(
    inst: &LcqpInstance,
    sol: Option<&Solution>,
    q: &[Vec<f64>],
    ridge: Option<f64>,
) -> Result<Transformed> {
    if let Some(s) = sol {
        check_solution(inst, s)?;
    }
    if inst.kind() == ProblemKind::Qp && psd_certificate(inst.q(), PSD_TOL)? != Definiteness::PositiveDefinite {
        return Err(Error::NotPositiveDefinite {
            op: "add-variables".into(),
        });
    }
    let ridge = ridge.unwrap_or_else(|| default_ridge(inst));
    let n = inst.n();
    finish(
        inst,
        sol,
        TransformOp::AddVariables { q: q.to_vec(), ridge },
        SolutionMap::ExtendedWithZeros {
            variables: (n..n + q.len()).collect(),
            constraints: vec![],
        },
    )
}

/// Appends a decoupled variable with `c′ₙ₊₁ = −a_colᵀλ*`, which keeps `(x*, 0)`
/// stationary. Needs the solution.
pub fn add_variable_biased(inst: &LcqpInstance, sol: &Solution, q_diag: f64, a_col: &[f64]) -> Result<Transformed> {
    check_solution(inst, sol)?;
    check_len("a_col", a_col.len(), inst.m())?;
    let c_new = -a_col.iter().zip(&sol.lam).map(|(a, l)| a * l).sum::<f64>();
    let n = inst.n();
    finish(
        inst,
        Some(sol),
        TransformOp::AddVariableBiased {
            q_diag,
            a_col: a_col.to_vec(),
            c_new,
        },
        SolutionMap::ExtendedWithZeros {
            variables: vec![n],
            constraints: vec![],
        },
    )
}

/// Appends `x′` with cost `c_new ≤ 0`, column `a_col ≤ 0` and the bound row
/// `x′ ≤ 0`. The bound's multiplier is `−c_new − a_colᵀλ* ≥ 0`, so the
/// transform needs no solution.
pub fn add_variable_constrained(
    inst: &LcqpInstance,
    sol: Option<&Solution>,
    q_diag: f64,
    a_col: &[f64],
    c_new: f64,
) -> Result<Transformed> {
    check_len("a_col", a_col.len(), inst.m())?;
    let map = match sol {
        Some(s) => {
            check_solution(inst, s)?;
            SolutionMap::ExplicitDual {
                variables: vec![inst.n()],
                duals: vec![bounded_dual(a_col, c_new, &s.lam)],
            }
        }
        None => SolutionMap::BoundedVariable {
            a_col: a_col.to_vec(),
            c_new,
        },
    };
    finish(
        inst,
        sol,
        TransformOp::AddVariableConstrained {
            q_diag,
            a_col: a_col.to_vec(),
            c_new,
        },
        map,
    )
}

/// Appends the rows `wᵀA ≤ wᵀb` for nonnegative weights `w`; their
/// multipliers are zero.
pub fn add_constraints(inst: &LcqpInstance, sol: Option<&Solution>, weights: &[SparseWeights]) -> Result<Transformed> {
    if let Some(s) = sol {
        check_solution(inst, s)?;
    }
    let m = inst.m();
    finish(
        inst,
        sol,
        TransformOp::AddConstraints {
            weights: weights.to_vec(),
        },
        SolutionMap::ExtendedWithZeros {
            variables: vec![],
            constraints: (m..m + weights.len()).collect(),
        },
    )
}

/// Draws `R ∈ ℝ^{n×rank}` and a dense `B₂₁ ∈ ℝ^{m×n}` with entries
/// `magnitude·N(0, 1)` and applies [`bias_instance_with`].
pub fn bias_instance(inst: &LcqpInstance, sol: &Solution, rank: usize, magnitude: f64, seed: u64) -> Result<Transformed> {
    if rank == 0 {
        return Err(invalid("bias rank must be at least 1"));
    }
    if !magnitude.is_finite() {
        return Err(Error::NonFinite("magnitude"));
    }
    let n = inst.n();
    let m = inst.m();
    let mut rng = derive_rng(seed, 0, "bias-instance");
    let r: Vec<Vec<f64>> = (0..rank)
        .map(|_| (0..n).map(|_| magnitude * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let mut t = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            t.push((i, j, magnitude * rng.sample::<f64, _>(StandardNormal)));
        }
    }
    let b21 = SparseMatrix::from_triplets(m, n, t)?;
    bias_with(inst, sol, r, &b21, rank, magnitude, seed)
}

/// `Q′ = Q + RRᵀ`, `A′ = A + B₂₁`, `b′ = b + B₂₁x*`,
/// `c′ = c − RRᵀx* − B₂₁ᵀλ*`, with `(x*, λ*)` unchanged.
/// `r` holds the columns of `R`.
pub fn bias_instance_with(inst: &LcqpInstance, sol: &Solution, r: Vec<Vec<f64>>, b21: &SparseMatrix) -> Result<Transformed> {
    let rank = r.len();
    bias_with(inst, sol, r, b21, rank, f64::NAN, 0)
}

fn bias_with(
    inst: &LcqpInstance,
    sol: &Solution,
    r: Vec<Vec<f64>>,
    b21: &SparseMatrix,
    rank: usize,
    magnitude: f64,
    seed: u64,
) -> Result<Transformed> {
    check_solution(inst, sol)?;
    let n = inst.n();
    if b21.n_rows() != inst.m() || b21.n_cols() != n {
        return Err(Error::Dimension("B21 must be m x n".into()));
    }
    for col in &r {
        check_len("R column", col.len(), n)?;
    }
    // δc = −RRᵀx* − B₂₁ᵀλ*
    let mut delta_c = b21.tr_mul_vec(&sol.lam);
    for col in &r {
        let rx: f64 = col.iter().zip(&sol.x).map(|(a, b)| a * b).sum();
        for (d, &rj) in delta_c.iter_mut().zip(col) {
            *d += rj * rx;
        }
    }
    for d in &mut delta_c {
        *d = -*d;
    }
    let delta_b = b21.mul_vec(&sol.x);
    finish(
        inst,
        Some(sol),
        TransformOp::BiasInstance {
            rank,
            magnitude: if magnitude.is_nan() { 0.0 } else { magnitude },
            seed,
            r,
            b21: b21.to_parts(),
            delta_b,
            delta_c,
        },
        SolutionMap::Identity,
    )
}
