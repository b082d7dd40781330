use std::collections::HashSet;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::linsys::{kkt_matrix, kkt_rhs, nnls, solve_regularized};
use super::pivot::{independent_rows, refine_vertex, Pivoted};
use super::{SolveError, SolverConfig};
use crate::instance::{LcqpInstance, ProblemKind, Solution};
use crate::kkt::{kkt_residuals, psd_certificate, Definiteness, KktReport};

const SIGMA: f64 = 1e-6;
const RELAX: f64 = 1.6;
const CHECK_EVERY: usize = 10;
const ADAPT_EVERY: usize = 50;
const RUIZ_ITERS: usize = 15;
const FIRST_STAGE_EPS: f64 = 1e-3;
const INFEAS_EPS: f64 = 1e-6;
const INFEAS_HITS: usize = 3;
const UNBOUNDED_OBJECTIVE: f64 = -1e12;

#[derive(Clone, Debug)]
pub struct SplittingOutput {
    pub solution: Solution,
    pub iterations: usize,
    pub polished: bool,
    pub report: KktReport,
    /// Final ADMM penalty after adaptation.
    pub penalty: f64,
}

pub fn solve_splitting(inst: &LcqpInstance, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    solve_splitting_detailed(inst, cfg).map(|o| o.solution)
}

/// Scaled problem data: `P̄ = cs·DPD`, `q̄ = cs·Dc`, `Ā = EAD`, `b̄ = Eb`.
struct Scaled {
    p: DMatrix<f64>,
    q: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    d: DVector<f64>,
    e: DVector<f64>,
    cost: f64,
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.amax()
    }
}

fn clamp_scale(norm: f64) -> f64 {
    if norm < 1e-4 {
        1.0
    } else {
        (1.0 / norm.sqrt()).clamp(1e-4, 1e4)
    }
}

/// Ruiz equilibration of the KKT matrix followed by cost scaling.
fn equilibrate(p: &DMatrix<f64>, a: &DMatrix<f64>, c: &DVector<f64>, b: &DVector<f64>) -> Scaled {
    let n = p.nrows();
    let m = a.nrows();
    let mut ps = p.clone();
    let mut as_ = a.clone();
    let mut d = DVector::from_element(n, 1.0);
    let mut e = DVector::from_element(m, 1.0);
    for _ in 0..RUIZ_ITERS {
        let mut dj = DVector::zeros(n);
        for j in 0..n {
            let mut norm: f64 = 0.0;
            for i in 0..n {
                norm = norm.max(ps[(i, j)].abs());
            }
            for i in 0..m {
                norm = norm.max(as_[(i, j)].abs());
            }
            dj[j] = clamp_scale(norm);
        }
        let mut ei = DVector::zeros(m);
        for i in 0..m {
            let mut norm: f64 = 0.0;
            for j in 0..n {
                norm = norm.max(as_[(i, j)].abs());
            }
            ei[i] = clamp_scale(norm);
        }
        for i in 0..n {
            for j in 0..n {
                ps[(i, j)] *= dj[i] * dj[j];
            }
        }
        for i in 0..m {
            for j in 0..n {
                as_[(i, j)] *= ei[i] * dj[j];
            }
        }
        d.component_mul_assign(&dj);
        e.component_mul_assign(&ei);
    }
    let mut qs = c.component_mul(&d);
    let mean_col = if n > 0 {
        (0..n).map(|j| ps.column(j).amax()).sum::<f64>() / n as f64
    } else {
        0.0
    };
    let cost_norm = mean_col.max(inf_norm(&qs));
    let cost = if cost_norm < 1e-4 { 1.0 } else { (1.0 / cost_norm).clamp(1e-4, 1e4) };
    ps *= cost;
    qs *= cost;
    let bs = b.component_mul(&e);
    Scaled {
        p: ps,
        q: qs,
        a: as_,
        b: bs,
        d,
        e,
        cost,
    }
}

fn factor(s: &Scaled, ata: &DMatrix<f64>, rho: f64) -> Cholesky<f64, Dyn> {
    let n = s.p.nrows();
    let mut sigma = SIGMA;
    loop {
        let mut k = &s.p + ata * rho;
        for i in 0..n {
            k[(i, i)] += sigma;
        }
        if let Some(ch) = Cholesky::new(k) {
            return ch;
        }
        // only reachable when P̄ is numerically indefinite
        sigma *= 10.0;
    }
}

struct Unscaled {
    x: DVector<f64>,
    z: DVector<f64>,
    y: DVector<f64>,
}

pub fn solve_splitting_detailed(inst: &LcqpInstance, cfg: &SolverConfig) -> Result<SplittingOutput, SolveError> {
    cfg.validate()?;
    let n = inst.n();
    let m = inst.m();
    if inst.kind() == ProblemKind::Qp {
        let tol = 1e-9 * inst.q().max_abs().max(1.0);
        if psd_certificate(inst.q(), tol).map_err(|_| SolveError::NotConvex)? == Definiteness::Indefinite {
            return Err(SolveError::NotConvex);
        }
    }
    if n == 0 {
        if inst.b().iter().any(|&v| v < 0.0) {
            return Err(SolveError::Infeasible);
        }
        let solution = Solution::new(inst, vec![], vec![0.0; m]).expect("dimensions match");
        return Ok(SplittingOutput {
            report: KktReport::zero(true),
            solution,
            iterations: 0,
            polished: false,
            penalty: cfg.penalty,
        });
    }

    let p = inst.q().to_dense();
    let a = inst.a().to_dense();
    let c = DVector::from_column_slice(inst.c());
    let b = DVector::from_column_slice(inst.b());
    let s = equilibrate(&p, &a, &c, &b);
    let ata = s.a.transpose() * &s.a;

    let unscale = |xs: &DVector<f64>, zs: &DVector<f64>, ys: &DVector<f64>| Unscaled {
        x: xs.component_mul(&s.d),
        z: zs.component_div(&s.e),
        y: ys.component_mul(&s.e) / s.cost,
    };

    let mut rho = cfg.penalty;
    let mut chol = factor(&s, &ata, rho);
    let mut x = DVector::zeros(n);
    let mut z = DVector::zeros(m);
    let mut y = DVector::zeros(m);
    let mut eps = FIRST_STAGE_EPS.max(cfg.tol);
    let mut dual_inf_hits = 0;
    let mut prim_inf_hits = 0;
    let mut best: Option<(Solution, KktReport)> = None;
    let mut tried_polish: HashSet<Vec<usize>> = HashSet::new();
    // adaptation gets rarer so that the penalty settles
    let mut next_adapt = ADAPT_EVERY;

    for iter in 1..=cfg.max_iter {
        let rhs = &x * SIGMA - &s.q + s.a.tr_mul(&(&z * rho - &y));
        let xt = chol.solve(&rhs);
        let zt = &s.a * &xt;
        let x_new = &xt * RELAX + &x * (1.0 - RELAX);
        let zr = &zt * RELAX + &z * (1.0 - RELAX);
        let mut z_new = &zr + &y / rho;
        for i in 0..m {
            if z_new[i] > s.b[i] {
                z_new[i] = s.b[i];
            }
        }
        let y_new = &y + (&zr - &z_new) * rho;
        let dx = &x_new - &x;
        let dy = &y_new - &y;
        x = x_new;
        z = z_new;
        y = y_new;

        if iter % CHECK_EVERY != 0 && iter != cfg.max_iter {
            continue;
        }
        let u = unscale(&x, &z, &y);
        let ax = &a * &u.x;
        let px = &p * &u.x;
        let aty = a.tr_mul(&u.y);
        let prim = inf_norm(&(&ax - &u.z));
        let dual = inf_norm(&(&px + &c + &aty));
        let prim_scale = inf_norm(&ax).max(inf_norm(&u.z));
        let dual_scale = inf_norm(&px).max(inf_norm(&aty)).max(inf_norm(&c));

        let obj = 0.5 * u.x.dot(&px) + c.dot(&u.x);
        if obj < UNBOUNDED_OBJECTIVE {
            return Err(SolveError::Unbounded);
        }
        if dual_infeasible(&p, &a, &c, &dx.component_mul(&s.d)) {
            dual_inf_hits += 1;
            if dual_inf_hits >= INFEAS_HITS {
                return Err(SolveError::Unbounded);
            }
        } else {
            dual_inf_hits = 0;
        }
        if primal_infeasible(&a, &b, &(dy.component_mul(&s.e) / s.cost)) {
            prim_inf_hits += 1;
            if prim_inf_hits >= INFEAS_HITS {
                return Err(SolveError::Infeasible);
            }
        } else {
            prim_inf_hits = 0;
        }

        let converged = prim <= eps * (1.0 + prim_scale) && dual <= eps * (1.0 + dual_scale);
        if converged {
            if cfg.polish {
                let guess = guess_active(inst, &a, &u);
                if tried_polish.insert(guess.clone()) {
                    let polished = if inst.kind() == ProblemKind::Lp && guess.len() == n {
                        polish_vertex(inst, &a, guess)
                    } else {
                        polish(inst, &p, &a, guess)
                    };
                    if let Some((sol, report)) = polished {
                        if report.within(cfg.tol) {
                            return Ok(SplittingOutput {
                                solution: sol,
                                iterations: iter,
                                polished: true,
                                report,
                                penalty: rho,
                            });
                        }
                    }
                }
            }
            let (sol, report) = admm_point(inst, &u);
            if eps <= cfg.tol && report.within(10.0 * cfg.tol) {
                return Ok(SplittingOutput {
                    solution: sol,
                    iterations: iter,
                    polished: false,
                    report,
                    penalty: rho,
                });
            }
            keep_best(&mut best, sol, report);
            eps = (eps * 0.1).max(cfg.tol * 1e-3);
        }

        if iter == next_adapt {
            next_adapt *= 2;
            // ratio of normalized residuals, measured in the scaled space
            let ax = &s.a * &x;
            let px = &s.p * &x;
            let aty = s.a.tr_mul(&y);
            let pn = inf_norm(&(&ax - &z)) / inf_norm(&ax).max(inf_norm(&z)).max(1e-30);
            let dn = inf_norm(&(&px + &s.q + &aty)) / inf_norm(&px).max(inf_norm(&aty)).max(inf_norm(&s.q)).max(1e-30);
            if pn > 0.0 && dn > 0.0 {
                let new_rho = (rho * (pn / dn).sqrt()).clamp(1e-6, 1e6);
                if new_rho > 5.0 * rho || new_rho < 0.2 * rho {
                    rho = new_rho;
                    chol = factor(&s, &ata, rho);
                }
            }
        }
    }

    let u = unscale(&x, &z, &y);
    let (sol, report) = admm_point(inst, &u);
    keep_best(&mut best, sol, report);
    let (best, report) = best.expect("at least one candidate");
    Err(SolveError::Unconverged {
        iterations: cfg.max_iter,
        best: Box::new(best),
        report,
    })
}

fn keep_best(best: &mut Option<(Solution, KktReport)>, sol: Solution, report: KktReport) {
    let better = match best {
        Some((_, r)) => report.max_residual() < r.max_residual(),
        None => true,
    };
    if better {
        *best = Some((sol, report));
    }
}

fn admm_point(inst: &LcqpInstance, u: &Unscaled) -> (Solution, KktReport) {
    let lam: Vec<f64> = u.y.iter().map(|v| v.max(0.0)).collect();
    let sol = Solution::new(inst, u.x.as_slice().to_vec(), lam).expect("dimensions match");
    let report = kkt_residuals(inst, &sol, true).expect("dimensions match");
    (sol, report)
}

/// Rows by decreasing `yᵢ − (bᵢ − zᵢ)`, the multiplier minus projected slack.
fn margin_order(b: &[f64], u: &Unscaled) -> Vec<(usize, f64)> {
    let mut rows: Vec<(usize, f64)> = (0..b.len()).map(|i| (i, u.y[i] - (b[i] - u.z[i]))).collect();
    rows.sort_by(|(i, mi), (j, mj)| mj.total_cmp(mi).then(i.cmp(j)));
    rows
}

/// Starting rows for polish. LPs get a full basis of `n` independent rows;
/// otherwise the rows with positive margin, at most `n` of them.
fn guess_active(inst: &LcqpInstance, a: &DMatrix<f64>, u: &Unscaled) -> Vec<usize> {
    let order = margin_order(inst.b(), u);
    let mut rows: Vec<usize> = if inst.kind() == ProblemKind::Lp {
        let all: Vec<usize> = order.iter().map(|&(i, _)| i).collect();
        independent_rows(a, &all)
    } else {
        order.iter().take_while(|&&(_, mg)| mg > 0.0).map(|&(i, _)| i).take(inst.n()).collect()
    };
    rows.sort_unstable();
    rows
}

/// `δx` certifies unboundedness when it is a recession direction that
/// strictly decreases the objective.
fn dual_infeasible(p: &DMatrix<f64>, a: &DMatrix<f64>, c: &DVector<f64>, dx: &DVector<f64>) -> bool {
    let norm = inf_norm(dx);
    if norm <= 1e-30 {
        return false;
    }
    let tol = INFEAS_EPS * norm;
    c.dot(dx) < -tol && inf_norm(&(p * dx)) <= tol && (a * dx).iter().all(|&v| v <= tol)
}

/// `δy ≥ 0` with `Aᵀδy ≈ 0` and `bᵀδy < 0` is a Farkas certificate.
fn primal_infeasible(a: &DMatrix<f64>, b: &DVector<f64>, dy: &DVector<f64>) -> bool {
    let norm = inf_norm(dy);
    if norm <= 1e-30 {
        return false;
    }
    let tol = INFEAS_EPS * norm;
    if dy.iter().any(|&v| v < -tol) {
        return false;
    }
    let bty: f64 = b.iter().zip(dy.iter()).map(|(bi, yi)| bi * yi.max(0.0)).sum();
    bty < -tol && inf_norm(&a.tr_mul(dy)) <= tol
}

fn polish_vertex(inst: &LcqpInstance, a: &DMatrix<f64>, basis: Vec<usize>) -> Option<(Solution, KktReport)> {
    match refine_vertex(a, inst.b(), inst.c(), basis, 10 * inst.n() + 50) {
        Pivoted::Optimal { x, lam } => {
            let sol = Solution::new(inst, x, lam).ok()?;
            let report = kkt_residuals(inst, &sol, true).ok()?;
            Some((sol, report))
        }
        _ => None,
    }
}

/// Solves the equality KKT system on a guessed active set, then repairs the
/// guess (drop negative multipliers, add violated rows) until the point is
/// primal-dual feasible or the guess cycles.
fn polish(inst: &LcqpInstance, p: &DMatrix<f64>, a: &DMatrix<f64>, mut active: Vec<usize>) -> Option<(Solution, KktReport)> {
    let n = inst.n();
    let m = inst.m();
    let b = inst.b();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for _ in 0..n.max(50) {
        if !seen.insert(active.clone()) {
            return None;
        }
        let kkt = kkt_matrix(p, a, &active);
        let rhs = kkt_rhs(inst.c(), b, &active);
        let z = solve_regularized(&kkt, &rhs, n, 25)?;
        let x: Vec<f64> = z.rows(0, n).iter().copied().collect();
        let lam_s = z.rows(n, active.len());
        let lam_scale = 1.0 + if lam_s.is_empty() { 0.0 } else { lam_s.amax() };

        let mut in_set = vec![false; m];
        for &i in &active {
            in_set[i] = true;
        }
        let ax = a * DVector::from_column_slice(&x);
        let violation = |i: usize| (ax[i] - b[i]) / (1.0 + b[i].abs());
        let violated: Vec<usize> = (0..m).filter(|&i| !in_set[i] && violation(i) > 1e-10).collect();
        let negative: Vec<usize> = (0..active.len()).filter(|&k| lam_s[k] < -1e-10 * lam_scale).collect();
        let mut refit = None;
        if violated.is_empty() && !negative.is_empty() {
            // degenerate vertices have many multiplier vectors; look for a nonnegative one
            let g = -(p * DVector::from_column_slice(&x) + DVector::from_column_slice(inst.c()));
            let at = a.select_rows(&active).transpose();
            let w = nnls(&at, &g);
            if (&at * &w - &g).amax() <= 1e-10 * (1.0 + g.amax()) {
                refit = Some(w);
            }
        }
        if violated.is_empty() && (negative.is_empty() || refit.is_some()) {
            let mut lam = vec![0.0; m];
            for (k, &i) in active.iter().enumerate() {
                lam[i] = match &refit {
                    Some(w) => w[k],
                    None => lam_s[k].max(0.0),
                };
            }
            let sol = Solution::new(inst, x, lam).ok()?;
            let report = kkt_residuals(inst, &sol, true).ok()?;
            return Some((sol, report));
        }
        // one pivot per round: drop the most negative multiplier, add the most violated row
        let worst_violated = violated.iter().copied().max_by(|&i, &j| violation(i).total_cmp(&violation(j)));
        let most_negative = negative.iter().copied().min_by(|&k, &l| lam_s[k].total_cmp(&lam_s[l]));
        if let Some(k) = most_negative {
            active.remove(k);
        }
        if let Some(i) = worst_violated {
            active.push(i);
        }
        active.sort_unstable();
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::*;
    use crate::sparse::SparseMatrix;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn e1_matches_oracle() {
        let out = solve_splitting_detailed(&e1(), &SolverConfig::default()).unwrap();
        assert!(close(&out.solution.x, &[0.5, 0.5], 1e-6), "{:?}", out.solution);
        assert!(close(&out.solution.lam, &[1.0, 0.0, 0.0], 1e-6));
        assert!(out.report.within(1e-7));
    }

    #[test]
    fn one_dimensional_active_bound() {
        let inst = LcqpInstance::new("t", SparseMatrix::identity(1), SparseMatrix::identity(1), vec![0.3], vec![-1.0]).unwrap();
        let sol = solve_splitting(&inst, &SolverConfig::default()).unwrap();
        assert!((sol.x[0] - 0.3).abs() < 1e-6);
        assert!((sol.lam[0] - 0.7).abs() < 1e-6);
    }

    #[test]
    fn unconstrained_optimum_feasible() {
        let inst = LcqpInstance::new(
            "t",
            SparseMatrix::identity(2),
            SparseMatrix::from_triplets(1, 2, [(0, 0, 1.0)]).unwrap(),
            vec![5.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        let sol = solve_splitting(&inst, &SolverConfig::default()).unwrap();
        assert!(close(&sol.x, &[0.0, 0.0], 1e-9));
        assert!(close(&sol.lam, &[0.0], 1e-9));
    }

    #[test]
    fn unbounded_lp_is_detected() {
        // min −x  s.t.  −x ≤ 0
        let inst = LcqpInstance::new(
            "t",
            SparseMatrix::zeros(1, 1),
            SparseMatrix::from_triplets(1, 1, [(0, 0, -1.0)]).unwrap(),
            vec![0.0],
            vec![-1.0],
        )
        .unwrap();
        assert!(matches!(solve_splitting(&inst, &SolverConfig::default()), Err(SolveError::Unbounded)));
    }

    #[test]
    fn infeasible_is_detected() {
        // x ≤ −1 and −x ≤ −1
        let inst = LcqpInstance::new(
            "t",
            SparseMatrix::identity(1),
            SparseMatrix::from_triplets(2, 1, [(0, 0, 1.0), (1, 0, -1.0)]).unwrap(),
            vec![-1.0, -1.0],
            vec![0.0],
        )
        .unwrap();
        assert!(matches!(solve_splitting(&inst, &SolverConfig::default()), Err(SolveError::Infeasible)));
    }

    #[test]
    fn indefinite_is_rejected() {
        let inst = LcqpInstance::new(
            "t",
            SparseMatrix::diagonal(&[1.0, -1.0]).unwrap(),
            SparseMatrix::zeros(0, 2),
            vec![],
            vec![0.0, 0.0],
        )
        .unwrap();
        assert!(matches!(solve_splitting(&inst, &SolverConfig::default()), Err(SolveError::NotConvex)));
    }

    #[test]
    fn iteration_budget_reports_unconverged() {
        let cfg = SolverConfig {
            max_iter: 1,
            ..SolverConfig::default()
        };
        match solve_splitting(&e1(), &cfg) {
            Err(SolveError::Unconverged { iterations, .. }) => assert_eq!(iterations, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let a = solve_splitting(&e2(), &SolverConfig::default()).unwrap();
        let b = solve_splitting(&e2(), &SolverConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
