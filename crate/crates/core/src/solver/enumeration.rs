use nalgebra::DVector;

use super::linsys::{kkt_matrix, kkt_rhs, solve_min_norm};
use super::SolveError;
use crate::instance::{LcqpInstance, ProblemKind, Solution};
use crate::kkt::{psd_certificate, Definiteness};

pub const MAX_ENUM_ROWS: usize = 20;
pub const MAX_ENUM_COLS: usize = 10;

const RESID_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-9;
const SAME_X_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct EnumerationOutput {
    pub solution: Solution,
    /// Rows of the winning candidate, sorted.
    pub active_set: Vec<usize>,
    pub candidates_checked: usize,
    /// Number of KKT points found within the tie tolerance of the optimum.
    pub optimal_count: usize,
    /// False when two optimal candidates have different `x`.
    pub unique: bool,
}

pub fn solve_enumeration(inst: &LcqpInstance) -> Result<Solution, SolveError> {
    solve_enumeration_detailed(inst).map(|o| o.solution)
}

/// Tries every active set `S` with `|S| ≤ min(n, m)` in lexicographic order,
/// solving the equality KKT system in the minimum-norm least-squares sense.
/// A candidate is kept when the system is consistent, `x` is feasible and
/// `λ_S ≥ 0`. Among candidates whose objectives tie, the lexicographically
/// smallest active set wins.
pub fn solve_enumeration_detailed(inst: &LcqpInstance) -> Result<EnumerationOutput, SolveError> {
    let n = inst.n();
    let m = inst.m();
    if m > MAX_ENUM_ROWS || n > MAX_ENUM_COLS {
        return Err(SolveError::TooLarge { m, n });
    }
    if inst.kind() == ProblemKind::Qp {
        let tol = 1e-9 * inst.q().max_abs().max(1.0);
        if psd_certificate(inst.q(), tol).map_err(|_| SolveError::NotConvex)? == Definiteness::Indefinite {
            return Err(SolveError::NotConvex);
        }
    }
    let q = inst.q().to_dense();
    let a = inst.a().to_dense();
    let b = inst.b();

    let mut state = Search {
        best: None,
        optimal: Vec::new(),
        checked: 0,
    };
    let mut stack: Vec<usize> = Vec::new();
    let max_size = n.min(m);
    // DFS in lexicographic order: {}, {0}, {0,1}, ..., {0,2}, ..., {1}, ...
    loop {
        state.checked += 1;
        let kkt = kkt_matrix(&q, &a, &stack);
        let rhs = kkt_rhs(inst.c(), b, &stack);
        if let Some((z, resid)) = solve_min_norm(kkt, &rhs) {
            if resid <= RESID_TOL {
                consider(inst, &a, &stack, &z, &mut state);
            }
        }
        // advance to the next subset
        let next_start = stack.last().map_or(0, |&l| l + 1);
        if stack.len() < max_size && next_start < m {
            stack.push(next_start);
            continue;
        }
        loop {
            match stack.pop() {
                None => break,
                Some(last) if last + 1 < m => {
                    stack.push(last + 1);
                    break;
                }
                Some(_) => {}
            }
        }
        if stack.is_empty() {
            break;
        }
    }

    let (active_set, solution) = state.best.ok_or(SolveError::InfeasibleOrUnbounded)?;
    let obj = solution.objective;
    let tie = TIE_TOL * (1.0 + obj.abs());
    let optimal: Vec<&Vec<f64>> = state
        .optimal
        .iter()
        .filter(|(o, _)| (o - obj).abs() <= tie)
        .map(|(_, x)| x)
        .collect();
    let unique = optimal.iter().all(|x| {
        x.iter()
            .zip(&solution.x)
            .all(|(p, q)| (p - q).abs() <= SAME_X_TOL * (1.0 + q.abs()))
    });
    Ok(EnumerationOutput {
        optimal_count: optimal.len(),
        unique,
        active_set,
        solution,
        candidates_checked: state.checked,
    })
}

struct Search {
    best: Option<(Vec<usize>, Solution)>,
    /// Objective and x of every accepted candidate.
    optimal: Vec<(f64, Vec<f64>)>,
    checked: usize,
}

fn consider(inst: &LcqpInstance, a: &nalgebra::DMatrix<f64>, set: &[usize], z: &DVector<f64>, state: &mut Search) {
    let n = inst.n();
    let b = inst.b();
    let x: Vec<f64> = z.rows(0, n).iter().copied().collect();
    let ax = a * DVector::from_column_slice(&x);
    if (0..inst.m()).any(|i| ax[i] - b[i] > FEAS_TOL * (1.0 + b[i].abs())) {
        return;
    }
    let lam_s = z.rows(n, set.len());
    let scale = 1.0 + if lam_s.is_empty() { 0.0 } else { lam_s.amax() };
    if lam_s.iter().any(|&l| l < -FEAS_TOL * scale) {
        return;
    }
    let mut lam = vec![0.0; inst.m()];
    for (k, &i) in set.iter().enumerate() {
        lam[i] = lam_s[k].max(0.0);
    }
    let Ok(sol) = Solution::new(inst, x, lam) else {
        return;
    };
    state.optimal.push((sol.objective, sol.x.clone()));
    let better = match &state.best {
        None => true,
        Some((_, cur)) => sol.objective < cur.objective - TIE_TOL * (1.0 + cur.objective.abs()),
    };
    if better {
        state.best = Some((set.to_vec(), sol));
    }
}
