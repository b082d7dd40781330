//! Solution-free guess of which constraints are inactive.
//!
//! Each row is scored by its normalized slack at a probe point moved from the
//! origin along the steepest-descent direction of the linear term:
//! `hᵢ = (bᵢ − aᵢᵀp)/‖aᵢ‖` with `p = −t·c/‖c‖`. Rows that block descent get
//! small (often negative) scores; the highest scores are reported inactive.
//! With `step = None` the limit `t → ∞` is used, which orders rows by
//! `cos∠(aᵢ, c)` and then by `bᵢ/‖aᵢ‖`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::LcqpInstance;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Probe distance `t`; `None` takes the limit `t → ∞`.
    pub step: Option<f64>,
}

/// The number of rows reported inactive by default: `m − n`, clamped at 0.
pub fn default_k(inst: &LcqpInstance) -> usize {
    inst.m().saturating_sub(inst.n())
}

/// Lexicographic scores, larger meaning more likely inactive. Zero rows score
/// `(+∞, +∞)`.
pub fn heuristic_scores(inst: &LcqpInstance, cfg: &HeuristicConfig) -> Vec<(f64, f64)> {
    let m = inst.m();
    let c = inst.c();
    let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let row_norm = inst.a().row_norms();
    // aᵢᵀc for every row
    let ac = inst.a().mul_vec(c);
    (0..m)
        .map(|i| {
            let na = row_norm[i];
            if na == 0.0 {
                return (f64::INFINITY, f64::INFINITY);
            }
            let offset = inst.b()[i] / na;
            if c_norm == 0.0 {
                return (offset, 0.0);
            }
            let cos = ac[i] / (na * c_norm);
            match cfg.step {
                None => (cos, offset),
                Some(t) => (offset + t * cos, 0.0),
            }
        })
        .collect()
}

/// The `k` highest-scoring rows with the default configuration, sorted.
pub fn heuristic_inactive(inst: &LcqpInstance, k: usize) -> Result<Vec<usize>> {
    heuristic_inactive_with(inst, k, &HeuristicConfig::default())
}

/// The `k` highest-scoring rows, ties going to the smaller index; returned
/// in increasing index order.
pub fn heuristic_inactive_with(inst: &LcqpInstance, k: usize, cfg: &HeuristicConfig) -> Result<Vec<usize>> {
    if k > inst.m() {
        return Err(Error::InvalidInput(format!("k = {k} exceeds m = {}", inst.m())));
    }
    let scores = heuristic_scores(inst, cfg);
    let mut order: Vec<usize> = (0..inst.m()).collect();
    order.sort_by(|&i, &j| {
        scores[j]
            .0
            .total_cmp(&scores[i].0)
            .then(scores[j].1.total_cmp(&scores[i].1))
            .then(i.cmp(&j))
    });
    let mut top: Vec<usize> = order.into_iter().take(k).collect();
    top.sort_unstable();
    Ok(top)
}

/// `|gt ∩ heu| / |heu|`.
pub fn heuristic_accuracy(gt_inactive: &[usize], heu_inactive: &[usize]) -> Result<f64> {
    let heu: BTreeSet<usize> = heu_inactive.iter().copied().collect();
    if heu.is_empty() {
        return Err(Error::InvalidInput("heuristic set is empty".into()));
    }
    let gt: BTreeSet<usize> = gt_inactive.iter().copied().collect();
    Ok(gt.intersection(&heu).count() as f64 / heu.len() as f64)
}
