//! Random composition of transforms with per-op strengths.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::heuristic::{heuristic_inactive, default_k};
use super::ops::*;
use super::{SparseWeights, TransformRecord, Transformed};
use crate::error::{Error, Result};
use crate::instance::{LcqpInstance, ProblemKind, Solution};
use crate::kkt::{psd_certificate, Definiteness, ACTIVE_TOL, PSD_TOL};
use crate::rng::{derive_rng, derive_u64, Rng};

/// Variables with `|xⱼ| ≤ IDLE_TOL·(1 + ‖x‖∞)` may be dropped.
const IDLE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    DropVars,
    DropCons,
    DropConsHeuristic,
    ScaleCons,
    ScaleVars,
    AddCons,
    AddVars,
}

impl OpKind {
    /// All ops in application order.
    pub const CATALOG: [OpKind; 7] = [
        OpKind::DropVars,
        OpKind::DropCons,
        OpKind::DropConsHeuristic,
        OpKind::ScaleCons,
        OpKind::ScaleVars,
        OpKind::AddCons,
        OpKind::AddVars,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::DropVars => "drop-vars",
            OpKind::DropCons => "drop-cons",
            OpKind::DropConsHeuristic => "drop-cons-heuristic",
            OpKind::ScaleCons => "scale-cons",
            OpKind::ScaleVars => "scale-vars",
            OpKind::AddCons => "add-cons",
            OpKind::AddVars => "add-vars",
        }
    }

    /// Ops that can only be applied when an optimal solution is known.
    pub fn needs_solution(self) -> bool {
        matches!(self, OpKind::DropVars | OpKind::DropCons)
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OpKind::CATALOG
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown op `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentPolicy {
    pub strengths: BTreeMap<OpKind, f64>,
    pub ops_per_instance: usize,
    /// Scale each strength by `ε ~ U(0, 1)` before use.
    pub interpolate: bool,
    pub seed: u64,
}

impl AugmentPolicy {
    /// No ops; two per instance; interpolation on.
    pub fn new(seed: u64) -> Self {
        AugmentPolicy {
            strengths: BTreeMap::new(),
            ops_per_instance: 2,
            interpolate: true,
            seed,
        }
    }

    pub fn with(mut self, op: OpKind, strength: f64) -> Self {
        self.strengths.insert(op, strength);
        self
    }

    /// Parses `name:strength,name:strength`. `none` and the empty string
    /// give no ops.
    pub fn parse_ops(text: &str) -> Result<BTreeMap<OpKind, f64>> {
        let mut out = BTreeMap::new();
        let text = text.trim();
        if text.is_empty() || text == "none" {
            return Ok(out);
        }
        for part in text.split(',') {
            let (name, value) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidInput(format!("expected name:strength, got `{part}`")))?;
            let op: OpKind = name.trim().parse()?;
            let s: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad strength `{value}` for {op}")))?;
            out.insert(op, s);
        }
        Ok(out)
    }

    /// One op at its default single-augmentation strength.
    pub fn single(op: OpKind, kind: ProblemKind, seed: u64) -> Self {
        let s = match (op, kind) {
            (OpKind::DropVars | OpKind::DropCons, _) => 0.99,
            (OpKind::ScaleCons | OpKind::ScaleVars, _) => 1.0,
            (OpKind::AddCons, _) => 0.5,
            (OpKind::AddVars, ProblemKind::Lp) => 0.8,
            (OpKind::AddVars, ProblemKind::Qp) => 0.6,
            (OpKind::DropConsHeuristic, ProblemKind::Lp) => 0.05,
            (OpKind::DropConsHeuristic, ProblemKind::Qp) => 0.07,
        };
        AugmentPolicy {
            ops_per_instance: 1,
            ..AugmentPolicy::new(seed).with(op, s)
        }
    }

    /// Default strengths for two-op combinations.
    pub fn combo(seed: u64) -> Self {
        AugmentPolicy::new(seed)
            .with(OpKind::DropCons, 0.5)
            .with(OpKind::ScaleCons, 0.5)
            .with(OpKind::ScaleVars, 0.5)
            .with(OpKind::AddCons, 0.6)
    }

    /// Fixed strengths for contrastive views; every op is solution-free.
    pub fn contrastive(kind: ProblemKind, seed: u64) -> Self {
        let (dc, sc, sv, ac, av) = match kind {
            ProblemKind::Lp => (0.05, 0.40, 1.07, 0.36, 0.46),
            ProblemKind::Qp => (0.07, 1.03, 0.65, 0.33, 0.26),
        };
        AugmentPolicy {
            interpolate: false,
            ..AugmentPolicy::new(seed)
                .with(OpKind::DropConsHeuristic, dc)
                .with(OpKind::ScaleCons, sc)
                .with(OpKind::ScaleVars, sv)
                .with(OpKind::AddCons, ac)
                .with(OpKind::AddVars, av)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (op, &s) in &self.strengths {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidInput(format!("strength {s} for {op} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// True when every op with positive strength works without a solution.
    pub fn solution_free(&self) -> bool {
        self.strengths.iter().all(|(op, &s)| s == 0.0 || !op.needs_solution())
    }
}

#[derive(Clone, Debug)]
pub struct PolicyOutput {
    pub instance: LcqpInstance,
    pub solution: Option<Solution>,
    pub records: Vec<TransformRecord>,
    /// Ops that were sampled, in application order, with the strength used.
    pub applied: Vec<(OpKind, f64)>,
}

/// Samples `ops_per_instance` ops without replacement with probability
/// proportional to strength and applies them in catalog order.
pub fn apply_policy(inst: &LcqpInstance, sol: Option<&Solution>, policy: &AugmentPolicy) -> Result<PolicyOutput> {
    policy.validate()?;
    if sol.is_none() {
        if let Some((op, _)) = policy.strengths.iter().find(|(op, &s)| s > 0.0 && op.needs_solution()) {
            return Err(Error::SolutionRequired { op: op.name().into() });
        }
    }
    let mut pool: Vec<(OpKind, f64)> = OpKind::CATALOG
        .into_iter()
        .filter_map(|op| policy.strengths.get(&op).map(|&s| (op, s)))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    let mut sel = derive_rng(policy.seed, 0, "select");
    let mut chosen = Vec::new();
    while chosen.len() < policy.ops_per_instance && !pool.is_empty() {
        let total: f64 = pool.iter().map(|p| p.1).sum();
        let mut u = sel.random::<f64>() * total;
        let mut pick = pool.len() - 1;
        for (k, p) in pool.iter().enumerate() {
            if u < p.1 {
                pick = k;
                break;
            }
            u -= p.1;
        }
        chosen.push(pool.remove(pick));
    }
    chosen.sort_by_key(|p| p.0);

    let mut cur = inst.clone();
    let mut cur_sol = sol.cloned();
    let mut records = Vec::new();
    let mut applied = Vec::new();
    for (op, strength) in chosen {
        let mut rng = derive_rng(policy.seed, 0, op.name());
        let s = if policy.interpolate {
            strength * rng.random::<f64>()
        } else {
            strength
        };
        let child = derive_u64(policy.seed, 1, op.name());
        for t in apply_one(&cur, cur_sol.as_ref(), op, s, &mut rng, child)? {
            cur = t.instance;
            cur_sol = t.solution;
            records.push(t.record);
        }
        applied.push((op, s));
    }
    Ok(PolicyOutput {
        instance: cur,
        solution: cur_sol,
        records,
        applied,
    })
}

fn required(sol: Option<&Solution>, op: OpKind) -> Result<&Solution> {
    sol.ok_or_else(|| Error::SolutionRequired { op: op.name().into() })
}

fn log_uniform_scales(rng: &mut Rng, len: usize, s: f64) -> Vec<f64> {
    (0..len).map(|_| ((2.0 * rng.random::<f64>() - 1.0) * s).exp()).collect()
}

fn apply_one(
    inst: &LcqpInstance,
    sol: Option<&Solution>,
    op: OpKind,
    s: f64,
    rng: &mut Rng,
    child: u64,
) -> Result<Vec<Transformed>> {
    let n = inst.n();
    let m = inst.m();
    let drop_fraction = |rng: &mut Rng| (rng.random::<f64>() * s).min(1.0);
    Ok(vec![match op {
        OpKind::DropVars => {
            let f = drop_fraction(rng);
            remove_idle_variables_sampled(inst, required(sol, op)?, IDLE_TOL, f, child)?
        }
        OpKind::DropCons => {
            let f = drop_fraction(rng);
            remove_inactive_constraints(inst, required(sol, op)?, ACTIVE_TOL, f, child)?
        }
        OpKind::DropConsHeuristic => {
            let f = drop_fraction(rng);
            let cand = heuristic_inactive(inst, default_k(inst))?;
            drop_constraints_heuristic(inst, sol, &cand, f, child)?
        }
        OpKind::ScaleCons => scale_constraints(inst, sol, &log_uniform_scales(rng, m, s))?,
        OpKind::ScaleVars => scale_variables(inst, sol, &log_uniform_scales(rng, n, s))?,
        OpKind::AddCons => {
            let count = (s * m as f64).floor() as usize;
            if count == 0 {
                return Ok(vec![]);
            }
            let per = m.min(3);
            let weights: Vec<SparseWeights> = (0..count)
                .map(|_| {
                    let mut rows = sample(rng, m, per).into_vec();
                    rows.sort_unstable();
                    let raw: Vec<f64> = (0..per).map(|_| 1.0 - rng.random::<f64>()).collect();
                    let total: f64 = raw.iter().sum();
                    rows.into_iter().zip(raw).map(|(i, w)| (i, w / total)).collect()
                })
                .collect();
            add_constraints(inst, sol, &weights)?
        }
        OpKind::AddVars => {
            let count = (s * n as f64).floor() as usize;
            if count == 0 || n == 0 {
                return Ok(vec![]);
            }
            let pd = inst.kind() == ProblemKind::Lp
                || psd_certificate(inst.q(), PSD_TOL)? == Definiteness::PositiveDefinite;
            if pd {
                let per = n.min(3);
                let q: Vec<Vec<f64>> = (0..count)
                    .map(|_| {
                        let mut v = vec![0.0; n];
                        for j in sample(rng, n, per) {
                            v[j] = rng.sample(StandardNormal);
                        }
                        v
                    })
                    .collect();
                add_variables_many(inst, sol, &q, None)?
            } else {
                return add_bounded_variables(inst, sol, count, rng);
            }
        }
    }])
}

/// Fallback for singular quadratic terms: chain of bounded variables.
fn add_bounded_variables(inst: &LcqpInstance, sol: Option<&Solution>, count: usize, rng: &mut Rng) -> Result<Vec<Transformed>> {
    let n = inst.n().max(1) as f64;
    let trace: f64 = inst.q().diag().iter().sum();
    let q_diag = if trace > 0.0 { trace / n } else { 1.0 };
    let a_scale = {
        let nnz = inst.a().nnz();
        if nnz == 0 {
            1.0
        } else {
            inst.a().entries().iter().map(|e| e.2.abs()).sum::<f64>() / nnz as f64
        }
    };
    let c_scale = {
        let s = inst.c().iter().map(|v| v.abs()).sum::<f64>() / n;
        if s > 0.0 {
            s
        } else {
            1.0
        }
    };
    let mut cur = inst.clone();
    let mut cur_sol = sol.cloned();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let m = cur.m();
        let mut a_col = vec![0.0; m];
        if m > 0 {
            for i in sample(rng, m, m.min(3)) {
                a_col[i] = -a_scale * rng.sample::<f64, _>(StandardNormal).abs();
            }
        }
        let c_new = -c_scale * rng.sample::<f64, _>(StandardNormal).abs();
        let t = add_variable_constrained(&cur, cur_sol.as_ref(), q_diag, &a_col, c_new)?;
        cur = t.instance.clone();
        cur_sol = t.solution.clone();
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::*;
    use crate::io::to_json;
    use crate::kkt::kkt_residuals;

    #[test]
    fn zero_strengths_are_identity() {
        let p = AugmentPolicy::new(1).with(OpKind::ScaleVars, 0.0).with(OpKind::AddCons, 0.0);
        let out = apply_policy(&e1(), Some(&e1_solution()), &p).unwrap();
        assert!(out.instance.same_data(&e1()));
        assert!(out.records.is_empty());
        assert_eq!(out.solution.unwrap(), e1_solution());
    }

    #[test]
    fn combo_preset_matches_table() {
        let p = AugmentPolicy::combo(0);
        let got: Vec<(&str, f64)> = p.strengths.iter().map(|(k, &v)| (k.name(), v)).collect();
        assert_eq!(
            got,
            vec![("drop-cons", 0.5), ("scale-cons", 0.5), ("scale-vars", 0.5), ("add-cons", 0.6)]
        );
        assert_eq!(p.ops_per_instance, 2);
    }

    #[test]
    fn deterministic_and_kkt_preserving() {
        let p = AugmentPolicy::combo(42);
        let a = apply_policy(&e1(), Some(&e1_solution()), &p).unwrap();
        let b = apply_policy(&e1(), Some(&e1_solution()), &p).unwrap();
        assert_eq!(
            to_json(&a.instance, a.solution.as_ref()).unwrap(),
            to_json(&b.instance, b.solution.as_ref()).unwrap()
        );
        assert_eq!(a.applied.len(), 2);
        let r = kkt_residuals(&a.instance, a.solution.as_ref().unwrap(), false).unwrap();
        assert!(r.within(1e-9), "{r:?}");
    }

    #[test]
    fn solution_dependent_op_needs_label() {
        let p = AugmentPolicy::new(0).with(OpKind::DropVars, 0.5);
        match apply_policy(&e1(), None, &p) {
            Err(Error::SolutionRequired { op }) => assert_eq!(op, "drop-vars"),
            other => panic!("{other:?}"),
        }
        assert!(!p.solution_free());
        assert!(AugmentPolicy::contrastive(ProblemKind::Qp, 0).solution_free());
    }

    #[test]
    fn parse_ops_strings() {
        let m = AugmentPolicy::parse_ops("scale-vars:0.5, add-cons:1").unwrap();
        assert_eq!(m[&OpKind::ScaleVars], 0.5);
        assert_eq!(m[&OpKind::AddCons], 1.0);
        assert!(AugmentPolicy::parse_ops("none").unwrap().is_empty());
        assert!(AugmentPolicy::parse_ops("bogus:1").is_err());
        assert!(AugmentPolicy::parse_ops("scale-vars").is_err());
    }

    #[test]
    fn every_single_op_keeps_e1_label_valid() {
        for op in OpKind::CATALOG {
            let mut p = AugmentPolicy::single(op, ProblemKind::Qp, 5);
            p.interpolate = false;
            let out = apply_policy(&e1(), Some(&e1_solution()), &p).unwrap();
            if let Some(s) = &out.solution {
                let r = kkt_residuals(&out.instance, s, false).unwrap();
                assert!(r.within(1e-9), "{op}: {r:?}");
            }
        }
    }
}
