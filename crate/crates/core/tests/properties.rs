mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{arbitrary_solution, rel_diff, small_instance};
use qpaug::dataset::{assign_splits, Split};
use qpaug::io::{from_json, to_json};
use qpaug::solver::solve_enumeration;
use qpaug::transforms::{
    apply_policy, heuristic_accuracy, heuristic_inactive, replay, AugmentPolicy, OpKind,
};
use qpaug::{kkt_residuals, ProblemKind};

fn instance_case() -> impl Strategy<Value = (bool, usize, usize, u64)> {
    (any::<bool>(), 1usize..=6, 1usize..=4, any::<u64>())
}

fn strengths() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], OpKind::CATALOG.len())
}

fn policy(s: &[f64], ops: usize, seed: u64) -> AugmentPolicy {
    let p = OpKind::CATALOG
        .into_iter()
        .zip(s)
        .fold(AugmentPolicy::new(seed), |p, (op, &v)| p.with(op, v));
    AugmentPolicy {
        ops_per_instance: ops,
        ..p
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_policies_keep_labels_optimal(
        (lp, m, n, seed) in instance_case(),
        s in strengths(),
        ops in 1usize..=3,
        pseed in any::<u64>(),
    ) {
        let inst = small_instance(lp, m, n, seed);
        let Ok(sol) = solve_enumeration(&inst) else { return Ok(()) };
        let out = apply_policy(&inst, Some(&sol), &policy(&s, ops, pseed)).unwrap();
        if let Some(mapped) = &out.solution {
            let r = kkt_residuals(&out.instance, mapped, true).unwrap();
            prop_assert!(r.within(1e-8), "{:?} after {:?}", r, out.applied);
        }
    }

    #[test]
    fn recorded_provenance_replays_exactly(
        (lp, m, n, seed) in instance_case(),
        s in strengths(),
        pseed in any::<u64>(),
    ) {
        let inst = small_instance(lp, m, n, seed);
        let Ok(sol) = solve_enumeration(&inst) else { return Ok(()) };
        let out = apply_policy(&inst, Some(&sol), &policy(&s, 3, pseed)).unwrap();
        let mut cur = inst.clone();
        for rec in &out.records {
            cur = replay(&cur, rec).unwrap();
        }
        prop_assert!(cur.same_data(&out.instance));
    }

    #[test]
    fn same_seed_same_augmentation(
        (lp, m, n, seed) in instance_case(),
        s in strengths(),
        pseed in any::<u64>(),
    ) {
        let inst = small_instance(lp, m, n, seed);
        let sol = solve_enumeration(&inst).ok();
        let p = policy(&s, 2, pseed);
        let p = if sol.is_none() {
            AugmentPolicy { strengths: p.strengths.into_iter().filter(|(op, _)| !op.needs_solution()).collect(), ..p }
        } else {
            p
        };
        let a = apply_policy(&inst, sol.as_ref(), &p).unwrap();
        let b = apply_policy(&inst, sol.as_ref(), &p).unwrap();
        prop_assert_eq!(to_json(&a.instance, a.solution.as_ref()).unwrap(), to_json(&b.instance, b.solution.as_ref()).unwrap());
    }

    #[test]
    fn solution_free_views_never_consult_labels(
        (lp, m, n, seed) in instance_case(),
        pseed in any::<u64>(),
    ) {
        let inst = small_instance(lp, m, n, seed);
        let kind = if lp { ProblemKind::Lp } else { ProblemKind::Qp };
        let p = AugmentPolicy::contrastive(kind, pseed);
        let unlabeled = apply_policy(&inst, None, &p).unwrap();
        let sol = arbitrary_solution(&inst, seed);
        let labeled = apply_policy(&inst, Some(&sol), &p).unwrap();
        prop_assert!(unlabeled.solution.is_none());
        prop_assert!(unlabeled.instance.same_data(&labeled.instance));
    }

    #[test]
    fn json_round_trip_is_bit_exact((lp, m, n, seed) in instance_case(), labeled in any::<bool>()) {
        let inst = small_instance(lp, m, n, seed);
        let sol = labeled.then(|| arbitrary_solution(&inst, seed));
        let text = to_json(&inst, sol.as_ref()).unwrap();
        let back = from_json(&text).unwrap();
        prop_assert!(back.instance.same_data(&inst));
        prop_assert_eq!(&back.solution, &sol);
        prop_assert_eq!(to_json(&back.instance, back.solution.as_ref()).unwrap(), text);
    }

    #[test]
    fn relabeling_keeps_the_optimal_value((lp, m, n, seed) in instance_case(), pseed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let inst = small_instance(lp, m, n, seed);
        let Ok(sol) = solve_enumeration(&inst) else { return Ok(()) };
        let mut rng = qpaug::rng::derive_rng(pseed, 0, "relabel");
        let mut vp: Vec<usize> = (0..inst.n()).collect();
        let mut cp: Vec<usize> = (0..inst.m()).collect();
        vp.shuffle(&mut rng);
        cp.shuffle(&mut rng);
        let other = solve_enumeration(&inst.permuted(&vp, &cp).unwrap()).unwrap();
        prop_assert!(rel_diff(sol.objective, other.objective) <= 1e-9);
    }

    #[test]
    fn heuristic_returns_k_distinct_rows((lp, m, n, seed) in instance_case(), k in 0usize..12) {
        let inst = small_instance(lp, m, n, seed);
        let k = k.min(inst.m());
        let rows = heuristic_inactive(&inst, k).unwrap();
        prop_assert_eq!(rows.len(), k);
        prop_assert_eq!(rows.iter().collect::<BTreeSet<_>>().len(), k);
        prop_assert!(rows.iter().all(|&i| i < inst.m()));
        if k > 0 {
            let acc = heuristic_accuracy(&rows[..k / 2], &rows).unwrap();
            prop_assert!((0.0..=1.0).contains(&acc));
        }
    }

    #[test]
    fn split_sizes_and_determinism(count in 0usize..300, seed in any::<u64>()) {
        let s = assign_splits(count, seed);
        prop_assert_eq!(s.len(), count);
        prop_assert_eq!(&s, &assign_splits(count, seed));
        let train = s.iter().filter(|x| **x == Split::Train).count();
        let val = s.iter().filter(|x| **x == Split::Val).count();
        prop_assert_eq!(train, (0.8 * count as f64).round() as usize);
        prop_assert_eq!(val, ((0.1 * count as f64).round() as usize).min(count - train));
    }
}
