#![allow(dead_code)]

use rand::Rng as _;

use qpaug::generators::{gen_lp_with, gen_qp_with, BoundRows};
use qpaug::rng::derive_rng;
use qpaug::{LcqpInstance, Solution};

/// Small generated instance: an LP with box rows or a QP with no bound rows.
pub fn small_instance(lp: bool, m: usize, n: usize, seed: u64) -> LcqpInstance {
    if lp {
        gen_lp_with(m, n, 0.6, BoundRows::Box, seed).unwrap()
    } else {
        gen_qp_with(m, n, 0.6, 0.6, BoundRows::None, seed).unwrap()
    }
}

/// An arbitrary (not optimal) primal/dual pair with every `|xⱼ| ≥ 0.1` and
/// `λ ≥ 0`.
pub fn arbitrary_solution(inst: &LcqpInstance, seed: u64) -> Solution {
    let mut rng = derive_rng(seed, 0, "test-solution");
    let x = (0..inst.n())
        .map(|_| {
            let v: f64 = rng.random_range(0.1..2.0);
            if rng.random::<bool>() {
                v
            } else {
                -v
            }
        })
        .collect();
    let lam = (0..inst.m()).map(|_| rng.random_range(0.0..2.0)).collect();
    Solution::new(inst, x, lam).unwrap()
}

/// Positive factors `exp(U(−s, s))`.
pub fn log_uniform(len: usize, s: f64, seed: u64) -> Vec<f64> {
    let mut rng = derive_rng(seed, 0, "test-scales");
    (0..len).map(|_| rng.random_range(-s..=s).exp()).collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
