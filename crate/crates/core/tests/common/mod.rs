#![allow(dead_code)]

use bnbtune::generators::rng;
use bnbtune::lp::{self, Constraint, Sense};
use bnbtune::milp::MilpInstance;
use rand::Rng;

/// Optimum over all binary assignments; continuous variables are optimised by LP.
pub fn brute_force_optimum(q: &MilpInstance) -> Option<f64> {
    let bins = q.binary_vars();
    let has_continuous = bins.len() < q.n();
    let mut best: Option<f64> = None;
    for mask in 0u64..(1u64 << bins.len()) {
        let mut a = q.root();
        for (k, &j) in bins.iter().enumerate() {
            a.values[j] = Some(mask >> k & 1 == 1);
        }
        let value = if has_continuous {
            let s = lp::solve(&q.relaxation(&a)).unwrap();
            s.is_optimal().then_some(s.objective)
        } else {
            let x: Vec<f64> = a.values.iter().map(|v| if v.unwrap() { 1.0 } else { 0.0 }).collect();
            q.rows
                .iter()
                .all(|r| r.sense.holds(r.lhs(&x), r.rhs, 1e-9))
                .then(|| q.objective.iter().zip(&x).map(|(c, v)| c * v).sum())
        };
        if let Some(v) = value {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

/// Random pure-binary instance with `n` variables and mixed row senses.
pub fn random_binary(n: usize, seed: u64) -> MilpInstance {
    let mut r = rng(seed);
    let obj: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(-4i32..=12))).collect();
    let m = r.gen_range(1..=3);
    let mut rows = Vec::new();
    for k in 0..m {
        let coeffs: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(0i32..=9))).collect();
        let total: f64 = coeffs.iter().sum();
        let (sense, rhs) = if k == 0 || r.gen_bool(0.7) {
            (Sense::Le, (total * r.gen_range(0.3..0.7)).floor())
        } else {
            (Sense::Ge, (total * r.gen_range(0.05..0.25)).floor())
        };
        rows.push(Constraint::new(coeffs, sense, rhs));
    }
    MilpInstance::pure_binary(obj, rows).unwrap()
}
