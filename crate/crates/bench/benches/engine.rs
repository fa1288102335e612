use criterion::{black_box, criterion_group, criterion_main, Criterion};

use bnbtune::generators::{family_f, knapsack_example, FamilyParams};
use bnbtune::{enumerate_behaviors, lp, run, BnbConfig, Rule, ScoringSpec};

fn lp_knapsack(c: &mut Criterion) {
    let q = knapsack_example();
    let relax = q.relaxation(&q.root());
    c.bench_function("lp_solve_knapsack", |b| b.iter(|| lp::solve(black_box(&relax)).unwrap()));
}

fn bnb_family(c: &mut Criterion) {
    let q = family_f(&FamilyParams { n: 12, mu_star: 0.45, gamma: 1.0 }).unwrap();
    let spec = ScoringSpec::pair(Rule::MinChange, Rule::MaxChange, 0.9);
    c.bench_function("bnb_family_f12_big_regime", |b| {
        b.iter(|| run(black_box(&q), &spec, &BnbConfig::default()).unwrap())
    });
}

fn sweep_family(c: &mut Criterion) {
    let q = family_f(&FamilyParams { n: 10, mu_star: 0.45, gamma: 1.0 }).unwrap();
    c.bench_function("enumerate_family_f10", |b| {
        b.iter(|| enumerate_behaviors(black_box(&q), Rule::MinChange, Rule::MaxChange, &BnbConfig::default()).unwrap())
    });
}

criterion_group!(benches, lp_knapsack, bnb_family, sweep_family);
criterion_main!(benches);
