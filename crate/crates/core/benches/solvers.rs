//! Benchmarks for the parallel-sensitive solvers.
//!
//! Run with the default features for the rayon build and with
//! `--no-default-features` for the sequential build to compare:
//!
//! ```text
//! cargo bench -p clipped-convex
//! cargo bench -p clipped-convex --no-default-features
//! ```

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use clipped_convex::{
    solve_exhaustive, solve_relaxation, solve_relaxation_admm, AdmmConfig, AffineExpr,
    BaseObjective, ClippedTerm, ExhaustiveConfig, LossAtom, Problem, RelaxConfig,
};

/// Deterministic clipped regression instance: `m` square terms in `n`
/// variables with a small ridge. A simple multiplicative congruential
/// generator keeps the bench free of extra dependencies.
fn instance(n: usize, m: usize, seed: u64) -> Problem {
    let mut state = seed | 1;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let terms = (0..m)
        .map(|_| ClippedTerm {
            loss: LossAtom::Square,
            expr: AffineExpr::new((0..n).map(|_| next()).collect(), next()),
            weight: 1.0,
            alpha: 0.25,
        })
        .collect();
    Problem::new(
        n,
        BaseObjective {
            quad_terms: vec![],
            ridge: 0.1,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        },
        terms,
    )
    .unwrap()
}

fn bench_exhaustive(c: &mut Criterion) {
    let p = instance(4, 10, 7);
    c.bench_function("exhaustive_n4_m10", |b| {
        b.iter(|| solve_exhaustive(black_box(&p), &ExhaustiveConfig::default()).unwrap())
    });
}

fn bench_relaxation(c: &mut Criterion) {
    let p = instance(6, 24, 11);
    c.bench_function("relaxation_n6_m24", |b| {
        b.iter(|| solve_relaxation(black_box(&p), None, &RelaxConfig::default()).unwrap())
    });
}

fn bench_admm(c: &mut Criterion) {
    let p = instance(6, 24, 11);
    let cfg = AdmmConfig {
        max_iters: 50,
        ..AdmmConfig::default()
    };
    c.bench_function("admm_n6_m24", |b| {
        b.iter(|| solve_relaxation_admm(black_box(&p), &cfg).unwrap())
    });
}

criterion_group!(benches, bench_exhaustive, bench_relaxation, bench_admm);
criterion_main!(benches);
