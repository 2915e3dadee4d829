use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use canopy_bench::blocky_network;
use canopy_core::game::{leontief_bundle, nonneg_equilibrium_with, GameParams, PriceProfile};
use canopy_core::solver_componentwise::{solve_ptilde, ProblemPtilde};
use canopy_core::solver_p::{solve_p, ProblemP, SolveOpts};

fn params() -> GameParams {
    GameParams::new(0.2, 0.1, 0.01).unwrap()
}

fn bench_bundle(c: &mut Criterion) {
    let mut group = c.benchmark_group("leontief_bundle");
    for &n_blocks in &[2usize, 10] {
        let g = blocky_network(n_blocks, 19, 10, 42);
        let p_b0 = vec![1.0; g.n()];
        group.bench_with_input(BenchmarkId::from_parameter(g.n()), &g, |b, g| {
            b.iter(|| leontief_bundle(black_box(g), &params(), &p_b0).unwrap())
        });
    }
    group.finish();
}

fn bench_equilibrium(c: &mut Criterion) {
    let g = blocky_network(10, 19, 10, 42);
    let p_b0 = vec![1.0; g.n()];
    let bundle = leontief_bundle(&g, &params(), &p_b0).unwrap();
    let interior = PriceProfile::uniform(g.n(), 1.0, 1.0).unwrap();
    let mixed = {
        let mut p_a = vec![1.0; g.n()];
        for (i, v) in p_a.iter_mut().enumerate() {
            if i % 7 == 0 {
                *v = bundle.p_lim[i] * 1.3;
            }
        }
        PriceProfile::new(p_a, p_b0.clone()).unwrap()
    };
    let mut group = c.benchmark_group("nonneg_equilibrium_190");
    group.bench_function("interior", |b| {
        b.iter(|| nonneg_equilibrium_with(black_box(&bundle), &interior, None).unwrap())
    });
    group.bench_function("mixed_pinned_set", |b| {
        b.iter(|| nonneg_equilibrium_with(black_box(&bundle), &mixed, None).unwrap())
    });
    group.finish();
}

fn bench_solvers(c: &mut Criterion) {
    let g = blocky_network(10, 19, 10, 42);
    let n = g.n();
    let problem = ProblemP {
        p_a0: vec![0.97; n],
        p_max: vec![1.05; n],
        p_b0: vec![1.0; n],
        tau_b: 1e6,
    };
    c.bench_function("solve_p_closed_form_190", |b| {
        b.iter(|| solve_p(black_box(&g), &params(), &problem, &SolveOpts::default()).unwrap())
    });
    let ptilde = ProblemPtilde {
        p_a0: vec![0.97; n],
        p_b0: vec![1.0; n],
        p_max: vec![1.05; 10],
        tau_b: 1e6,
    };
    c.bench_function("solve_ptilde_10_components", |b| {
        b.iter(|| solve_ptilde(black_box(&g), &params(), &ptilde).unwrap())
    });
}

criterion_group!(benches, bench_bundle, bench_equilibrium, bench_solvers);
criterion_main!(benches);
