use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvkl::spectahedron::{self, FwConfig};
use mvkl::sylvester::{self, CgOptions};
use mvkl::OutputKernel;
use mvkl_bench::{instance, l_problem};
use nalgebra::DMatrix;

const LAMBDA: f64 = 1e-3;

fn sylvester_solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("sylvester");
    for &l in &[100usize, 300] {
        let inst = instance(l, 10, 5, 1);
        let shift = LAMBDA * l as f64;
        let k = inst.gs.materialize(&inst.eta).unwrap();
        let zero = DMatrix::zeros(l, 10);
        group.bench_with_input(BenchmarkId::new("eig", l), &l, |b, _| {
            b.iter(|| sylvester::solve_sylvester_eig(black_box(&k), &inst.l_out, shift, &inst.y).unwrap())
        });
        for eps in [1e-2, 1e-6] {
            let opts = CgOptions {
                eps,
                ..CgOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(format!("cg_eps={eps:e}"), l), &l, |b, _| {
                b.iter(|| sylvester::solve_sylvester_cg(&inst.gs, &inst.eta, &inst.l_out, shift, black_box(&inst.y), &zero, opts).unwrap())
            });
        }
    }
    group.finish();
}

fn weighted_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("weighted_apply");
    for &m in &[1usize, 8] {
        let inst = instance(300, 10, m, 2);
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| inst.gs.weighted_apply(&inst.eta, black_box(&inst.y)).unwrap())
        });
    }
    group.finish();
}

fn frank_wolfe(c: &mut Criterion) {
    let mut group = c.benchmark_group("frank_wolfe");
    let inst = instance(200, 20, 4, 3);
    let shift = LAMBDA * 200.0;
    let coef = sylvester::solve_sylvester_eig(&inst.gs.materialize(&inst.eta).unwrap(), &inst.l_out, shift, &inst.y).unwrap();
    let q = l_problem(&inst, &coef, LAMBDA);
    let start = OutputKernel::scaled_identity(20, 20.0).unwrap();
    for &iters in &[10usize, 100] {
        let cfg = FwConfig {
            max_iter: iters,
            curvature: spectahedron::default_curvature(20.0, inst.gs.max_top_eigenvalue()),
            ..FwConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("sdp_iter", iters), &iters, |b, _| {
            b.iter(|| spectahedron::solve_l_quadratic(black_box(&q), 20.0, &start, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sylvester_solvers, weighted_apply, frank_wolfe);
criterion_main!(benches);
