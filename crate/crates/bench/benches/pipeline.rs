use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use mwg::{assemble_problem, dorfler_mark, estimate, example_2, solve_vi};
use mwg_bench::mesh_with_at_least;

fn bench_pipeline(c: &mut Criterion) {
    let prob = example_2();
    let mesh = mesh_with_at_least(&prob, 4000);
    let sys = assemble_problem(&mesh, &prob);
    let sol = solve_vi(&sys, None).expect("solve");
    let bd = estimate(
        &mesh,
        prob.f.as_ref(),
        prob.psi.as_ref(),
        prob.grad_psi.as_ref(),
        prob.dirichlet.as_deref(),
        &sol,
    );
    let marked = dorfler_mark(&bd.local, 0.4);

    let mut group = c.benchmark_group("pipeline");
    group.sample_size(20);
    group.bench_function("assemble", |b| {
        b.iter(|| black_box(assemble_problem(black_box(&mesh), &prob)))
    });
    group.bench_function("solve_cold", |b| {
        b.iter(|| black_box(solve_vi(&sys, None).expect("solve")))
    });
    group.bench_function("solve_warm", |b| {
        b.iter(|| {
            black_box(solve_vi(&sys, Some(&sol.active)).expect("solve"))
        })
    });
    group.bench_function("estimate", |b| {
        b.iter(|| {
            black_box(estimate(
                black_box(&mesh),
                prob.f.as_ref(),
                prob.psi.as_ref(),
                prob.grad_psi.as_ref(),
                prob.dirichlet.as_deref(),
                &sol,
            ))
        })
    });
    group.bench_function("bisect", |b| {
        b.iter(|| black_box(mesh.bisect(black_box(&marked)).expect("refine")))
    });
    group.finish();
}

criterion_group!(benches, bench_pipeline);
criterion_main!(benches);
