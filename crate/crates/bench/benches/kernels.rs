use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hilfer_core::*;

fn mittag_leffler(c: &mut Criterion) {
    let mut g = c.benchmark_group("mittag_leffler");
    for z in [0.5, 5.0, 40.0] {
        g.bench_with_input(BenchmarkId::new("ml1_mu0.6", z), &z, |b, &z| b.iter(|| ml1(0.6, black_box(z))));
    }
    let p = MLParams::new(0.8, 1.2).unwrap();
    g.bench_function("ml2_mu0.8_nu1.2_z1.5", |b| b.iter(|| ml2(p, black_box(1.5))));
    g.finish();
}

fn product_rule(c: &mut Criterion) {
    let mut g = c.benchmark_group("product_rule_new");
    g.sample_size(20);
    for n in [256, 1024] {
        let grid = PsiGrid::graded(PsiMap::builtin("exp").unwrap(), 0.0, 1.0, n, 2.0).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| ProductRule::new(grid.clone(), 0.5, 0.5).unwrap())
        });
    }
    g.finish();
}

fn picard(c: &mut Criterion) {
    let mut g = c.benchmark_group("picard_solve");
    g.sample_size(10);
    let p = ProblemSpec::without_operator(
        PsiMap::identity(),
        FracOrder::new(0.5, 0.5).unwrap(),
        0.0,
        1.0,
        1.0,
        RhsFunction::linear(0.8),
        4.0,
    )
    .unwrap();
    for n in [129, 513] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| picard_solve(&p, n, SolverOptions::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, mittag_leffler, product_rule, picard);
criterion_main!(benches);
