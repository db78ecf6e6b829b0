use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nlpme_bench::{gaussian, grid};
use nlpme_core::fracops::{apply_frac_laplacian, regularized_symbol_value, FracOperator, FracOperatorSpec};
use nlpme_core::{transform, NonlinearitySpec, SolverConfig, Stepper, SymbolMode};

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    for (dim, n) in [(1, 1024), (2, 128)] {
        let g = grid(dim, n);
        let u = gaussian(&g);
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), n), &u, |b, u| b.iter(|| transform(black_box(u))));
    }
    group.finish();
}

fn operators(c: &mut Criterion) {
    let g = grid(1, 1024);
    let u = gaussian(&g);
    c.bench_function("frac_laplacian_1d_1024", |b| b.iter(|| apply_frac_laplacian(black_box(&u), 0.5).unwrap()));
    c.bench_function("regularized_symbol_value", |b| b.iter(|| regularized_symbol_value(black_box(3.7), 0.4, 0.1)));
    c.bench_function("regularized_table_1d_256", |b| {
        let g = grid(1, 256);
        b.iter(|| FracOperator::new(&g, FracOperatorSpec::new(1, 0.4, 0.1, SymbolMode::RegularizedSymbol).unwrap()).unwrap())
    });
}

fn steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("explicit_step");
    for (dim, n) in [(1, 512), (2, 64)] {
        let g = grid(dim, n);
        let u = gaussian(&g);
        let st = Stepper::new(&g, &SolverConfig::direct(0.5, NonlinearitySpec::power(2.0).unwrap(), 1.0)).unwrap();
        let dt = st.cfl_dt(&u).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), n), &u, |b, u| {
            b.iter(|| st.explicit_step(black_box(u), dt).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, transforms, operators, steps);
criterion_main!(benches);
