use criterion::{black_box, criterion_group, criterion_main, Criterion};

use wickstd::chaos::Evaluator;
use wickstd::quadrature::{hermite_rule, integrate_mu, QuadratureGrid};
use wickstd::standardize::{example_density, standardize, StandardizeOptions};
use wickstd::tensor::{CmVector, SymmetricTensor};
use wickstd::verify::{sample_density, SampleConfig};
use wickstd::wick::wick_product;
use wickstd_bench::fixture_expansion;

fn bench_tensor(c: &mut Criterion) {
    let h = CmVector::new(vec![0.3, -0.5, 0.7]).unwrap();
    let g = CmVector::new(vec![0.9, 0.1, -0.4]).unwrap();
    let a = SymmetricTensor::rank_one_power(&h, 3);
    let b = SymmetricTensor::rank_one_power(&g, 3);
    c.bench_function("sym_product_d3_o3xo3", |bench| {
        bench.iter(|| black_box(&a).sym_product(black_box(&b)).unwrap())
    });
    c.bench_function("tensor_inner_d3_o3", |bench| {
        bench.iter(|| black_box(&a).inner(black_box(&b)).unwrap())
    });
}

fn bench_wick(c: &mut Criterion) {
    let f = fixture_expansion(1, 3, 4);
    let g = fixture_expansion(2, 3, 4);
    c.bench_function("wick_product_d3_o4xo4", |bench| {
        bench.iter(|| wick_product(black_box(&f), black_box(&g), 8).unwrap())
    });
}

fn bench_evaluate(c: &mut Criterion) {
    let f = fixture_expansion(3, 3, 8);
    let mut evaluator = Evaluator::new(&f);
    let w = [0.4, -1.2, 0.9];
    c.bench_function("evaluate_d3_o8", |bench| {
        bench.iter(|| evaluator.eval(black_box(&w)))
    });
}

fn bench_quadrature(c: &mut Criterion) {
    c.bench_function("hermite_rule_64_uncached", |bench| {
        // the public entry point caches; exercise grid construction instead
        bench.iter(|| QuadratureGrid::new(1, black_box(64)).unwrap())
    });
    let grid = QuadratureGrid::new(2, 24).unwrap();
    let f = fixture_expansion(4, 2, 4);
    let mut evaluator = Evaluator::new(&f);
    c.bench_function("integrate_mu_d2_o24", |bench| {
        bench.iter(|| integrate_mu(|w| evaluator.eval(w), black_box(&grid)))
    });
    let _ = hermite_rule(24).unwrap();
}

fn bench_pipeline(c: &mut Criterion) {
    let opts = StandardizeOptions::default();
    let grid = QuadratureGrid::new(2, 24).unwrap();
    let g = CmVector::new(vec![0.3, 0.0]).unwrap();
    let f = example_density(&g, &grid, &opts).unwrap();
    c.bench_function("standardize_example_d2", |bench| {
        bench.iter(|| standardize(black_box(&f), 16, &grid, &opts).unwrap())
    });
    c.bench_function("sample_density_1k", |bench| {
        bench.iter(|| sample_density(black_box(&f), &SampleConfig::new(1, 1000)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_tensor,
    bench_wick,
    bench_evaluate,
    bench_quadrature,
    bench_pipeline
);
criterion_main!(benches);
