use criterion::{black_box, criterion_group, criterion_main, Criterion};
use flatlab_core::build_catalog_objective;
use flatlab_core::conservation::{flow_integrate, monomial_generators, ConservedQuantity, Field};
use flatlab_core::linalg::Mat;
use flatlab_core::matfac::{exact_factorizations, power_lambda1};
use flatlab_core::profiler::{ball_max_variation, profile};

fn ball_search(c: &mut Criterion) {
    let f = build_catalog_objective("4th", &[]).unwrap();
    c.bench_function("ball_max_variation/4th", |b| {
        b.iter(|| ball_max_variation(&f, black_box(&[1.0, 0.0]), 0.05, 32, 0).unwrap())
    });
}

fn profile_grid(c: &mut Criterion) {
    let f = build_catalog_objective("mf4", &[]).unwrap();
    c.bench_function("profile/mf4_24", |b| {
        b.iter(|| profile(&f, black_box(&[1.0, 1.0]), 1e-3, 0.1, 24, 32, 0).unwrap())
    });
}

fn hessian_lambda1(c: &mut Criterion) {
    let m = Mat::from_diag(&[2.0, 1.0]);
    let p = exact_factorizations(&m, &Mat::from_diag(&[1.0, 2f64.sqrt()])).unwrap();
    c.bench_function("power_lambda1/2x2", |b| b.iter(|| power_lambda1(black_box(&p), 0).unwrap()));
}

fn monomial_flow(c: &mut Criterion) {
    let f = build_catalog_objective("monomial", &[1.0, 2.0]).unwrap();
    let cq = ConservedQuantity::new(monomial_generators(&[1, 2]).unwrap(), None).unwrap();
    c.bench_function("flow/monomial_neg_grad_c", |b| {
        b.iter(|| flow_integrate(&Field::NegGradC, &f, Some(&cq), black_box(&[2.0, 0.5]), 2.0, 1e-2).unwrap())
    });
}

criterion_group!(benches, ball_search, profile_grid, hessian_lambda1, monomial_flow);
criterion_main!(benches);
