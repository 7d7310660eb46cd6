use criterion::{criterion_group, criterion_main, Criterion};
use detcot::{laplacian, variation, Canonical, Edge, LaplacianKind};
use detcot_bench::uniform_fixture;
use std::hint::black_box;

fn bench_spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("log_pseudo_det");
    for name in Canonical::ALL {
        let (t, m) = uniform_fixture(name);
        group.bench_function(name.name(), |b| {
            b.iter(|| laplacian::log_pseudo_det(black_box(&t), black_box(&m), LaplacianKind::Cotan).unwrap())
        });
    }
    group.finish();
}

fn bench_gradient(c: &mut Criterion) {
    let (t, m) = uniform_fixture(Canonical::Torus9);
    c.bench_function("fd_gradient/torus_9/normalized", |b| {
        b.iter(|| variation::fd_gradient(&t, &m, LaplacianKind::Normalized, 1e-5).unwrap())
    });
    c.bench_function("stationarity/torus_9/normalized", |b| {
        b.iter(|| variation::check_stationarity(&t, &m, LaplacianKind::Normalized, 1e-5, 1e-6).unwrap())
    });
}

fn bench_sweep(c: &mut Criterion) {
    let (t, m) = uniform_fixture(Canonical::Tetrahedron);
    c.bench_function("sweep/tetrahedron/21x21", |b| {
        b.iter(|| {
            variation::sweep_two_edges(&t, &m, Edge::new(0, 1), Edge::new(2, 3), (0.8, 1.2), 21, LaplacianKind::Cotan)
                .unwrap()
        })
    });
}

criterion_group!(benches, bench_spectrum, bench_gradient, bench_sweep);
criterion_main!(benches);
