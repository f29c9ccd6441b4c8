use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use gremphase_core::verify::{
    classical_pressure_exact, quantum_pressure_ed, sample_realization, variational_oracle,
    EdOptions, FieldMode,
};
use gremphase_core::{DistributionFn, FieldLaw, ModelSpec};

fn exact_sums(c: &mut Criterion) {
    let spec = ModelSpec::rem(0.3, 0.5);
    let mut g = c.benchmark_group("classical sum");
    for n in [12usize, 16, 20] {
        let r = sample_realization(&spec, n, 0).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &r, |b, r| {
            b.iter(|| classical_pressure_exact(r, black_box(0.8), FieldMode::Iid))
        });
    }
    g.finish();
}

fn diagonalization(c: &mut Criterion) {
    let spec = ModelSpec::rem(0.3, 0.5);
    let mut g = c.benchmark_group("dense ed");
    g.sample_size(10);
    for n in [6usize, 8, 10] {
        let r = sample_realization(&spec, n, 0).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &r, |b, r| {
            b.iter(|| quantum_pressure_ed(r, black_box(0.8), FieldMode::Iid, &EdOptions::default()))
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let a = DistributionFn::Step {
        points: vec![0.5, 1.0],
        increments: vec![0.6, 0.4],
    };
    let mut g = c.benchmark_group("variational oracle");
    g.sample_size(10);
    g.bench_function("2-level", |b| {
        b.iter(|| variational_oracle(&a, &FieldLaw::point(1.0), black_box(1.3)))
    });
    g.finish();
}

criterion_group!(benches, exact_sums, diagonalization, oracle);
criterion_main!(benches);
