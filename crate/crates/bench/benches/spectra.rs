use std::f64::consts::FRAC_PI_4;
use std::hint::black_box;

use btspec_bench::{cylinder_operator, sphere_operator};
use btspec_core::basis::build_sphere_basis;
use btspec_core::matrices::assemble;
use btspec_core::signal::{compute_coefficients, signal_matrix, signal_spectral};
use btspec_core::spectrum::{compute, SpectrumOptions};
use btspec_core::sweep::{run_sweep, SweepOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble_sphere");
    for n in [60, 150, 333] {
        let basis = build_sphere_basis(n).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &basis, |b, basis| b.iter(|| assemble(black_box(basis)).unwrap()));
    }
    g.finish();
}

fn spectra(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectrum");
    for n in [60, 150, 333] {
        let op = sphere_operator(n);
        g.bench_with_input(BenchmarkId::new("sphere", n), &op, |b, op| {
            b.iter(|| compute(op, black_box(15.0), &SpectrumOptions::default()).unwrap())
        });
    }
    let op = cylinder_operator(150, 1.0, FRAC_PI_4);
    g.bench_function("cylinder/150", |b| b.iter(|| compute(&op, black_box(15.0), &SpectrumOptions::default()).unwrap()));
    g.finish();
}

fn signals(c: &mut Criterion) {
    let op = sphere_operator(150);
    let spec = compute(&op, 15.0, &SpectrumOptions::default()).unwrap();
    let coeffs = compute_coefficients(&spec);
    c.bench_function("signal/matrix/150", |b| b.iter(|| signal_matrix(&op, 15.0, black_box(0.5)).unwrap()));
    c.bench_function("signal/spectral/150", |b| b.iter(|| signal_spectral(&spec, &coeffs, black_box(0.5))));
}

fn sweeps(c: &mut Criterion) {
    let op = sphere_operator(60);
    let opts = SweepOptions { tracked: Some(21), ..Default::default() };
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_function("sphere/60/to_8", |b| b.iter(|| run_sweep(&op, black_box(8.0), &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, assembly, spectra, signals, sweeps);
criterion_main!(benches);
