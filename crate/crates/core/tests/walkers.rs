use btspec_core::basis::build_sphere_basis;
use btspec_core::matrices::assemble;
use btspec_core::oracle::*;
use btspec_core::signal::signal_matrix;
use btspec_core::spectrum::GradientOperator;

fn config(geometry: WalkGeometry, g_bar: f64, t_bar: f64) -> WalkConfig {
    WalkConfig { geometry, walkers: 20_000, dt: 1e-3, g_bar, direction: [0.0, 0.0, 1.0], t_bar, seed: 11 }
}

#[test]
fn free_diffusion_is_gaussian() {
    let (g, t) = (3.0, 0.5);
    let e = mc_signal(&WalkConfig { dt: 1e-2, ..config(WalkGeometry::Free, g, t) }).unwrap();
    let want = (-(2.0 / 3.0) * g * g * t * t * t).exp();
    assert!((e.signal.re - want).abs() < 3.0 * e.stderr, "{} vs {want} +- {}", e.signal.re, e.stderr);
    assert!(e.signal.im.abs() < 3.0 * e.stderr);
}

#[test]
fn long_walks_fill_the_ball_uniformly() {
    let pos = mc_positions(&config(WalkGeometry::Sphere, 0.0, 1.0)).unwrap();
    // ten shells of equal volume
    let bins = 10;
    let mut counts = vec![0usize; bins];
    for p in &pos {
        let r3 = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).powf(1.5);
        counts[((r3 * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = pos.len() as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99th percentile of chi-square with 9 degrees of freedom
    assert!(chi2 < 21.666, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn halving_the_time_step() {
    let base = config(WalkGeometry::Sphere, 2.0, 0.5);
    let a = mc_signal(&base).unwrap();
    let b = mc_signal(&WalkConfig { dt: 5e-4, ..base }).unwrap();
    // S is real by the z -> -z symmetry; the imaginary part is pure noise
    assert!((a.signal.re - b.signal.re).abs() < a.stderr.max(b.stderr), "{} vs {}", a.signal, b.signal);
    assert!(a.signal.im.abs() < 3.0 * a.stderr && b.signal.im.abs() < 3.0 * b.stderr);
}

#[test]
fn sphere_walk_matches_matrix_signal() {
    let mat = assemble(&build_sphere_basis(100).unwrap()).unwrap();
    let op = GradientOperator::new(&mat, mat.bz.clone()).unwrap();
    let e = mc_signal(&config(WalkGeometry::Sphere, 2.0, 0.5)).unwrap();
    let s = signal_matrix(&op, 2.0, 0.5).unwrap();
    assert!((e.signal - s).norm() < 3.0 * e.stderr, "{} vs {s} +- {}", e.signal, e.stderr);
}
