//! Fixtures shared by the benchmarks.

use btspec_core::basis::{build_cylinder_basis, build_sphere_basis};
use btspec_core::matrices::{assemble, gradient_matrix_cylinder};
use btspec_core::spectrum::GradientOperator;

pub fn sphere_operator(n: usize) -> GradientOperator {
    let mat = assemble(&build_sphere_basis(n).expect("sphere basis")).expect("sphere matrices");
    GradientOperator::new(&mat, mat.bz.clone()).expect("operator")
}

pub fn cylinder_operator(n: usize, aspect: f64, eta: f64) -> GradientOperator {
    let mat = assemble(&build_cylinder_basis(n, 1.0, aspect).expect("cylinder basis")).expect("cylinder matrices");
    let b = gradient_matrix_cylinder(&mat, eta);
    GradientOperator::new(&mat, b).expect("operator")
}
