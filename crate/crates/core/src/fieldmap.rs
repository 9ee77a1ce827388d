//! Eigenfunctions on spatial grids, mainly `y = 0` sections.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSet, Geometry};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Symmetric colour range for the real part in rendered snapshots.
pub const COLOR_RANGE: f64 = 1.5;

pub const DEFAULT_RESOLUTION: usize = 201;

/// `v(p) = sum_k row_k u_k(p)` at each point; `None` outside the domain.
pub fn eval_eigenfunction(basis: &BasisSet, row: &[C64], points: &[[f64; 3]]) -> Vec<Option<C64>> {
    let active: Vec<usize> = (0..basis.len().min(row.len())).filter(|&k| row[k].norm() > 0.0).collect();
    points
        .iter()
        .map(|&p| {
            basis.contains(p).then(|| active.iter().map(|&k| row[k] * basis.eval_mode(k, p)).sum())
        })
        .collect()
}

/// Samples of one eigenfunction on an `nx` by `nz` grid of the `y = 0` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub branch: usize,
    pub g: f64,
    pub eigenvalue: C64,
    pub xs: Vec<f64>,
    pub zs: Vec<f64>,
    /// Row-major in `z`, then `x`.
    pub values: Vec<Option<C64>>,
    /// Some stored real part lies outside `[-1.5, 1.5]`.
    pub exceeds_color_range: bool,
}

impl FieldGrid {
    pub fn at(&self, ix: usize, iz: usize) -> Option<C64> {
        self.values[iz * self.xs.len() + ix]
    }

    /// Grid point with the largest `|v|`.
    pub fn argmax_abs(&self) -> Option<(f64, f64, f64)> {
        let nx = self.xs.len();
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (self.xs[i % nx], self.zs[i / nx], v.norm())))
            .max_by(|a, b| a.2.total_cmp(&b.2))
    }
}

/// Bounding box `(x_min, x_max, z_min, z_max)` of the `y = 0` section.
pub fn section_bounds(basis: &BasisSet) -> (f64, f64, f64, f64) {
    match basis.geometry {
        Geometry::Sphere | Geometry::ReducedSphere => (-1.0, 1.0, -1.0, 1.0),
        Geometry::Disk => (-1.0, 1.0, 0.0, 0.0),
        Geometry::Interval => (0.0, 0.0, -0.5 * basis.aspect, 0.5 * basis.aspect),
        Geometry::Cylinder => (-1.0, 1.0, -0.5 * basis.aspect, 0.5 * basis.aspect),
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Row `j` of `spec` sampled on the `y = 0` section.
pub fn export_projection(
    basis: &BasisSet,
    spec: &Spectrum,
    j: usize,
    nx: usize,
    nz: usize,
) -> Result<FieldGrid> {
    if j >= spec.len() {
        return Err(Error::Domain(format!("branch index {j} out of range (N = {})", spec.len())));
    }
    if nx == 0 || nz == 0 {
        return Err(Error::Domain("resolution must be >= 1".into()));
    }
    let (x0, x1, z0, z1) = section_bounds(basis);
    let xs = axis(x0, x1, nx);
    let zs = axis(z0, z1, nz);
    let points: Vec<[f64; 3]> = zs.iter().flat_map(|&z| xs.iter().map(move |&x| [x, 0.0, z])).collect();
    let values = eval_eigenfunction(basis, &spec.row(j), &points);
    let exceeds_color_range = values.iter().flatten().any(|v| v.re.abs() > COLOR_RANGE);
    Ok(FieldGrid { branch: j, g: spec.g, eigenvalue: spec.eigenvalues[j], xs, zs, values, exceeds_color_range })
}
