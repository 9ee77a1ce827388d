//! Quadrature oracle for the assembled matrices.

use std::f64::consts::PI;

use btspec_core::basis::*;
use btspec_core::quadrature::gauss_legendre_on;
use faer::Mat;
use num_complex::Complex64 as C64;

/// Quadrature nodes `(point, weight)` covering the domain of `basis`.
pub fn nodes(basis: &BasisSet) -> Vec<([f64; 3], f64)> {
    let mut out = Vec::new();
    let nphi = 48;
    let dphi = 2.0 * PI / nphi as f64;
    match basis.geometry {
        Geometry::Sphere | Geometry::ReducedSphere => {
            let (rs, rw) = gauss_legendre_on(40, 0.0, 1.0);
            let (cs, cw) = gauss_legendre_on(40, -1.0, 1.0);
            for (r, wr) in rs.iter().zip(&rw) {
                for (c, wc) in cs.iter().zip(&cw) {
                    let s = (1.0 - c * c).sqrt();
                    for k in 0..nphi {
                        let p = k as f64 * dphi;
                        out.push(([r * s * p.cos(), r * s * p.sin(), r * c], wr * wc * r * r * dphi));
                    }
                }
            }
        }
        Geometry::Disk | Geometry::Cylinder => {
            let (rs, rw) = gauss_legendre_on(40, 0.0, 1.0);
            let (zs, zw) = if basis.geometry == Geometry::Disk {
                (vec![0.0], vec![1.0])
            } else {
                gauss_legendre_on(30, -0.5 * basis.aspect, 0.5 * basis.aspect)
            };
            for (r, wr) in rs.iter().zip(&rw) {
                for k in 0..nphi {
                    let p = k as f64 * dphi;
                    for (z, wz) in zs.iter().zip(&zw) {
                        out.push(([r * p.cos(), r * p.sin(), *z], wr * r * dphi * wz));
                    }
                }
            }
        }
        Geometry::Interval => {
            let (zs, zw) = gauss_legendre_on(60, -0.5 * basis.aspect, 0.5 * basis.aspect);
            for (z, w) in zs.iter().zip(&zw) {
                out.push(([0.0, 0.0, *z], *w));
            }
        }
    }
    out
}

pub struct Oracle {
    pub x: Mat<C64>,
    pub y: Mat<C64>,
    pub z: Mat<C64>,
    pub w: Mat<C64>,
    pub gram: Mat<C64>,
}

pub fn oracle(basis: &BasisSet) -> Oracle {
    let n = basis.len();
    let pts = nodes(basis);
    let mut x = Mat::<C64>::zeros(n, n);
    let mut y = Mat::<C64>::zeros(n, n);
    let mut z = Mat::<C64>::zeros(n, n);
    let mut w = Mat::<C64>::zeros(n, n);
    let mut gram = Mat::<C64>::zeros(n, n);
    for (p, wt) in pts {
        let u: Vec<C64> = (0..n).map(|i| basis.eval_mode(i, p)).collect();
        for a in 0..n {
            for b in 0..n {
                let prod = u[a] * u[b].conj() * wt;
                x[(a, b)] += prod * p[0];
                y[(a, b)] += prod * p[1];
                z[(a, b)] += prod * p[2];
                w[(a, b)] += u[a] * u[b] * wt;
                gram[(a, b)] += prod;
            }
        }
    }
    Oracle { x, y, z, w, gram }
}

pub fn max_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    let mut e: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            e = e.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    e
}

/// Largest deviation of the assembled `W`, `B^x`, `B^y`, `B^z` and of the
/// basis Gram matrix from their quadrature values.
pub fn mismatch(basis: &BasisSet) -> f64 {
    let mat = btspec_core::matrices::assemble(basis).unwrap();
    let o = oracle(basis);
    let n = basis.len();
    let id = Mat::from_fn(n, n, |i, j| C64::new((i == j) as u8 as f64, 0.0));
    [
        max_diff(&o.gram, &id),
        max_diff(&o.w, &mat.w),
        max_diff(&o.x, &mat.bx),
        max_diff(&o.y, &mat.by),
        max_diff(&o.z, &mat.bz),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}
