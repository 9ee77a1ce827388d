//! Dense complex linear algebra helpers on top of `faer`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{evd_cplx, evd_scratch, ComputeEigenvectors};
use faer::linalg::solvers::Solve;
use faer::{Mat, Par};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigenvalues and left eigenvectors of `a`, as rows: `x a = lambda x`.
/// Rows have unit Euclidean norm.
pub fn eig_left(a: &Mat<C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    if n == 1 {
        return Ok((vec![a[(0, 0)]], Mat::from_fn(1, 1, |_, _| C64::new(1.0, 0.0))));
    }
    let mut s = faer::diag::Diag::<C64>::zeros(n);
    let mut ul = Mat::<C64>::zeros(n, n);
    let par = Par::Seq;
    let mut mem = MemBuffer::new(evd_scratch::<C64>(
        n,
        ComputeEigenvectors::Yes,
        ComputeEigenvectors::No,
        par,
        Default::default(),
    ));
    evd_cplx(
        a.as_ref(),
        s.as_mut(),
        Some(ul.as_mut()),
        None,
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::Eigensolver {
        size: n,
        max_abs: max_abs(a),
        reason: format!("{e:?}"),
    })?;
    // the solver returns u with u^H a = lambda u^H
    let mut x = Mat::from_fn(n, n, |j, k| ul[(k, j)].conj());
    for j in 0..n {
        let nrm = (0..n).map(|k| x[(j, k)].norm_sqr()).sum::<f64>().sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Eigensolver {
                size: n,
                max_abs: max_abs(a),
                reason: format!("degenerate eigenvector {j}"),
            });
        }
        for k in 0..n {
            x[(j, k)] /= nrm;
        }
    }
    let vals = (0..n).map(|j| s[j]).collect();
    Ok((vals, x))
}

/// Largest entry magnitude.
pub fn max_abs(a: &Mat<C64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Induced 1-norm.
pub fn norm_one(a: &Mat<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn norm_fro(a: &Mat<C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| C64::new((i == j) as u8 as f64, 0.0))
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by scaling and squaring with the degree-13 Pade
/// approximant.
pub fn expm(a: &Mat<C64>) -> Result<Mat<C64>> {
    let n = a.nrows();
    let norm = norm_one(a);
    if !norm.is_finite() {
        return Err(Error::MatrixExponential {
            norm,
            reason: "non-finite entries".into(),
        });
    }
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    if s > 1000 {
        return Err(Error::MatrixExponential {
            norm,
            reason: "norm too large for scaling and squaring".into(),
        });
    }
    let scale = 0.5f64.powi(s);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| {
        Mat::from_fn(n, n, |i, j| {
            a6[(i, j)] * c6 + a4[(i, j)] * c4 + a2[(i, j)] * c2 + id[(i, j)] * c0
        })
    };
    let inner_u = &a6 * &lin(b[13], b[11], b[9], 0.0);
    let tail_u = lin(b[7], b[5], b[3], b[1]);
    let u_poly = Mat::from_fn(n, n, |i, j| inner_u[(i, j)] + tail_u[(i, j)]);
    let u = &a * &u_poly;
    let inner_v = &a6 * &lin(b[12], b[10], b[8], 0.0);
    let tail_v = lin(b[6], b[4], b[2], b[0]);
    let v = Mat::from_fn(n, n, |i, j| inner_v[(i, j)] + tail_v[(i, j)]);
    let p = Mat::from_fn(n, n, |i, j| v[(i, j)] + u[(i, j)]);
    let q = Mat::from_fn(n, n, |i, j| v[(i, j)] - u[(i, j)]);
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.as_ref().is_all_finite() {
        return Err(Error::MatrixExponential {
            norm,
            reason: "non-finite result".into(),
        });
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_eigenvectors() {
        let n = 6;
        let a = Mat::from_fn(n, n, |i, j| {
            C64::new(((i * 3 + j * 5) % 7) as f64 - 3.0, ((i + 2 * j) % 4) as f64 * 0.3)
        });
        let (vals, x) = eig_left(&a).unwrap();
        let xa = &x * &a;
        for j in 0..n {
            for k in 0..n {
                assert!((xa[(j, k)] - vals[j] * x[(j, k)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn expm_diagonal_and_nilpotent() {
        let a = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                C64::new(-(i as f64) * 10.0, 1.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let e = expm(&a).unwrap();
        for i in 0..3 {
            let want = C64::new(-(i as f64) * 10.0, 1.0).exp();
            assert!((e[(i, i)] - want).norm() < 1e-12 * want.norm());
        }
        // exp([[0, t], [0, 0]]) = [[1, t], [0, 1]]
        let t = 37.0;
        let n = Mat::from_fn(2, 2, |i, j| C64::new(if i == 0 && j == 1 { t } else { 0.0 }, 0.0));
        let e = expm(&n).unwrap();
        assert!((e[(0, 1)] - C64::new(t, 0.0)).norm() < 1e-12 * t);
        assert!((e[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn expm_rotation() {
        // exp(theta [[0, -1], [1, 0]]) is a rotation
        let th = 20.0;
        let a = Mat::from_fn(2, 2, |i, j| C64::new(if i == 1 && j == 0 { th } else if i == 0 && j == 1 { -th } else { 0.0 }, 0.0));
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - th.cos()).abs() < 1e-12);
        assert!((e[(1, 0)].re - th.sin()).abs() < 1e-12);
    }
}
