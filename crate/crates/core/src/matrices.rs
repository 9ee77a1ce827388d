//! Truncated matrices of the Laplacian and of coordinate multiplication.
//!
//! Convention shared by every module: with `u_k` the ordered basis,
//!
//! ```text
//! Lambda_{k,k'} = delta_{k,k'} lambda_k
//! B^i_{k,k'}    = \int u_k (x_i / R) conj(u_{k'})
//! W_{k,k'}      = \int u_k u_{k'}
//! ```
//!
//! and the eigenfunctions `v_j = sum_k X_{j,k} u_k` satisfy
//! `X (Lambda + i g B) = Lambda^(g) X`, i.e. rows of `X` are left eigenvectors.

use std::f64::consts::PI;
use std::io::Write;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::basis::{disk_beta, sphere_beta, BasisIndex, BasisSet, Geometry};
use crate::error::{Error, Result};

/// Smallest admissible `(alpha^2 - alpha'^2)^2` in off-diagonal formulas.
const MIN_DENOMINATOR: f64 = 1e-12;

/// Dense matrices of one truncated basis.
#[derive(Debug, Clone)]
pub struct OperatorMatrices {
    pub basis: BasisSet,
    /// Diagonal of `Lambda`.
    pub lambda: Vec<f64>,
    pub bx: Mat<C64>,
    pub by: Mat<C64>,
    pub bz: Mat<C64>,
    pub w: Mat<C64>,
}

impl OperatorMatrices {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `e_x Bx + e_y By + e_z Bz` for a direction vector `e`.
    pub fn directional(&self, e: [f64; 3]) -> Mat<C64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| {
            self.bx[(i, j)] * e[0] + self.by[(i, j)] * e[1] + self.bz[(i, j)] * e[2]
        })
    }

    /// `Lambda + i g B` for a gradient matrix `b`.
    pub fn operator(&self, b: &Mat<C64>, g: f64) -> Mat<C64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| {
            let d = if i == j { self.lambda[i] } else { 0.0 };
            C64::new(d, 0.0) + C64::new(0.0, g) * b[(i, j)]
        })
    }

    /// Little-endian dump: geometry code (u32), N (u64), R and H (f64), then
    /// `Lambda`, `Bx`, `By`, `Bz`, `W` as row-major complex doubles (re, im).
    /// Lengths are in units of `R`, so `R = 1` and `H` is the aspect ratio.
    pub fn write_dump<Wr: Write>(&self, mut out: Wr) -> Result<()> {
        let code: u32 = match self.basis.geometry {
            Geometry::Sphere => 0,
            Geometry::ReducedSphere => 1,
            Geometry::Disk => 2,
            Geometry::Interval => 3,
            Geometry::Cylinder => 4,
        };
        let n = self.dim();
        out.write_all(&code.to_le_bytes())?;
        out.write_all(&(n as u64).to_le_bytes())?;
        out.write_all(&1.0f64.to_le_bytes())?;
        out.write_all(&self.basis.aspect.to_le_bytes())?;
        let lam = Mat::from_fn(n, n, |i, j| {
            C64::new(if i == j { self.lambda[i] } else { 0.0 }, 0.0)
        });
        for m in [&lam, &self.bx, &self.by, &self.bz, &self.w] {
            for i in 0..n {
                for j in 0..n {
                    out.write_all(&m[(i, j)].re.to_le_bytes())?;
                    out.write_all(&m[(i, j)].im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }
}

fn guard(d: f64, what: &str) -> Result<f64> {
    if d < MIN_DENOMINATOR {
        return Err(Error::Domain(format!(
            "{what}: denominator {d:e} below {MIN_DENOMINATOR:e}; zero table corrupted?"
        )));
    }
    Ok(d)
}

/// Axisymmetric sphere element `B_{nk,n'k'}`.
pub fn sphere_reduced_element(n: u32, a: f64, n2: u32, a2: f64) -> Result<f64> {
    if n + 1 != n2 && n2 + 1 != n {
        return Ok(0.0);
    }
    let (nf, mf) = (n as f64, n2 as f64);
    let num = a * a + a2 * a2 - nf * (mf + 1.0) - mf * (nf + 1.0) + 1.0;
    let den = guard((a * a - a2 * a2).powi(2), "sphere element")?;
    Ok((nf + mf + 1.0) / ((2.0 * nf + 1.0) * (2.0 * mf + 1.0))
        * sphere_beta(n, a)
        * sphere_beta(n2, a2)
        * num
        / den)
}

/// Axisymmetric disk element `B^d_{nk,n'k'}`.
pub fn disk_reduced_element(n: u32, a: f64, n2: u32, a2: f64) -> Result<f64> {
    if n + 1 != n2 && n2 + 1 != n {
        return Ok(0.0);
    }
    let (nf, mf) = (n as f64, n2 as f64);
    let extra = (n == 0) as u32 + (n2 == 0) as u32;
    let num = a * a + a2 * a2 - 2.0 * nf * mf;
    let den = guard((a * a - a2 * a2).powi(2), "disk element")?;
    Ok((1.0 + extra as f64).sqrt() * disk_beta(n, a) * disk_beta(n2, a2) * num / den)
}

/// Interval element for unit height.
pub fn interval_element(m: u32, m2: u32) -> f64 {
    if m == m2 || (m + m2) % 2 == 0 {
        return 0.0;
    }
    let c = |k: u32| if k == 0 { 1.0 } else { 2.0f64.sqrt() };
    let (a, b) = (m as f64, m2 as f64);
    -2.0 * c(m) * c(m2) * (a * a + b * b) / (PI * PI * (a * a - b * b).powi(2))
}

fn zeros(n: usize) -> Mat<C64> {
    Mat::zeros(n, n)
}

fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| C64::new((i == j) as u8 as f64, 0.0))
}

fn lambda_of(basis: &BasisSet) -> Vec<f64> {
    basis.eigenvalues()
}

fn expect_geometry(basis: &BasisSet, want: &[Geometry], op: &str) -> Result<()> {
    if want.contains(&basis.geometry) {
        Ok(())
    } else {
        Err(Error::Mismatch(format!("{op} needs {want:?}, got {:?}", basis.geometry)))
    }
}

/// Full sphere matrices.
pub fn assemble_sphere(basis: &BasisSet) -> Result<OperatorMatrices> {
    expect_geometry(basis, &[Geometry::Sphere], "assemble_sphere")?;
    let n = basis.len();
    let mut bx = zeros(n);
    let mut by = zeros(n);
    let mut bz = zeros(n);
    let mut w = zeros(n);
    let idx: Vec<(u32, i32)> = basis
        .modes
        .iter()
        .map(|md| match md.index {
            BasisIndex::Sphere { n, m, .. } => (n, m),
            _ => unreachable!(),
        })
        .collect();
    for r in 0..n {
        let (nr, mr) = idx[r];
        for c in 0..n {
            let (nc, mc) = idx[c];
            if nr == nc && basis.modes[r].alpha == basis.modes[c].alpha && mr == -mc {
                w[(r, c)] = C64::new(if mr % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
            }
        }
    }
    // The closed forms are stated for `conj(u_r) x u_c`; storing at `(c, r)`
    // gives the `u_r x conj(u_c)` orientation used here. The sign of the `y`
    // elements is fixed against direct quadrature.
    for r in 0..n {
        let (nr, mr) = idx[r];
        let ar = basis.modes[r].alpha;
        for c in 0..n {
            let (nc, mc) = idx[c];
            if nr + 1 != nc && nc + 1 != nr {
                continue;
            }
            let ac = basis.modes[c].alpha;
            let red = sphere_reduced_element(nr, ar, nc, ac)?;
            if red == 0.0 {
                continue;
            }
            let (nf, m) = (nr as f64, mr as f64);
            if mr == mc {
                let top = nr.max(nc) as f64;
                let f = (1.0 - m * m / (top * top)).max(0.0).sqrt();
                bz[(c, r)] = C64::new(red * f, 0.0);
            }
            let (down, up) = if nc == nr + 1 {
                // m' = m - 1 and m' = m + 1 weights
                (
                    ((nf - m + 1.0) * (nf - m + 2.0)).sqrt() / (nf + 1.0),
                    ((nf + m + 1.0) * (nf + m + 2.0)).sqrt() / (nf + 1.0),
                )
            } else {
                (
                    ((nf + m - 1.0) * (nf + m)).max(0.0).sqrt() / nf,
                    ((nf - m - 1.0) * (nf - m)).max(0.0).sqrt() / nf,
                )
            };
            let sgn = if nc == nr + 1 { 1.0 } else { -1.0 };
            if mc == mr - 1 {
                bx[(c, r)] = C64::new(sgn * 0.5 * red * down, 0.0);
                by[(c, r)] = C64::new(0.0, -sgn * 0.5 * red * down);
            } else if mc == mr + 1 {
                bx[(c, r)] = C64::new(-sgn * 0.5 * red * up, 0.0);
                by[(c, r)] = C64::new(0.0, -sgn * 0.5 * red * up);
            }
        }
    }
    Ok(OperatorMatrices {
        lambda: lambda_of(basis),
        basis: basis.clone(),
        bx,
        by,
        bz,
        w,
    })
}

/// Axisymmetric sphere matrices; only `Bz` is populated.
pub fn assemble_reduced_sphere(basis: &BasisSet) -> Result<OperatorMatrices> {
    expect_geometry(basis, &[Geometry::ReducedSphere], "assemble_reduced_sphere")?;
    let n = basis.len();
    let mut bz = zeros(n);
    for r in 0..n {
        for c in 0..n {
            if let (BasisIndex::Sphere { n: nr, .. }, BasisIndex::Sphere { n: nc, .. }) =
                (basis.modes[r].index, basis.modes[c].index)
            {
                let v = sphere_reduced_element(nr, basis.modes[r].alpha, nc, basis.modes[c].alpha)?;
                bz[(r, c)] = C64::new(v, 0.0);
            }
        }
    }
    Ok(OperatorMatrices {
        lambda: lambda_of(basis),
        basis: basis.clone(),
        bx: zeros(n),
        by: zeros(n),
        bz,
        w: identity(n),
    })
}

/// Disk coordinate matrices `(B_d^x, B_d^y)` on `(n, k, l)` triples.
fn disk_pair(modes: &[(u32, u8, f64)]) -> Result<(Mat<C64>, Mat<C64>)> {
    let n = modes.len();
    let mut bx = zeros(n);
    let mut by = zeros(n);
    for r in 0..n {
        let (nr, lr, ar) = modes[r];
        for c in 0..n {
            let (nc, lc, ac) = modes[c];
            let red = disk_reduced_element(nr, ar, nc, ac)?;
            if red == 0.0 {
                continue;
            }
            let kill = if nr + nc == 1 { 0.0 } else { 1.0 };
            match (lr, lc) {
                (1, 1) => bx[(r, c)] = C64::new(red, 0.0),
                (2, 2) => bx[(r, c)] = C64::new(red * kill, 0.0),
                (1, 2) => {
                    let v = if nc == nr + 1 { red } else { -red * kill };
                    by[(r, c)] = C64::new(v, 0.0);
                }
                (2, 1) => {
                    let v = if nc + 1 == nr { red } else { -red * kill };
                    by[(r, c)] = C64::new(v, 0.0);
                }
                _ => unreachable!(),
            }
        }
    }
    Ok((bx, by))
}

/// Disk matrices; `Bz` is zero.
pub fn assemble_disk(basis: &BasisSet) -> Result<OperatorMatrices> {
    expect_geometry(basis, &[Geometry::Disk], "assemble_disk")?;
    let modes: Vec<(u32, u8, f64)> = basis
        .modes
        .iter()
        .map(|md| match md.index {
            BasisIndex::Disk { n, l, .. } => (n, l, md.alpha),
            _ => unreachable!(),
        })
        .collect();
    let (bx, by) = disk_pair(&modes)?;
    let n = basis.len();
    Ok(OperatorMatrices {
        lambda: lambda_of(basis),
        basis: basis.clone(),
        bx,
        by,
        bz: zeros(n),
        w: identity(n),
    })
}

/// Interval matrices; coordinate `z` in the same length unit as the height.
pub fn assemble_interval(basis: &BasisSet) -> Result<OperatorMatrices> {
    expect_geometry(basis, &[Geometry::Interval], "assemble_interval")?;
    let n = basis.len();
    let h = basis.aspect;
    let bz = Mat::from_fn(n, n, |r, c| match (basis.modes[r].index, basis.modes[c].index) {
        (BasisIndex::Interval { m }, BasisIndex::Interval { m: m2 }) => {
            C64::new(h * interval_element(m, m2), 0.0)
        }
        _ => unreachable!(),
    });
    Ok(OperatorMatrices {
        lambda: lambda_of(basis),
        basis: basis.clone(),
        bx: zeros(n),
        by: zeros(n),
        bz,
        w: identity(n),
    })
}

/// Capped cylinder matrices in units of the radius.
pub fn assemble_cylinder(basis: &BasisSet) -> Result<OperatorMatrices> {
    expect_geometry(basis, &[Geometry::Cylinder], "assemble_cylinder")?;
    let n = basis.len();
    let modes: Vec<(u32, u32, u8, u32, f64)> = basis
        .modes
        .iter()
        .map(|md| match md.index {
            BasisIndex::Cylinder { n, k, l, m } => (n, k, l, m, md.alpha),
            _ => unreachable!(),
        })
        .collect();
    let disk: Vec<(u32, u8, f64)> = modes.iter().map(|&(n, _, l, _, a)| (n, l, a)).collect();
    let (dx, dy) = disk_pair(&disk)?;
    let h = basis.aspect;
    let mut bx = zeros(n);
    let mut by = zeros(n);
    let mut bz = zeros(n);
    for r in 0..n {
        let (nr, kr, lr, mr, _) = modes[r];
        for c in 0..n {
            let (nc, kc, lc, mc, _) = modes[c];
            if mr == mc {
                bx[(r, c)] = dx[(r, c)];
                by[(r, c)] = dy[(r, c)];
            }
            if (nr, kr, lr) == (nc, kc, lc) {
                bz[(r, c)] = C64::new(h * interval_element(mr, mc), 0.0);
            }
        }
    }
    Ok(OperatorMatrices {
        lambda: lambda_of(basis),
        basis: basis.clone(),
        bx,
        by,
        bz,
        w: identity(n),
    })
}

/// Assemble whichever geometry the basis describes.
pub fn assemble(basis: &BasisSet) -> Result<OperatorMatrices> {
    match basis.geometry {
        Geometry::Sphere => assemble_sphere(basis),
        Geometry::ReducedSphere => assemble_reduced_sphere(basis),
        Geometry::Disk => assemble_disk(basis),
        Geometry::Interval => assemble_interval(basis),
        Geometry::Cylinder => assemble_cylinder(basis),
    }
}

/// Unit gradient direction from polar angles.
pub fn direction_from_angles(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Gradient matrix for direction `(theta_G, phi_G)`.
pub fn gradient_matrix_sphere(mat: &OperatorMatrices, theta: f64, phi: f64) -> Mat<C64> {
    mat.directional(direction_from_angles(theta, phi))
}

/// Gradient matrix `cos(eta) Bx + sin(eta) Bz` in the `xz` plane.
pub fn gradient_matrix_cylinder(mat: &OperatorMatrices, eta: f64) -> Mat<C64> {
    mat.directional([eta.cos(), 0.0, eta.sin()])
}

/// Connected components of the structural nonzero pattern of `Lambda + i g B`
/// (independent of `g > 0`), each sorted ascending, ordered by first index.
pub fn sectors(b: &Mat<C64>) -> Vec<Vec<usize>> {
    let n = b.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if b[(i, j)] != C64::new(0.0, 0.0) || b[(j, i)] != C64::new(0.0, 0.0) {
                let (a, c) = (find(&mut parent, i), find(&mut parent, j));
                if a != c {
                    parent[a.max(c)] = a.min(c);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|g| g[0]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::*;

    fn herm_err(m: &Mat<C64>) -> f64 {
        let n = m.nrows();
        let mut e: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                e = e.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        e
    }

    #[test]
    fn interval_element_values() {
        let v = interval_element(0, 1);
        assert!((v + 2.0 * 2.0f64.sqrt() / (PI * PI)).abs() < 1e-15);
        for m in 0..6 {
            assert_eq!(interval_element(m, m), 0.0);
        }
    }

    #[test]
    fn sphere_w_and_structure() {
        let b = build_sphere_basis(40).unwrap();
        let mat = assemble_sphere(&b).unwrap();
        let i = b.position(BasisIndex::Sphere { n: 1, k: 0, m: 1 }).unwrap();
        let j = b.position(BasisIndex::Sphere { n: 1, k: 0, m: -1 }).unwrap();
        assert_eq!(mat.w[(i, j)], C64::new(-1.0, 0.0));
        let n = mat.dim();
        for r in 0..n {
            for c in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..n {
                    s += mat.w[(r, k)] * mat.w[(k, c)];
                }
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((s - want).norm() < 1e-15);
            }
            for m in [&mat.bx, &mat.by, &mat.bz] {
                assert_eq!(m[(r, r)], C64::new(0.0, 0.0));
            }
        }
        for m in [&mat.bx, &mat.by, &mat.bz] {
            assert!(herm_err(m) < 1e-14);
        }
    }

    #[test]
    fn reduced_is_m0_block_of_full() {
        let full = assemble_sphere(&build_sphere_basis(60).unwrap()).unwrap();
        let red = assemble_reduced_sphere(&build_reduced_sphere_basis(8).unwrap()).unwrap();
        for r in 0..red.dim() {
            for c in 0..red.dim() {
                let (ir, ic) = (red.basis.modes[r].index, red.basis.modes[c].index);
                let (fr, fc) = (full.basis.position(ir).unwrap(), full.basis.position(ic).unwrap());
                assert!((full.bz[(fr, fc)] - red.bz[(r, c)]).norm() < 1e-15);
            }
        }
        assert!((red.lambda[1] - 4.333).abs() < 1e-3);
        assert!((red.lambda[2] - 11.169).abs() < 1e-3);
    }

    #[test]
    fn cylinder_blocks() {
        let b = build_cylinder_basis(50, 1.0, 1.0).unwrap();
        let mat = assemble_cylinder(&b).unwrap();
        for r in 0..mat.dim() {
            for c in 0..mat.dim() {
                let (BasisIndex::Cylinder { n: n1, k: k1, l: l1, m: m1 }, BasisIndex::Cylinder { n: n2, k: k2, l: l2, m: m2 }) =
                    (b.modes[r].index, b.modes[c].index)
                else {
                    unreachable!()
                };
                if m1 != m2 {
                    assert_eq!(mat.bx[(r, c)], C64::new(0.0, 0.0));
                }
                if l1 != l2 {
                    assert_eq!(mat.bx[(r, c)], C64::new(0.0, 0.0));
                }
                if (n1, k1, l1) != (n2, k2, l2) {
                    assert_eq!(mat.bz[(r, c)], C64::new(0.0, 0.0));
                }
                for m in [&mat.bx, &mat.by, &mat.bz] {
                    assert!(m[(r, c)].norm() <= 1.0);
                }
            }
        }
        assert!(herm_err(&mat.bx) < 1e-14 && herm_err(&mat.by) < 1e-14 && herm_err(&mat.bz) < 1e-14);
    }

    #[test]
    fn directions() {
        let mat = assemble_sphere(&build_sphere_basis(10).unwrap()).unwrap();
        let g = gradient_matrix_sphere(&mat, 0.0, 0.3);
        assert_eq!(g, mat.bz);
        let g = gradient_matrix_sphere(&mat, PI / 2.0, 0.0);
        for i in 0..mat.dim() {
            for j in 0..mat.dim() {
                assert!((g[(i, j)] - mat.bx[(i, j)]).norm() < 1e-16);
            }
        }
        let cyl = assemble_cylinder(&build_cylinder_basis(10, 1.0, 1.0).unwrap()).unwrap();
        let g = gradient_matrix_cylinder(&cyl, PI / 2.0);
        for i in 0..cyl.dim() {
            for j in 0..cyl.dim() {
                assert!((g[(i, j)] - cyl.bz[(i, j)]).norm() < 1e-16);
            }
        }
    }

    #[test]
    fn sphere_z_sectors_split_by_m() {
        let mat = assemble_sphere(&build_sphere_basis(40).unwrap()).unwrap();
        for s in sectors(&mat.bz) {
            let m0 = mat.basis.modes[s[0]].index.sphere_m().unwrap();
            assert!(s.iter().all(|&i| mat.basis.modes[i].index.sphere_m() == Some(m0)));
        }
    }

    #[test]
    fn dump_layout() {
        let mat = assemble_interval(&build_interval_basis(3, 1.0).unwrap()).unwrap();
        let mut buf = Vec::new();
        mat.write_dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 8 + 16 + 5 * 9 * 16);
    }
}
