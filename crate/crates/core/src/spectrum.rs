//! Eigenvalues and bilinearly normalized eigenfunctions of `Lambda + i g B`.

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::linalg::{eig_left, norm_fro};
use crate::matrices::{sectors, OperatorMatrices};

/// `Lambda + i g B` for one gradient direction, with its block structure.
#[derive(Debug, Clone)]
pub struct GradientOperator {
    pub basis: BasisSet,
    pub lambda: Vec<f64>,
    pub b: Mat<C64>,
    /// Connected components of the coupling pattern of `b`.
    pub sectors: Vec<Vec<usize>>,
    /// Sector id of each basis mode.
    pub sector_of: Vec<usize>,
    /// `W` as a signed permutation: column `k` holds `w_perm[k].1` in row
    /// `w_perm[k].0`.
    pub w_perm: Vec<(usize, f64)>,
}

impl GradientOperator {
    pub fn new(mat: &OperatorMatrices, b: Mat<C64>) -> Result<Self> {
        let n = mat.dim();
        if b.nrows() != n || b.ncols() != n {
            return Err(Error::Mismatch(format!(
                "gradient matrix is {}x{}, basis has {n} modes",
                b.nrows(),
                b.ncols()
            )));
        }
        let mut w_perm = Vec::with_capacity(n);
        for k in 0..n {
            let nz: Vec<usize> = (0..n).filter(|&i| mat.w[(i, k)].norm() > 0.0).collect();
            if nz.len() != 1 || mat.w[(nz[0], k)].im != 0.0 {
                return Err(Error::Mismatch("overlap matrix is not a signed permutation".into()));
            }
            w_perm.push((nz[0], mat.w[(nz[0], k)].re));
        }
        let sectors = sectors(&b);
        let mut sector_of = vec![0; n];
        for (s, members) in sectors.iter().enumerate() {
            for &i in members {
                sector_of[i] = s;
            }
        }
        Ok(Self {
            basis: mat.basis.clone(),
            lambda: mat.lambda.clone(),
            b,
            sectors,
            sector_of,
            w_perm,
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Full matrix `Lambda + i g B`.
    pub fn matrix(&self, g: f64) -> Mat<C64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| self.entry(i, j, g))
    }

    /// Restriction of `Lambda + i g B` to the modes listed in `idx`.
    pub fn submatrix(&self, idx: &[usize], g: f64) -> Mat<C64> {
        Mat::from_fn(idx.len(), idx.len(), |a, c| self.entry(idx[a], idx[c], g))
    }

    fn entry(&self, i: usize, j: usize, g: f64) -> C64 {
        let d = if i == j { self.lambda[i] } else { 0.0 };
        C64::new(d, 0.0) + C64::new(0.0, g) * self.b[(i, j)]
    }

    /// Bilinear product `x W y^T` of two coefficient rows.
    pub fn bilinear(&self, x: &[C64], y: &[C64]) -> C64 {
        self.w_perm
            .iter()
            .enumerate()
            .map(|(k, &(i, s))| x[i] * y[k] * s)
            .sum()
    }

    /// Sector containing the constant mode.
    pub fn constant_sector(&self) -> &[usize] {
        &self.sectors[self.sector_of[0]]
    }
}

/// Per-row diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RowFlags {
    /// Bilinear self-product (or pair determinant) fell below threshold; the
    /// row is left at unit Euclidean norm.
    pub near_branch_point: bool,
    /// Id of the degenerate class the row belongs to, if it has company.
    pub class: Option<usize>,
    /// The class had more than two members and was orthogonalized by
    /// repeated pairwise sweeps.
    pub greedy: bool,
}

/// Tuning knobs for normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub branch_threshold: f64,
    pub pair_det_threshold: f64,
    pub degeneracy_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            branch_threshold: 1e-6,
            pair_det_threshold: 1e-12,
            degeneracy_tol: 1e-8,
        }
    }
}

/// Eigenpairs at one gradient strength.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub g: f64,
    pub eigenvalues: Vec<C64>,
    /// Row `j` holds the coefficients of `v_j` in the basis.
    pub x: Mat<C64>,
    /// `<v_j, v_j>` of the unit-norm row before rescaling; for rows that were
    /// paired, the determinant of the pair's Gram matrix.
    pub self_products: Vec<C64>,
    /// Sector id of each row.
    pub sector: Vec<usize>,
    pub flags: Vec<RowFlags>,
    pub normalized: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn row(&self, j: usize) -> Vec<C64> {
        (0..self.x.ncols()).map(|k| self.x[(j, k)]).collect()
    }

    /// Reorder rows: row `j` of the result is row `perm[j]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Spectrum {
        let n = self.x.ncols();
        Spectrum {
            g: self.g,
            eigenvalues: perm.iter().map(|&p| self.eigenvalues[p]).collect(),
            x: Mat::from_fn(perm.len(), n, |j, k| self.x[(perm[j], k)]),
            self_products: perm.iter().map(|&p| self.self_products[p]).collect(),
            sector: perm.iter().map(|&p| self.sector[p]).collect(),
            flags: perm.iter().map(|&p| self.flags[p]).collect(),
            normalized: self.normalized,
        }
    }
}

/// Diagonalize sector by sector. Rows are sorted by real part, then
/// imaginary part, and have unit Euclidean norm.
pub fn diagonalize(op: &GradientOperator, g: f64) -> Result<Spectrum> {
    if !(g >= 0.0) || !g.is_finite() {
        return Err(Error::Domain(format!(
            "gradient must be finite and >= 0 (got {g}); use spectrum_at_negative_g"
        )));
    }
    let n = op.dim();
    let mut entries: Vec<(C64, usize, Vec<C64>)> = Vec::with_capacity(n);
    for (s, idx) in op.sectors.iter().enumerate() {
        let a = op.submatrix(idx, g);
        let (vals, x) = eig_left(&a)?;
        for (j, v) in vals.into_iter().enumerate() {
            let mut row = vec![C64::new(0.0, 0.0); n];
            for (c, &k) in idx.iter().enumerate() {
                row[k] = x[(j, c)];
            }
            entries.push((v, s, row));
        }
    }
    entries.sort_by(|a, b| {
        a.0.re
            .total_cmp(&b.0.re)
            .then(a.0.im.total_cmp(&b.0.im))
            .then(a.1.cmp(&b.1))
    });
    let x = Mat::from_fn(n, n, |j, k| entries[j].2[k]);
    let mut spec = Spectrum {
        g,
        eigenvalues: entries.iter().map(|e| e.0).collect(),
        x,
        self_products: vec![C64::new(0.0, 0.0); n],
        sector: entries.iter().map(|e| e.1).collect(),
        flags: vec![RowFlags::default(); n],
        normalized: false,
    };
    for j in 0..n {
        let r = spec.row(j);
        spec.self_products[j] = op.bilinear(&r, &r);
    }
    Ok(spec)
}

/// Largest relative left-eigenpair residual `|x A - lambda x| / |A|_F`.
pub fn max_residual(op: &GradientOperator, spec: &Spectrum) -> f64 {
    let a = op.matrix(spec.g);
    let scale = norm_fro(&a).max(1e-300);
    let xa = &spec.x * &a;
    let mut worst: f64 = 0.0;
    for j in 0..spec.len() {
        let mut r = 0.0;
        let mut nx = 0.0;
        for k in 0..spec.x.ncols() {
            r += (xa[(j, k)] - spec.eigenvalues[j] * spec.x[(j, k)]).norm_sqr();
            nx += spec.x[(j, k)].norm_sqr();
        }
        worst = worst.max(r.sqrt() / (scale * nx.sqrt().max(1e-300)));
    }
    worst
}

/// The full bilinear Gram matrix `X W X^T`.
pub fn bilinear_gram(op: &GradientOperator, spec: &Spectrum) -> Mat<C64> {
    let rows: Vec<Vec<C64>> = (0..spec.len()).map(|j| spec.row(j)).collect();
    let n = rows.len();
    Mat::from_fn(n, n, |a, b| op.bilinear(&rows[a], &rows[b]))
}

/// Coefficients `(a, b; c, d)` making `T C T^T = I` for a 2x2 complex
/// symmetric Gram matrix `C`, or `None` if the transform is singular.
pub fn pair_transform(c11: C64, c12: C64, c22: C64) -> Option<[[C64; 2]; 2]> {
    let one = C64::new(1.0, 0.0);
    let scale = c11.norm() + c22.norm() + c12.norm();
    if !(scale > 0.0) {
        return None;
    }
    let diff = c11 - c22;
    let alpha = if c12.norm() <= 1e-15 * scale {
        C64::new(0.0, 0.0)
    } else if diff.norm() <= 1e-14 * c12.norm() {
        C64::new(std::f64::consts::FRAC_PI_4, 0.0)
    } else {
        0.5 * (2.0 * c12 / diff).atan()
    };
    let (co, si) = (alpha.cos(), alpha.sin());
    let (c2, s2) = ((2.0 * alpha).cos(), (2.0 * alpha).sin());
    let (a2, b2) = if c2.norm() >= s2.norm() {
        (
            (c11 * co * co - c22 * si * si) / c2,
            (c22 * co * co - c11 * si * si) / c2,
        )
    } else {
        let mean = 0.5 * (c11 + c22);
        (mean + c12 / s2, mean - c12 / s2)
    };
    let (ia, ib) = (one / a2.sqrt(), one / b2.sqrt());
    let t = [[co * ia, si * ia], [-si * ib, co * ib]];
    if t.iter().flatten().all(|z| z.is_finite()) {
        Some(t)
    } else {
        None
    }
}

/// Orthonormalize two rows with respect to the bilinear form.
pub fn orthogonalize_pair(
    op: &GradientOperator,
    vj: &[C64],
    vk: &[C64],
) -> Option<(Vec<C64>, Vec<C64>)> {
    let c11 = op.bilinear(vj, vj);
    let c12 = op.bilinear(vj, vk);
    let c22 = op.bilinear(vk, vk);
    let t = pair_transform(c11, c12, c22)?;
    let a: Vec<C64> = vj.iter().zip(vk).map(|(p, q)| t[0][0] * p + t[0][1] * q).collect();
    let b: Vec<C64> = vj.iter().zip(vk).map(|(p, q)| t[1][0] * p + t[1][1] * q).collect();
    Some((a, b))
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

fn degenerate_classes(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let mut class = vec![i];
        seen[i] = true;
        let mut q = 0;
        while q < class.len() {
            let a = class[q];
            for j in 0..n {
                if !seen[j] && close(values[a], values[j], tol) {
                    seen[j] = true;
                    class.push(j);
                }
            }
            q += 1;
        }
        class.sort_unstable();
        out.push(class);
    }
    out
}

fn fix_sign(row: &mut [C64]) {
    let pivot = if row[0].norm() >= 1e-12 {
        row[0]
    } else {
        *row
            .iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(&C64::new(1.0, 0.0))
    };
    if pivot.re < 0.0 {
        for z in row.iter_mut() {
            *z = -*z;
        }
    }
}

/// Bilinear normalization with degenerate-class orthogonalization.
pub fn normalize(op: &GradientOperator, raw: &Spectrum, opts: &SpectrumOptions) -> Spectrum {
    let mut spec = raw.clone();
    let n = spec.len();
    let mut rows: Vec<Vec<C64>> = (0..n).map(|j| spec.row(j)).collect();
    for (cid, class) in degenerate_classes(&spec.eigenvalues, opts.degeneracy_tol)
        .into_iter()
        .enumerate()
    {
        match class.len() {
            1 => {
                let j = class[0];
                let s = op.bilinear(&rows[j], &rows[j]);
                spec.self_products[j] = s;
                if s.norm() < opts.branch_threshold {
                    spec.flags[j].near_branch_point = true;
                } else {
                    let f = C64::new(1.0, 0.0) / s.sqrt();
                    rows[j].iter_mut().for_each(|z| *z *= f);
                }
            }
            2 => {
                let (j, k) = (class[0], class[1]);
                let c11 = op.bilinear(&rows[j], &rows[j]);
                let c12 = op.bilinear(&rows[j], &rows[k]);
                let c22 = op.bilinear(&rows[k], &rows[k]);
                let det = c11 * c22 - c12 * c12;
                spec.self_products[j] = det;
                spec.self_products[k] = det;
                spec.flags[j].class = Some(cid);
                spec.flags[k].class = Some(cid);
                let done = if det.norm() < opts.pair_det_threshold {
                    false
                } else if let Some((a, b)) = orthogonalize_pair(op, &rows[j], &rows[k]) {
                    rows[j] = a;
                    rows[k] = b;
                    true
                } else {
                    false
                };
                if !done {
                    spec.flags[j].near_branch_point = true;
                    spec.flags[k].near_branch_point = true;
                }
            }
            _ => {
                for &j in &class {
                    spec.flags[j].class = Some(cid);
                    spec.flags[j].greedy = true;
                }
                let ok = orthogonalize_class(op, &mut rows, &class, opts);
                for &j in &class {
                    spec.self_products[j] = op.bilinear(&rows[j], &rows[j]);
                    if !ok {
                        spec.flags[j].near_branch_point = true;
                    }
                }
            }
        }
    }
    for (j, row) in rows.iter_mut().enumerate() {
        if spec.flags[j].near_branch_point {
            let nrm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            row.iter_mut().for_each(|z| *z /= nrm);
        }
        fix_sign(row);
    }
    spec.x = Mat::from_fn(n, op.dim(), |j, k| rows[j][k]);
    spec.normalized = true;
    spec
}

/// Pairwise sweeps over a class of three or more rows, falling back to
/// bilinear Gram-Schmidt when the sweeps stall.
fn orthogonalize_class(
    op: &GradientOperator,
    rows: &mut [Vec<C64>],
    class: &[usize],
    opts: &SpectrumOptions,
) -> bool {
    let off = |rows: &[Vec<C64>]| -> f64 {
        let mut worst: f64 = 0.0;
        for (p, &a) in class.iter().enumerate() {
            for &b in &class[p..] {
                let v = op.bilinear(&rows[a], &rows[b]);
                let target = if a == b { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                worst = worst.max((v - target).norm());
            }
        }
        worst
    };
    for _ in 0..30 {
        if off(rows) < 1e-12 {
            return true;
        }
        for (p, &a) in class.iter().enumerate() {
            for &b in &class[p + 1..] {
                if op.bilinear(&rows[a], &rows[b]).norm() < 1e-13 {
                    continue;
                }
                if let Some((u, v)) = orthogonalize_pair(op, &rows[a], &rows[b]) {
                    rows[a] = u;
                    rows[b] = v;
                }
            }
        }
        for &a in class {
            let s = op.bilinear(&rows[a], &rows[a]);
            if s.norm() > opts.branch_threshold {
                let f = C64::new(1.0, 0.0) / s.sqrt();
                rows[a].iter_mut().for_each(|z| *z *= f);
            }
        }
    }
    if off(rows) < 1e-10 {
        return true;
    }
    // bilinear modified Gram-Schmidt
    for (p, &a) in class.iter().enumerate() {
        for &b in &class[..p] {
            let proj = op.bilinear(&rows[a], &rows[b]);
            let rb = rows[b].clone();
            rows[a].iter_mut().zip(&rb).for_each(|(z, w)| *z -= proj * w);
        }
        let s = op.bilinear(&rows[a], &rows[a]);
        if s.norm() < opts.branch_threshold {
            return false;
        }
        let f = C64::new(1.0, 0.0) / s.sqrt();
        rows[a].iter_mut().for_each(|z| *z *= f);
    }
    off(rows) < 1e-8
}

/// Diagonalize and normalize.
pub fn compute(op: &GradientOperator, g: f64, opts: &SpectrumOptions) -> Result<Spectrum> {
    Ok(normalize(op, &diagonalize(op, g)?, opts))
}

/// Spectrum of `Lambda - i g B` from the one at `+g`: eigenvalues conjugated
/// and `X -> conj(X) W`, so that `v_j^(-g) = conj(v_j^(g))` pointwise.
pub fn spectrum_at_negative_g(op: &GradientOperator, spec: &Spectrum) -> Spectrum {
    let n = op.dim();
    let mut out = spec.clone();
    out.g = -spec.g;
    out.eigenvalues = spec.eigenvalues.iter().map(|z| z.conj()).collect();
    out.self_products = spec.self_products.iter().map(|z| z.conj()).collect();
    out.x = Mat::from_fn(spec.len(), n, |j, k| {
        let (i, s) = op.w_perm[k];
        spec.x[(j, i)].conj() * s
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::*;
    use crate::matrices::*;

    fn sphere_z(n: usize) -> GradientOperator {
        let mat = assemble(&build_sphere_basis(n).unwrap()).unwrap();
        let b = mat.bz.clone();
        GradientOperator::new(&mat, b).unwrap()
    }

    #[test]
    fn zero_gradient_is_laplacian() {
        let op = sphere_z(40);
        let s = compute(&op, 0.0, &SpectrumOptions::default()).unwrap();
        let mut lam = op.lambda.clone();
        lam.sort_by(f64::total_cmp);
        for (a, b) in s.eigenvalues.iter().zip(&lam) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
        let gram = bilinear_gram(&op, &s);
        for i in 0..s.len() {
            for j in 0..s.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn pair_transform_cases() {
        let one = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        let t = pair_transform(one, z, one).unwrap();
        assert!((t[0][0] - one).norm() < 1e-15 && t[0][1].norm() < 1e-15);
        assert!((t[1][1] - one).norm() < 1e-15 && t[1][0].norm() < 1e-15);
        let two = C64::new(2.0, 0.0);
        let t = pair_transform(two, z, two).unwrap();
        assert!((t[0][0] - one / 2.0f64.sqrt()).norm() < 1e-15);
        assert!((t[1][1] - one / 2.0f64.sqrt()).norm() < 1e-15);
    }

    fn apply(t: [[C64; 2]; 2], c: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out[i][j] += t[i][k] * c[k][l] * t[j][l];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn pair_transform_equal_diagonal() {
        // the +-m situation: zero diagonal
        let c12 = C64::new(0.3, -0.7);
        let z = C64::new(0.0, 0.0);
        let t = pair_transform(z, c12, z).unwrap();
        let g = apply(t, [[z, c12], [c12, z]]);
        assert!((g[0][0] - 1.0).norm() < 1e-13 && (g[1][1] - 1.0).norm() < 1e-13);
        assert!(g[0][1].norm() < 1e-13);
    }

    #[test]
    fn raw_sphere_rows_keep_m() {
        let op = sphere_z(60);
        let raw = diagonalize(&op, 3.0).unwrap();
        for j in 0..raw.len() {
            let ms: std::collections::BTreeSet<i32> = (0..op.dim())
                .filter(|&k| raw.x[(j, k)].norm() > 0.0)
                .map(|k| op.basis.modes[k].index.sphere_m().unwrap())
                .collect();
            assert_eq!(ms.len(), 1);
        }
    }
}
