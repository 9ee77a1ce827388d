//! Ordered Neumann Laplacian eigenbases for the supported domains.
//!
//! Lengths are measured in units of the domain size: the radius for the
//! sphere, disk and capped cylinder, and the height for the interval. The
//! cylinder keeps its aspect ratio `H/R` as a parameter.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{
    bessel_jn, spherical_jn, zeros_dj_below, zeros_dj_spherical_below,
};

/// Relative tolerance used to group equal Laplacian eigenvalues.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Domain family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Unit ball, complex `e^{im phi}` harmonics.
    Sphere,
    /// Axisymmetric (`m = 0`) sector of the ball.
    ReducedSphere,
    /// Unit disk, real `cos`/`sin` angular factors.
    Disk,
    /// Interval `(-H/2, H/2)`.
    Interval,
    /// Cylinder of unit radius and height `H/R`, capped at both ends.
    Cylinder,
}

impl Geometry {
    /// Whether the basis functions are real, so that the bilinear overlap
    /// matrix is the identity.
    pub fn is_real(self) -> bool {
        !matches!(self, Geometry::Sphere)
    }
}

/// Multi-index of one Laplacian eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisIndex {
    /// `u_{nkm}`; the reduced sphere uses `m = 0` only.
    Sphere { n: u32, k: u32, m: i32 },
    /// `u^d_{nkl}`, `l = 1` for `cos`, `l = 2` for `sin`.
    Disk { n: u32, k: u32, l: u8 },
    /// Cosine mode `m` of the interval.
    Interval { m: u32 },
    /// `u_{nklm} = u^d_{nkl} * (interval mode m)`.
    Cylinder { n: u32, k: u32, l: u8, m: u32 },
}

impl BasisIndex {
    /// Compact label, negative `m` in parentheses.
    pub fn label(&self) -> String {
        match *self {
            BasisIndex::Sphere { n, k, m } => {
                if m < 0 {
                    format!("{n}{k}({m})")
                } else {
                    format!("{n}{k}{m}")
                }
            }
            BasisIndex::Disk { n, k, l } => format!("{n}{k}{l}"),
            BasisIndex::Interval { m } => format!("{m}"),
            BasisIndex::Cylinder { n, k, l, m } => format!("{n}{k}{l}{m}"),
        }
    }

    /// Azimuthal quantum number `m` for sphere modes.
    pub fn sphere_m(&self) -> Option<i32> {
        match *self {
            BasisIndex::Sphere { m, .. } => Some(m),
            _ => None,
        }
    }

    fn tie_key(&self) -> (u32, u32, u32, u32) {
        match *self {
            BasisIndex::Sphere { n, k, m } => {
                let rank = if m == 0 {
                    0
                } else if m < 0 {
                    2 * m.unsigned_abs() - 1
                } else {
                    2 * m as u32
                };
                (n, k, rank, 0)
            }
            BasisIndex::Disk { n, k, l } => (n, k, l as u32, 0),
            BasisIndex::Interval { m } => (m, 0, 0, 0),
            BasisIndex::Cylinder { n, k, l, m } => (n, k, l as u32, m),
        }
    }
}

/// One entry of an ordered basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: BasisIndex,
    /// Radial wavenumber `alpha_{nk}`; zero for the constant mode and for
    /// interval modes.
    pub alpha: f64,
    /// Dimensionless Laplacian eigenvalue.
    pub eigenvalue: f64,
}

/// Ordered, truncated Laplacian eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    pub geometry: Geometry,
    /// `H/R` for the cylinder, `H` for the interval, 1 otherwise.
    pub aspect: f64,
    /// Size requested by the caller; `modes.len()` may be larger so that no
    /// degeneracy class is cut.
    pub requested: usize,
    pub modes: Vec<Mode>,
    /// Contiguous ranges of equal eigenvalues.
    pub classes: Vec<Range<usize>>,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    pub fn indices(&self) -> Vec<BasisIndex> {
        self.modes.iter().map(|m| m.index).collect()
    }

    /// Position of a multi-index in the ordering.
    pub fn position(&self, index: BasisIndex) -> Option<usize> {
        self.modes.iter().position(|m| m.index == index)
    }

    /// Degeneracy class containing entry `i`.
    pub fn class_of(&self, i: usize) -> Range<usize> {
        self.classes
            .iter()
            .find(|r| r.contains(&i))
            .cloned()
            .unwrap_or(i..i + 1)
    }

    /// Whether `p` lies in the closed domain.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let eps = 1e-12;
        match self.geometry {
            Geometry::Sphere | Geometry::ReducedSphere => {
                p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 1.0 + eps
            }
            Geometry::Disk => p[0] * p[0] + p[1] * p[1] <= 1.0 + eps,
            Geometry::Interval => p[2].abs() <= 0.5 * self.aspect + eps,
            Geometry::Cylinder => {
                p[0] * p[0] + p[1] * p[1] <= 1.0 + eps && p[2].abs() <= 0.5 * self.aspect + eps
            }
        }
    }

    /// Volume (area, length) of the domain.
    pub fn measure(&self) -> f64 {
        match self.geometry {
            Geometry::Sphere | Geometry::ReducedSphere => 4.0 * PI / 3.0,
            Geometry::Disk => PI,
            Geometry::Interval => self.aspect,
            Geometry::Cylinder => PI * self.aspect,
        }
    }

    /// Value of basis function `i` at `p = (x, y, z)`. The disk uses `(x, y)`
    /// and the interval uses `z`. Points outside the domain are not rejected.
    pub fn eval_mode(&self, i: usize, p: [f64; 3]) -> C64 {
        let mode = &self.modes[i];
        match mode.index {
            BasisIndex::Sphere { n, m, .. } => {
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                if n == 0 && mode.alpha == 0.0 {
                    return C64::new((3.0 / (4.0 * PI)).sqrt(), 0.0);
                }
                let radial = sphere_radial_norm(n, mode.alpha) * spherical_jn(n, mode.alpha * r);
                let (ct, phi) = if r == 0.0 {
                    (1.0, 0.0)
                } else {
                    ((p[2] / r).clamp(-1.0, 1.0), p[1].atan2(p[0]))
                };
                radial * spherical_harmonic(n, m, ct, phi)
            }
            BasisIndex::Disk { n, l, .. } => C64::new(disk_value(n, l, mode.alpha, p[0], p[1]), 0.0),
            BasisIndex::Interval { m } => C64::new(interval_value(m, self.aspect, p[2]), 0.0),
            BasisIndex::Cylinder { n, l, m, .. } => C64::new(
                disk_value(n, l, mode.alpha, p[0], p[1]) * interval_value(m, self.aspect, p[2]),
                0.0,
            ),
        }
    }
}

/// `c` such that `c * j_n(alpha r)` has unit `L2` norm on `[0,1]` with weight `r^2`.
pub(crate) fn sphere_radial_norm(n: u32, alpha: f64) -> f64 {
    let nn = (n * (n + 1)) as f64;
    (2.0f64).sqrt() * alpha / (spherical_jn(n, alpha) * (alpha * alpha - nn).sqrt())
}

/// `beta_{nk}` of the sphere matrix elements.
pub(crate) fn sphere_beta(n: u32, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return (1.5f64).sqrt();
    }
    let nf = n as f64;
    ((2.0 * nf + 1.0) * alpha * alpha / (alpha * alpha - nf * (nf + 1.0))).sqrt()
}

/// `beta_{nk}` of the disk matrix elements.
pub(crate) fn disk_beta(n: u32, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let nf = n as f64;
    alpha / (alpha * alpha - nf * nf).sqrt()
}

fn disk_value(n: u32, l: u8, alpha: f64, x: f64, y: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0 / PI.sqrt();
    }
    let r = (x * x + y * y).sqrt();
    let theta = y.atan2(x);
    let pref = if n == 0 { 1.0 } else { 2.0f64.sqrt() } / PI.sqrt();
    let ang = if l == 1 { (n as f64 * theta).cos() } else { (n as f64 * theta).sin() };
    pref * disk_beta(n, alpha) / bessel_jn(n, alpha) * bessel_jn(n, alpha * r) * ang
}

fn interval_value(m: u32, h: f64, z: f64) -> f64 {
    let pref = if m == 0 { 1.0 } else { 2.0f64.sqrt() } / h.sqrt();
    pref * (PI * m as f64 * (z + 0.5 * h) / h).cos()
}

/// Complex spherical harmonic with the Condon-Shortley phase.
pub fn spherical_harmonic(n: u32, m: i32, cos_theta: f64, phi: f64) -> C64 {
    let am = m.unsigned_abs();
    if am > n {
        return C64::new(0.0, 0.0);
    }
    let plm = assoc_legendre(n, am, cos_theta);
    // (n-|m|)! / (n+|m|)!
    let mut ratio = 1.0;
    for t in (n - am + 1)..=(n + am) {
        ratio /= t as f64;
    }
    let norm = ((2 * n + 1) as f64 / (4.0 * PI) * ratio).sqrt();
    let y = C64::from_polar(norm * plm, am as f64 * phi);
    if m >= 0 {
        y
    } else if am % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    }
}

/// `P_n^m(x)` for `m >= 0`, including the `(-1)^m` phase.
pub fn assoc_legendre(n: u32, m: u32, x: f64) -> f64 {
    if m > n {
        return 0.0;
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for i in 1..=m {
        pmm *= -((2 * i - 1) as f64) * s;
    }
    if n == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    if n == m + 1 {
        return pm1;
    }
    let mut pm0 = pmm;
    for l in (m + 2)..=n {
        let pl = ((2 * l - 1) as f64 * x * pm1 - (l + m - 1) as f64 * pm0) / (l - m) as f64;
        pm0 = pm1;
        pm1 = pl;
    }
    pm1
}

fn compare_modes(a: &Mode, b: &Mode) -> Ordering {
    a.eigenvalue
        .total_cmp(&b.eigenvalue)
        .then_with(|| a.index.tie_key().cmp(&b.index.tie_key()))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERACY_TOL * a.abs().max(b.abs())
}

fn group_classes(modes: &[Mode]) -> Vec<Range<usize>> {
    let mut classes = Vec::new();
    let mut start = 0;
    for i in 1..=modes.len() {
        if i == modes.len() || !close(modes[i].eigenvalue, modes[start].eigenvalue) {
            classes.push(start..i);
            start = i;
        }
    }
    classes
}

/// Enumerate all modes with eigenvalue `<= cutoff`.
type Enumerator<'a> = dyn Fn(f64) -> Result<Vec<Mode>> + 'a;

/// Grow the eigenvalue cutoff until the first `n` modes (plus the rest of the
/// last class) are certainly enumerated.
fn build_ordered(geometry: Geometry, aspect: f64, n: usize, enumerate: &Enumerator) -> Result<BasisSet> {
    if n == 0 {
        return Err(Error::Domain("basis size must be >= 1".into()));
    }
    let mut cutoff = 30.0f64.max(4.0 * n as f64);
    loop {
        let mut modes = enumerate(cutoff)?;
        modes.sort_by(compare_modes);
        if modes.len() > n {
            let mut end = n;
            while end < modes.len() && close(modes[end].eigenvalue, modes[n - 1].eigenvalue) {
                end += 1;
            }
            let last = modes[end - 1].eigenvalue;
            // every mode of the last class lies safely below the cutoff
            if end < modes.len() && last < cutoff * (1.0 - 1e-8) {
                modes.truncate(end);
                let classes = group_classes(&modes);
                return Ok(BasisSet {
                    geometry,
                    aspect,
                    requested: n,
                    modes,
                    classes,
                });
            }
        }
        cutoff *= 2.0;
        if cutoff > 1e9 {
            return Err(Error::Convergence("basis enumeration did not terminate".into()));
        }
    }
}

/// `(n, k, alpha)` for all sphere families with `alpha^2 <= cutoff`.
fn sphere_families(cutoff: f64) -> Result<Vec<(u32, u32, f64)>> {
    let lim = cutoff.sqrt();
    let mut out = vec![(0, 0, 0.0)];
    let mut n = 0u32;
    loop {
        let nf = n as f64;
        if nf * (nf + 1.0) > cutoff {
            break;
        }
        let zeros = zeros_dj_spherical_below(n, lim)?.zeros;
        let offset = if n == 0 { 1 } else { 0 };
        for (i, &a) in zeros.iter().enumerate() {
            out.push((n, i as u32 + offset, a));
        }
        n += 1;
    }
    Ok(out)
}

/// `(n, k, alpha)` for all disk families with `alpha^2 <= cutoff`.
fn disk_families(cutoff: f64) -> Result<Vec<(u32, u32, f64)>> {
    let lim = cutoff.sqrt();
    let mut out = vec![(0, 0, 0.0)];
    let mut n = 0u32;
    loop {
        let nf = n as f64;
        if nf * nf > cutoff {
            break;
        }
        let zeros = zeros_dj_below(n, lim)?.zeros;
        let offset = if n == 0 { 1 } else { 0 };
        for (i, &a) in zeros.iter().enumerate() {
            out.push((n, i as u32 + offset, a));
        }
        n += 1;
    }
    Ok(out)
}

/// Full sphere basis of `n` modes (unit radius).
pub fn build_sphere_basis(n: usize) -> Result<BasisSet> {
    build_ordered(Geometry::Sphere, 1.0, n, &|cutoff| {
        let mut modes = Vec::new();
        for (nn, k, a) in sphere_families(cutoff)? {
            for m in -(nn as i32)..=(nn as i32) {
                modes.push(Mode {
                    index: BasisIndex::Sphere { n: nn, k, m },
                    alpha: a,
                    eigenvalue: a * a,
                });
            }
        }
        Ok(modes)
    })
}

/// Axisymmetric sphere basis of `n` modes.
pub fn build_reduced_sphere_basis(n: usize) -> Result<BasisSet> {
    build_ordered(Geometry::ReducedSphere, 1.0, n, &|cutoff| {
        Ok(sphere_families(cutoff)?
            .into_iter()
            .map(|(nn, k, a)| Mode {
                index: BasisIndex::Sphere { n: nn, k, m: 0 },
                alpha: a,
                eigenvalue: a * a,
            })
            .collect())
    })
}

/// Disk basis of `n` modes (unit radius).
pub fn build_disk_basis(n: usize) -> Result<BasisSet> {
    build_ordered(Geometry::Disk, 1.0, n, &|cutoff| {
        let mut modes = Vec::new();
        for (nn, k, a) in disk_families(cutoff)? {
            for l in 1..=if nn == 0 { 1 } else { 2 } {
                modes.push(Mode {
                    index: BasisIndex::Disk { n: nn, k, l },
                    alpha: a,
                    eigenvalue: a * a,
                });
            }
        }
        Ok(modes)
    })
}

/// Interval basis of `n` cosine modes on `(-h/2, h/2)`.
pub fn build_interval_basis(n: usize, h: f64) -> Result<BasisSet> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("interval height must be positive, got {h}")));
    }
    let modes: Vec<Mode> = (0..n as u32)
        .map(|m| Mode {
            index: BasisIndex::Interval { m },
            alpha: 0.0,
            eigenvalue: (PI * m as f64 / h).powi(2),
        })
        .collect();
    if modes.is_empty() {
        return Err(Error::Domain("basis size must be >= 1".into()));
    }
    let classes = group_classes(&modes);
    Ok(BasisSet {
        geometry: Geometry::Interval,
        aspect: h,
        requested: n,
        modes,
        classes,
    })
}

/// Capped cylinder basis of `n` modes, lengths in units of `r`.
pub fn build_cylinder_basis(n: usize, r: f64, h: f64) -> Result<BasisSet> {
    if !(r > 0.0) || !(h > 0.0) {
        return Err(Error::Domain(format!("cylinder dimensions must be positive, got R={r}, H={h}")));
    }
    let aspect = h / r;
    build_ordered(Geometry::Cylinder, aspect, n, &|cutoff| {
        let mut modes = Vec::new();
        let fams = disk_families(cutoff)?;
        let mut m = 0u32;
        loop {
            let shift = (PI * m as f64 / aspect).powi(2);
            if shift > cutoff {
                break;
            }
            for &(nn, k, a) in &fams {
                let ev = a * a + shift;
                if ev > cutoff {
                    continue;
                }
                for l in 1..=if nn == 0 { 1 } else { 2 } {
                    modes.push(Mode {
                        index: BasisIndex::Cylinder { n: nn, k, l, m },
                        alpha: a,
                        eigenvalue: ev,
                    });
                }
            }
            m += 1;
        }
        Ok(modes)
    })
}
