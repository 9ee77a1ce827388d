//! Branch (exceptional) points: detection from a sweep, bisection
//! refinement and order classification.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eig_left;
use crate::specfun::interval_branch_constants;
use crate::spectrum::{diagonalize, GradientOperator};
use crate::sweep::BranchSweep;

/// Thresholds for detection and refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPointOptions {
    /// `|Im lambda|` below this counts as real.
    pub real_floor: f64,
    /// `|Im lambda|` above this counts as complex.
    pub complex_threshold: f64,
    /// Final bisection bracket width.
    pub tolerance: f64,
    pub cluster_radius: f64,
    /// A point counts only if its pair is still complex this far past it.
    pub persistence: f64,
}

impl Default for BranchPointOptions {
    fn default() -> Self {
        Self { real_floor: 1e-9, complex_threshold: 1e-6, tolerance: 1e-9, cluster_radius: 1e-3, persistence: 1e-2 }
    }
}

/// Coarse bracket `[g_lo, g_hi]` around one real-to-complex transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub g_lo: f64,
    pub g_hi: f64,
    pub branches: Vec<usize>,
    pub sectors: Vec<usize>,
    /// Eigenvalue of the first listed branch at `g_hi`.
    pub value: C64,
}

/// A refined branch point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub g_star: f64,
    pub order: usize,
    pub branches: Vec<usize>,
    /// Common eigenvalue at `g_star`.
    pub value: C64,
    pub gap_min: f64,
    /// Smallest `|x x^T|` of the merging unit rows within their sector.
    pub self_product_min: f64,
    /// Principal angle between the merging rows at the real side of the
    /// final bracket.
    pub angle: f64,
    pub bracket_width: f64,
    /// False when the order is not 2 or 4.
    pub order_expected: bool,
}

/// One bracket per real-to-complex transition of the first `tracked`
/// branches; transitions of merging partners are grouped.
pub fn detect(sweep: &BranchSweep, tracked: usize, opts: &BranchPointOptions) -> Vec<Bracket> {
    let tracked = tracked.min(sweep.branch_count());
    let mut raw: Vec<(usize, usize, usize)> = Vec::new(); // (branch, p_lo, p_hi)
    for j in 0..tracked {
        let mut last_real: Option<usize> = None;
        for (p, v) in sweep.values.iter().enumerate() {
            let im = v[j].im.abs();
            if im < opts.real_floor {
                last_real = Some(p);
            } else if im > opts.complex_threshold {
                if let Some(lo) = last_real.take() {
                    raw.push((j, lo, p));
                }
            }
        }
    }
    let mut out: Vec<Bracket> = Vec::new();
    for (j, lo, hi) in raw {
        let (g_lo, g_hi) = (sweep.grid[lo], sweep.grid[hi]);
        let value = sweep.values[hi][j];
        let scale = value.norm().max(1.0);
        let same = out.iter_mut().find(|b| {
            b.g_lo <= g_hi && g_lo <= b.g_hi && (b.value.re - value.re).abs() <= 1e-3 * scale
        });
        match same {
            Some(b) => {
                b.g_lo = b.g_lo.max(g_lo);
                b.g_hi = b.g_hi.min(g_hi);
                b.branches.push(j);
                let s = sweep.sector_of_branch[j];
                if !b.sectors.contains(&s) {
                    b.sectors.push(s);
                }
            }
            None => out.push(Bracket {
                g_lo,
                g_hi,
                branches: vec![j],
                sectors: vec![sweep.sector_of_branch[j]],
                value,
            }),
        }
    }
    out.sort_by(|a, b| a.g_lo.total_cmp(&b.g_lo));
    out
}

struct SectorState {
    vals: Vec<C64>,
    rows: Vec<Vec<C64>>,
}

fn sector_spectrum(op: &GradientOperator, sector: usize, g: f64) -> Result<SectorState> {
    let a = op.submatrix(&op.sectors[sector], g);
    let (vals, x) = eig_left(&a)?;
    let n = vals.len();
    let rows = (0..n).map(|j| (0..n).map(|k| x[(j, k)]).collect()).collect();
    Ok(SectorState { vals, rows })
}

/// Indices of the two eigenvalues with real part closest to `target`.
fn nearest_pair(vals: &[C64], target: f64) -> Option<(usize, usize)> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| (vals[a].re - target).abs().total_cmp(&(vals[b].re - target).abs()));
    (idx.len() >= 2).then(|| (idx[0], idx[1]))
}

fn is_complex(st: &SectorState, target: f64, threshold: f64) -> Option<(bool, f64)> {
    let (a, b) = nearest_pair(&st.vals, target)?;
    let c = st.vals[a].im.abs().max(st.vals[b].im.abs()) > threshold;
    Some((c, 0.5 * (st.vals[a].re + st.vals[b].re)))
}

/// Bisection on the real-to-complex transition of the pair closest to
/// `bracket.value` in the sector of its first branch. Returns the final
/// `(g_lo, g_hi)`.
pub fn refine(op: &GradientOperator, bracket: &Bracket, opts: &BranchPointOptions) -> Result<(f64, f64)> {
    let sector = *bracket
        .sectors
        .first()
        .ok_or_else(|| Error::Domain("bracket without sector".into()))?;
    if op.sectors[sector].len() < 2 {
        return Err(Error::Domain("a single-mode sector has no branch point".into()));
    }
    let (mut lo, mut hi) = (bracket.g_lo, bracket.g_hi);
    let mut target = bracket.value.re;
    let check = |g: f64, target: f64| -> Result<(bool, f64)> {
        let st = sector_spectrum(op, sector, g)?;
        is_complex(&st, target, opts.complex_threshold)
            .ok_or_else(|| Error::Domain("sector too small".into()))
    };
    if check(lo, target)?.0 || !check(hi, target)?.0 {
        // non-monotone indicator: scan for a clean sub-bracket
        let steps = 16;
        let mut prev = (lo, check(lo, target)?.0);
        let mut found = None;
        for i in 1..=steps {
            let g = lo + (hi - lo) * i as f64 / steps as f64;
            let (c, _) = check(g, target)?;
            if !prev.1 && c {
                found = Some((prev.0, g));
                break;
            }
            prev = (g, c);
        }
        let (a, b) = found.ok_or_else(|| {
            Error::Convergence(format!("no real-to-complex transition in [{lo}, {hi}]"))
        })?;
        lo = a;
        hi = b;
    }
    while hi - lo > opts.tolerance {
        let mid = 0.5 * (lo + hi);
        let (c, re) = check(mid, target)?;
        if c {
            hi = mid;
            target = re;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Number of eigenvalues (all sectors) within `radius` of the eigenvalue
/// closest to `near` at `g_star`.
pub fn classify_order(op: &GradientOperator, g_star: f64, near: C64, radius: f64) -> Result<usize> {
    let s = diagonalize(op, g_star)?;
    let centre = s
        .eigenvalues
        .iter()
        .copied()
        .min_by(|a, b| (a - near).norm().total_cmp(&(b - near).norm()))
        .ok_or_else(|| Error::Domain("empty spectrum".into()))?;
    Ok(s.eigenvalues.iter().filter(|&&l| (l - centre).norm() <= radius).count())
}

/// Branch points found along a sweep, plus transitions that closed again
/// within the persistence window (near-crossings of a truncated basis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPointScan {
    pub points: Vec<BranchPoint>,
    pub transient: Vec<Bracket>,
}

/// Detect, refine and classify the branch points along `sweep`.
pub fn locate(
    op: &GradientOperator,
    sweep: &BranchSweep,
    tracked: usize,
    opts: &BranchPointOptions,
) -> Result<BranchPointScan> {
    let mut out = Vec::new();
    let mut transient = Vec::new();
    for br in detect(sweep, tracked, opts) {
        let (lo, hi) = refine(op, &br, opts)?;
        let sector = br.sectors[0];
        let later = sector_spectrum(op, sector, hi + opts.persistence)?;
        match is_complex(&later, br.value.re, opts.complex_threshold) {
            Some((true, _)) => {}
            _ => {
                transient.push(Bracket { g_lo: lo, g_hi: hi, ..br });
                continue;
            }
        }
        let st = sector_spectrum(op, sector, lo)?;
        let (a, b) = nearest_pair(&st.vals, br.value.re)
            .ok_or_else(|| Error::Domain("sector too small".into()))?;
        let value = 0.5 * (st.vals[a] + st.vals[b]);
        let gap_min = (st.vals[a] - st.vals[b]).norm();
        let sym = |r: &[C64]| r.iter().map(|z| z * z).sum::<C64>().norm();
        let self_product_min = sym(&st.rows[a]).min(sym(&st.rows[b]));
        let dot: C64 = st.rows[a].iter().zip(&st.rows[b]).map(|(u, v)| u.conj() * v).sum();
        let angle = dot.norm().min(1.0).acos();
        let g_star = 0.5 * (lo + hi);
        let order = classify_order(op, g_star, value, opts.cluster_radius)?;
        let mut branches = br.branches.clone();
        branches.sort_unstable();
        out.push(BranchPoint {
            g_star,
            order,
            branches,
            value,
            gap_min,
            self_product_min,
            angle,
            bracket_width: hi - lo,
            order_expected: order == 2 || order == 4,
        });
    }
    Ok(BranchPointScan { points: out, transient })
}

/// Branch points `g_k = sqrt(3) (27/4) j_k^2` of the interval operator,
/// `j_k` the positive zeros of `J_{-2/3}`.
pub fn interval_branch_points_analytic(count: usize) -> Result<Vec<f64>> {
    Ok(interval_branch_constants(count)?
        .into_iter()
        .map(|j| 3f64.sqrt() * 6.75 * j * j)
        .collect())
}
