//! Branch tracking in the gradient strength by continuity from `g = 0`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{diagonalize, normalize, GradientOperator, RowFlags, Spectrum, SpectrumOptions};

/// Sweep configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub initial_step: f64,
    pub min_step: f64,
    /// A match is ambiguous when its displacement exceeds this fraction of
    /// the distance to the next-best candidate.
    pub ambiguity_ratio: f64,
    /// Only the first `tracked` branches (in `g = 0` order) may trigger step
    /// refinement; all branches are still matched.
    pub tracked: Option<usize>,
    pub spectrum: SpectrumOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            min_step: 1e-5,
            ambiguity_ratio: 0.5,
            tracked: None,
            spectrum: SpectrumOptions::default(),
        }
    }
}

/// A step accepted at the minimum size while still ambiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub g_from: f64,
    pub g_to: f64,
    /// Branches whose assignment was not clear-cut.
    pub branches: Vec<usize>,
    /// Chosen and runner-up raw row for each listed branch.
    pub chosen: Vec<usize>,
    pub alternative: Vec<usize>,
}

/// Step-size changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub g: f64,
    pub step: f64,
}

/// Branch-resolved spectra on an adaptive grid.
#[derive(Debug, Clone)]
pub struct BranchSweep {
    pub grid: Vec<f64>,
    /// `values[p][j]`: eigenvalue of branch `j` at `grid[p]`.
    pub values: Vec<Vec<C64>>,
    pub flags: Vec<Vec<RowFlags>>,
    /// `permutations[p][j]`: raw (real-part sorted) row of `diagonalize`
    /// at `grid[p]` that carries branch `j`.
    pub permutations: Vec<Vec<usize>>,
    /// Basis mode each branch starts from at `g = 0`.
    pub origin: Vec<usize>,
    pub sector_of_branch: Vec<usize>,
    pub refinements: Vec<StepEvent>,
    pub ambiguities: Vec<Ambiguity>,
}

impl BranchSweep {
    pub fn branch_count(&self) -> usize {
        self.origin.len()
    }

    /// Eigenvalue history of branch `j`.
    pub fn branch(&self, j: usize) -> Vec<C64> {
        self.values.iter().map(|v| v[j]).collect()
    }
}

/// Minimum-cost perfect assignment on a square cost matrix: returns `p` with
/// row `i` assigned to column `p[i]`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1]; // p[col] = row (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut ans = vec![0; n];
    for j in 1..=n {
        ans[p[j] - 1] = j - 1;
    }
    ans
}

fn overlap(a: &Spectrum, i: usize, b: &Spectrum, k: usize) -> f64 {
    let mut s = C64::new(0.0, 0.0);
    let (mut na, mut nb) = (0.0, 0.0);
    for c in 0..a.x.ncols() {
        s += a.x[(i, c)].conj() * b.x[(k, c)];
        na += a.x[(i, c)].norm_sqr();
        nb += b.x[(k, c)].norm_sqr();
    }
    s.norm() / (na * nb).sqrt().max(1e-300)
}

/// Result of matching one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMatch {
    /// `perm[i]`: row of `next` continuing row `i` of `prev`.
    pub perm: Vec<usize>,
    /// Rows of `prev` whose match is ambiguous, with the runner-up row.
    pub ambiguous: Vec<(usize, usize)>,
}

/// Optimal assignment between consecutive spectra, sector by sector.
/// Cost is `|d lambda|^2`; near-ties are broken by eigenvector overlap.
pub fn match_step(prev: &Spectrum, next: &Spectrum, ambiguity_ratio: f64) -> Result<StepMatch> {
    let n = prev.len();
    if next.len() != n {
        return Err(Error::Mismatch(format!("spectra of sizes {n} and {}", next.len())));
    }
    let mut by_sector: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for i in 0..n {
        by_sector.entry(prev.sector[i]).or_default().0.push(i);
        by_sector.entry(next.sector[i]).or_default().1.push(i);
    }
    let mut perm = vec![usize::MAX; n];
    let mut ambiguous = Vec::new();
    for (s, (rows, cols)) in by_sector {
        if rows.len() != cols.len() {
            return Err(Error::Mismatch(format!("sector {s} changed size between steps")));
        }
        let scale = rows
            .iter()
            .map(|&i| prev.eigenvalues[i].norm())
            .fold(1.0, f64::max);
        let tie = 1e-10 * scale * scale;
        let cost: Vec<Vec<f64>> = rows
            .iter()
            .map(|&i| {
                cols.iter()
                    .map(|&k| {
                        let d = (next.eigenvalues[k] - prev.eigenvalues[i]).norm_sqr();
                        d + tie * (1.0 - overlap(prev, i, next, k))
                    })
                    .collect()
            })
            .collect();
        let a = hungarian(&cost);
        for (r, &c) in a.iter().enumerate() {
            let i = rows[r];
            let k = cols[c];
            perm[i] = k;
            let d = (next.eigenvalues[k] - prev.eigenvalues[i]).norm();
            let mut best = f64::INFINITY;
            let mut alt = k;
            for &kk in &cols {
                if kk == k {
                    continue;
                }
                // a conjugate partner is relabelled afterwards anyway
                let partner = next.eigenvalues[kk].im.abs() > 1e-9
                    && (next.eigenvalues[kk] - next.eigenvalues[k].conj()).norm()
                        <= 1e-8 * next.eigenvalues[k].norm().max(1.0);
                if partner {
                    continue;
                }
                let dd = (next.eigenvalues[kk] - prev.eigenvalues[i]).norm();
                if dd < best {
                    best = dd;
                    alt = kk;
                }
            }
            let jumped = overlap(prev, i, next, k) < 0.5;
            if (d > 1e-12 && d > ambiguity_ratio * best) || jumped {
                ambiguous.push((i, alt));
            }
        }
    }
    Ok(StepMatch { perm, ambiguous })
}

/// Reassign the sectors holding ambiguous rows by maximal eigenvector
/// overlap, when that assignment is decisive. Returns true if anything was
/// resolved.
pub fn resolve_by_overlap(prev: &Spectrum, next: &Spectrum, m: &mut StepMatch) -> bool {
    let sectors: std::collections::BTreeSet<usize> =
        m.ambiguous.iter().map(|&(i, _)| prev.sector[i]).collect();
    let mut resolved = false;
    for s in sectors {
        let rows: Vec<usize> = (0..prev.len()).filter(|&i| prev.sector[i] == s).collect();
        let cols: Vec<usize> = (0..next.len()).filter(|&k| next.sector[k] == s).collect();
        let ov: Vec<Vec<f64>> = rows
            .iter()
            .map(|&i| cols.iter().map(|&k| overlap(prev, i, next, k)).collect())
            .collect();
        let cost: Vec<Vec<f64>> = ov.iter().map(|r| r.iter().map(|o| 1.0 - o).collect()).collect();
        let a = hungarian(&cost);
        let decisive = a.iter().enumerate().all(|(r, &c)| {
            let second = ov[r]
                .iter()
                .enumerate()
                .filter(|&(cc, _)| cc != c)
                .map(|(_, &o)| o)
                .fold(0.0, f64::max);
            ov[r][c] >= 0.5 && ov[r][c] - second >= 0.2
        });
        if decisive {
            for (r, &c) in a.iter().enumerate() {
                m.perm[rows[r]] = cols[c];
            }
            m.ambiguous.retain(|&(i, _)| prev.sector[i] != s);
            resolved = true;
        }
    }
    resolved
}

/// After a merge into a complex-conjugate pair, give the member with
/// positive imaginary part the lower branch index.
fn fix_conjugate_pairs(spec: &mut Spectrum, perm: &mut [usize]) {
    let n = spec.len();
    for a in 0..n {
        let la = spec.eigenvalues[a];
        if la.im.abs() <= 1e-9 {
            continue;
        }
        for b in (a + 1)..n {
            if spec.sector[b] != spec.sector[a] {
                continue;
            }
            let lb = spec.eigenvalues[b];
            if (lb - la.conj()).norm() <= 1e-8 * la.norm().max(1.0) && la.im < 0.0 {
                spec.eigenvalues.swap(a, b);
                spec.self_products.swap(a, b);
                spec.flags.swap(a, b);
                perm.swap(a, b);
                for c in 0..spec.x.ncols() {
                    let t = spec.x[(a, c)];
                    spec.x[(a, c)] = spec.x[(b, c)];
                    spec.x[(b, c)] = t;
                }
                break;
            }
        }
    }
}

/// Track all branches of `op` from `g = 0` to `g_max`.
pub fn run_sweep(op: &GradientOperator, g_max: f64, opts: &SweepOptions) -> Result<BranchSweep> {
    if !(g_max >= 0.0) || !g_max.is_finite() {
        return Err(Error::Domain(format!("g_max must be finite and >= 0, got {g_max}")));
    }
    if !(opts.initial_step > 0.0) || !(opts.min_step > 0.0) || opts.min_step > opts.initial_step {
        return Err(Error::Domain("sweep steps must satisfy 0 < min_step <= initial_step".into()));
    }
    let raw0 = diagonalize(op, 0.0)?;
    // branch j starts on basis mode j
    let order: Vec<usize> = (0..op.dim()).collect();
    // at g = 0 each raw row is a unit vector on one basis mode
    let mut row_of_mode = vec![usize::MAX; op.dim()];
    for j in 0..raw0.len() {
        let k = (0..op.dim())
            .max_by(|&a, &b| raw0.x[(j, a)].norm().total_cmp(&raw0.x[(j, b)].norm()))
            .unwrap_or(0);
        row_of_mode[k] = j;
    }
    if row_of_mode.contains(&usize::MAX) {
        return Err(Error::Convergence("could not identify basis modes at g = 0".into()));
    }
    let perm0: Vec<usize> = order.iter().map(|&k| row_of_mode[k]).collect();
    let mut current = raw0.permuted(&perm0);
    let norm0 = normalize(op, &current, &opts.spectrum);
    let mut out = BranchSweep {
        grid: vec![0.0],
        values: vec![current.eigenvalues.clone()],
        flags: vec![norm0.flags.clone()],
        permutations: vec![perm0],
        origin: order,
        sector_of_branch: current.sector.clone(),
        refinements: Vec::new(),
        ambiguities: Vec::new(),
    };
    let mut g = 0.0;
    let mut step = opts.initial_step;
    while g < g_max * (1.0 - 1e-14) {
        let h = step.min(g_max - g);
        let raw = diagonalize(op, g + h)?;
        let mut m = match_step(&current, &raw, opts.ambiguity_ratio)?;
        if let Some(k) = opts.tracked {
            m.ambiguous.retain(|&(i, _)| i < k);
        }
        if !m.ambiguous.is_empty() && h > opts.min_step * 1.000_001 {
            step = (h * 0.5).max(opts.min_step);
            out.refinements.push(StepEvent { g, step });
            continue;
        }
        if !m.ambiguous.is_empty() {
            resolve_by_overlap(&current, &raw, &mut m);
        }
        let mut perm = m.perm.clone();
        let mut next = raw.permuted(&perm);
        fix_conjugate_pairs(&mut next, &mut perm);
        if !m.ambiguous.is_empty() {
            out.ambiguities.push(Ambiguity {
                g_from: g,
                g_to: g + h,
                branches: m.ambiguous.iter().map(|a| a.0).collect(),
                chosen: m.ambiguous.iter().map(|a| m.perm[a.0]).collect(),
                alternative: m.ambiguous.iter().map(|a| a.1).collect(),
            });
        }
        let normed = normalize(op, &next, &opts.spectrum);
        g += h;
        out.grid.push(g);
        out.values.push(next.eigenvalues.clone());
        out.flags.push(normed.flags);
        out.permutations.push(perm);
        current = next;
        if m.ambiguous.is_empty() && step < opts.initial_step {
            step = (step * 2.0).min(opts.initial_step);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    fn spec(vals: &[C64], x: Mat<C64>) -> Spectrum {
        let n = vals.len();
        Spectrum {
            g: 0.0,
            eigenvalues: vals.to_vec(),
            x,
            self_products: vec![C64::new(1.0, 0.0); n],
            sector: vec![0; n],
            flags: vec![RowFlags::default(); n],
            normalized: false,
        }
    }

    fn eye(n: usize) -> Mat<C64> {
        Mat::from_fn(n, n, |i, j| C64::new((i == j) as u8 as f64, 0.0))
    }

    #[test]
    fn identity_match() {
        let v = [C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(5.0, 1.0)];
        let s = spec(&v, eye(3));
        let m = match_step(&s, &s, 0.5).unwrap();
        assert_eq!(m.perm, vec![0, 1, 2]);
        assert!(m.ambiguous.is_empty());
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let cost = vec![
            vec![4.0, 1.0, 3.0, 2.5],
            vec![2.0, 0.0, 5.0, 1.0],
            vec![3.0, 2.0, 2.0, 7.0],
            vec![1.5, 6.0, 0.5, 3.0],
        ];
        let p = hungarian(&cost);
        let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        let mut best = f64::INFINITY;
        let idx = [0usize, 1, 2, 3];
        for a in idx {
            for b in idx {
                for c in idx {
                    for d in idx {
                        let q = [a, b, c, d];
                        let mut s = q.to_vec();
                        s.sort();
                        s.dedup();
                        if s.len() == 4 {
                            best = best.min((0..4).map(|i| cost[i][q[i]]).sum());
                        }
                    }
                }
            }
        }
        assert_eq!(total, best);
    }

    #[test]
    fn real_pair_to_conjugate_pair() {
        let prev = spec(&[C64::new(1.0, 0.0), C64::new(1.2, 0.0)], eye(2));
        let next = spec(&[C64::new(1.1, -0.05), C64::new(1.1, 0.05)], eye(2));
        let m = match_step(&prev, &next, 0.5).unwrap();
        let cost = |p: &[usize]| -> f64 {
            (0..2).map(|i| (next.eigenvalues[p[i]] - prev.eigenvalues[i]).norm_sqr()).sum()
        };
        assert!(cost(&m.perm) <= cost(&[1, 0]) && cost(&m.perm) <= cost(&[0, 1]));
    }

    #[test]
    fn synthetic_crossing_follows_eigenvectors() {
        // diag(0.2, 1 - t, t): basis vectors 1 and 2 cross at t = 0.5 without
        // interacting; spectra arrive sorted by real part
        let sorted = |t: f64| {
            let mut v = vec![(0.2, 0usize), (1.0 - t, 1), (t, 2)];
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            spec(
                &v.iter().map(|p| C64::new(p.0, 0.0)).collect::<Vec<_>>(),
                Mat::from_fn(3, 3, |i, j| C64::new((v[i].1 == j) as u8 as f64, 0.0)),
            )
        };
        let prev = sorted(0.45);
        let next = sorted(0.52);
        let mut m = match_step(&prev, &next, 0.5).unwrap();
        // displacement alone keeps real-part order, which the overlap flags
        assert_eq!(m.perm, vec![0, 1, 2]);
        assert!(!m.ambiguous.is_empty());
        assert!(resolve_by_overlap(&prev, &next, &mut m));
        assert!(m.ambiguous.is_empty());
        assert_eq!(m.perm, vec![0, 2, 1]);
    }

    #[test]
    fn tie_broken_by_overlap() {
        // equal displacements, eigenvectors decide
        let prev = spec(&[C64::new(1.0, 0.0), C64::new(3.0, 0.0)], eye(2));
        let x = Mat::from_fn(2, 2, |i, j| C64::new((i != j) as u8 as f64, 0.0));
        let next = spec(&[C64::new(2.0, 0.0), C64::new(2.0, 0.0)], x);
        let m = match_step(&prev, &next, 0.5).unwrap();
        assert_eq!(m.perm, vec![1, 0]);
    }
}
