use std::fs;
use std::path::{Path, PathBuf};

use btspec_core::branchpoints::{locate, BranchPointOptions, Bracket};
use btspec_core::fieldmap::{export_projection, DEFAULT_RESOLUTION};
use btspec_core::oracle::{mc_signal, WalkConfig};
use btspec_core::signal::*;
use btspec_core::spectrum::{compute, RowFlags, SpectrumOptions};
use btspec_core::sweep::{run_sweep, SweepOptions};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Fixed 17-significant-digit rendering, independent of locale.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn flag_text(f: &RowFlags) -> String {
    let mut tags = Vec::new();
    if f.near_branch_point {
        tags.push("near_branch_point");
    }
    if f.greedy {
        tags.push("greedy");
    }
    if f.class.is_some() {
        tags.push("degenerate");
    }
    tags.join(";")
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPointRecord {
    pub g_star: f64,
    pub order: usize,
    /// 1-based branch labels.
    pub branches: Vec<usize>,
    /// Laplacian modes the merging branches start from.
    pub modes: Vec<String>,
    pub value: C64,
    pub bracket_width: f64,
    pub angle: f64,
    pub order_expected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: RunConfig,
    pub grid_points: usize,
    pub ambiguities: usize,
    pub points: Vec<BranchPointRecord>,
    /// Real-to-complex transitions that closed again right away.
    pub transient: Vec<Bracket>,
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if !(cfg.g_max > 0.0) {
        return Err(CliError::Config(format!("empty gradient range: g_max = {}", cfg.g_max)));
    }
    cfg.require_margin(cfg.branches)?;
    let op = cfg.operator()?;
    let tracked = cfg.branches.min(op.dim());
    let opts = SweepOptions {
        initial_step: cfg.g_step,
        tracked: Some((tracked + 4).min(op.dim())),
        ..Default::default()
    };
    let sw = run_sweep(&op, cfg.g_max, &opts)?;
    let scan = locate(&op, &sw, tracked, &BranchPointOptions::default())?;

    let dir = cfg.output_dir();
    prepare(&dir)?;
    let csv_path = dir.join("branches.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["g", "branch_j", "re_lambda", "im_lambda", "flags"])?;
    for (p, g) in sw.grid.iter().enumerate() {
        for j in 0..tracked {
            let v = sw.values[p][j];
            let row = sw.permutations[p][j];
            w.write_record([fmt17(*g), (j + 1).to_string(), fmt17(v.re), fmt17(v.im), flag_text(&sw.flags[p][row])])?;
        }
    }
    w.flush()?;

    let label = |j: usize| op.basis.modes[sw.origin[j]].index.label();
    let points = scan
        .points
        .iter()
        .map(|p| BranchPointRecord {
            g_star: p.g_star,
            order: p.order,
            branches: p.branches.iter().map(|j| j + 1).collect(),
            modes: p.branches.iter().map(|&j| label(j)).collect(),
            value: p.value,
            bracket_width: p.bracket_width,
            angle: p.angle,
            order_expected: p.order_expected,
        })
        .collect();
    let report = SweepReport {
        config: cfg.clone(),
        grid_points: sw.grid.len(),
        ambiguities: sw.ambiguities.len(),
        points,
        transient: scan.transient,
    };
    let json_path = dir.join("branchpoints.json");
    write_json(&json_path, &report)?;
    Ok(vec![csv_path, json_path])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalReport {
    pub config: RunConfig,
    pub g_bar: f64,
    pub lambda1: Option<C64>,
    pub c11: Option<f64>,
    pub c12: Option<C64>,
    pub sum_c: C64,
    pub near_branch_point: bool,
}

pub fn signal(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let g = cfg
        .gradient()
        .ok_or_else(|| CliError::Config("signal needs g_bar or G_mT_per_m".into()))?;
    let durations = cfg.durations();
    if durations.is_empty() {
        return Err(CliError::Config("signal needs a non-empty deltas_ms or t_bars list".into()));
    }
    if let Some(t) = durations.iter().map(|d| d.1).find(|t| !(*t >= 0.0)) {
        return Err(CliError::Config(format!("pulse duration must be >= 0, got {t}")));
    }
    let op = cfg.operator()?;
    let spec = compute(&op, g, &SpectrumOptions::default())?;
    let coeffs = compute_coefficients(&spec);
    let lead = leading_modes(&spec, &coeffs);
    let near_branch_point = spec.flags.iter().any(|f| f.near_branch_point);

    let (mut lambda1, mut c11, mut c12) = (None, None, None);
    if let Some((j1, j2)) = lead {
        lambda1 = Some(spec.eigenvalues[j1]);
        c11 = Some(coeffs.get(j1, j1).re);
        c12 = j2.map(|j2| coeffs.get(j1, j2));
    }

    let dir = cfg.output_dir();
    prepare(&dir)?;
    let csv_path = dir.join("signal.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record([
        "delta", "S_matrix_re", "S_matrix_im", "S_spectral_re", "S_spectral_im", "S_onemode", "S_twomode_re",
        "S_twomode_im", "S_mc_re", "S_mc_im", "mc_stderr",
    ])?;
    for &(label, t) in &durations {
        let m = signal_matrix(&op, g, t)?;
        let s = signal_spectral(&spec, &coeffs, t);
        let mut rec = vec![fmt17(label), fmt17(m.re), fmt17(m.im), fmt17(s.re), fmt17(s.im)];
        match (lambda1, c11, c12) {
            (Some(l), Some(a), None) => {
                rec.push(fmt17(signal_one_mode(l.re, a, t)));
                rec.extend([String::new(), String::new()]);
            }
            (Some(l), Some(a), Some(b)) => {
                rec.push(String::new());
                rec.extend([fmt17(signal_two_mode(l, a, b, t)), fmt17(0.0)]);
            }
            _ => rec.extend([String::new(), String::new(), String::new()]),
        }
        if cfg.walkers > 0 {
            let wc = WalkConfig {
                geometry: cfg.walk_geometry(),
                walkers: cfg.walkers,
                dt: cfg.dt,
                g_bar: g,
                direction: cfg.unit_direction(),
                t_bar: t,
                seed: cfg.seed,
            };
            let e = mc_signal(&wc)?;
            rec.extend([fmt17(e.signal.re), fmt17(e.signal.im), fmt17(e.stderr)]);
        } else {
            rec.extend([String::new(), String::new(), String::new()]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;

    let report = SignalReport { config: cfg.clone(), g_bar: g, lambda1, c11, c12, sum_c: coeffs.sum(), near_branch_point };
    let json_path = dir.join("signal.json");
    write_json(&json_path, &report)?;
    Ok(vec![csv_path, json_path])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldReport {
    pub config: RunConfig,
    /// 1-based branch label.
    pub branch: usize,
    pub g: f64,
    pub eigenvalue: C64,
    pub self_product: C64,
    pub near_branch_point: bool,
    pub degenerate: bool,
    pub exceeds_color_range: bool,
    pub resolution: usize,
}

/// Branch `branch` (1-based) at gradient `g`, found by sweeping from 0.
pub fn fieldmap(cfg: &RunConfig, branch: usize, g: f64, resolution: usize) -> Result<Vec<PathBuf>> {
    if branch == 0 {
        return Err(CliError::Config("branch labels start at 1".into()));
    }
    if resolution == 0 {
        return Err(CliError::Config("resolution must be >= 1".into()));
    }
    let op = cfg.operator()?;
    if branch > op.dim() {
        return Err(btspec_core::Error::Domain(format!("branch {branch} exceeds N = {}", op.dim())).into());
    }
    cfg.require_margin(branch)?;
    let j = branch - 1;
    let row = if g > 0.0 {
        let opts = SweepOptions { initial_step: cfg.g_step, tracked: Some((j + 4).min(op.dim())), ..Default::default() };
        let sw = run_sweep(&op, g, &opts)?;
        sw.permutations.last().map_or(j, |p| p[j])
    } else {
        j
    };
    let spec = compute(&op, g, &SpectrumOptions::default())?;
    let field = export_projection(&op.basis, &spec, row, resolution, resolution)?;

    let dir = cfg.output_dir();
    prepare(&dir)?;
    let stem = format!("field_j{branch}_g{g}");
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["x", "z", "re_v", "im_v", "inside_flag"])?;
    for (iz, z) in field.zs.iter().enumerate() {
        for (ix, x) in field.xs.iter().enumerate() {
            let rec = match field.at(ix, iz) {
                Some(v) => [fmt17(*x), fmt17(*z), fmt17(v.re), fmt17(v.im), "1".to_string()],
                None => [fmt17(*x), fmt17(*z), String::new(), String::new(), "0".to_string()],
            };
            w.write_record(&rec)?;
        }
    }
    w.flush()?;

    let report = FieldReport {
        config: cfg.clone(),
        branch,
        g,
        eigenvalue: spec.eigenvalues[row],
        self_product: spec.self_products[row],
        near_branch_point: spec.flags[row].near_branch_point,
        degenerate: spec.flags[row].class.is_some(),
        exceeds_color_range: field.exceeds_color_range,
        resolution,
    };
    let json_path = dir.join(format!("{stem}.json"));
    write_json(&json_path, &report)?;
    Ok(vec![csv_path, json_path])
}

pub const DEFAULT_FIELD_RESOLUTION: usize = DEFAULT_RESOLUTION;
