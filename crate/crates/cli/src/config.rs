//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Lists are comma
//! separated. Keys:
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `geometry` | `sphere` or `cylinder` | `sphere` |
//! | `R_um`, `H_um` | radius and cylinder height in micrometres | |
//! | `aspect` | dimensionless `H/R` (instead of `H_um`) | 1 |
//! | `gamma` | gyromagnetic ratio, rad/(T s) | 2.675e8 |
//! | `D0` | diffusivity, m^2/s | 2.3e-9 |
//! | `G_mT_per_m` | gradient amplitude (needs `R_um`) | |
//! | `g_bar` | dimensionless gradient (instead of `G_mT_per_m`) | |
//! | `deltas_ms` | pulse durations (needs `R_um`) | |
//! | `t_bars` | dimensionless pulse durations (instead of `deltas_ms`) | |
//! | `eta_deg` | cylinder gradient angle from the x axis in the xz plane | 90 |
//! | `theta_deg`, `phi_deg` | sphere gradient direction | 0, 0 |
//! | `N` | basis size | 333 sphere, 150 cylinder |
//! | `g_max`, `g_step` | sweep range and initial step | 30, 0.05 |
//! | `branches` | branches written and searched by `sweep` | 17 |
//! | `walkers`, `dt`, `seed` | Monte Carlo oracle (0 walkers disables it) | 0, 1e-3, 1 |
//! | `out_dir` | output directory | `btspec-out` |

use std::collections::BTreeMap;
use std::path::PathBuf;

use btspec_core::basis::{build_cylinder_basis, build_sphere_basis};
use btspec_core::matrices::{assemble, gradient_matrix_cylinder, gradient_matrix_sphere};
use btspec_core::oracle::WalkGeometry;
use btspec_core::spectrum::GradientOperator;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable overriding the output directory of the config file.
pub const OUT_DIR_ENV: &str = "BTSPEC_OUT_DIR";

pub const KEYS: &[&str] = &[
    "geometry", "R_um", "H_um", "aspect", "gamma", "D0", "G_mT_per_m", "g_bar", "deltas_ms", "t_bars",
    "eta_deg", "theta_deg", "phi_deg", "N", "g_max", "g_step", "branches", "walkers", "dt", "seed", "out_dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Sphere,
    Cylinder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub geometry: Shape,
    pub r_um: Option<f64>,
    pub h_um: Option<f64>,
    pub aspect: Option<f64>,
    pub gamma: f64,
    pub d0: f64,
    pub g_mt_per_m: Option<f64>,
    pub g_bar: Option<f64>,
    pub deltas_ms: Vec<f64>,
    pub t_bars: Vec<f64>,
    pub eta_deg: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub n: Option<usize>,
    pub g_max: f64,
    pub g_step: f64,
    pub branches: usize,
    pub walkers: usize,
    pub dt: f64,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: Shape::Sphere,
            r_um: None,
            h_um: None,
            aspect: None,
            gamma: 2.675e8,
            d0: 2.3e-9,
            g_mt_per_m: None,
            g_bar: None,
            deltas_ms: Vec::new(),
            t_bars: Vec::new(),
            eta_deg: 90.0,
            theta_deg: 0.0,
            phi_deg: 0.0,
            n: None,
            g_max: 30.0,
            g_step: 0.05,
            branches: 17,
            walkers: 0,
            dt: 1e-3,
            seed: 1,
            out_dir: None,
        }
    }
}

/// Parse `key = value` lines into a map, keeping the last value of a key.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
}

impl RunConfig {
    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "geometry" => {
                self.geometry = match v.to_ascii_lowercase().as_str() {
                    "sphere" => Shape::Sphere,
                    "cylinder" => Shape::Cylinder,
                    other => return Err(CliError::Config(format!("unknown geometry '{other}'"))),
                }
            }
            "R_um" => self.r_um = Some(num(key, v)?),
            "H_um" => self.h_um = Some(num(key, v)?),
            "aspect" => self.aspect = Some(num(key, v)?),
            "gamma" => self.gamma = num(key, v)?,
            "D0" => self.d0 = num(key, v)?,
            "G_mT_per_m" => self.g_mt_per_m = Some(num(key, v)?),
            "g_bar" => self.g_bar = Some(num(key, v)?),
            "deltas_ms" => self.deltas_ms = list(key, v)?,
            "t_bars" => self.t_bars = list(key, v)?,
            "eta_deg" => self.eta_deg = num(key, v)?,
            "theta_deg" => self.theta_deg = num(key, v)?,
            "phi_deg" => self.phi_deg = num(key, v)?,
            "N" => self.n = Some(num(key, v)?),
            "g_max" => self.g_max = num(key, v)?,
            "g_step" => self.g_step = num(key, v)?,
            "branches" => self.branches = num(key, v)?,
            "walkers" => self.walkers = num(key, v)?,
            "dt" => self.dt = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(v)),
            other => return Err(CliError::Config(format!("unknown key '{other}' (known: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Shared checks; command-specific ones live with the commands.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.g_mt_per_m.is_some() && self.g_bar.is_some() {
            return bad("give either G_mT_per_m or g_bar, not both");
        }
        if !self.deltas_ms.is_empty() && !self.t_bars.is_empty() {
            return bad("give either deltas_ms or t_bars, not both");
        }
        if (self.g_mt_per_m.is_some() || !self.deltas_ms.is_empty()) && self.r_um.is_none() {
            return bad("physical gradient or durations need R_um");
        }
        if self.h_um.is_some() && (self.aspect.is_some() || self.r_um.is_none()) {
            return bad("H_um needs R_um and excludes aspect");
        }
        for (name, v) in [("R_um", self.r_um), ("H_um", self.h_um), ("aspect", self.aspect)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("{name} must be > 0")));
                }
            }
        }
        if !(self.gamma > 0.0 && self.d0 > 0.0) {
            return bad("gamma and D0 must be > 0");
        }
        if !(self.g_step > 0.0) {
            return bad("g_step must be > 0");
        }
        if self.branches == 0 {
            return bad("branches must be >= 1");
        }
        if self.n == Some(0) {
            return bad("N must be >= 1");
        }
        Ok(())
    }

    pub fn basis_size(&self) -> usize {
        self.n.unwrap_or(match self.geometry {
            Shape::Sphere => 333,
            Shape::Cylinder => 150,
        })
    }

    /// `H/R` of the cylinder.
    pub fn aspect_ratio(&self) -> f64 {
        match (self.h_um, self.r_um, self.aspect) {
            (Some(h), Some(r), _) => h / r,
            (_, _, Some(a)) => a,
            _ => 1.0,
        }
    }

    /// The basis must hold at least five modes per requested branch.
    pub fn require_margin(&self, largest_branch: usize) -> Result<()> {
        let n = self.basis_size();
        if n < 5 * largest_branch {
            return Err(CliError::Config(format!(
                "N = {n} is too small for branch {largest_branch}: need N >= {}",
                5 * largest_branch
            )));
        }
        Ok(())
    }

    /// Dimensionless gradient strength, if one was given.
    pub fn gradient(&self) -> Option<f64> {
        match (self.g_bar, self.g_mt_per_m, self.r_um) {
            (Some(g), _, _) => Some(g),
            (None, Some(g), Some(r)) => {
                let r = r * 1e-6;
                Some(self.gamma * g * 1e-3 * r.powi(3) / self.d0)
            }
            _ => None,
        }
    }

    /// `(label, t_bar)` per pulse duration; labels are ms in physical mode.
    pub fn durations(&self) -> Vec<(f64, f64)> {
        match self.r_um {
            Some(r) if !self.deltas_ms.is_empty() => {
                let r = r * 1e-6;
                self.deltas_ms.iter().map(|&d| (d, self.d0 * d * 1e-3 / (r * r))).collect()
            }
            _ => self.t_bars.iter().map(|&t| (t, t)).collect(),
        }
    }

    pub fn unit_direction(&self) -> [f64; 3] {
        match self.geometry {
            Shape::Sphere => btspec_core::matrices::direction_from_angles(
                self.theta_deg.to_radians(),
                self.phi_deg.to_radians(),
            ),
            Shape::Cylinder => {
                let e = self.eta_deg.to_radians();
                [e.cos(), 0.0, e.sin()]
            }
        }
    }

    pub fn walk_geometry(&self) -> WalkGeometry {
        match self.geometry {
            Shape::Sphere => WalkGeometry::Sphere,
            Shape::Cylinder => WalkGeometry::Cylinder { h: self.aspect_ratio() },
        }
    }

    pub fn operator(&self) -> Result<GradientOperator> {
        let op = match self.geometry {
            Shape::Sphere => {
                let mat = assemble(&build_sphere_basis(self.basis_size())?)?;
                let b = gradient_matrix_sphere(&mat, self.theta_deg.to_radians(), self.phi_deg.to_radians());
                GradientOperator::new(&mat, b)?
            }
            Shape::Cylinder => {
                let mat = assemble(&build_cylinder_basis(self.basis_size(), 1.0, self.aspect_ratio())?)?;
                let b = gradient_matrix_cylinder(&mat, self.eta_deg.to_radians());
                GradientOperator::new(&mat, b)?
            }
        };
        Ok(op)
    }

    /// Output directory: explicit setting, then the environment, then
    /// `btspec-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("btspec-out"))
    }
}

/// Build a config from an optional file, the environment and `key=value`
/// overrides, in increasing precedence.
pub fn load(file: Option<&std::path::Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut cfg = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_pairs(&parse_pairs(&text)?)?
        }
        None => RunConfig::default(),
    };
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            cfg.out_dir = Some(PathBuf::from(dir));
        }
    }
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{o}' is not key=value")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}
