//! Monte Carlo random-walk estimate of the spin-echo signal.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Walker domain in units of the radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WalkGeometry {
    Sphere,
    /// Unit radius, height `h`, axis along `z`, `z` in `[-h/2, h/2]`.
    Cylinder { h: f64 },
    /// Unbounded space.
    Free,
}

impl WalkGeometry {
    fn contains(&self, p: [f64; 3]) -> bool {
        match *self {
            WalkGeometry::Sphere => dot(p, p) <= 1.0,
            WalkGeometry::Cylinder { h } => p[0] * p[0] + p[1] * p[1] <= 1.0 && p[2].abs() <= 0.5 * h,
            WalkGeometry::Free => true,
        }
    }

    fn half_extent(&self) -> [f64; 3] {
        match *self {
            WalkGeometry::Sphere => [1.0; 3],
            WalkGeometry::Cylinder { h } => [1.0, 1.0, 0.5 * h],
            WalkGeometry::Free => [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub geometry: WalkGeometry,
    pub walkers: usize,
    /// Dimensionless time step.
    pub dt: f64,
    pub g_bar: f64,
    /// Unit gradient direction.
    pub direction: [f64; 3],
    /// Duration of each of the two back-to-back pulses.
    pub t_bar: f64,
    pub seed: u64,
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walkers == 0 {
            return Err(Error::Domain("at least one walker is required".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Domain(format!("time step must be > 0, got {}", self.dt)));
        }
        if self.geometry != WalkGeometry::Free && (2.0 * self.dt).sqrt() >= 0.05 {
            return Err(Error::Domain(format!(
                "time step {} too large: need sqrt(2 dt) < 0.05",
                self.dt
            )));
        }
        if !(self.t_bar >= 0.0) || !self.g_bar.is_finite() {
            return Err(Error::Domain("pulse duration must be >= 0 and g finite".into()));
        }
        if let WalkGeometry::Cylinder { h } = self.geometry {
            if !(h > 0.0) {
                return Err(Error::Domain("cylinder height must be > 0".into()));
            }
        }
        let n = dot(self.direction, self.direction).sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("gradient direction must be a unit vector".into()));
        }
        Ok(())
    }
}

/// Sample mean of `exp(-i phi)` and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub signal: C64,
    pub stderr: f64,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn walker_rng(seed: u64, walker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walker as u64);
    rng
}

fn uniform_start(geom: WalkGeometry, rng: &mut ChaCha8Rng) -> [f64; 3] {
    if geom == WalkGeometry::Free {
        return [0.0; 3];
    }
    let e = geom.half_extent();
    loop {
        let p = [
            e[0] * (2.0 * rng.random::<f64>() - 1.0),
            e[1] * (2.0 * rng.random::<f64>() - 1.0),
            e[2] * (2.0 * rng.random::<f64>() - 1.0),
        ];
        if geom.contains(p) {
            return p;
        }
    }
}

/// Move from `p` by `d`, reflecting specularly off the boundary.
pub fn reflect_step(geom: WalkGeometry, p: [f64; 3], d: [f64; 3]) -> [f64; 3] {
    let mut p = p;
    let mut d = d;
    for _ in 0..16 {
        let q = [p[0] + d[0], p[1] + d[1], p[2] + d[2]];
        if geom.contains(q) {
            return q;
        }
        // first exit along p + s d, s in (0, 1], with outward normal
        let (s, normal) = match geom {
            WalkGeometry::Free => return q,
            WalkGeometry::Sphere => {
                let (a, b, c) = (dot(d, d), dot(p, d), dot(p, p) - 1.0);
                let s = (-b + (b * b - a * c).max(0.0).sqrt()) / a;
                let x = [p[0] + s * d[0], p[1] + s * d[1], p[2] + s * d[2]];
                let r = dot(x, x).sqrt();
                (s, [x[0] / r, x[1] / r, x[2] / r])
            }
            WalkGeometry::Cylinder { h } => {
                let mut best = (f64::INFINITY, [0.0; 3]);
                let a = d[0] * d[0] + d[1] * d[1];
                if a > 0.0 {
                    let b = p[0] * d[0] + p[1] * d[1];
                    let c = p[0] * p[0] + p[1] * p[1] - 1.0;
                    let s = (-b + (b * b - a * c).max(0.0).sqrt()) / a;
                    if s >= 0.0 && s <= 1.0 {
                        let x = [p[0] + s * d[0], p[1] + s * d[1]];
                        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                        best = (s, [x[0] / r, x[1] / r, 0.0]);
                    }
                }
                if d[2] != 0.0 {
                    let (zc, nz) = if d[2] > 0.0 { (0.5 * h, 1.0) } else { (-0.5 * h, -1.0) };
                    let s = (zc - p[2]) / d[2];
                    if s >= 0.0 && s <= 1.0 && s < best.0 {
                        best = (s, [0.0, 0.0, nz]);
                    }
                }
                if !best.0.is_finite() {
                    // numerically on the boundary: clamp back inside
                    return clamp_inside(geom, q);
                }
                best
            }
        };
        let s = s.clamp(0.0, 1.0);
        let hit = [p[0] + s * d[0], p[1] + s * d[1], p[2] + s * d[2]];
        let rest = [(1.0 - s) * d[0], (1.0 - s) * d[1], (1.0 - s) * d[2]];
        let k = 2.0 * dot(rest, normal);
        d = [rest[0] - k * normal[0], rest[1] - k * normal[1], rest[2] - k * normal[2]];
        p = hit;
    }
    clamp_inside(geom, [p[0] + d[0], p[1] + d[1], p[2] + d[2]])
}

fn clamp_inside(geom: WalkGeometry, q: [f64; 3]) -> [f64; 3] {
    match geom {
        WalkGeometry::Free => q,
        WalkGeometry::Sphere => {
            let r = dot(q, q).sqrt();
            if r <= 1.0 {
                q
            } else {
                [q[0] / r, q[1] / r, q[2] / r]
            }
        }
        WalkGeometry::Cylinder { h } => {
            let r = (q[0] * q[0] + q[1] * q[1]).sqrt();
            let f = if r > 1.0 { 1.0 / r } else { 1.0 };
            [q[0] * f, q[1] * f, q[2].clamp(-0.5 * h, 0.5 * h)]
        }
    }
}

struct Walk {
    end: [f64; 3],
    phase: f64,
}

fn walk(cfg: &WalkConfig, w: usize, steps: usize, dt: f64) -> Walk {
    let mut rng = walker_rng(cfg.seed, w);
    let mut p = uniform_start(cfg.geometry, &mut rng);
    let sd = (2.0 * dt).sqrt();
    let mut phase = 0.0;
    for k in 0..2 * steps {
        let d = [
            sd * rng.sample::<f64, _>(StandardNormal),
            sd * rng.sample::<f64, _>(StandardNormal),
            sd * rng.sample::<f64, _>(StandardNormal),
        ];
        let q = reflect_step(cfg.geometry, p, d);
        let mid = 0.5 * (dot(p, cfg.direction) + dot(q, cfg.direction));
        let sign = if k < steps { 1.0 } else { -1.0 };
        phase += sign * cfg.g_bar * mid * dt;
        p = q;
    }
    Walk { end: p, phase }
}

fn steps_for(cfg: &WalkConfig) -> (usize, f64) {
    if cfg.t_bar == 0.0 {
        return (0, cfg.dt);
    }
    let steps = (cfg.t_bar / cfg.dt).ceil().max(1.0) as usize;
    (steps, cfg.t_bar / steps as f64)
}

/// Signal estimate from `cfg.walkers` independent walkers started uniformly.
pub fn mc_signal(cfg: &WalkConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let (steps, dt) = steps_for(cfg);
    let n = cfg.walkers;
    let mut sum = C64::new(0.0, 0.0);
    let mut sum_sq = 0.0;
    for w in 0..n {
        let z = C64::new(0.0, -walk(cfg, w, steps, dt).phase).exp();
        sum += z;
        sum_sq += z.norm_sqr();
    }
    let mean = sum / n as f64;
    let var = if n > 1 { (sum_sq - n as f64 * mean.norm_sqr()).max(0.0) / (n - 1) as f64 } else { 0.0 };
    Ok(McEstimate { signal: mean, stderr: (var / n as f64).sqrt() })
}

/// Walker positions after total time `2 t_bar` (phase ignored).
pub fn mc_positions(cfg: &WalkConfig) -> Result<Vec<[f64; 3]>> {
    cfg.validate()?;
    let (steps, dt) = steps_for(cfg);
    Ok((0..cfg.walkers).map(|w| walk(cfg, w, steps, dt).end).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(geometry: WalkGeometry) -> WalkConfig {
        WalkConfig { geometry, walkers: 200, dt: 1e-3, g_bar: 0.0, direction: [0.0, 0.0, 1.0], t_bar: 0.1, seed: 7 }
    }

    #[test]
    fn zero_gradient_is_exactly_one() {
        let e = mc_signal(&cfg(WalkGeometry::Sphere)).unwrap();
        assert_eq!(e.signal, C64::new(1.0, 0.0));
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn reflections_stay_inside() {
        let geoms = [WalkGeometry::Sphere, WalkGeometry::Cylinder { h: 0.7 }];
        for g in geoms {
            let mut rng = walker_rng(3, 0);
            for _ in 0..2000 {
                let p = uniform_start(g, &mut rng);
                let d: [f64; 3] = std::array::from_fn(|_| 0.3 * rng.sample::<f64, _>(StandardNormal));
                let q = reflect_step(g, p, d);
                let slack = [q[0] * (1.0 - 1e-12), q[1] * (1.0 - 1e-12), q[2] * (1.0 - 1e-12)];
                assert!(g.contains(slack), "{g:?} {q:?}");
            }
        }
    }

    #[test]
    fn specular_reflection_preserves_length_of_normal_hit() {
        // straight out along +x from the centre: bounce back to 1 - 0.5
        let q = reflect_step(WalkGeometry::Sphere, [0.0; 3], [1.5, 0.0, 0.0]);
        assert!((q[0] - 0.5).abs() < 1e-14 && q[1] == 0.0);
    }

    #[test]
    fn deterministic_streams() {
        let mut c = cfg(WalkGeometry::Cylinder { h: 1.0 });
        c.g_bar = 3.0;
        let a = mc_signal(&c).unwrap();
        let b = mc_signal(&c).unwrap();
        assert_eq!(a, b);
        assert!(c.validate().is_ok());
        c.dt = 0.01;
        assert!(c.validate().is_err());
    }
}
