//! Pulsed-gradient spin-echo signal: exact matrix route, spectral expansion,
//! one- and two-mode approximations, large-gradient asymptotics.

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::specfun::AIRY_AI_PRIME_FIRST_ZERO;
use crate::spectrum::{GradientOperator, Spectrum};

/// Physical pulse parameters and their dimensionless images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsePlan {
    /// Pulse duration in s.
    pub delta: f64,
    /// Diffusivity in m^2/s.
    pub d0: f64,
    /// Gyromagnetic ratio in rad/(T s).
    pub gamma: f64,
    /// Gradient amplitude in T/m.
    pub gradient: f64,
    /// Length scale (sphere or cylinder radius) in m.
    pub radius: f64,
}

impl PulsePlan {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.delta) && ok(self.gradient) && ok(self.gamma)) {
            return Err(Error::Domain("delta, gamma and G must be finite and >= 0".into()));
        }
        if !(self.d0.is_finite() && self.d0 > 0.0 && self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Domain("D0 and R must be finite and > 0".into()));
        }
        Ok(())
    }

    /// `gamma G R^3 / D0`.
    pub fn g_bar(&self) -> f64 {
        self.gamma * self.gradient / self.d0 * self.radius.powi(3)
    }

    /// `D0 delta / R^2`.
    pub fn t_bar(&self) -> f64 {
        self.d0 * self.delta / (self.radius * self.radius)
    }
}

/// `mu_j = X_{j0}`, `Gamma = conj(X) X^T` and
/// `C_{jj'} = conj(mu_j) Gamma_{jj'} mu_j'`, restricted to rows with a
/// nonzero projection on the constant mode.
#[derive(Debug, Clone)]
pub struct SignalCoefficients {
    pub rows: Vec<usize>,
    pub mu: Vec<C64>,
    pub gamma: Mat<C64>,
    pub c: Mat<C64>,
}

impl SignalCoefficients {
    /// `C` between two rows of the spectrum (zero if either has `mu = 0`).
    pub fn get(&self, j: usize, jp: usize) -> C64 {
        match (self.rows.iter().position(|&r| r == j), self.rows.iter().position(|&r| r == jp)) {
            (Some(a), Some(b)) => self.c[(a, b)],
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn sum(&self) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for a in 0..self.rows.len() {
            for b in 0..self.rows.len() {
                s += self.c[(a, b)];
            }
        }
        s
    }
}

/// Coefficients from a normalized spectrum at `+g`.
pub fn compute_coefficients(spec: &Spectrum) -> SignalCoefficients {
    let n = spec.x.ncols();
    let rows: Vec<usize> = (0..spec.len()).filter(|&j| spec.x[(j, 0)].norm() > 0.0).collect();
    let mu: Vec<C64> = rows.iter().map(|&j| spec.x[(j, 0)]).collect();
    let r = rows.len();
    let gamma = Mat::from_fn(r, r, |a, b| {
        (0..n).map(|k| spec.x[(rows[a], k)].conj() * spec.x[(rows[b], k)]).sum()
    });
    let c = Mat::from_fn(r, r, |a, b| mu[a].conj() * gamma[(a, b)] * mu[b]);
    SignalCoefficients { rows, mu, gamma, c }
}

/// `S = sum C_{jj'} exp(-t (conj(lambda_j) + lambda_j'))`.
pub fn signal_spectral(spec: &Spectrum, coeffs: &SignalCoefficients, t_bar: f64) -> C64 {
    let e: Vec<C64> = coeffs.rows.iter().map(|&j| (-t_bar * spec.eigenvalues[j]).exp()).collect();
    let mut s = C64::new(0.0, 0.0);
    for a in 0..coeffs.rows.len() {
        let ea = e[a].conj();
        for b in 0..coeffs.rows.len() {
            s += coeffs.c[(a, b)] * ea * e[b];
        }
    }
    s
}

/// `[exp(-t M_-) exp(-t M_+)]_{00}` with `M_pm = Lambda pm i g B`, on the
/// block coupled to the constant mode.
pub fn signal_matrix(op: &GradientOperator, g_bar: f64, t_bar: f64) -> Result<C64> {
    if !(t_bar >= 0.0) || !t_bar.is_finite() || !g_bar.is_finite() {
        return Err(Error::Domain(format!("invalid (g, t) = ({g_bar}, {t_bar})")));
    }
    let idx = op.constant_sector();
    let c = idx
        .iter()
        .position(|&k| k == 0)
        .ok_or_else(|| Error::Mismatch("constant mode missing".into()))?;
    let plus = op.submatrix(idx, g_bar);
    let minus = op.submatrix(idx, -g_bar);
    let ep = expm(&Mat::from_fn(idx.len(), idx.len(), |i, j| -t_bar * plus[(i, j)]))?;
    let em = expm(&Mat::from_fn(idx.len(), idx.len(), |i, j| -t_bar * minus[(i, j)]))?;
    Ok((0..idx.len()).map(|k| em[(c, k)] * ep[(k, c)]).sum())
}

/// `C11 exp(-2 t lambda_1)`.
pub fn signal_one_mode(lambda1: f64, c11: f64, t_bar: f64) -> f64 {
    c11 * (-2.0 * t_bar * lambda1).exp()
}

/// `2 exp(-2 t Re lambda_1) [C11 + Re(C12 exp(2 i t Im lambda_1))]`.
pub fn signal_two_mode(lambda1: C64, c11: f64, c12: C64, t_bar: f64) -> f64 {
    let phase = C64::new(0.0, 2.0 * t_bar * lambda1.im).exp();
    2.0 * (-2.0 * t_bar * lambda1.re).exp() * (c11 + (c12 * phase).re)
}

/// Rows carrying the slowest signal-bearing mode and, when it belongs to a
/// conjugate pair, its partner. The first has `Im >= 0`.
pub fn leading_modes(spec: &Spectrum, coeffs: &SignalCoefficients) -> Option<(usize, Option<usize>)> {
    let mut rows = coeffs.rows.clone();
    rows.sort_by(|&a, &b| {
        let (x, y) = (spec.eigenvalues[a], spec.eigenvalues[b]);
        if (x.re - y.re).abs() <= 1e-10 * x.re.abs().max(1.0) {
            y.im.total_cmp(&x.im)
        } else {
            x.re.total_cmp(&y.re)
        }
    });
    let first = *rows.first()?;
    let l1 = spec.eigenvalues[first];
    if l1.im.abs() <= 1e-9 {
        return Some((first, None));
    }
    let partner = rows
        .iter()
        .copied()
        .find(|&r| r != first && (spec.eigenvalues[r] - l1.conj()).norm() <= 1e-8 * l1.norm().max(1.0));
    Some((first, partner))
}

/// Three-term large-gradient expansion of `Re lambda_1` for a sphere of
/// radius `r`, with `l = g^{-1/3}`.
pub fn lambda1_asymptotic(g_bar: f64, r: f64) -> f64 {
    let a = AIRY_AI_PRIME_FIRST_ZERO.abs();
    let l = g_bar.powf(-1.0 / 3.0);
    a / (2.0 * l * l) + 1.0 / (r.sqrt() * l.powf(1.5)) - 3f64.sqrt() / (4.0 * a * r * l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_sphere_basis;
    use crate::matrices::assemble;
    use crate::spectrum::{compute, SpectrumOptions};

    #[test]
    fn units() {
        let p = PulsePlan { delta: 0.01, d0: 2.3e-9, gamma: 2.675e8, gradient: 0.017, radius: 1e-5 };
        assert!((p.g_bar() - 1.977).abs() < 1e-3);
        assert!((p.t_bar() - 0.23).abs() < 1e-12);
        assert!(p.validate().is_ok());
        assert!(PulsePlan { d0: 0.0, ..p }.validate().is_err());
    }

    #[test]
    fn approximations_collapse() {
        assert_eq!(signal_one_mode(0.0, 1.0, 3.0), 1.0);
        let v = signal_two_mode(C64::new(1.5, 0.0), 0.7, C64::new(0.2, 0.0), 0.4);
        assert!((v - 2.0 * (-1.2f64).exp() * 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_routes() {
        let mat = assemble(&build_sphere_basis(30).unwrap()).unwrap();
        let op = GradientOperator::new(&mat, mat.bz.clone()).unwrap();
        let s = compute(&op, 0.0, &SpectrumOptions::default()).unwrap();
        let c = compute_coefficients(&s);
        for t in [0.0, 0.3, 2.0] {
            assert!((signal_spectral(&s, &c, t) - 1.0).norm() < 1e-14);
            assert!((signal_matrix(&op, 0.0, t).unwrap() - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn asymptotic_leading_term() {
        let g: f64 = 1e24;
        let lead = AIRY_AI_PRIME_FIRST_ZERO.abs() * g.powf(2.0 / 3.0) / 2.0;
        assert!((lambda1_asymptotic(g, 1.0) / lead - 1.0).abs() < 1e-3);
    }
}
