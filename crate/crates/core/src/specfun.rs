//! Bessel functions of the first kind and the zero tables built from them.
//!
//! Only what the Laplacian eigenbases need is provided: integer-order `J_n`,
//! spherical `j_n`, their first derivatives, and `J_{-2/3}` (whose zeros give
//! the branch points of the complex Airy operator on an interval).
//!
//! Integer orders are evaluated with Miller's backward recurrence normalized by
//! a sum rule; `J_{-2/3}` uses the ascending series up to `z = 12` and the
//! Hankel asymptotic expansion beyond.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First zero of `Ai'(z)`.
pub const AIRY_AI_PRIME_FIRST_ZERO: f64 = -1.018_792_971_647_471;

/// `Gamma(1/3)`.
const GAMMA_ONE_THIRD: f64 = 2.678_938_534_707_747_6;

const MINUS_TWO_THIRDS: f64 = -2.0 / 3.0;

/// Scan step used to bracket zeros. Consecutive zeros of every function
/// handled here are separated by more than 1.
const SCAN_STEP: f64 = 0.05;

/// Bisection stops once the bracket is this narrow.
const BISECTION_WIDTH: f64 = 1e-13;

/// Default residual tolerance recorded in zero tables.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// `J_nu(z)` for `nu` a non-negative integer or `nu = -2/3`, `z >= 0`.
pub fn bessel_j(nu: f64, z: f64) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("bessel_j: argument {z} must be finite and >= 0")));
    }
    if nu >= 0.0 && nu.fract() == 0.0 && nu <= u32::MAX as f64 {
        return Ok(bessel_jn(nu as u32, z));
    }
    if (nu - MINUS_TWO_THIRDS).abs() < 1e-12 {
        return Ok(bessel_j_minus_two_thirds(z));
    }
    Err(Error::Domain(format!(
        "bessel_j: order {nu} unsupported (non-negative integers and -2/3 only)"
    )))
}

/// Integer-order Bessel function `J_n(x)`, any real `x`.
pub fn bessel_jn(n: u32, x: f64) -> f64 {
    if x < 0.0 {
        let v = bessel_jn(n, -x);
        return if n % 2 == 1 { -v } else { v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < 1e-6 {
        let h = 0.5 * x;
        let mut lead = 1.0;
        for k in 1..=n {
            lead *= h / k as f64;
        }
        return lead * (1.0 - h * h / (n as f64 + 1.0));
    }
    let nf = n as f64;
    let scale = nf.max(x);
    let mut top = (scale + 20.0 + (40.0 * scale).sqrt()) as usize;
    top += top % 2;

    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-30; // J_k
    let mut sum = 0.0;
    let mut result = 0.0;
    for k in (1..=top).rev() {
        let j_prev = 2.0 * k as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            sum *= 1e-250;
            result *= 1e-250;
        }
        let idx = k - 1;
        if idx == n as usize {
            result = j_cur;
        }
        if idx == 0 {
            sum += j_cur;
        } else if idx % 2 == 0 {
            sum += 2.0 * j_cur;
        }
    }
    result / sum
}

/// `d/dx J_n(x)`.
pub fn bessel_jn_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        -bessel_jn(1, x)
    } else {
        0.5 * (bessel_jn(n - 1, x) - bessel_jn(n + 1, x))
    }
}

/// Spherical Bessel function `j_n(x)` for `x >= 0`.
pub fn spherical_jn(n: u32, x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x < 1e-4 {
        // x^n / (2n+1)!! * (1 - x^2 / (2(2n+3)))
        let mut lead = 1.0;
        for k in 1..=n {
            lead *= x / (2 * k + 1) as f64;
        }
        return lead * (1.0 - x * x / (2.0 * (2 * n + 3) as f64));
    }
    let j0 = x.sin() / x;
    if n == 0 {
        return j0;
    }
    let j1 = (x.sin() / x - x.cos()) / x;
    if n == 1 && x >= 1.0 {
        return j1;
    }
    let nf = n as f64;
    let scale = nf.max(x);
    let top = (scale + 20.0 + (40.0 * scale).sqrt()) as usize;

    let mut j_next = 0.0;
    let mut j_cur = 1e-30;
    let mut result = 0.0;
    let mut at0 = 0.0;
    let mut at1 = 0.0;
    for k in (1..=top).rev() {
        let j_prev = (2 * k + 1) as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            result *= 1e-250;
        }
        let idx = k - 1;
        if idx == n as usize {
            result = j_cur;
        }
        if idx == 1 {
            at1 = j_cur;
        }
        if idx == 0 {
            at0 = j_cur;
        }
    }
    if j0.abs() >= j1.abs() {
        result * (j0 / at0)
    } else {
        result * (j1 / at1)
    }
}

/// `d/dx j_n(x)`.
pub fn spherical_jn_prime(n: u32, x: f64) -> f64 {
    if n == 0 {
        return -spherical_jn(1, x);
    }
    if x == 0.0 {
        return if n == 1 { 1.0 / 3.0 } else { 0.0 };
    }
    spherical_jn(n - 1, x) - (n as f64 + 1.0) / x * spherical_jn(n, x)
}

fn bessel_j_minus_two_thirds(z: f64) -> f64 {
    if z == 0.0 {
        return f64::INFINITY;
    }
    if z <= 12.0 {
        bessel_j_series(MINUS_TWO_THIRDS, GAMMA_ONE_THIRD, z)
    } else {
        bessel_j_hankel(MINUS_TWO_THIRDS, z)
    }
}

/// Ascending series; `gamma_nu_plus_one` is `Gamma(nu + 1)`.
fn bessel_j_series(nu: f64, gamma_nu_plus_one: f64, z: f64) -> f64 {
    let h = 0.5 * z;
    let mut term = h.powf(nu) / gamma_nu_plus_one;
    let mut sum = term;
    let mut peak = term.abs();
    for k in 1..200 {
        let kf = k as f64;
        term *= -h * h / (kf * (kf + nu));
        sum += term;
        peak = peak.max(term.abs());
        if term.abs() < 1e-18 * peak {
            break;
        }
    }
    sum
}

/// Hankel large-argument expansion.
fn bessel_j_hankel(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let chi = z - (0.5 * nu + 0.25) * std::f64::consts::PI;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..40 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * z);
        if a.abs() > last {
            break;
        }
        last = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (2.0 / (std::f64::consts::PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `Ai'(z)` from its Maclaurin series; accurate for moderate `|z|`.
pub fn airy_ai_prime(z: f64) -> f64 {
    // Ai(0), Ai'(0)
    let mut coeffs = vec![0.355_028_053_887_817_24, -0.258_819_403_792_806_8, 0.0];
    let mut sum = 0.0;
    let mut zp = 1.0; // z^(k-1)
    for k in 1..120 {
        while coeffs.len() <= k {
            let m = coeffs.len();
            // a_{m} = a_{m-3} / (m (m-1))
            let v = coeffs[m - 3] / (m as f64 * (m as f64 - 1.0));
            coeffs.push(v);
        }
        sum += k as f64 * coeffs[k] * zp;
        zp *= z;
    }
    sum
}

/// Which function a [`ZeroTable`] holds zeros of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroKind {
    /// `J'_n`
    DerivativeOfJ,
    /// `j'_n`
    DerivativeOfSphericalJ,
    /// `J_{-2/3}`
    JMinusTwoThirds,
}

/// Ascending strictly positive zeros of one function.
///
/// The trivial zero at the origin of `J'_0` and `j'_0` is never listed; the
/// constant Laplacian mode is added by the basis builders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTable {
    pub kind: ZeroKind,
    pub order: f64,
    pub zeros: Vec<f64>,
    pub tolerance: f64,
}

impl ZeroTable {
    /// Target function whose zeros are tabulated.
    pub fn target(&self, z: f64) -> f64 {
        eval_kind(self.kind, self.order, z)
    }
}

fn eval_kind(kind: ZeroKind, order: f64, z: f64) -> f64 {
    match kind {
        ZeroKind::DerivativeOfJ => bessel_jn_prime(order as u32, z),
        ZeroKind::DerivativeOfSphericalJ => spherical_jn_prime(order as u32, z),
        ZeroKind::JMinusTwoThirds => bessel_j_minus_two_thirds(z),
    }
}

/// Second derivative used for Newton polishing, where available.
fn eval_kind_slope(kind: ZeroKind, order: f64, z: f64) -> Option<f64> {
    match kind {
        ZeroKind::DerivativeOfJ => {
            let n = order;
            let d = bessel_jn_prime(order as u32, z);
            let v = bessel_jn(order as u32, z);
            Some(-d / z - (1.0 - n * n / (z * z)) * v)
        }
        ZeroKind::DerivativeOfSphericalJ => {
            let n = order;
            let d = spherical_jn_prime(order as u32, z);
            let v = spherical_jn(order as u32, z);
            Some(-2.0 * d / z - (1.0 - n * (n + 1.0) / (z * z)) * v)
        }
        ZeroKind::JMinusTwoThirds => None,
    }
}

fn scan_start(kind: ZeroKind, order: f64) -> f64 {
    match kind {
        // j'_{n,1} > sqrt(n(n+2)) for J'_n, and alpha^2 > n(n+1) for j'_n
        ZeroKind::DerivativeOfJ => (0.9 * (order * (order + 2.0)).sqrt()).max(1e-3),
        ZeroKind::DerivativeOfSphericalJ => (0.9 * (order * (order + 1.0)).sqrt()).max(1e-3),
        ZeroKind::JMinusTwoThirds => 0.05,
    }
}

fn refine_root(kind: ZeroKind, order: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = eval_kind(kind, order, lo);
    for _ in 0..200 {
        if hi - lo <= BISECTION_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = eval_kind(kind, order, mid);
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..3 {
        let Some(slope) = eval_kind_slope(kind, order, z) else { break };
        if slope == 0.0 {
            break;
        }
        let step = eval_kind(kind, order, z) / slope;
        let cand = z - step;
        if (cand - z).abs() > 1e-10 || !cand.is_finite() {
            break;
        }
        z = cand;
    }
    let resid = eval_kind(kind, order, z).abs();
    if resid > ZERO_TOLERANCE {
        return Err(Error::Convergence(format!(
            "{kind:?} order {order}: residual {resid:e} at z = {z} exceeds tolerance"
        )));
    }
    Ok(z)
}

/// Scan for sign changes and refine each bracket. Stops after `count` zeros or
/// once the scan passes `limit`, whichever comes first.
fn scan_zeros(kind: ZeroKind, order: f64, count: usize, limit: f64) -> Result<ZeroTable> {
    let mut zeros: Vec<f64> = Vec::new();
    let mut a = scan_start(kind, order);
    let mut fa = eval_kind(kind, order, a);
    // guard: the scan must terminate even for absurd requests
    let hard_stop = limit.min(1e6);
    while zeros.len() < count && a < hard_stop {
        let b = a + SCAN_STEP;
        let fb = eval_kind(kind, order, b);
        if fa == 0.0 {
            if a > 1e-6 {
                zeros.push(a);
            }
        } else if (fa > 0.0) != (fb > 0.0) && fb != 0.0 {
            let z = refine_root(kind, order, a, b)?;
            if z <= limit {
                zeros.push(z);
            }
        }
        a = b;
        fa = fb;
    }
    if limit.is_infinite() && zeros.len() < count {
        return Err(Error::Convergence(format!(
            "{kind:?} order {order}: found only {} of {count} zeros",
            zeros.len()
        )));
    }
    for w in zeros.windows(2) {
        if w[1] - w[0] <= 1.0 {
            return Err(Error::Convergence(format!(
                "{kind:?} order {order}: zeros {} and {} closer than 1",
                w[0], w[1]
            )));
        }
    }
    Ok(ZeroTable {
        kind,
        order,
        zeros,
        tolerance: ZERO_TOLERANCE,
    })
}

/// First `count` positive zeros of `J'_n`.
pub fn zeros_dj(n: u32, count: usize) -> Result<ZeroTable> {
    if count == 0 {
        return Err(Error::Domain("zeros_dj: count must be >= 1".into()));
    }
    scan_zeros(ZeroKind::DerivativeOfJ, n as f64, count, f64::INFINITY)
}

/// Positive zeros of `J'_n` not exceeding `limit`.
pub fn zeros_dj_below(n: u32, limit: f64) -> Result<ZeroTable> {
    scan_zeros(ZeroKind::DerivativeOfJ, n as f64, usize::MAX, limit)
}

/// First `count` positive zeros of `j'_n`.
pub fn zeros_dj_spherical(n: u32, count: usize) -> Result<ZeroTable> {
    if count == 0 {
        return Err(Error::Domain("zeros_dj_spherical: count must be >= 1".into()));
    }
    scan_zeros(ZeroKind::DerivativeOfSphericalJ, n as f64, count, f64::INFINITY)
}

/// Positive zeros of `j'_n` not exceeding `limit`.
pub fn zeros_dj_spherical_below(n: u32, limit: f64) -> Result<ZeroTable> {
    scan_zeros(ZeroKind::DerivativeOfSphericalJ, n as f64, usize::MAX, limit)
}

/// First `count` positive zeros `j_k` of `J_{-2/3}`.
pub fn interval_branch_constants(count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Domain("interval_branch_constants: count must be >= 1".into()));
    }
    Ok(scan_zeros(ZeroKind::JMinusTwoThirds, MINUS_TWO_THIRDS, count, f64::INFINITY)?.zeros)
}

/// McMahon expansion for the `k`-th positive zero of `J'_n` (k >= 1).
pub fn mcmahon_dj(n: u32, k: usize) -> f64 {
    // for n = 0 the positive zeros of J'_0 are those of J_1
    let (beta, mu) = if n == 0 {
        ((k as f64 + 0.25) * std::f64::consts::PI, 4.0)
    } else {
        let nf = n as f64;
        ((k as f64 + 0.5 * nf - 0.75) * std::f64::consts::PI, 4.0 * nf * nf)
    };
    if n == 0 {
        // McMahon for zeros of J_1
        let e = 8.0 * beta;
        beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e.powi(3))
    } else {
        let e = 8.0 * beta;
        beta - (mu + 3.0) / e - 4.0 * (7.0 * mu * mu + 82.0 * mu - 9.0) / (3.0 * e.powi(3))
    }
}
