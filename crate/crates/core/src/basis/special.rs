//! Special-function kernels used by the eigenstate evaluators: Hermite and
//! associated Laguerre polynomials by upward recurrence, and spherical
//! harmonics with the Condon-Shortley phase.
//!
//! The quantum numbers in this crate stay small (n <= ~15), so the upward
//! recurrences are stable and no asymptotic machinery is needed.

use num_complex::Complex64;

use super::BasisError;

/// Physicists' Hermite polynomial `H_n(x)` and its derivative `H_n'(x)`.
///
/// Recurrence: `H_{n+1} = 2x H_n - 2n H_{n-1}` with `H_n' = 2n H_{n-1}`.
pub fn hermite(n: u32, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0; // H_0
    let mut cur = 2.0 * x; // H_1
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * (k as f64) * prev;
        prev = cur;
        cur = next;
    }
    (cur, 2.0 * n as f64 * prev)
}

/// Associated Laguerre polynomial `L_n^alpha(x)` and its derivative in `x`.
///
/// The derivative uses `d/dx L_n^alpha = -L_{n-1}^{alpha+1}` (zero for n = 0).
pub fn laguerre_assoc(n: u32, alpha: f64, x: f64) -> Result<(f64, f64), BasisError> {
    if alpha <= -1.0 {
        return Err(BasisError::LaguerreAlpha { alpha });
    }
    let value = laguerre_value(n, alpha, x);
    let derivative = if n == 0 {
        0.0
    } else {
        -laguerre_value(n - 1, alpha + 1.0, x)
    };
    Ok((value, derivative))
}

/// `L_n^alpha(x)` by the three-term recurrence
/// `(k+1) L_{k+1} = (2k+1+alpha-x) L_k - (k+alpha) L_{k-1}`.
fn laguerre_value(n: u32, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0; // L_0
    let mut cur = 1.0 + alpha - x; // L_1
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Spherical harmonic `Y_l^m(theta, phi)` with Condon-Shortley phase,
/// returning `(value, d/dtheta, d/dphi)`.
pub fn spherical_harmonic(
    l: u32,
    m: i32,
    theta: f64,
    phi: f64,
) -> Result<(Complex64, Complex64, Complex64), BasisError> {
    if m.unsigned_abs() > l {
        return Err(BasisError::SphericalOrder { l, m });
    }
    let a = m.unsigned_abs();
    let (c, s) = (theta.cos(), theta.sin());
    let (p, dp) = legendre_factored(l, a, c);
    let norm = ylm_norm(l, a);
    // Y_l^{-a} = (-1)^a conj(Y_l^a); with the real polar part this reduces to
    // a sign on the whole expression.
    let sign = if m < 0 && a % 2 == 1 { -1.0 } else { 1.0 };
    let azimuth = Complex64::from_polar(1.0, m as f64 * phi);

    let value = sign * norm * s.powi(a as i32) * p * azimuth;
    let dtheta_real = if a == 0 {
        -norm * s * dp
    } else {
        norm * s.powi(a as i32 - 1) * (a as f64 * c * p - s * s * dp)
    };
    let dtheta = sign * dtheta_real * azimuth;
    let dphi = Complex64::new(0.0, m as f64) * value;
    Ok((value, dtheta, dphi))
}

/// Normalization `sqrt((2l+1)/(4 pi) * (l-a)!/(l+a)!)` for `Y_l^a`, a >= 0.
pub(crate) fn ylm_norm(l: u32, a: u32) -> f64 {
    let ratio = factorial(l - a) / factorial(l + a);
    ((2.0 * l as f64 + 1.0) / (4.0 * std::f64::consts::PI) * ratio).sqrt()
}

/// Associated Legendre with the `sin^a(theta)` singular factor removed:
/// returns `(p, dp/dx)` where `P_l^a(x) = sin^a(theta) * p(x)`, `x = cos(theta)`.
///
/// Keeping `p` polynomial in `x` lets callers fold the `1/sin(theta)` factors
/// of the gradient chart analytically, so Cartesian gradients stay finite on
/// the z-axis.
pub(crate) fn legendre_factored(l: u32, a: u32, x: f64) -> (f64, f64) {
    debug_assert!(a <= l);
    // p_{a,a} = (-1)^a (2a-1)!!  (Condon-Shortley phase lives here)
    let mut paa = 1.0;
    for k in 1..=a {
        paa *= -(2.0 * k as f64 - 1.0);
    }
    if l == a {
        return (paa, 0.0);
    }
    let mut prev = paa;
    let mut dprev = 0.0;
    let mut cur = x * (2.0 * a as f64 + 1.0) * paa;
    let mut dcur = (2.0 * a as f64 + 1.0) * paa;
    for deg in (a + 2)..=l {
        let lf = deg as f64;
        let af = a as f64;
        let inv = 1.0 / (lf - af);
        let next = inv * (x * (2.0 * lf - 1.0) * cur - (lf + af - 1.0) * prev);
        let dnext = inv * ((2.0 * lf - 1.0) * (cur + x * dcur) - (lf + af - 1.0) * dprev);
        prev = cur;
        dprev = dcur;
        cur = next;
        dcur = dnext;
    }
    (cur, dcur)
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Odd double factorial `(2k+1)!! = 1*3*...*(2k+1)` as a float.
pub(crate) fn odd_double_factorial(k: u32) -> f64 {
    (0..=k).fold(1.0, |acc, j| acc * (2.0 * j as f64 + 1.0))
}
