//! Single-particle energy eigenstates of the 2-d box, the 2-d harmonic
//! oscillator (Cartesian and polar bases) and the 3-d harmonic oscillator
//! (Cartesian and spherical bases), with energies and analytic Cartesian
//! gradients.
//!
//! All evaluation happens in Cartesian coordinates; the polar/spherical
//! formulas are converted through the chain rule with the `1/r` and
//! `1/(r sin theta)` factors folded analytically, so gradients stay finite
//! on the coordinate-chart singularities (z-axis, origin) wherever the state
//! itself is finite.

mod special;

pub use special::{hermite, laguerre_assoc, spherical_harmonic};

use num_complex::Complex64;
use thiserror::Error;

use special::{factorial, legendre_factored, odd_double_factorial, ylm_norm};

#[derive(Debug, Error, PartialEq)]
pub enum BasisError {
    #[error("laguerre order alpha must be > -1, got {alpha}")]
    LaguerreAlpha { alpha: f64 },
    #[error("spherical harmonic requires |m| <= l, got l = {l}, m = {m}")]
    SphericalOrder { l: u32, m: i32 },
    #[error("{family:?} expects {expected} quantum numbers, got {got}")]
    QuantumNumberArity {
        family: BasisFamily,
        expected: usize,
        got: usize,
    },
    #[error("invalid quantum numbers {qn:?} for {family:?}: {reason}")]
    QuantumNumberRange {
        family: BasisFamily,
        qn: Vec<i32>,
        reason: String,
    },
    #[error("point dimension {got} does not match family dimension {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("box eigenstates are only defined inside the unit square, got ({x}, {y})")]
    OutOfDomain { x: f64, y: f64 },
}

/// The five eigenstate families. Each tag fixes the spatial dimension and the
/// quantum-number arity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisFamily {
    /// Unit square box, `(n_x, n_y)` with `n_i >= 1`.
    Box2D,
    /// 2-d isotropic oscillator, Cartesian `(n_x, n_y)` with `n_i >= 0`.
    Harm2DCart,
    /// 2-d isotropic oscillator, angular-momentum basis `(n_r, n_l)`, both `>= 0`.
    Harm2DPolar,
    /// 3-d isotropic oscillator, Cartesian `(n_x, n_y, n_z)` with `n_i >= 0`.
    Harm3DCart,
    /// 3-d isotropic oscillator, `(k, l, m)` with `k, l >= 0` and `|m| <= l`.
    Harm3DSph,
}

impl BasisFamily {
    pub fn dimension(self) -> usize {
        match self {
            BasisFamily::Box2D | BasisFamily::Harm2DCart | BasisFamily::Harm2DPolar => 2,
            BasisFamily::Harm3DCart | BasisFamily::Harm3DSph => 3,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            BasisFamily::Box2D | BasisFamily::Harm2DCart | BasisFamily::Harm2DPolar => 2,
            BasisFamily::Harm3DCart | BasisFamily::Harm3DSph => 3,
        }
    }
}

/// Value and Cartesian gradient of an eigenstate at one point. For 2-d
/// families the third gradient slot is zero.
#[derive(Debug, Clone, Copy)]
pub struct PointEval {
    pub value: Complex64,
    pub gradient: [Complex64; 3],
}

/// A validated single-particle eigenstate, identified by family and quantum
/// numbers. The normalization constant is precomputed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisState {
    family: BasisFamily,
    qn: [i32; 3],
    norm: f64,
}

impl BasisState {
    pub fn new(family: BasisFamily, quantum_numbers: &[i32]) -> Result<Self, BasisError> {
        let arity = family.arity();
        if quantum_numbers.len() != arity {
            return Err(BasisError::QuantumNumberArity {
                family,
                expected: arity,
                got: quantum_numbers.len(),
            });
        }
        let mut qn = [0i32; 3];
        qn[..arity].copy_from_slice(quantum_numbers);
        let range_err = |reason: &str| BasisError::QuantumNumberRange {
            family,
            qn: quantum_numbers.to_vec(),
            reason: reason.to_string(),
        };
        match family {
            BasisFamily::Box2D => {
                if qn[0] < 1 || qn[1] < 1 {
                    return Err(range_err("box quantum numbers start at 1"));
                }
            }
            BasisFamily::Harm2DCart | BasisFamily::Harm2DPolar => {
                if qn[0] < 0 || qn[1] < 0 {
                    return Err(range_err("quantum numbers must be nonnegative"));
                }
            }
            BasisFamily::Harm3DCart => {
                if qn.iter().any(|&n| n < 0) {
                    return Err(range_err("quantum numbers must be nonnegative"));
                }
            }
            BasisFamily::Harm3DSph => {
                let (k, l, m) = (qn[0], qn[1], qn[2]);
                if k < 0 || l < 0 {
                    return Err(range_err("k and l must be nonnegative"));
                }
                if m.abs() > l {
                    return Err(range_err("m must satisfy -l <= m <= l"));
                }
            }
        }
        let norm = normalization(family, &qn);
        Ok(BasisState { family, qn, norm })
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn quantum_numbers(&self) -> &[i32] {
        &self.qn[..self.family.arity()]
    }

    pub fn dimension(&self) -> usize {
        self.family.dimension()
    }

    /// Energy eigenvalue in units of `hbar omega` (box: `hbar^2/(2 m L^2) = 1/2`).
    pub fn energy(&self) -> f64 {
        let q = &self.qn;
        match self.family {
            BasisFamily::Box2D => {
                let pi2 = std::f64::consts::PI * std::f64::consts::PI;
                0.5 * pi2 * ((q[0] * q[0] + q[1] * q[1]) as f64)
            }
            BasisFamily::Harm2DCart | BasisFamily::Harm2DPolar => (q[0] + q[1]) as f64 + 1.0,
            BasisFamily::Harm3DCart => (q[0] + q[1] + q[2]) as f64 + 1.5,
            BasisFamily::Harm3DSph => (2 * q[0] + q[1]) as f64 + 1.5,
        }
    }

    /// Evaluate the state and its Cartesian gradient. Box states reject
    /// points outside the unit square.
    pub fn eval(&self, point: &[f64]) -> Result<PointEval, BasisError> {
        if point.len() != self.dimension() {
            return Err(BasisError::PointDimension {
                expected: self.dimension(),
                got: point.len(),
            });
        }
        if self.family == BasisFamily::Box2D {
            let (x, y) = (point[0], point[1]);
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                return Err(BasisError::OutOfDomain { x, y });
            }
        }
        Ok(self.eval_unchecked(point))
    }

    /// Evaluation without the box domain check. The analytic formulas extend
    /// smoothly outside the box; finite-difference probes rely on this.
    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> PointEval {
        match self.family {
            BasisFamily::Box2D => self.eval_box(point),
            BasisFamily::Harm2DCart => self.eval_harm_cart(point, 2),
            BasisFamily::Harm3DCart => self.eval_harm_cart(point, 3),
            BasisFamily::Harm2DPolar => self.eval_harm_polar(point),
            BasisFamily::Harm3DSph => self.eval_harm_sph(point),
        }
    }

    fn eval_box(&self, point: &[f64]) -> PointEval {
        let pi = std::f64::consts::PI;
        let mut factors = [0.0f64; 2];
        let mut dfactors = [0.0f64; 2];
        for ax in 0..2 {
            let npi = self.qn[ax] as f64 * pi;
            let (s, c) = (npi * point[ax]).sin_cos();
            factors[ax] = s;
            dfactors[ax] = npi * c;
        }
        let value = 2.0 * factors[0] * factors[1];
        let gx = 2.0 * dfactors[0] * factors[1];
        let gy = 2.0 * factors[0] * dfactors[1];
        PointEval {
            value: Complex64::new(value, 0.0),
            gradient: [
                Complex64::new(gx, 0.0),
                Complex64::new(gy, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        }
    }

    fn eval_harm_cart(&self, point: &[f64], dim: usize) -> PointEval {
        let mut r2 = 0.0;
        let mut hvals = [0.0f64; 3];
        let mut hders = [0.0f64; 3];
        for ax in 0..dim {
            r2 += point[ax] * point[ax];
            let (h, dh) = hermite(self.qn[ax] as u32, point[ax]);
            hvals[ax] = h;
            hders[ax] = dh;
        }
        let gauss = (-0.5 * r2).exp();
        let mut prod = self.norm * gauss;
        for ax in 0..dim {
            prod *= hvals[ax];
        }
        let mut gradient = [Complex64::new(0.0, 0.0); 3];
        for ax in 0..dim {
            // d/dx [H(x) e^{-x^2/2}] = (H' - x H) e^{-x^2/2}; other axes factor out
            let mut g = self.norm * gauss * (hders[ax] - point[ax] * hvals[ax]);
            for other in 0..dim {
                if other != ax {
                    g *= hvals[other];
                }
            }
            gradient[ax] = Complex64::new(g, 0.0);
        }
        PointEval {
            value: Complex64::new(prod, 0.0),
            gradient,
        }
    }

    fn eval_harm_polar(&self, point: &[f64]) -> PointEval {
        let m = self.qn[0] - self.qn[1];
        let a = m.unsigned_abs();
        let n = self.qn[0].min(self.qn[1]) as u32;
        let (x, y) = (point[0], point[1]);
        let r2 = x * x + y * y;
        let r = r2.sqrt();
        let (lag, dlag) = laguerre_assoc(n, a as f64, r2).expect("alpha = |m| >= 0");
        let gauss = (-0.5 * r2).exp();
        let norm = self.norm;

        let radial = norm * r.powi(a as i32) * gauss * lag;
        // dR/dr = N e^{-r^2/2} r^{a-1} [a L + r^2 (2 L' - L)]
        let dradial = if a == 0 {
            norm * gauss * r * (2.0 * dlag - lag)
        } else {
            norm * gauss * r.powi(a as i32 - 1) * (a as f64 * lag + r2 * (2.0 * dlag - lag))
        };

        let (cphi, sphi) = if r == 0.0 { (1.0, 0.0) } else { (x / r, y / r) };
        let azimuth = phase_power(cphi, sphi, m);
        let value = radial * azimuth;

        let mut gradient = [Complex64::new(0.0, 0.0); 3];
        let rhat = [cphi, sphi];
        let phat = [-sphi, cphi];
        for ax in 0..2 {
            let mut g = Complex64::new(dradial * rhat[ax], 0.0);
            if m != 0 {
                // (1/r) dpsi/dphi = i m (R/r) e^{i m phi}; R/r stays finite for a >= 1
                let rad_div_r = norm * r.powi(a as i32 - 1) * gauss * lag;
                g += Complex64::new(0.0, m as f64 * rad_div_r * phat[ax]);
            }
            gradient[ax] = g * azimuth;
        }
        PointEval { value, gradient }
    }

    fn eval_harm_sph(&self, point: &[f64]) -> PointEval {
        let k = self.qn[0] as u32;
        let l = self.qn[1] as u32;
        let m = self.qn[2];
        let a = m.unsigned_abs();
        let (x, y, z) = (point[0], point[1], point[2]);
        let rho2 = x * x + y * y;
        let r2 = rho2 + z * z;
        let r = r2.sqrt();
        let rho = rho2.sqrt();

        // Chart conventions at the singular loci: phi := 0 on the z-axis,
        // theta := 0 at the origin. The factored forms below keep every term
        // finite there, and continuity of the gradient makes the values exact.
        let (ct, st) = if r == 0.0 { (1.0, 0.0) } else { (z / r, rho / r) };
        let (cphi, sphi) = if rho == 0.0 { (1.0, 0.0) } else { (x / rho, y / rho) };

        let (lag, dlag) = laguerre_assoc(k, l as f64 + 0.5, r2).expect("alpha = l + 1/2 > -1");
        let gauss = (-0.5 * r2).exp();
        let nrad = self.norm;
        let radial = nrad * r.powi(l as i32) * gauss * lag;
        let dradial = if l == 0 {
            nrad * gauss * r * (2.0 * dlag - lag)
        } else {
            nrad * gauss * r.powi(l as i32 - 1) * (l as f64 * lag + r2 * (2.0 * dlag - lag))
        };

        let (p, dp) = legendre_factored(l, a, ct);
        let cnorm = ylm_norm(l, a);
        let sign = if m < 0 && a % 2 == 1 { -1.0 } else { 1.0 };
        let azimuth = phase_power(cphi, sphi, m);

        let ylm_real = cnorm * st.powi(a as i32) * p;
        let value = sign * radial * ylm_real * azimuth;

        let rhat = [st * cphi, st * sphi, ct];
        let that = [ct * cphi, ct * sphi, -st];
        let phat = [-sphi, cphi, 0.0];

        let mut gradient = [Complex64::new(0.0, 0.0); 3];
        let term_r = dradial * ylm_real;
        // Angular terms carry R(r)/r, finite for l >= 1; for l = 0 both vanish.
        let (term_t, term_p) = if l == 0 {
            (0.0, 0.0)
        } else {
            let rad_div_r = nrad * r.powi(l as i32 - 1) * gauss * lag;
            let dylm_dtheta = if a == 0 {
                -cnorm * st * dp
            } else {
                cnorm * st.powi(a as i32 - 1) * (a as f64 * ct * p - st * st * dp)
            };
            let ylm_div_s = if a == 0 {
                0.0
            } else {
                cnorm * st.powi(a as i32 - 1) * p
            };
            (rad_div_r * dylm_dtheta, rad_div_r * ylm_div_s)
        };
        for ax in 0..3 {
            let real_part = term_r * rhat[ax] + term_t * that[ax];
            let g = Complex64::new(real_part, m as f64 * term_p * phat[ax]);
            gradient[ax] = sign * g * azimuth;
        }
        PointEval { value, gradient }
    }
}

/// Sine/cosine of `pi x` and `pi y`, shared by all box factors of one
/// particle at one point; `sin(n pi x)` follows by the angle-addition
/// recurrence, which replaces one `sin_cos` call per factor per axis.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BoxTrig {
    sc: [(f64, f64); 2],
}

impl BoxTrig {
    pub(crate) fn at(point: &[f64]) -> Self {
        let pi = std::f64::consts::PI;
        BoxTrig {
            sc: [(pi * point[0]).sin_cos(), (pi * point[1]).sin_cos()],
        }
    }

    /// `(sin(n theta), cos(n theta))` from the base angle, n >= 1.
    fn multiple(&self, axis: usize, n: i32) -> (f64, f64) {
        let (s1, c1) = self.sc[axis];
        let (mut s, mut c) = (s1, c1);
        for _ in 1..n {
            let s_next = s * c1 + c * s1;
            c = c * c1 - s * s1;
            s = s_next;
        }
        (s, c)
    }
}

impl BasisState {
    /// Box-state evaluation from precomputed base-angle trig.
    pub(crate) fn eval_box_shared(&self, trig: &BoxTrig) -> PointEval {
        debug_assert_eq!(self.family, BasisFamily::Box2D);
        let pi = std::f64::consts::PI;
        let (sx, cx) = trig.multiple(0, self.qn[0]);
        let (sy, cy) = trig.multiple(1, self.qn[1]);
        PointEval {
            value: Complex64::new(2.0 * sx * sy, 0.0),
            gradient: [
                Complex64::new(2.0 * self.qn[0] as f64 * pi * cx * sy, 0.0),
                Complex64::new(2.0 * self.qn[1] as f64 * pi * sx * cy, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        }
    }
}

/// `(cos phi + i sin phi)^m`, with negative powers by conjugation. Exact for
/// m = 0 and avoids `atan2` round trips in the hot path.
fn phase_power(cphi: f64, sphi: f64, m: i32) -> Complex64 {
    let base = Complex64::new(cphi, sphi);
    match m {
        0 => Complex64::new(1.0, 0.0),
        m if m > 0 => base.powu(m as u32),
        m => base.conj().powu((-m) as u32),
    }
}

fn normalization(family: BasisFamily, qn: &[i32; 3]) -> f64 {
    match family {
        BasisFamily::Box2D => 1.0, // the 2 is part of the closed form
        BasisFamily::Harm2DCart => {
            let n = (qn[0] + qn[1]) as u32;
            1.0 / (std::f64::consts::PI
                * 2f64.powi(n as i32)
                * factorial(qn[0] as u32)
                * factorial(qn[1] as u32))
            .sqrt()
        }
        BasisFamily::Harm3DCart => {
            let n = (qn[0] + qn[1] + qn[2]) as u32;
            1.0 / (std::f64::consts::PI.powf(1.5)
                * 2f64.powi(n as i32)
                * factorial(qn[0] as u32)
                * factorial(qn[1] as u32)
                * factorial(qn[2] as u32))
            .sqrt()
        }
        BasisFamily::Harm2DPolar => {
            let n = qn[0].min(qn[1]) as u32;
            let a = (qn[0] - qn[1]).unsigned_abs();
            (factorial(n) / (std::f64::consts::PI * factorial(n + a))).sqrt()
        }
        BasisFamily::Harm3DSph => {
            // Radial normalization against r^l e^{-r^2/2} L_k^{l+1/2}(r^2):
            // N^2 = 2^{k+l+2} k! / (sqrt(pi) (2k+2l+1)!!)
            let k = qn[0] as u32;
            let l = qn[1] as u32;
            (2f64.powi((k + l + 2) as i32) * factorial(k)
                / (std::f64::consts::PI.sqrt() * odd_double_factorial(k + l)))
            .sqrt()
        }
    }
}

/// Scalar-coordinate roles a basis state factors over. Cartesian families
/// factor over their axes; angular-momentum families split into a real radial
/// part, a real polar part (3-d only) and the azimuthal phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum FactorRole {
    Axis(usize),
    Radial,
    Polar,
}

/// Identity of a real 1-d factor up to a constant multiple. Two states whose
/// factors carry the same id contribute proportional functions of that
/// coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum FactorId {
    BoxSin(i32),
    HermGauss(i32),
    PolarRadial { n: i32, a: i32 },
    SphRadial { k: i32, l: i32 },
    SphPolar { l: i32, a: i32 },
}

impl BasisState {
    /// Real scalar-coordinate roles of this family (azimuthal phases excluded).
    pub(crate) fn real_roles(&self) -> &'static [FactorRole] {
        match self.family {
            BasisFamily::Box2D | BasisFamily::Harm2DCart => {
                &[FactorRole::Axis(0), FactorRole::Axis(1)]
            }
            BasisFamily::Harm3DCart => &[
                FactorRole::Axis(0),
                FactorRole::Axis(1),
                FactorRole::Axis(2),
            ],
            BasisFamily::Harm2DPolar => &[FactorRole::Radial],
            BasisFamily::Harm3DSph => &[FactorRole::Radial, FactorRole::Polar],
        }
    }

    pub(crate) fn factor_id(&self, role: FactorRole) -> Option<FactorId> {
        match (self.family, role) {
            (BasisFamily::Box2D, FactorRole::Axis(ax)) if ax < 2 => {
                Some(FactorId::BoxSin(self.qn[ax]))
            }
            (BasisFamily::Harm2DCart, FactorRole::Axis(ax)) if ax < 2 => {
                Some(FactorId::HermGauss(self.qn[ax]))
            }
            (BasisFamily::Harm3DCart, FactorRole::Axis(ax)) if ax < 3 => {
                Some(FactorId::HermGauss(self.qn[ax]))
            }
            (BasisFamily::Harm2DPolar, FactorRole::Radial) => Some(FactorId::PolarRadial {
                n: self.qn[0].min(self.qn[1]),
                a: (self.qn[0] - self.qn[1]).abs(),
            }),
            (BasisFamily::Harm3DSph, FactorRole::Radial) => Some(FactorId::SphRadial {
                k: self.qn[0],
                l: self.qn[1],
            }),
            (BasisFamily::Harm3DSph, FactorRole::Polar) => Some(FactorId::SphPolar {
                l: self.qn[1],
                a: self.qn[2].abs(),
            }),
            _ => None,
        }
    }

    /// Angular-momentum quantum number of the azimuthal phase factor, when
    /// the family has one.
    pub(crate) fn azimuthal_m(&self) -> Option<i32> {
        match self.family {
            BasisFamily::Harm2DPolar => Some(self.qn[0] - self.qn[1]),
            BasisFamily::Harm3DSph => Some(self.qn[2]),
            _ => None,
        }
    }

    /// Unnormalized real factor and its derivative in the given scalar
    /// coordinate. Constant multiples are irrelevant to every consumer
    /// (the constant-of-motion quotients are scale invariant).
    pub(crate) fn scalar_factor(&self, role: FactorRole, q: f64) -> (f64, f64) {
        match (self.family, role) {
            (BasisFamily::Box2D, FactorRole::Axis(ax)) => {
                let npi = self.qn[ax] as f64 * std::f64::consts::PI;
                let (s, c) = (npi * q).sin_cos();
                (s, npi * c)
            }
            (BasisFamily::Harm2DCart, FactorRole::Axis(ax))
            | (BasisFamily::Harm3DCart, FactorRole::Axis(ax)) => {
                let (h, dh) = hermite(self.qn[ax] as u32, q);
                let gauss = (-0.5 * q * q).exp();
                (h * gauss, (dh - q * h) * gauss)
            }
            (BasisFamily::Harm2DPolar, FactorRole::Radial) => {
                let n = self.qn[0].min(self.qn[1]) as u32;
                let a = (self.qn[0] - self.qn[1]).unsigned_abs();
                radial_factor(n, a as f64, a as i32, q)
            }
            (BasisFamily::Harm3DSph, FactorRole::Radial) => {
                let k = self.qn[0] as u32;
                let l = self.qn[1];
                radial_factor(k, l as f64 + 0.5, l, q)
            }
            (BasisFamily::Harm3DSph, FactorRole::Polar) => {
                let l = self.qn[1] as u32;
                let a = self.qn[2].unsigned_abs();
                let (ct, st) = (q.cos(), q.sin());
                let (p, dp) = legendre_factored(l, a, ct);
                let value = st.powi(a as i32) * p;
                let deriv = if a == 0 {
                    -st * dp
                } else {
                    st.powi(a as i32 - 1) * (a as f64 * ct * p - st * st * dp)
                };
                (value, deriv)
            }
            _ => panic!("factor role {role:?} not defined for {:?}", self.family),
        }
    }
}

/// `r^pow e^{-r^2/2} L_n^alpha(r^2)` and its r-derivative, unnormalized.
fn radial_factor(n: u32, alpha: f64, pow: i32, r: f64) -> (f64, f64) {
    let r2 = r * r;
    let (lag, dlag) = laguerre_assoc(n, alpha, r2).expect("alpha > -1");
    let gauss = (-0.5 * r2).exp();
    let value = r.powi(pow) * gauss * lag;
    let deriv = if pow == 0 {
        gauss * r * (2.0 * dlag - lag)
    } else {
        gauss * r.powi(pow - 1) * (pow as f64 * lag + r2 * (2.0 * dlag - lag))
    };
    (value, deriv)
}
