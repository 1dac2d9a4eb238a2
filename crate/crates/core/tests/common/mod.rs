//! Shared fixtures for the integration suites: the regression states, seeded
//! point sampling, and quadrature oracles that are independent of the
//! library's evaluation path.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

use bohm_core::basis::{BasisFamily, BasisState};
use bohm_core::wavefunction::{ProductTerm, WaveFunction};

pub fn bs(family: BasisFamily, qn: &[i32]) -> BasisState {
    BasisState::new(family, qn).unwrap()
}

pub fn phase(p: f64) -> Complex64 {
    Complex64::from_polar(1.0, p)
}

/// Spherical-basis three-mode superposition, energy 9/2.
pub fn ho3d_stat() -> WaveFunction {
    WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm3DSph, &[0, 3, 1])]),
        ProductTerm::new(phase(PI / 3.0), vec![bs(BasisFamily::Harm3DSph, &[0, 3, 0])]),
        ProductTerm::new(phase(PI / 7.0), vec![bs(BasisFamily::Harm3DSph, &[1, 1, 0])]),
    ])
    .unwrap()
}

/// Published start point of the spherical-basis run, converted from
/// (r, theta, phi) = (6.6969, 2.38696, -0.249865).
pub fn ho3d_stat_x0() -> Vec<f64> {
    let (r, th, ph): (f64, f64, f64) = (6.6969, 2.38696, -0.249865);
    vec![
        r * th.sin() * ph.cos(),
        r * th.sin() * ph.sin(),
        r * th.cos(),
    ]
}

/// Cartesian-basis three-mode superposition, energy 9/2 (nodal plane x = 0).
pub fn ho3d_stat_cart() -> WaveFunction {
    WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm3DCart, &[1, 1, 1])]),
        ProductTerm::new(phase(PI / 3.0), vec![bs(BasisFamily::Harm3DCart, &[3, 0, 0])]),
        ProductTerm::new(phase(PI / 7.0), vec![bs(BasisFamily::Harm3DCart, &[1, 2, 0])]),
    ])
    .unwrap()
}

pub fn ho3d_stat_cart_x0() -> Vec<f64> {
    vec![-2.212756, -1.97466, 0.179963]
}

/// Two-particle four-term polar-basis state, energy 6.
pub fn harm_2p_polar() -> WaveFunction {
    let p11 = bs(BasisFamily::Harm2DPolar, &[1, 1]);
    let p20 = bs(BasisFamily::Harm2DPolar, &[2, 0]);
    WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![p11.clone(), p11.clone()]),
        ProductTerm::new(phase(PI / 3.0), vec![p11.clone(), p20.clone()]),
        ProductTerm::new(phase(PI / 5.0), vec![p20.clone(), p11.clone()]),
        ProductTerm::new(phase(PI / 7.0), vec![p20.clone(), p20.clone()]),
    ])
    .unwrap()
}

pub fn harm_2p_polar_x0() -> Vec<f64> {
    vec![2.37166, -0.374916, -0.522219, 2.99893]
}

/// Two-particle diagonal three-state Cartesian-basis state, energy 6.
pub fn harm_2p_cart() -> WaveFunction {
    let a = bs(BasisFamily::Harm2DCart, &[1, 1]);
    let b = bs(BasisFamily::Harm2DCart, &[2, 0]);
    let c = bs(BasisFamily::Harm2DCart, &[0, 2]);
    WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![a.clone(), a]),
        ProductTerm::new(phase(PI / 3.0), vec![b.clone(), b]),
        ProductTerm::new(phase(PI / 7.0), vec![c.clone(), c]),
    ])
    .unwrap()
}

pub fn harm_2p_cart_x0() -> Vec<f64> {
    vec![3.29867, 3.97517, 3.15679, -3.75662]
}

/// Two-particle box state over the accidental degeneracy (7,1)/(1,7)/(5,5).
pub fn box_2p() -> WaveFunction {
    let a = bs(BasisFamily::Box2D, &[7, 1]);
    let b = bs(BasisFamily::Box2D, &[1, 7]);
    let c = bs(BasisFamily::Box2D, &[5, 5]);
    WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![a.clone(), a]),
        ProductTerm::new(phase(PI / 3.0), vec![b.clone(), b]),
        ProductTerm::new(phase(PI / 7.0), vec![c.clone(), c]),
    ])
    .unwrap()
}

pub fn box_2p_x0() -> Vec<f64> {
    vec![0.666891, 0.584026, 0.193745, 0.747208]
}

/// Three-particle W pattern over polar states, energy 15.
pub fn harm_3p_w_polar() -> WaveFunction {
    let p31 = bs(BasisFamily::Harm2DPolar, &[3, 1]);
    let p40 = bs(BasisFamily::Harm2DPolar, &[4, 0]);
    WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![p31.clone(), p40.clone(), p40.clone()]),
        ProductTerm::new(phase(PI / 3.0), vec![p40.clone(), p31.clone(), p40.clone()]),
        ProductTerm::new(phase(PI / 7.0), vec![p40.clone(), p40.clone(), p31.clone()]),
    ])
    .unwrap()
}

pub fn harm_3p_w_polar_x0() -> Vec<f64> {
    vec![1.40802, -3.0515, 0.97766, 1.33025, -1.971814, 1.64945]
}

/// Three-particle diagonal three-state Cartesian-basis state, energy 15.
pub fn harm_3p_cart() -> WaveFunction {
    let a = bs(BasisFamily::Harm2DCart, &[3, 1]);
    let b = bs(BasisFamily::Harm2DCart, &[4, 0]);
    let c = bs(BasisFamily::Harm2DCart, &[2, 2]);
    WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![a.clone(), a.clone(), a]),
        ProductTerm::new(phase(PI / 3.0), vec![b.clone(), b.clone(), b]),
        ProductTerm::new(phase(PI / 7.0), vec![c.clone(), c.clone(), c]),
    ])
    .unwrap()
}

pub fn harm_3p_cart_x0() -> Vec<f64> {
    vec![-2.98281, -1.92732, 2.84168, -0.12871, -2.43547, -0.292984]
}

/// Three-particle box state over the same accidental degeneracy.
pub fn box_3p() -> WaveFunction {
    let a = bs(BasisFamily::Box2D, &[5, 5]);
    let b = bs(BasisFamily::Box2D, &[7, 1]);
    let c = bs(BasisFamily::Box2D, &[1, 7]);
    WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![a.clone(), a.clone(), a]),
        ProductTerm::new(phase(PI / 3.0), vec![b.clone(), b.clone(), b]),
        ProductTerm::new(phase(PI / 7.0), vec![c.clone(), c.clone(), c]),
    ])
    .unwrap()
}

pub fn box_3p_x0() -> Vec<f64> {
    vec![0.383739, 0.882733, 0.464473, 0.481246, 0.616311, 0.586823]
}

/// Gauss-Legendre nodes/weights on [a, b], located by sign-change bracketing
/// plus bisection on P_n (independent of any library code).
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    fn legendre(n: usize, x: f64) -> (f64, f64) {
        let (mut p0, mut p1) = (1.0, x);
        if n == 0 {
            return (1.0, 0.0);
        }
        for k in 1..n {
            let kf = k as f64;
            let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, dp)
    }
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let grid = 8 * n;
    let mut prev_x = -1.0 + 1e-12;
    let mut prev_v = legendre(n, prev_x).0;
    for i in 1..=grid {
        let x = -1.0 + 2.0 * i as f64 / grid as f64 - 1e-12;
        let v = legendre(n, x).0;
        if prev_v.signum() != v.signum() {
            let (mut lo, mut hi) = (prev_x, x);
            let mut flo = prev_v;
            for _ in 0..90 {
                let mid = 0.5 * (lo + hi);
                let fm = legendre(n, mid).0;
                if flo.signum() == fm.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            let (_, dp) = legendre(n, root);
            nodes.push(root);
            weights.push(2.0 / ((1.0 - root * root) * dp * dp));
        }
        prev_x = x;
        prev_v = v;
    }
    assert_eq!(nodes.len(), n, "found all Legendre roots");
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        nodes.iter().map(|x| mid + half * x).collect(),
        weights.iter().map(|w| w * half).collect(),
    )
}

/// Gauss-Hermite nodes/weights for `int e^{-x^2} g(x) dx`, same bracketing
/// approach on H_n.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    fn hermite(n: usize, x: f64) -> (f64, f64) {
        let (mut h0, mut h1) = (1.0, 2.0 * x);
        if n == 0 {
            return (1.0, 0.0);
        }
        for k in 1..n {
            let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
            h0 = h1;
            h1 = h2;
        }
        (h1, 2.0 * n as f64 * h0)
    }
    let bound = (2.0 * n as f64 + 1.0).sqrt() + 2.0;
    let grid = 40 * n;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut prev_x = -bound;
    let mut prev_v = hermite(n, prev_x).0;
    for i in 1..=grid {
        let x = -bound + 2.0 * bound * i as f64 / grid as f64;
        let v = hermite(n, x).0;
        if prev_v.signum() != v.signum() {
            let (mut lo, mut hi) = (prev_x, x);
            let mut flo = prev_v;
            for _ in 0..90 {
                let mid = 0.5 * (lo + hi);
                let fm = hermite(n, mid).0;
                if flo.signum() == fm.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            nodes.push(root);
            // w_i = 2^{n-1} n! sqrt(pi) / (n^2 H_{n-1}(x_i)^2)
            let hnm1 = hermite(n - 1, root).0;
            let mut factor = std::f64::consts::PI.sqrt();
            for k in 1..=n {
                factor *= 2.0 * k as f64; // 2^n n!
            }
            factor /= 2.0; // 2^{n-1} n!
            weights.push(factor / ((n * n) as f64 * hnm1 * hnm1));
        }
        prev_x = x;
        prev_v = v;
    }
    assert_eq!(nodes.len(), n, "found all Hermite roots");
    (nodes, weights)
}

/// Uniform point in a centered cube of the given half-width.
pub fn random_point(rng: &mut impl Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}
