//! Field-level invariants: scale invariance of the velocity field, gradient
//! linearity, per-particle locality of separable states, and the
//! stationarity detector against explicit energy comparison.

mod common;

use common::{bs, ho3d_stat, phase, random_point};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bohm_core::basis::BasisFamily;
use bohm_core::dynamics::velocity;
use bohm_core::wavefunction::{Configuration, ProductTerm, WaveFunction};

fn rescaled(wf: &WaveFunction, lambda: Complex64) -> WaveFunction {
    WaveFunction::build(
        wf.terms()
            .iter()
            .map(|t| ProductTerm::new(lambda * t.coefficient, t.factors.clone()))
            .collect(),
    )
    .unwrap()
}

#[test]
fn velocity_field_is_scale_invariant() {
    let wf = ho3d_stat();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let lambda = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        if lambda.norm() < 1e-3 {
            continue;
        }
        let scaled = rescaled(&wf, lambda);
        let q = Configuration::new(random_point(&mut rng, 3, 3.0));
        let v1 = velocity(&wf, &q, 0.0).unwrap();
        let v2 = velocity(&scaled, &q, 0.0).unwrap();
        for (a, b) in v1.iter().zip(&v2) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn gradients_are_linear_in_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let s1 = bs(BasisFamily::Harm2DCart, &[2, 1]);
    let s2 = bs(BasisFamily::Harm2DPolar, &[1, 2]);
    for _ in 0..50 {
        let a = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let b = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if a.norm() + b.norm() < 1e-6 {
            continue;
        }
        let sum = WaveFunction::build(vec![
            ProductTerm::new(a, vec![s1.clone()]),
            ProductTerm::new(b, vec![s2.clone()]),
        ])
        .unwrap();
        let only1 = WaveFunction::build(vec![ProductTerm::new(a, vec![s1.clone()])]).unwrap();
        let only2 = WaveFunction::build(vec![ProductTerm::new(b, vec![s2.clone()])]).unwrap();
        let q = Configuration::new(random_point(&mut rng, 2, 2.5));
        let e = sum.evaluate(&q).unwrap();
        let e1 = only1.evaluate(&q).unwrap();
        let e2 = only2.evaluate(&q).unwrap();
        assert!((e.psi - e1.psi - e2.psi).norm() <= 1e-12 * (1.0 + e.psi.norm()));
        for i in 0..2 {
            let expect = e1.grad[i] + e2.grad[i];
            assert!((e.grad[i] - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
        }
    }
}

#[test]
fn separable_states_decouple_particles() {
    // single product term: particle 1's velocity ignores particle 2 entirely
    let wf = WaveFunction::build(vec![ProductTerm::new(
        phase(0.7) * 1.3,
        vec![
            bs(BasisFamily::Harm2DPolar, &[2, 0]),
            bs(BasisFamily::Harm2DPolar, &[0, 3]),
        ],
    )])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let base = random_point(&mut rng, 4, 2.0);
        let mut moved = base.clone();
        moved[2] = rng.gen_range(-2.0..2.0);
        moved[3] = rng.gen_range(-2.0..2.0);
        let v1 = velocity(&wf, &Configuration::new(base), 0.0).unwrap();
        let v2 = velocity(&wf, &Configuration::new(moved), 0.0).unwrap();
        for i in 0..2 {
            assert!(
                (v1[i] - v2[i]).abs() <= 1e-12 * (1.0 + v1[i].abs()),
                "particle 1 velocity moved: {} vs {}",
                v1[i],
                v2[i]
            );
        }
    }
}

#[test]
fn stationarity_detector_agrees_with_energy_comparison() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut seen_stationary = 0;
    let mut seen_moving = 0;
    for _ in 0..50 {
        // random 2-term, 1-particle sets over the 2-d oscillator
        let n1 = (rng.gen_range(0..4), rng.gen_range(0..4));
        let n2 = (rng.gen_range(0..4), rng.gen_range(0..4));
        let s1 = bs(BasisFamily::Harm2DCart, &[n1.0, n1.1]);
        let s2 = bs(BasisFamily::Harm2DCart, &[n2.0, n2.1]);
        let e1 = s1.energy();
        let e2 = s2.energy();
        let wf = WaveFunction::build(vec![
            ProductTerm::new(phase(rng.gen_range(0.0..6.28)), vec![s1]),
            ProductTerm::new(phase(rng.gen_range(0.0..6.28)), vec![s2]),
        ])
        .unwrap();
        let expect = (e1 - e2).abs() <= 1e-12;
        assert_eq!(wf.is_stationary(), expect);
        if expect {
            assert_eq!(wf.stationary_energy(), Some(e1));
            seen_stationary += 1;
        } else {
            seen_moving += 1;
        }
    }
    assert!(seen_stationary > 0 && seen_moving > 0);
}
