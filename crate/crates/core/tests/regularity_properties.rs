//! Constant-of-motion residuals against integrator tolerance, and the link
//! between detected structure and vanishing chaos at desk scale.

mod common;

use common::{bs, phase};
use std::f64::consts::PI;

use bohm_core::basis::BasisFamily;
use bohm_core::chaos::{lyapunov, LyapunovParams};
use bohm_core::dynamics::{integrate, IntegratorParams};
use bohm_core::regularity::{com_residual, detect_structure, rotating_frame, StructureKind};
use bohm_core::wavefunction::{Configuration, ProductTerm, WaveFunction};

/// Two-term single-particle superposition with moving nodes (distinct
/// energies), separable real factors.
fn moving_node_state() -> WaveFunction {
    WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm2DCart, &[1, 0])]),
        ProductTerm::new(phase(PI / 5.0), vec![bs(BasisFamily::Harm2DCart, &[0, 2])]),
    ])
    .unwrap()
}

#[test]
fn residual_scales_with_integrator_tolerance() {
    let wf = moving_node_state();
    let report = detect_structure(&wf);
    assert_eq!(report.matches.len(), 1);
    let x0 = Configuration::new(vec![0.8, -0.45]);
    let residual_at = |rel: f64| {
        let params = IntegratorParams {
            rel_tol: rel,
            abs_tol: rel,
            ..Default::default()
        };
        let traj = integrate(&wf, &x0, (0.0, 40.0), &params, 0.2).unwrap();
        com_residual(&wf, &traj, &report.matches[0]).unwrap().0
    };
    let coarse = residual_at(1e-8);
    let fine = residual_at(1e-9);
    let finest = residual_at(1e-10);
    assert!(
        coarse >= 3.0 * fine,
        "residual did not shrink: {coarse:e} -> {fine:e}"
    );
    assert!(
        fine >= 3.0 * finest,
        "residual did not shrink: {fine:e} -> {finest:e}"
    );
    assert!(finest <= 1e-6);
}

#[test]
fn moving_nodes_with_constants_stay_regular() {
    // arbitrary many moving nodes, yet one pair constant in 2-d forbids chaos
    let wf = moving_node_state();
    let params = LyapunovParams {
        n_steps: 3000,
        seed: 21,
        ..Default::default()
    };
    let est = lyapunov(
        &wf,
        &Configuration::new(vec![0.8, -0.45]),
        &params,
        &IntegratorParams::default(),
    )
    .unwrap();
    assert!(est.final_h.abs() <= 1e-3, "h = {}", est.final_h);
}

#[test]
fn rotating_frame_states_are_regular() {
    // two-term angular-momentum superposition with distinct energies: nodes
    // rotate rigidly at omega and the motion stays regular
    let wf = WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm2DPolar, &[2, 0])]),
        ProductTerm::new(phase(0.7), vec![bs(BasisFamily::Harm2DPolar, &[0, 1])]),
    ])
    .unwrap();
    let frame = rotating_frame(&wf).unwrap();
    // omega = (E1 - E2)/(m2 - m1) = (3 - 2)/(-1 - 2)
    assert!((frame.omega - (3.0 - 2.0) / (-1.0 - 2.0)).abs() <= 1e-15);

    // the running estimate of a regular flow decays like 1/T; the 1e-3 bound
    // is meaningful from T = 1e4 on
    let params = LyapunovParams {
        n_steps: 10_000,
        seed: 4,
        ..Default::default()
    };
    let est = lyapunov(
        &wf,
        &Configuration::new(vec![1.3, 0.2]),
        &params,
        &IntegratorParams::default(),
    )
    .unwrap();
    assert!(est.final_h.abs() <= 1e-3, "h = {}", est.final_h);
}

#[test]
fn ghz_radial_constants_hold_along_trajectories() {
    let p31 = bs(BasisFamily::Harm2DPolar, &[3, 1]);
    let p40 = bs(BasisFamily::Harm2DPolar, &[4, 0]);
    let wf = WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![p31.clone(), p31.clone(), p31.clone()]),
        ProductTerm::new(phase(PI / 3.0), vec![p40.clone(), p40.clone(), p40.clone()]),
    ])
    .unwrap();
    let report = detect_structure(&wf);
    assert_eq!(report.matches.len(), 3);
    assert_eq!(report.independent_count, 2);
    let params = IntegratorParams {
        rel_tol: 1e-10,
        abs_tol: 1e-10,
        ..Default::default()
    };
    let traj = integrate(
        &wf,
        &Configuration::new(vec![1.1, 0.3, -0.8, 0.9, 0.4, -1.2]),
        (0.0, 30.0),
        &params,
        0.1,
    )
    .unwrap();
    for m in &report.matches {
        assert_eq!(m.kind, StructureKind::SphericalPair);
        let (residual, skipped) = com_residual(&wf, &traj, m).unwrap();
        assert!(residual <= 1e-6, "residual {residual}");
        assert!(skipped < traj.samples.len() / 5);
    }
}
