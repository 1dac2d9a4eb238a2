//! Integrator-level invariants: the closed-form angular-momentum oracle,
//! long-horizon circular orbits, backward consistency, tolerance
//! convergence, box confinement, and the finite-difference energy check.

mod common;

use common::{box_2p, box_2p_x0, bs, ho3d_stat, ho3d_stat_x0};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bohm_core::basis::BasisFamily;
use bohm_core::dynamics::{
    integrate, quantum_potential_fd, velocity, IntegratorParams, TrajectoryStatus,
};
use bohm_core::wavefunction::{Configuration, ProductTerm, WaveFunction};

/// Cartesian velocity converted to spherical chart rates for a single
/// angular-momentum eigenstate matches `(0, 0, m / (r sin theta)^2)`.
#[test]
fn spherical_guidance_oracle() {
    let m = 2;
    let wf = WaveFunction::build(vec![ProductTerm::new(
        1.0.into(),
        vec![bs(BasisFamily::Harm3DSph, &[0, 3, m])],
    )])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..25 {
        let x: f64 = rng.gen_range(-2.0..2.0);
        let y: f64 = rng.gen_range(-2.0..2.0);
        let z: f64 = rng.gen_range(-1.5..1.5);
        let rho2 = x * x + y * y;
        if rho2 < 0.1 {
            continue;
        }
        let r2 = rho2 + z * z;
        let v = velocity(&wf, &Configuration::new(vec![x, y, z]), 0.0).unwrap();
        // r_dot = x . v / r
        let r_dot = (x * v[0] + y * v[1] + z * v[2]) / r2.sqrt();
        // theta_dot = (z rho_dot - rho z_dot) / r^2
        let rho = rho2.sqrt();
        let rho_dot = (x * v[0] + y * v[1]) / rho;
        let theta_dot = (z * rho_dot - rho * v[2]) / r2;
        // phi_dot = (x vy - y vx) / rho^2
        let phi_dot = (x * v[1] - y * v[0]) / rho2;
        assert!(r_dot.abs() <= 1e-10, "r_dot = {r_dot}");
        assert!(theta_dot.abs() <= 1e-10, "theta_dot = {theta_dot}");
        let expect = m as f64 / rho2; // m / (r sin theta)^2
        assert!(
            (phi_dot - expect).abs() <= 1e-10 * expect.abs(),
            "phi_dot = {phi_dot}, expected {expect}"
        );
    }
}

#[test]
fn polar_circles_hold_radius_over_long_horizons() {
    let m = 1;
    let wf = WaveFunction::build(vec![ProductTerm::new(
        1.0.into(),
        vec![bs(BasisFamily::Harm2DPolar, &[m, 0])],
    )])
    .unwrap();
    let r0 = 2.0f64;
    let params = IntegratorParams {
        rel_tol: 1e-11,
        abs_tol: 1e-11,
        ..Default::default()
    };
    let traj = integrate(
        &wf,
        &Configuration::new(vec![r0, 0.0]),
        (0.0, 100.0),
        &params,
        1.0,
    )
    .unwrap();
    assert_eq!(traj.status, TrajectoryStatus::Completed);
    for (_, q) in &traj.samples {
        let r = (q.coordinates[0].powi(2) + q.coordinates[1].powi(2)).sqrt();
        assert!((r - r0).abs() <= 1e-8, "radius drift {}", (r - r0).abs());
    }
    // angular speed m / r0^2: after t the angle is t/4
    let (t_last, q_last) = traj.samples.last().unwrap();
    let angle = q_last.coordinates[1].atan2(q_last.coordinates[0]);
    let expect = (t_last * (m as f64) / (r0 * r0)).rem_euclid(2.0 * std::f64::consts::PI);
    let mut diff = (angle.rem_euclid(2.0 * std::f64::consts::PI) - expect).abs();
    diff = diff.min(2.0 * std::f64::consts::PI - diff);
    assert!(diff <= 1e-7, "angular drift {diff}");
}

/// Two-term angular-momentum superposition: regular motion (rigidly
/// rotating nodes), but a genuinely curved, non-stationary field.
fn regular_state() -> WaveFunction {
    WaveFunction::build(vec![
        ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm2DPolar, &[2, 0])]),
        ProductTerm::new(
            num_complex::Complex64::from_polar(0.8, 0.7),
            vec![bs(BasisFamily::Harm2DPolar, &[0, 1])],
        ),
    ])
    .unwrap()
}

#[test]
fn backward_integration_returns_home() {
    // regular state, t1 - t0 = 10, tolerance 1e-6
    let wf = regular_state();
    let params = IntegratorParams::default();
    let x0 = vec![1.2, -0.4];
    let fwd = integrate(&wf, &Configuration::new(x0.clone()), (0.0, 10.0), &params, 10.0).unwrap();
    let end = fwd.final_configuration().unwrap().coordinates.clone();
    let back = integrate(&wf, &Configuration::new(end), (10.0, 0.0), &params, 10.0).unwrap();
    let ret = &back.final_configuration().unwrap().coordinates;
    let dist: f64 = x0
        .iter()
        .zip(ret.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(dist <= 1e-6, "regular round trip missed by {dist}");

    // chaotic state, t1 - t0 = 1, tolerance 1e-3
    let wf = ho3d_stat();
    let x0 = ho3d_stat_x0();
    let fwd = integrate(&wf, &Configuration::new(x0.clone()), (0.0, 1.0), &params, 1.0).unwrap();
    let end = fwd.final_configuration().unwrap().coordinates.clone();
    let back = integrate(&wf, &Configuration::new(end), (1.0, 0.0), &params, 1.0).unwrap();
    let ret = &back.final_configuration().unwrap().coordinates;
    let dist: f64 = x0
        .iter()
        .zip(ret.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(dist <= 1e-3, "chaotic round trip missed by {dist}");
}

#[test]
fn halving_the_tolerance_moves_endpoints_within_budget() {
    // on a regular state the endpoint shift under tolerance halving is
    // bounded by the accumulated local error; chaotic states amplify it
    let wf = regular_state();
    let x0 = vec![0.9, 0.3];
    let run = |rel: f64| {
        let params = IntegratorParams {
            rel_tol: rel,
            abs_tol: rel,
            ..Default::default()
        };
        integrate(&wf, &Configuration::new(x0.clone()), (0.0, 100.0), &params, 100.0)
            .unwrap()
            .final_configuration()
            .unwrap()
            .coordinates
            .clone()
    };
    let coarse = run(1e-9);
    let fine = run(5e-10);
    let dist: f64 = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let budget = 10.0 * 1e-9 * 100.0 * 2.0;
    assert!(dist <= budget, "endpoint moved {dist} > {budget}");
}

#[test]
fn box_trajectories_never_leave_the_unit_square() {
    let wf = box_2p();
    let params = IntegratorParams::default();
    let traj = integrate(
        &wf,
        &Configuration::new(box_2p_x0()),
        (0.0, 20.0),
        &params,
        0.01,
    )
    .unwrap();
    assert!(matches!(
        traj.status,
        TrajectoryStatus::Completed | TrajectoryStatus::NodeEncounter
    ));
    assert!(traj.samples.len() > 1000);
    for (_, q) in &traj.samples {
        for c in &q.coordinates {
            assert!((0.0..=1.0).contains(c), "sample outside the box: {c}");
        }
    }
}

#[test]
fn finite_difference_energy_is_flat_along_trajectories() {
    let wf = ho3d_stat();
    let energy = wf.stationary_energy().unwrap();
    let params = IntegratorParams {
        rel_tol: 1e-10,
        abs_tol: 1e-10,
        ..Default::default()
    };
    let traj = integrate(
        &wf,
        &Configuration::new(ho3d_stat_x0()),
        (0.0, 50.0),
        &params,
        1.0,
    )
    .unwrap();
    let mut worst: f64 = 0.0;
    for (_, q) in &traj.samples {
        let d = quantum_potential_fd(&wf, q, 0.0).unwrap();
        worst = worst.max((d.total - energy).abs());
    }
    assert!(worst <= 1e-6, "max |E(x) - E| = {worst}");
}
