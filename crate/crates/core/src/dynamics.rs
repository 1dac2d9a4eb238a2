//! The guidance-equation velocity field, trajectory integration with
//! node-proximity and domain safeguards, and per-point energy diagnostics
//! (Bohmian energy and quantum potential).
//!
//! Masses, charges and `hbar` are 1 throughout; an optional per-particle mass
//! vector only rescales the velocity field.

use std::cell::Cell;
use std::rc::Rc;

use thiserror::Error;

use crate::ode::{Dopri5, StepError, StepKind};
use crate::wavefunction::{Configuration, FieldEval, WaveFunction, WaveFunctionError};

/// Finite-difference step for the numerical-Laplacian diagnostics path.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("|psi|^2 = {abs2:e} below the node-proximity floor {floor:e}")]
    NodeProximity { abs2: f64, floor: f64 },
    #[error("initial configuration outside the wave function's domain")]
    OutsideDomain,
    #[error("integrator parameters out of range: {0}")]
    BadParams(String),
    #[error("sample interval must be positive and finite, got {0}")]
    BadSampleInterval(f64),
    #[error("analytic energy diagnostics need a stationary state")]
    NonStationary,
    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error(transparent)]
    WaveFunction(#[from] WaveFunctionError),
    #[error("masses must have one positive entry per particle")]
    BadMasses,
}

/// Adaptive-integrator settings. `min_abs2` is a floor on `|psi|^2` relative
/// to the running maximum seen along the trajectory; hitting it flags a node
/// encounter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorParams {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_abs2: f64,
}

impl Default for IntegratorParams {
    fn default() -> Self {
        IntegratorParams {
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            max_step: 0.1,
            min_abs2: 1e-24,
        }
    }
}

impl IntegratorParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let all_positive = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_step > 0.0
            && self.min_abs2 > 0.0;
        if !all_positive {
            return Err(DynamicsError::BadParams(
                "rel_tol, abs_tol, max_step, min_abs2 must be positive".into(),
            ));
        }
        if self.rel_tol > 1e-3 || self.abs_tol > 1e-3 {
            return Err(DynamicsError::BadParams(
                "rel_tol and abs_tol must be at most 1e-3".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Completed,
    NodeEncounter,
    DomainExit,
    StepFailure,
}

/// Kinetic, classical-potential and quantum-potential split of the Bohmian
/// energy at one configuration.
#[derive(Debug, Clone, Copy)]
pub struct EnergyDiagnostics {
    pub kinetic: f64,
    pub potential: f64,
    pub quantum: f64,
    pub total: f64,
}

/// Per-sample diagnostics attached to a trajectory on request.
#[derive(Debug, Clone, Copy)]
pub struct SampleDiagnostics {
    pub energy: EnergyDiagnostics,
    pub abs2: f64,
}

/// Which quantum-potential evaluation backs the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticsPath {
    /// Q from the eigenvalue identity; total is the eigenvalue by construction.
    Analytic,
    /// Q from a fourth-order finite-difference Laplacian of psi.
    FiniteDifference,
}

/// Time-ordered samples of one integrated trajectory. Velocities are the
/// time derivative of the numerical interpolant at each sample, so residual
/// checks against them genuinely reflect integration error.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, Configuration)>,
    pub velocities: Vec<Vec<f64>>,
    pub status: TrajectoryStatus,
    pub diagnostics: Option<Vec<SampleDiagnostics>>,
}

impl Trajectory {
    pub fn final_time(&self) -> Option<f64> {
        self.samples.last().map(|(t, _)| *t)
    }

    pub fn final_configuration(&self) -> Option<&Configuration> {
        self.samples.last().map(|(_, q)| q)
    }
}

/// Bohmian velocity `v_i = Im(grad_i psi / psi) / m_i` at a configuration.
/// Errors with `NodeProximity` when `|psi|^2 < min_abs2` (pass 0.0 to only
/// reject exact nodes).
pub fn velocity(
    wf: &WaveFunction,
    q: &Configuration,
    min_abs2: f64,
) -> Result<Vec<f64>, DynamicsError> {
    velocity_with_masses(wf, q, min_abs2, None)
}

pub fn velocity_with_masses(
    wf: &WaveFunction,
    q: &Configuration,
    min_abs2: f64,
    masses: Option<&[f64]>,
) -> Result<Vec<f64>, DynamicsError> {
    let eval = wf.evaluate(q)?;
    if eval.abs2 < min_abs2 || eval.abs2 == 0.0 {
        return Err(DynamicsError::NodeProximity {
            abs2: eval.abs2,
            floor: min_abs2,
        });
    }
    let d = wf.dimension();
    let mut v = vec![0.0; wf.n_coords()];
    for (i, vi) in v.iter_mut().enumerate() {
        let mass = masses.map_or(1.0, |m| m[i / d]);
        *vi = (eval.grad[i] * eval.psi.conj()).im / (eval.abs2 * mass);
    }
    Ok(v)
}

/// Analytic energy diagnostics of a stationary state: with
/// `lap psi = 2(V - E) psi` the amplitude identity gives
/// `Q = E - V - |v|^2/2`, so the total is the eigenvalue exactly.
pub fn quantum_potential(
    wf: &WaveFunction,
    q: &Configuration,
    min_abs2: f64,
) -> Result<EnergyDiagnostics, DynamicsError> {
    let energy = wf.stationary_energy().ok_or(DynamicsError::NonStationary)?;
    let v = velocity(wf, q, min_abs2)?;
    let kinetic = 0.5 * v.iter().map(|vi| vi * vi).sum::<f64>();
    let potential = wf.potential(&q.coordinates);
    let quantum = energy - potential - kinetic;
    Ok(EnergyDiagnostics {
        kinetic,
        potential,
        quantum,
        total: kinetic + potential + quantum,
    })
}

/// Energy diagnostics with the quantum potential from a numerical Laplacian:
/// `lap_i psi` by fourth-order central differences (step [`FD_STEP`]), folded
/// through `lap_i|psi|/|psi| = Re(lap_i psi/psi) + v_i^2`. Unlike the
/// analytic path this makes `total` a genuine measurement.
pub fn quantum_potential_fd(
    wf: &WaveFunction,
    q: &Configuration,
    min_abs2: f64,
) -> Result<EnergyDiagnostics, DynamicsError> {
    let eval = wf.evaluate(q)?;
    if eval.abs2 < min_abs2 || eval.abs2 == 0.0 {
        return Err(DynamicsError::NodeProximity {
            abs2: eval.abs2,
            floor: min_abs2,
        });
    }
    let n = wf.n_coords();
    let h = FD_STEP;
    let mut probe = FieldEval::zeroed(n);
    let mut pq = Configuration::at_time(q.coordinates.clone(), q.time);
    let mut amp_sum = 0.0; // sum_i lap_i |psi| / |psi|
    let mut kinetic = 0.0;
    for i in 0..n {
        let x0 = q.coordinates[i];
        let mut psi_at = |dx: f64, out: &mut FieldEval| {
            pq.coordinates[i] = x0 + dx;
            let r = wf.evaluate_unchecked_into(&pq, out);
            debug_assert!(r.is_ok());
            out.psi
        };
        let p2 = psi_at(2.0 * h, &mut probe);
        let p1 = psi_at(h, &mut probe);
        let m1 = psi_at(-h, &mut probe);
        let m2 = psi_at(-2.0 * h, &mut probe);
        pq.coordinates[i] = x0;
        let lap_i = (-p2 + 16.0 * p1 - 30.0 * eval.psi + 16.0 * m1 - m2) / (12.0 * h * h);
        let vi = (eval.grad[i] * eval.psi.conj()).im / eval.abs2;
        amp_sum += (lap_i * eval.psi.conj()).re / eval.abs2 + vi * vi;
        kinetic += 0.5 * vi * vi;
    }
    let quantum = -0.5 * amp_sum;
    let potential = wf.potential(&q.coordinates);
    Ok(EnergyDiagnostics {
        kinetic,
        potential,
        quantum,
        total: kinetic + potential + quantum,
    })
}

/// Compute diagnostics at every sample of a trajectory and attach them.
pub fn attach_diagnostics(
    wf: &WaveFunction,
    traj: &mut Trajectory,
    path: DiagnosticsPath,
) -> Result<(), DynamicsError> {
    let mut out = Vec::with_capacity(traj.samples.len());
    for (_, q) in &traj.samples {
        let energy = match path {
            DiagnosticsPath::Analytic => quantum_potential(wf, q, 0.0)?,
            DiagnosticsPath::FiniteDifference => quantum_potential_fd(wf, q, 0.0)?,
        };
        let abs2 = wf.evaluate(q)?.abs2;
        out.push(SampleDiagnostics { energy, abs2 });
    }
    traj.diagnostics = Some(out);
    Ok(())
}

/// Right-hand side closure for the guidance equation, plus a cell that holds
/// `|psi|^2` of the most recent evaluation (after an accepted DOPRI5 step the
/// FSAL stage makes that the step endpoint).
pub(crate) fn guidance_rhs(
    wf: &WaveFunction,
    masses: Option<Vec<f64>>,
) -> (
    impl FnMut(f64, &[f64], &mut [f64]) + '_,
    Rc<Cell<f64>>,
) {
    let abs2_cell = Rc::new(Cell::new(f64::NAN));
    let cell = abs2_cell.clone();
    let n = wf.n_coords();
    let d = wf.dimension();
    let mut scratch = FieldEval::zeroed(n);
    let mut q = Configuration::new(vec![0.0; n]);
    let inv_masses: Option<Vec<f64>> =
        masses.map(|m| (0..n).map(|i| 1.0 / m[i / d]).collect());
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| {
        q.coordinates.copy_from_slice(y);
        q.time = t;
        match wf.evaluate_into(&q, &mut scratch) {
            Ok(()) if scratch.abs2 > 0.0 => {
                let inv_abs2 = 1.0 / scratch.abs2;
                let conj = scratch.psi.conj();
                for i in 0..n {
                    dy[i] = (scratch.grad[i] * conj).im * inv_abs2;
                    if let Some(im) = &inv_masses {
                        dy[i] *= im[i];
                    }
                }
                cell.set(scratch.abs2);
            }
            _ => {
                // outside the box or exactly on a node: poison the stage so
                // the controller shrinks the step
                dy.fill(f64::NAN);
                cell.set(f64::NAN);
            }
        }
    };
    (rhs, abs2_cell)
}

/// Integrate the guidance equation from `x0` over `t_span`, sampling the
/// dense output every `sample_every` time units. Node encounters, domain
/// exits and controller failures truncate the trajectory with the matching
/// status instead of erroring.
pub fn integrate(
    wf: &WaveFunction,
    x0: &Configuration,
    t_span: (f64, f64),
    params: &IntegratorParams,
    sample_every: f64,
) -> Result<Trajectory, DynamicsError> {
    integrate_with_masses(wf, None, x0, t_span, params, sample_every)
}

pub fn integrate_with_masses(
    wf: &WaveFunction,
    masses: Option<Vec<f64>>,
    x0: &Configuration,
    t_span: (f64, f64),
    params: &IntegratorParams,
    sample_every: f64,
) -> Result<Trajectory, DynamicsError> {
    params.validate()?;
    if !(sample_every > 0.0 && sample_every.is_finite()) {
        return Err(DynamicsError::BadSampleInterval(sample_every));
    }
    if let Some(m) = &masses {
        if m.len() != wf.particles() || m.iter().any(|&x| !(x > 0.0)) {
            return Err(DynamicsError::BadMasses);
        }
    }
    if !wf.in_domain(&x0.coordinates) {
        return Err(DynamicsError::OutsideDomain);
    }
    let initial_abs2 = wf.evaluate(&Configuration::at_time(x0.coordinates.clone(), t_span.0))?.abs2;
    if initial_abs2 == 0.0 {
        return Err(DynamicsError::NodeProximity {
            abs2: 0.0,
            floor: 0.0,
        });
    }

    let v0 = velocity_with_masses(
        wf,
        &Configuration::at_time(x0.coordinates.clone(), t_span.0),
        0.0,
        masses.as_deref(),
    )?;

    let (t0, t1) = t_span;
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let (rhs, abs2_cell) = guidance_rhs(wf, masses);
    let mut integ = Dopri5::new(
        rhs,
        t0,
        x0.coordinates.clone(),
        params.rel_tol,
        params.abs_tol,
        params.max_step,
    );

    let mut samples = vec![(t0, Configuration::at_time(x0.coordinates.clone(), t0))];
    let mut velocities = vec![v0];
    let mut running_max = initial_abs2;
    let mut mark_idx: u64 = 1;
    let mut status = TrajectoryStatus::Completed;
    let mut mark_buf = vec![0.0; wf.n_coords()];
    let mut vel_buf = vec![0.0; wf.n_coords()];

    'outer: while integ.t != t1 {
        match integ.step_toward(t1) {
            Ok(kind) => {
                // node floor applies to accepted endpoints, relative to the
                // running maximum of |psi|^2 seen so far
                let abs2_new = abs2_cell.get();
                if !abs2_new.is_finite() || abs2_new < params.min_abs2 * running_max {
                    status = TrajectoryStatus::NodeEncounter;
                    break 'outer;
                }
                if wf.has_box_particles() && !wf.in_domain(&integ.y) {
                    integ.undo_last_step();
                    if integ.step_exhausted() {
                        status = TrajectoryStatus::DomainExit;
                        break 'outer;
                    }
                    continue 'outer;
                }
                running_max = running_max.max(abs2_new);

                // pull sample marks that fall inside this accepted step
                let dense = integ.dense();
                let step_end = dense.t_end();
                let eps = 1e-9 * sample_every;
                let mut staged: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
                let mut idx = mark_idx;
                let mut domain_violation = false;
                loop {
                    let t_mark = t0 + dir * idx as f64 * sample_every;
                    if (t_mark - step_end) * dir > eps {
                        break;
                    }
                    let theta = dense.theta_of(t_mark).clamp(0.0, 1.0);
                    dense.eval_theta(theta, &mut mark_buf);
                    if wf.has_box_particles() && !wf.in_domain(&mark_buf) {
                        domain_violation = true;
                        break;
                    }
                    dense.eval_derivative_theta(theta, &mut vel_buf);
                    staged.push((t_mark, mark_buf.clone(), vel_buf.clone()));
                    idx += 1;
                }
                if domain_violation {
                    // an interpolated sample poked through a wall: shrink the
                    // step rather than clamp the position
                    integ.undo_last_step();
                    if integ.step_exhausted() {
                        status = TrajectoryStatus::DomainExit;
                        break 'outer;
                    }
                    continue 'outer;
                }
                for (t_mark, coords, vel) in staged {
                    samples.push((t_mark, Configuration::at_time(coords, t_mark)));
                    velocities.push(vel);
                }
                mark_idx = idx;
                if kind == StepKind::ReachedTarget {
                    break 'outer;
                }
            }
            Err(StepError::StepSizeUnderflow { .. }) => {
                status = TrajectoryStatus::StepFailure;
                break 'outer;
            }
            Err(StepError::NonFiniteInitial) => {
                status = TrajectoryStatus::NodeEncounter;
                break 'outer;
            }
        }
    }

    Ok(Trajectory {
        samples,
        velocities,
        status,
        diagnostics: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisFamily, BasisState};
    use crate::wavefunction::ProductTerm;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn bs(family: BasisFamily, qn: &[i32]) -> BasisState {
        BasisState::new(family, qn).unwrap()
    }

    fn phase(p: f64) -> Complex64 {
        Complex64::from_polar(1.0, p)
    }

    fn ho3d_stat() -> WaveFunction {
        WaveFunction::build(vec![
            ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm3DSph, &[0, 3, 1])]),
            ProductTerm::new(phase(PI / 3.0), vec![bs(BasisFamily::Harm3DSph, &[0, 3, 0])]),
            ProductTerm::new(phase(PI / 7.0), vec![bs(BasisFamily::Harm3DSph, &[1, 1, 0])]),
        ])
        .unwrap()
    }

    #[test]
    fn real_states_do_not_move() {
        let wf = WaveFunction::build(vec![ProductTerm::new(
            1.0.into(),
            vec![bs(BasisFamily::Harm2DCart, &[2, 1])],
        )])
        .unwrap();
        let q = Configuration::new(vec![0.7, -0.2]);
        let v = velocity(&wf, &q, 0.0).unwrap();
        assert!(v.iter().all(|&vi| vi == 0.0));

        let traj = integrate(&wf, &q, (0.0, 5.0), &IntegratorParams::default(), 1.0).unwrap();
        assert_eq!(traj.status, TrajectoryStatus::Completed);
        for (_, cfg) in &traj.samples {
            assert_abs_diff_eq!(cfg.coordinates[0], 0.7, epsilon = 1e-12);
            assert_abs_diff_eq!(cfg.coordinates[1], -0.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn polar_state_moves_tangentially() {
        // n_r - n_l = 1: phase = phi, speed m/r = 1/2 at r = 2
        let wf = WaveFunction::build(vec![ProductTerm::new(
            1.0.into(),
            vec![bs(BasisFamily::Harm2DPolar, &[1, 0])],
        )])
        .unwrap();
        let q = Configuration::new(vec![2.0, 0.0]);
        let v = velocity(&wf, &q, 0.0).unwrap();
        assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-13);
        assert_relative_eq!(v[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn nodal_plane_velocity_is_tangential() {
        let wf = WaveFunction::build(vec![
            ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm3DCart, &[1, 1, 1])]),
            ProductTerm::new(phase(PI / 3.0), vec![bs(BasisFamily::Harm3DCart, &[3, 0, 0])]),
            ProductTerm::new(phase(PI / 7.0), vec![bs(BasisFamily::Harm3DCart, &[1, 2, 0])]),
        ])
        .unwrap();
        // approaching the x = 0 nodal plane the x-velocity vanishes
        for (y, z) in [(0.4, -0.9), (1.2, 0.3)] {
            let q = Configuration::new(vec![1e-8, y, z]);
            let v = velocity(&wf, &q, 0.0).unwrap();
            assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn ground_state_diagnostics() {
        let wf = WaveFunction::build(vec![ProductTerm::new(
            1.0.into(),
            vec![bs(BasisFamily::Harm2DCart, &[0, 0])],
        )])
        .unwrap();
        let d = quantum_potential(&wf, &Configuration::new(vec![0.0, 0.0]), 0.0).unwrap();
        assert_eq!(d.kinetic, 0.0);
        assert_relative_eq!(d.total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn stationary_energy_is_pointwise_constant() {
        let wf = ho3d_stat();
        let mut rng_state = 42u64;
        let mut next = || {
            // xorshift; plenty for scattering test points
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state as f64 / u64::MAX as f64) * 6.0 - 3.0
        };
        for _ in 0..20 {
            let q = Configuration::new(vec![next(), next(), next()]);
            let d = quantum_potential(&wf, &q, 0.0).unwrap();
            assert_abs_diff_eq!(d.total, 4.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn finite_difference_quantum_potential_matches_analytic() {
        let wf = ho3d_stat();
        let mut rng_state = 7u64;
        let mut next = || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state as f64 / u64::MAX as f64) * 4.0 - 2.0
        };
        for _ in 0..20 {
            let q = Configuration::new(vec![next(), next(), next()]);
            let analytic = quantum_potential(&wf, &q, 0.0).unwrap();
            let fd = quantum_potential_fd(&wf, &q, 0.0).unwrap();
            assert_relative_eq!(fd.quantum, analytic.quantum, max_relative = 1e-5, epsilon = 1e-7);
        }
    }

    #[test]
    fn node_proximity_is_reported() {
        let b = bs(BasisFamily::Box2D, &[1, 1]);
        let wf = WaveFunction::build(vec![ProductTerm::new(1.0.into(), vec![b.clone(), b])])
            .unwrap();
        // exactly on the wall: psi = 0
        let err = velocity(&wf, &Configuration::new(vec![0.0, 0.5, 0.5, 0.5]), 0.0);
        assert!(matches!(err, Err(DynamicsError::NodeProximity { .. })));
    }

    #[test]
    fn circular_orbit_stays_on_its_radius() {
        let wf = WaveFunction::build(vec![ProductTerm::new(
            1.0.into(),
            vec![bs(BasisFamily::Harm2DPolar, &[2, 0])],
        )])
        .unwrap();
        let r0 = 1.7f64;
        let params = IntegratorParams {
            rel_tol: 1e-11,
            abs_tol: 1e-11,
            ..Default::default()
        };
        let traj = integrate(
            &wf,
            &Configuration::new(vec![r0, 0.0]),
            (0.0, 10.0),
            &params,
            0.5,
        )
        .unwrap();
        assert_eq!(traj.status, TrajectoryStatus::Completed);
        for (_, q) in &traj.samples {
            let r = (q.coordinates[0].powi(2) + q.coordinates[1].powi(2)).sqrt();
            assert_abs_diff_eq!(r, r0, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let params = IntegratorParams {
            rel_tol: 1e-2,
            ..Default::default()
        };
        assert!(params.validate().is_err());
        let params = IntegratorParams {
            max_step: 0.0,
            ..Default::default()
        };
        assert!(params.validate().is_err());
    }

    #[test]
    fn sampling_grid_is_regular() {
        let wf = ho3d_stat();
        let q = Configuration::new(vec![1.0, 0.5, -0.4]);
        let traj = integrate(&wf, &q, (0.0, 3.0), &IntegratorParams::default(), 0.25).unwrap();
        assert_eq!(traj.status, TrajectoryStatus::Completed);
        assert_eq!(traj.samples.len(), 13);
        for (k, (t, _)) in traj.samples.iter().enumerate() {
            assert_abs_diff_eq!(*t, 0.25 * k as f64, epsilon = 1e-12);
        }
        assert_eq!(traj.velocities.len(), traj.samples.len());
    }
}
