//! Maximal-Lyapunov-exponent estimation with the Benettin rescaling
//! procedure, seeded ensemble averages over sampled initial conditions,
//! Poincare sections, and the Henon-Heiles classical benchmark that
//! validates the estimator machinery.

use std::cell::Cell;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{guidance_rhs, DynamicsError, IntegratorParams};
use crate::ode::{Dopri5, StepError};
use crate::wavefunction::{Configuration, WaveFunction};

#[derive(Debug, Error)]
pub enum ChaosError {
    #[error("lyapunov parameters out of range: {0}")]
    BadParams(String),
    #[error("initial direction must have the configuration dimension {expected}, got {got}")]
    DirectionDimension { expected: usize, got: usize },
    #[error("ensemble needs n_samples >= 1")]
    NoSamples,
    #[error("every ensemble sample was excluded (node encounters or domain exits)")]
    AllSamplesExcluded,
    #[error("plane coordinate {index} outside configuration dimension {dim}")]
    BadPlane { index: usize, dim: usize },
    #[error("initial point off the energy shell: |H(x0) - E| = {mismatch:e}")]
    OffShell { mismatch: f64 },
    #[error("trajectory escaped the bounded region at t = {t}")]
    Escape { t: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Initial separation direction for the trajectory pair.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDirection {
    /// Isotropic unit vector drawn from the run's seed.
    Random,
    /// Explicit unit vector (validated to norm 1).
    Fixed(Vec<f64>),
}

/// Benettin-procedure parameters: initial separation `d0`, rescaling interval
/// `dt`, number of rescalings `n_steps` (total time `T = n_steps * dt`),
/// initial direction and the seed that makes `Random` reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovParams {
    pub d0: f64,
    pub dt: f64,
    pub n_steps: u64,
    pub e0: InitialDirection,
    pub seed: u64,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        LyapunovParams {
            d0: 1e-7,
            dt: 1.0,
            n_steps: 50_000,
            e0: InitialDirection::Random,
            seed: 0,
        }
    }
}

impl LyapunovParams {
    pub fn validate(&self) -> Result<(), ChaosError> {
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return Err(ChaosError::BadParams("d0 must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ChaosError::BadParams("dt must be positive".into()));
        }
        if self.n_steps == 0 {
            return Err(ChaosError::BadParams("n_steps must be >= 1".into()));
        }
        if let InitialDirection::Fixed(e) = &self.e0 {
            let norm: f64 = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(ChaosError::BadParams(format!(
                    "explicit e0 must be a unit vector, |e0| = {norm}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovStatus {
    /// The running estimate settled (last-half drift within 5% or 1e-3).
    Converged,
    /// Ran the full time budget without meeting the settling test.
    MaxTime,
    /// A trajectory of the pair hit the node floor, a box wall, or starved
    /// the step controller; the series is partial.
    NodeEncounter,
}

/// The running Benettin sum `h(x0, T_k)` at every rescaling, its final value
/// and how the run ended.
#[derive(Debug, Clone)]
pub struct LyapunovEstimate {
    pub h_series: Vec<(f64, f64)>,
    pub final_h: f64,
    pub status: LyapunovStatus,
}

impl LyapunovEstimate {
    fn from_series(h_series: Vec<(f64, f64)>, halted: bool) -> Self {
        let final_h = h_series.last().map_or(0.0, |&(_, h)| h);
        let status = if halted {
            LyapunovStatus::NodeEncounter
        } else if is_settled(&h_series) {
            LyapunovStatus::Converged
        } else {
            LyapunovStatus::MaxTime
        };
        LyapunovEstimate {
            h_series,
            final_h,
            status,
        }
    }
}

fn is_settled(series: &[(f64, f64)]) -> bool {
    if series.len() < 4 {
        return false;
    }
    let (_, h_end) = series[series.len() - 1];
    let (_, h_half) = series[series.len() / 2];
    (h_end - h_half).abs() <= (0.05 * h_end.abs()).max(1e-3)
}

/// Ensemble statistics of `final_h` over sampled initial conditions.
/// Excluded samples (status `NodeEncounter`) do not enter mean/std.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub mean_h: f64,
    pub std_h: f64,
    pub per_sample: Vec<(Vec<f64>, LyapunovEstimate)>,
    pub excluded: usize,
}

/// One transversal intersection of a trajectory with a coordinate hyperplane.
#[derive(Debug, Clone)]
pub struct SectionPoint {
    pub time: f64,
    pub coordinates: Vec<f64>,
    /// +1 when the section coordinate crosses upward, -1 downward.
    pub direction: i8,
}

/// Uniform cube sampler over configuration space. The center broadcasts:
/// length 1 centers every coordinate, length `dimension` repeats per
/// particle, length `n_coords` is used as-is.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    pub edge: f64,
    pub center: Vec<f64>,
}

impl Sampler {
    /// The default ensemble sampler: edge length 10 centered at the origin,
    /// applied to every coordinate of every particle.
    pub fn default_cube() -> Self {
        Sampler {
            edge: 10.0,
            center: vec![0.0],
        }
    }

    pub fn validate(&self, n_coords: usize, dimension: usize) -> Result<(), ChaosError> {
        if !(self.edge > 0.0 && self.edge.is_finite()) {
            return Err(ChaosError::BadParams("sampler edge must be positive".into()));
        }
        let len = self.center.len();
        if !(len == 1 || len == dimension || len == n_coords) {
            return Err(ChaosError::BadParams(format!(
                "sampler center length {len} is not 1, {dimension} or {n_coords}"
            )));
        }
        Ok(())
    }

    fn center_at(&self, coord: usize, dimension: usize) -> f64 {
        match self.center.len() {
            1 => self.center[0],
            l if l == dimension => self.center[coord % dimension],
            _ => self.center[coord],
        }
    }

    pub fn draw(&self, rng: &mut impl Rng, n_coords: usize, dimension: usize) -> Vec<f64> {
        (0..n_coords)
            .map(|i| {
                let c = self.center_at(i, dimension);
                rng.gen_range((c - 0.5 * self.edge)..=(c + 0.5 * self.edge))
            })
            .collect()
    }
}

/// Standard-normal draw (Box-Muller); not worth a crate for this one use.
fn gaussian(rng: &mut impl Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let g = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        if g.is_finite() {
            return g;
        }
    }
}

fn random_unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Why a checked trajectory leg stopped early.
enum LegHalt {
    Node,
}

/// A flow the Benettin loop can drive: advance to a time, read and reset the
/// state.
trait PairLeg {
    fn advance(&mut self, t_target: f64) -> Result<(), LegHalt>;
    fn state(&self) -> &[f64];
    fn reset(&mut self, t: f64, y: &[f64]);
}

/// Guidance-equation leg with node floor and box-domain step vetoes.
struct GuidedLeg<'w, F: FnMut(f64, &[f64], &mut [f64])> {
    integ: Dopri5<F>,
    abs2: Rc<Cell<f64>>,
    running_max: f64,
    min_abs2_rel: f64,
    wf: &'w WaveFunction,
    check_domain: bool,
}

fn guided_leg<'w>(
    wf: &'w WaveFunction,
    x0: &[f64],
    t0: f64,
    iparams: &IntegratorParams,
) -> Result<GuidedLeg<'w, impl FnMut(f64, &[f64], &mut [f64]) + 'w>, DynamicsError> {
    let q0 = Configuration::at_time(x0.to_vec(), t0);
    if !wf.in_domain(&q0.coordinates) {
        return Err(DynamicsError::OutsideDomain);
    }
    let abs2_0 = wf.evaluate(&q0)?.abs2;
    if abs2_0 == 0.0 {
        return Err(DynamicsError::NodeProximity {
            abs2: 0.0,
            floor: 0.0,
        });
    }
    let (rhs, abs2) = guidance_rhs(wf, None);
    let integ = Dopri5::new(
        rhs,
        t0,
        x0.to_vec(),
        iparams.rel_tol,
        iparams.abs_tol,
        iparams.max_step,
    );
    Ok(GuidedLeg {
        integ,
        abs2,
        running_max: abs2_0,
        min_abs2_rel: iparams.min_abs2,
        wf,
        check_domain: wf.has_box_particles(),
    })
}

impl<F: FnMut(f64, &[f64], &mut [f64])> GuidedLeg<'_, F> {
    /// One accepted, constraint-checked step toward the target. `Ok(true)`
    /// means the state advanced (the last accepted step is inspectable).
    fn checked_step(&mut self, t_target: f64) -> Result<bool, LegHalt> {
        match self.integ.step_toward(t_target) {
            Ok(_) => {
                let a2 = self.abs2.get();
                if !a2.is_finite() || a2 < self.min_abs2_rel * self.running_max {
                    return Err(LegHalt::Node);
                }
                if self.check_domain && !self.wf.in_domain(&self.integ.y) {
                    self.integ.undo_last_step();
                    if self.integ.step_exhausted() {
                        return Err(LegHalt::Node);
                    }
                    return Ok(false);
                }
                self.running_max = self.running_max.max(a2);
                Ok(true)
            }
            // a starved controller on this field means a node pinch
            Err(_) => Err(LegHalt::Node),
        }
    }
}

impl<F: FnMut(f64, &[f64], &mut [f64])> PairLeg for GuidedLeg<'_, F> {
    fn advance(&mut self, t_target: f64) -> Result<(), LegHalt> {
        while self.integ.t != t_target {
            self.checked_step(t_target)?;
        }
        Ok(())
    }

    fn state(&self) -> &[f64] {
        &self.integ.y
    }

    fn reset(&mut self, t: f64, y: &[f64]) {
        self.integ.reset_state(t, y);
    }
}

/// The rescaling loop shared by the quantum and classical estimators.
/// Returns the estimate and, via `observe`, lets the caller sample the main
/// trajectory at every rescaling time.
///
/// Each interval's stretch factor divides by the separation actually stored
/// at the last reset (not the nominal `d0`), so frozen fields report exactly
/// zero and the renormalization rounding never biases the sum.
fn benettin_loop<A: PairLeg, B: PairLeg>(
    main: &mut A,
    comp: &mut B,
    t0: f64,
    d0: f64,
    dt: f64,
    n_steps: u64,
    mut e_prev: Vec<f64>,
    mut observe: impl FnMut(&[f64]),
) -> LyapunovEstimate {
    let dim = e_prev.len();
    let mut series = Vec::with_capacity(n_steps as usize);
    let mut log_sum = 0.0;
    let mut d = vec![0.0; dim];
    let mut renorm = vec![0.0; dim];
    let separation = |a: &[f64], b: &[f64]| {
        let mut s = 0.0;
        for i in 0..dim {
            s += (b[i] - a[i]).powi(2);
        }
        s.sqrt()
    };
    let mut sep_start = separation(main.state(), comp.state());
    for k in 1..=n_steps {
        let target = t0 + k as f64 * dt;
        if main.advance(target).is_err() || comp.advance(target).is_err() {
            return LyapunovEstimate::from_series(series, true);
        }
        observe(main.state());
        let mut dist2 = 0.0;
        for i in 0..dim {
            d[i] = comp.state()[i] - main.state()[i];
            dist2 += d[i] * d[i];
        }
        let dist = dist2.sqrt();
        // dist can only vanish when the pair coincides exactly (a frozen
        // field); keep the previous direction and a unit stretch factor.
        if dist > 0.0 && sep_start > 0.0 {
            log_sum += (dist / sep_start).ln();
            for i in 0..dim {
                e_prev[i] = d[i] / dist;
            }
        }
        let elapsed = k as f64 * dt;
        series.push((elapsed, log_sum / elapsed));

        for i in 0..dim {
            renorm[i] = main.state()[i] + d0 * e_prev[i];
        }
        comp.reset(target, &renorm);
        sep_start = separation(main.state(), renorm.as_slice());
    }
    LyapunovEstimate::from_series(series, false)
}

fn resolve_direction(
    params: &LyapunovParams,
    rng: &mut ChaCha8Rng,
    dim: usize,
) -> Result<Vec<f64>, ChaosError> {
    match &params.e0 {
        InitialDirection::Random => Ok(random_unit_vector(rng, dim)),
        InitialDirection::Fixed(e) => {
            if e.len() != dim {
                return Err(ChaosError::DirectionDimension {
                    expected: dim,
                    got: e.len(),
                });
            }
            let norm: f64 = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(e.iter().map(|x| x / norm).collect())
        }
    }
}

/// Maximal-Lyapunov estimate for a single initial configuration: integrate a
/// trajectory pair over each interval `dt`, accumulate `ln(|d|/d0)`, rescale
/// the companion back to separation `d0` along the current direction.
pub fn lyapunov(
    wf: &WaveFunction,
    x0: &Configuration,
    params: &LyapunovParams,
    iparams: &IntegratorParams,
) -> Result<LyapunovEstimate, ChaosError> {
    params.validate()?;
    iparams.validate().map_err(ChaosError::Dynamics)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let e0 = resolve_direction(params, &mut rng, wf.n_coords())?;
    lyapunov_with_direction(wf, &x0.coordinates, x0.time, &e0, params, iparams)
}

fn lyapunov_with_direction(
    wf: &WaveFunction,
    x0: &[f64],
    t0: f64,
    e0: &[f64],
    params: &LyapunovParams,
    iparams: &IntegratorParams,
) -> Result<LyapunovEstimate, ChaosError> {
    let mut main = guided_leg(wf, x0, t0, iparams)?;
    let comp0: Vec<f64> = x0.iter().zip(e0).map(|(x, e)| x + params.d0 * e).collect();
    let mut comp = match guided_leg(wf, &comp0, t0, iparams) {
        Ok(leg) => leg,
        // companion born on a node or outside a wall: immediate encounter
        Err(_) => return Ok(LyapunovEstimate::from_series(Vec::new(), true)),
    };
    Ok(benettin_loop(
        &mut main,
        &mut comp,
        t0,
        params.d0,
        params.dt,
        params.n_steps,
        e0.to_vec(),
        |_| {},
    ))
}

/// Ensemble average of the Lyapunov exponent over `n_samples` seeded initial
/// conditions. Sample `i` uses the stream seeded with `seed xor i`, so the
/// result is reproducible and independent of the worker count.
pub fn average_lyapunov(
    wf: &WaveFunction,
    sampler: &Sampler,
    n_samples: usize,
    params: &LyapunovParams,
    iparams: &IntegratorParams,
) -> Result<EnsembleResult, ChaosError> {
    params.validate()?;
    iparams.validate().map_err(ChaosError::Dynamics)?;
    sampler.validate(wf.n_coords(), wf.dimension())?;
    if n_samples == 0 {
        return Err(ChaosError::NoSamples);
    }
    if let InitialDirection::Fixed(e) = &params.e0 {
        if e.len() != wf.n_coords() {
            return Err(ChaosError::DirectionDimension {
                expected: wf.n_coords(),
                got: e.len(),
            });
        }
    }

    let per_sample: Vec<(Vec<f64>, LyapunovEstimate)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ i as u64);
            let x0 = sampler.draw(&mut rng, wf.n_coords(), wf.dimension());
            let e0 = resolve_direction(params, &mut rng, wf.n_coords())
                .expect("direction dimension checked above");
            let estimate = lyapunov_with_direction(wf, &x0, 0.0, &e0, params, iparams)
                .unwrap_or_else(|_| LyapunovEstimate::from_series(Vec::new(), true));
            (x0, estimate)
        })
        .collect();

    let included: Vec<f64> = per_sample
        .iter()
        .filter(|(_, e)| e.status != LyapunovStatus::NodeEncounter)
        .map(|(_, e)| e.final_h)
        .collect();
    let excluded = per_sample.len() - included.len();
    if included.is_empty() {
        return Err(ChaosError::AllSamplesExcluded);
    }
    let n = included.len() as f64;
    let mean_h = included.iter().sum::<f64>() / n;
    let std_h = if included.len() > 1 {
        (included.iter().map(|h| (h - mean_h).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(EnsembleResult {
        mean_h,
        std_h,
        per_sample,
        excluded,
    })
}

/// All transversal crossings of the trajectory with the hyperplane
/// `coordinates[plane.0] = plane.1`, located by sign changes over the dense
/// output and refined by bisection to |residual| <= 1e-10. Returns the
/// points together with how the trajectory run ended.
pub fn poincare_section(
    wf: &WaveFunction,
    x0: &Configuration,
    plane: (usize, f64),
    t_max: f64,
    iparams: &IntegratorParams,
) -> Result<(Vec<SectionPoint>, LyapunovStatus), ChaosError> {
    iparams.validate().map_err(ChaosError::Dynamics)?;
    let (index, level) = plane;
    if index >= wf.n_coords() {
        return Err(ChaosError::BadPlane {
            index,
            dim: wf.n_coords(),
        });
    }
    let mut leg = guided_leg(wf, &x0.coordinates, x0.time, iparams)?;
    let t_end = x0.time + t_max;
    let mut points = Vec::new();
    let mut buf = vec![0.0; wf.n_coords()];
    let mut status = LyapunovStatus::MaxTime;

    while leg.integ.t != t_end {
        match leg.checked_step(t_end) {
            Ok(true) => {}
            Ok(false) => continue,
            Err(LegHalt::Node) => {
                status = LyapunovStatus::NodeEncounter;
                break;
            }
        }

        let dense = leg.integ.dense();
        // a few interior probes so double crossings within one step still
        // get bracketed
        const PROBES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
        let g_at = |theta: f64, buf: &mut Vec<f64>| {
            dense.eval_theta(theta, buf);
            buf[index] - level
        };
        let mut g_prev = g_at(PROBES[0], &mut buf);
        for w in 1..PROBES.len() {
            let g_next = g_at(PROBES[w], &mut buf);
            if g_prev.signum() != g_next.signum() && g_prev != 0.0 {
                let (mut lo, mut hi) = (PROBES[w - 1], PROBES[w]);
                let mut g_lo = g_prev;
                let mut theta = 0.5 * (lo + hi);
                let mut g_mid = g_at(theta, &mut buf);
                for _ in 0..80 {
                    if g_mid.abs() <= 1e-10 {
                        break;
                    }
                    if g_lo.signum() == g_mid.signum() {
                        lo = theta;
                        g_lo = g_mid;
                    } else {
                        hi = theta;
                    }
                    theta = 0.5 * (lo + hi);
                    g_mid = g_at(theta, &mut buf);
                }
                if g_mid.abs() <= 1e-10 {
                    dense.eval_theta(theta, &mut buf);
                    let t_cross = dense.t_start() + theta * (dense.t_end() - dense.t_start());
                    points.push(SectionPoint {
                        time: t_cross,
                        coordinates: buf.clone(),
                        direction: if g_next > g_prev { 1 } else { -1 },
                    });
                }
            }
            g_prev = g_next;
        }
    }
    Ok((points, status))
}

// ---------------------------------------------------------------------------
// Henon-Heiles benchmark
// ---------------------------------------------------------------------------

/// Hamiltonian `H = (px^2 + py^2)/2 + (x^2 + y^2)/2 + x^2 y - y^3/3` on the
/// phase-space state `(x, y, px, py)`.
pub fn henon_heiles_energy(state: &[f64; 4]) -> f64 {
    let [x, y, px, py] = *state;
    0.5 * (px * px + py * py) + 0.5 * (x * x + y * y) + x * x * y - y * y * y / 3.0
}

fn henon_heiles_rhs(_t: f64, y: &[f64], dy: &mut [f64]) {
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = -y[0] - 2.0 * y[0] * y[1];
    dy[3] = -y[1] - y[0] * y[0] + y[1] * y[1];
}

/// Phase-space point on the `x = 0` section with the given `(y, py)` and the
/// energy balance put into `px >= 0`; `None` when the shell cannot close.
pub fn henon_heiles_section_start(energy: f64, y: f64, py: f64) -> Option<[f64; 4]> {
    let v = 0.5 * y * y - y * y * y / 3.0;
    let px2 = 2.0 * (energy - v) - py * py;
    (px2 >= 0.0).then(|| [0.0, y, px2.sqrt(), py])
}

struct HenonLeg<F: FnMut(f64, &[f64], &mut [f64])> {
    integ: Dopri5<F>,
    escape_radius2: f64,
    halted_at: Option<f64>,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> PairLeg for HenonLeg<F> {
    fn advance(&mut self, t_target: f64) -> Result<(), LegHalt> {
        while self.integ.t != t_target {
            match self.integ.step_toward(t_target) {
                Ok(_) => {
                    let r2 = self.integ.y[0].powi(2) + self.integ.y[1].powi(2);
                    if r2 > self.escape_radius2 {
                        self.halted_at = Some(self.integ.t);
                        return Err(LegHalt::Node);
                    }
                }
                Err(StepError::StepSizeUnderflow { t, .. }) => {
                    self.halted_at = Some(t);
                    return Err(LegHalt::Node);
                }
                Err(StepError::NonFiniteInitial) => {
                    self.halted_at = Some(self.integ.t);
                    return Err(LegHalt::Node);
                }
            }
        }
        Ok(())
    }

    fn state(&self) -> &[f64] {
        &self.integ.y
    }

    fn reset(&mut self, t: f64, y: &[f64]) {
        self.integ.reset_state(t, y);
    }
}

/// Benettin estimate on the Henon-Heiles flow, plus the maximum energy drift
/// of the main trajectory sampled at every rescaling. The initial point must
/// sit on the requested energy shell to 1e-10; leaving the bounded region is
/// an error.
pub fn henon_heiles_lyapunov(
    energy: f64,
    x0: &[f64; 4],
    params: &LyapunovParams,
    iparams: &IntegratorParams,
) -> Result<(LyapunovEstimate, f64), ChaosError> {
    params.validate()?;
    iparams.validate().map_err(ChaosError::Dynamics)?;
    let mismatch = (henon_heiles_energy(x0) - energy).abs();
    if mismatch > 1e-10 {
        return Err(ChaosError::OffShell { mismatch });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let e0 = resolve_direction(params, &mut rng, 4)?;

    let mk_leg = |y0: Vec<f64>| HenonLeg {
        integ: Dopri5::new(
            henon_heiles_rhs,
            0.0,
            y0,
            iparams.rel_tol,
            iparams.abs_tol,
            iparams.max_step,
        ),
        escape_radius2: 36.0,
        halted_at: None,
    };
    let mut main = mk_leg(x0.to_vec());
    let comp0: Vec<f64> = x0.iter().zip(&e0).map(|(x, e)| x + params.d0 * e).collect();
    let mut comp = mk_leg(comp0);

    let mut drift: f64 = 0.0;
    let estimate = benettin_loop(
        &mut main,
        &mut comp,
        0.0,
        params.d0,
        params.dt,
        params.n_steps,
        e0,
        |y| {
            let state = [y[0], y[1], y[2], y[3]];
            drift = drift.max((henon_heiles_energy(&state) - energy).abs());
        },
    );
    if estimate.status == LyapunovStatus::NodeEncounter {
        let t = main.halted_at.or(comp.halted_at).unwrap_or(0.0);
        return Err(ChaosError::Escape { t });
    }
    Ok((estimate, drift))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisFamily, BasisState};
    use crate::wavefunction::ProductTerm;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn bs(family: BasisFamily, qn: &[i32]) -> BasisState {
        BasisState::new(family, qn).unwrap()
    }

    fn quick_params(n_steps: u64) -> LyapunovParams {
        LyapunovParams {
            n_steps,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn real_eigenstate_has_exactly_zero_exponent() {
        let wf = WaveFunction::build(vec![ProductTerm::new(
            1.0.into(),
            vec![bs(BasisFamily::Harm2DCart, &[1, 1])],
        )])
        .unwrap();
        let est = lyapunov(
            &wf,
            &Configuration::new(vec![0.4, -0.7]),
            &quick_params(20),
            &IntegratorParams::default(),
        )
        .unwrap();
        assert_eq!(est.final_h, 0.0);
        assert!(est.h_series.iter().all(|&(_, h)| h == 0.0));
        assert_eq!(est.h_series.len(), 20);
        let (t_last, h_last) = *est.h_series.last().unwrap();
        assert_eq!(t_last, 20.0);
        assert_eq!(h_last, est.final_h);
    }

    #[test]
    fn series_times_increase_and_final_matches() {
        let wf = WaveFunction::build(vec![
            ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm3DSph, &[0, 3, 1])]),
            ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm3DSph, &[0, 3, 0])]),
            ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm3DSph, &[1, 1, 0])]),
        ])
        .unwrap();
        let est = lyapunov(
            &wf,
            &Configuration::new(vec![1.0, 0.7, -0.3]),
            &quick_params(30),
            &IntegratorParams::default(),
        )
        .unwrap();
        for w in est.h_series.windows(2) {
            assert!(w[1].0 > w[0].0);
        }
        assert_eq!(est.final_h, est.h_series.last().unwrap().1);
    }

    #[test]
    fn ensemble_is_deterministic_across_worker_counts() {
        let wf = WaveFunction::build(vec![
            ProductTerm::new(1.0.into(), vec![bs(BasisFamily::Harm2DPolar, &[1, 0])]),
            ProductTerm::new(
                num_complex::Complex64::from_polar(1.0, 0.9),
                vec![bs(BasisFamily::Harm2DPolar, &[0, 2])],
            ),
        ])
        .unwrap();
        let sampler = Sampler {
            edge: 3.0,
            center: vec![0.0],
        };
        let params = LyapunovParams {
            n_steps: 25,
            seed: 1234,
            ..Default::default()
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                average_lyapunov(&wf, &sampler, 6, &params, &IntegratorParams::default()).unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.mean_h.to_bits(), b.mean_h.to_bits());
        assert_eq!(a.std_h.to_bits(), b.std_h.to_bits());
        assert_eq!(a.excluded, b.excluded);
        for ((xa, ea), (xb, eb)) in a.per_sample.iter().zip(&b.per_sample) {
            assert_eq!(xa, xb);
            assert_eq!(ea.final_h.to_bits(), eb.final_h.to_bits());
        }
    }

    #[test]
    fn circular_orbit_section_has_two_loci() {
        let wf = WaveFunction::build(vec![ProductTerm::new(
            1.0.into(),
            vec![bs(BasisFamily::Harm2DPolar, &[1, 0])],
        )])
        .unwrap();
        // circle of radius 2, angular speed 1/4: one revolution is 8 pi
        let (points, _) = poincare_section(
            &wf,
            &Configuration::new(vec![2.0, 0.0]),
            (1, 0.0),
            60.0,
            &IntegratorParams::default(),
        )
        .unwrap();
        assert!(points.len() >= 4);
        for p in &points {
            assert_abs_diff_eq!(p.coordinates[1], 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(p.coordinates[0].abs(), 2.0, epsilon = 1e-6);
        }
        // crossings alternate direction: x = +2 going up, x = -2 going down
        for w in points.windows(2) {
            assert_ne!(w[0].direction, w[1].direction);
        }
    }

    #[test]
    fn constant_trajectory_has_no_crossings() {
        let wf = WaveFunction::build(vec![ProductTerm::new(
            1.0.into(),
            vec![bs(BasisFamily::Harm2DCart, &[2, 0])],
        )])
        .unwrap();
        let (points, _) = poincare_section(
            &wf,
            &Configuration::new(vec![0.5, 0.5]),
            (0, 0.0),
            20.0,
            &IntegratorParams::default(),
        )
        .unwrap();
        assert!(points.is_empty());
    }

    #[test]
    fn henon_heiles_equilibrium_is_static() {
        let params = LyapunovParams {
            n_steps: 10,
            seed: 3,
            ..Default::default()
        };
        let (est, drift) = henon_heiles_lyapunov(
            0.0,
            &[0.0, 0.0, 0.0, 0.0],
            &params,
            &IntegratorParams::default(),
        )
        .unwrap();
        // the main trajectory is static; the companion orbits it at fixed
        // separation, so h vanishes to solver precision
        assert!(est.final_h.abs() <= 1e-8, "h = {}", est.final_h);
        assert!(drift <= 1e-12);
    }

    #[test]
    fn henon_heiles_rejects_off_shell_points() {
        let params = quick_params(5);
        let err = henon_heiles_lyapunov(
            0.125,
            &[0.0, 0.1, 0.1, 0.1],
            &params,
            &IntegratorParams::default(),
        );
        assert!(matches!(err, Err(ChaosError::OffShell { .. })));
    }

    #[test]
    fn henon_heiles_section_start_closes_energy() {
        let s = henon_heiles_section_start(0.125, 0.1, 0.05).unwrap();
        assert_relative_eq!(henon_heiles_energy(&s), 0.125, epsilon = 1e-14);
        // inside the well with V(0, y) > E the shell cannot close
        assert!(henon_heiles_section_start(0.01, 0.3, 0.0).is_none());
    }

    #[test]
    fn lyapunov_params_validation() {
        let p = LyapunovParams {
            d0: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = LyapunovParams {
            e0: InitialDirection::Fixed(vec![0.5, 0.5]),
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let s = 1.0 / 2f64.sqrt();
        let p = LyapunovParams {
            e0: InitialDirection::Fixed(vec![s, s]),
            ..Default::default()
        };
        assert!(p.validate().is_ok());
    }
}
