//! Embedded Dormand-Prince 5(4) stepper with PI step-size control and the
//! standard quartic dense output. Drivers own the loop: they inspect each
//! accepted step (node floors, domain walls, section crossings) and may veto
//! it, which shrinks the step instead of clamping positions.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("step size underflow at t = {t} (h < {h_min})")]
    StepSizeUnderflow { t: f64, h_min: f64 },
    #[error("right-hand side not finite at the initial state")]
    NonFiniteInitial,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights equal A[6]; the 7th stage is FSAL.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights for the quartic interpolant.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2; // max shrink per accepted-step proposal
const FAC_MAX: f64 = 10.0; // max growth per step

/// What `step_toward` did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Advanced by an interior step; the target is still ahead.
    Interior,
    /// Landed exactly on the requested target time.
    ReachedTarget,
}

/// One-step integrator state. The right-hand side is any `FnMut(t, y, dydt)`.
pub struct Dopri5<F> {
    rhs: F,
    pub t: f64,
    pub y: Vec<f64>,
    dim: usize,
    rel_tol: f64,
    abs_tol: f64,
    max_step: f64,
    h_min: f64,
    h: f64, // current proposed magnitude (unsigned)
    dir: f64,
    err_old: f64,
    last_was_rejected: bool,
    k: [Vec<f64>; 7],
    k1_fresh: bool,
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    // last accepted step, for undo and dense output
    t_prev: f64,
    h_signed_prev: f64,
    y_prev: Vec<f64>,
    k1_prev: Vec<f64>,
    dense: [Vec<f64>; 5],
    pub n_accepted: u64,
    pub n_rejected: u64,
    pub n_rhs: u64,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Dopri5<F> {
    pub fn new(rhs: F, t0: f64, y0: Vec<f64>, rel_tol: f64, abs_tol: f64, max_step: f64) -> Self {
        let dim = y0.len();
        let zeros = || vec![0.0; dim];
        Dopri5 {
            rhs,
            t: t0,
            y: y0,
            dim,
            rel_tol,
            abs_tol,
            max_step,
            h_min: 1e-12,
            h: 0.0,
            dir: 1.0,
            err_old: 1e-4,
            last_was_rejected: false,
            k: [zeros(), zeros(), zeros(), zeros(), zeros(), zeros(), zeros()],
            k1_fresh: false,
            y_stage: zeros(),
            y_new: zeros(),
            t_prev: t0,
            h_signed_prev: 0.0,
            y_prev: zeros(),
            k1_prev: zeros(),
            dense: [zeros(), zeros(), zeros(), zeros(), zeros()],
            n_accepted: 0,
            n_rejected: 0,
            n_rhs: 0,
        }
    }

    pub fn tolerances(&self) -> (f64, f64) {
        (self.rel_tol, self.abs_tol)
    }

    /// Replace the state (Benettin renormalization does this); the FSAL
    /// derivative cache is invalidated.
    pub fn reset_state(&mut self, t: f64, y: &[f64]) {
        self.t = t;
        self.y.copy_from_slice(y);
        self.k1_fresh = false;
    }

    fn eval_rhs(&mut self, t: f64, y_is_stage: bool, out_idx: usize) {
        // borrow juggling: stages read y_stage, the first stage reads y
        let (rhs, y, y_stage, k) = (&mut self.rhs, &self.y, &self.y_stage, &mut self.k);
        let input = if y_is_stage { y_stage } else { y };
        rhs(t, input, &mut k[out_idx]);
        self.n_rhs += 1;
    }

    fn error_scale(&self, i: usize) -> f64 {
        self.abs_tol + self.rel_tol * self.y[i].abs().max(self.y_new[i].abs())
    }

    /// Hairer-style automatic initial step. Requires a fresh k1.
    fn initial_step_size(&mut self, dist: f64) -> f64 {
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..self.dim {
            let sc = self.abs_tol + self.rel_tol * self.y[i].abs();
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.k[0][i] / sc).powi(2);
        }
        d0 = (d0 / self.dim as f64).sqrt();
        d1 = (d1 / self.dim as f64).sqrt();
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0 = h0.min(dist).min(self.max_step);

        // one explicit Euler probe to estimate the second derivative
        for i in 0..self.dim {
            self.y_stage[i] = self.y[i] + self.dir * h0 * self.k[0][i];
        }
        self.eval_rhs(self.t + self.dir * h0, true, 1);
        let mut d2: f64 = 0.0;
        for i in 0..self.dim {
            let sc = self.abs_tol + self.rel_tol * self.y[i].abs();
            d2 += ((self.k[1][i] - self.k[0][i]) / sc).powi(2);
        }
        d2 = (d2 / self.dim as f64).sqrt() / h0;
        if !d2.is_finite() {
            // probe left the field's domain; fall back to a conservative guess
            d2 = 100.0 * d1.max(1.0);
        }
        let d_max = d1.max(d2);
        let h1 = if d_max <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d_max).powf(0.2)
        };
        (100.0 * h0).min(h1).min(dist).min(self.max_step)
    }

    /// Take one accepted step toward `t_target`, never overshooting it.
    /// After `Ok`, `dense()` interpolates over the accepted interval.
    pub fn step_toward(&mut self, t_target: f64) -> Result<StepKind, StepError> {
        let dist = t_target - self.t;
        if dist == 0.0 {
            return Ok(StepKind::ReachedTarget);
        }
        self.dir = dist.signum();
        if !self.k1_fresh {
            let (rhs, y, k) = (&mut self.rhs, &self.y, &mut self.k);
            rhs(self.t, y, &mut k[0]);
            self.n_rhs += 1;
            if self.k[0].iter().any(|v| !v.is_finite()) {
                return Err(StepError::NonFiniteInitial);
            }
            self.k1_fresh = true;
        }
        if self.h == 0.0 {
            self.h = self.initial_step_size(dist.abs()).max(self.h_min);
        }

        loop {
            let h_mag = self.h.min(self.max_step);
            let reaches = h_mag >= dist.abs() - 1e-14 * self.t.abs().max(1.0);
            let h_step = if reaches { dist.abs() } else { h_mag };
            let h = self.dir * h_step;
            if h_step < self.h_min {
                return Err(StepError::StepSizeUnderflow {
                    t: self.t,
                    h_min: self.h_min,
                });
            }

            // stages 2..=6
            for s in 1..6 {
                for i in 0..self.dim {
                    let mut acc = 0.0;
                    for (j, a) in A[s][..s].iter().enumerate() {
                        acc += a * self.k[j][i];
                    }
                    self.y_stage[i] = self.y[i] + h * acc;
                }
                self.eval_rhs(self.t + C[s] * h, true, s);
            }
            // 5th-order solution (stage 7 input), then FSAL stage
            for i in 0..self.dim {
                let mut acc = 0.0;
                for (j, a) in A[6].iter().enumerate() {
                    acc += a * self.k[j][i];
                }
                self.y_new[i] = self.y[i] + h * acc;
            }
            {
                let (rhs, y_new, k) = (&mut self.rhs, &self.y_new, &mut self.k);
                rhs(self.t + h, y_new, &mut k[6]);
                self.n_rhs += 1;
            }

            let mut err: f64 = 0.0;
            let mut finite = self.y_new.iter().all(|v| v.is_finite());
            if finite {
                for i in 0..self.dim {
                    let mut e = 0.0;
                    for (j, ej) in E.iter().enumerate() {
                        e += ej * self.k[j][i];
                    }
                    let scaled = h * e / self.error_scale(i);
                    if !scaled.is_finite() {
                        finite = false;
                        break;
                    }
                    err += scaled * scaled;
                }
                err = (err / self.dim as f64).sqrt();
            }

            if !finite || err > 1.0 {
                self.n_rejected += 1;
                let shrink = if !finite || !err.is_finite() {
                    0.1
                } else {
                    (SAFE * err.powf(-EXPO1)).max(0.1)
                };
                self.h = h_step * shrink.min(1.0);
                self.last_was_rejected = true;
                if self.h < self.h_min {
                    return Err(StepError::StepSizeUnderflow {
                        t: self.t,
                        h_min: self.h_min,
                    });
                }
                continue;
            }

            // accept: build dense coefficients before moving the state
            for i in 0..self.dim {
                let ydiff = self.y_new[i] - self.y[i];
                let bspl = h * self.k[0][i] - ydiff;
                self.dense[0][i] = self.y[i];
                self.dense[1][i] = ydiff;
                self.dense[2][i] = bspl;
                self.dense[3][i] = ydiff - h * self.k[6][i] - bspl;
                let mut dsum = 0.0;
                for (j, dj) in D.iter().enumerate() {
                    dsum += dj * self.k[j][i];
                }
                self.dense[4][i] = h * dsum;
            }
            self.t_prev = self.t;
            self.h_signed_prev = h;
            self.y_prev.copy_from_slice(&self.y);
            self.k1_prev.copy_from_slice(&self.k[0]);

            self.t += h;
            std::mem::swap(&mut self.y, &mut self.y_new);
            let (k0, k6) = {
                let (head, tail) = self.k.split_at_mut(1);
                (&mut head[0], &tail[5])
            };
            k0.copy_from_slice(k6);
            self.n_accepted += 1;

            // PI controller update for the next proposal
            let err_floor = err.max(1e-10);
            let mut fac = SAFE * err_floor.powf(-EXPO1) * self.err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if self.last_was_rejected {
                fac = fac.min(1.0);
            }
            self.h = (h_step * fac).max(self.h_min);
            self.err_old = err.max(1e-4);
            self.last_was_rejected = false;

            return Ok(if reaches {
                self.t = t_target; // kill accumulated roundoff at the landing
                StepKind::ReachedTarget
            } else {
                StepKind::Interior
            });
        }
    }

    /// Revert the last accepted step and shrink the proposal; drivers call
    /// this when the step violates an external constraint (domain wall, node
    /// floor, an out-of-domain dense sample).
    pub fn undo_last_step(&mut self) {
        self.t = self.t_prev;
        self.y.copy_from_slice(&self.y_prev);
        self.k[0].copy_from_slice(&self.k1_prev);
        self.h = (self.h_signed_prev.abs() * 0.5).max(self.h_min * 0.5);
        self.last_was_rejected = true;
        self.n_rejected += 1;
        self.n_accepted -= 1;
    }

    /// True when the proposal has collapsed below the minimum step (after
    /// repeated external rejections).
    pub fn step_exhausted(&self) -> bool {
        self.h < self.h_min
    }

    /// Dense-output view of the last accepted step.
    pub fn dense(&self) -> DenseOutput<'_> {
        DenseOutput {
            t0: self.t_prev,
            h: self.h_signed_prev,
            c: &self.dense,
        }
    }
}

/// Quartic interpolant over one accepted step.
pub struct DenseOutput<'a> {
    t0: f64,
    h: f64,
    c: &'a [Vec<f64>; 5],
}

impl DenseOutput<'_> {
    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn theta_of(&self, t: f64) -> f64 {
        (t - self.t0) / self.h
    }

    /// Interpolated state at fraction `theta in [0, 1]` across the step.
    pub fn eval_theta(&self, theta: f64, out: &mut [f64]) {
        let th1 = 1.0 - theta;
        for i in 0..out.len() {
            let c = [
                self.c[0][i],
                self.c[1][i],
                self.c[2][i],
                self.c[3][i],
                self.c[4][i],
            ];
            out[i] = c[0] + theta * (c[1] + th1 * (c[2] + theta * (c[3] + th1 * c[4])));
        }
    }

    /// Time derivative of the interpolant at fraction `theta`. This is the
    /// derivative of the numerical solution, not the vector field.
    pub fn eval_derivative_theta(&self, theta: f64, out: &mut [f64]) {
        let th1 = 1.0 - theta;
        for i in 0..out.len() {
            let dp = self.c[1][i]
                + (1.0 - 2.0 * theta) * self.c[2][i]
                + theta * (2.0 - 3.0 * theta) * self.c[3][i]
                + 2.0 * theta * th1 * (1.0 - 2.0 * theta) * self.c[4][i];
            out[i] = dp / self.h;
        }
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        self.eval_theta(self.theta_of(t), out);
    }
}
