//! Multi-particle wave functions as complex-weighted sums of product terms
//! over [`BasisState`]s, evaluated pointwise (no grids): value, per-particle
//! gradients, |psi|^2 and the phase gradient that feeds the guidance
//! equation.
//!
//! Wave functions are immutable after [`WaveFunction::build`]; concurrent
//! evaluation is safe. Coefficients are stored exactly as configured --
//! normalization is explicit and only needed by the measures module, since
//! the velocity field is invariant under rescaling of psi.

use num_complex::Complex64;
use thiserror::Error;

use crate::basis::{BasisFamily, BasisState};

#[derive(Debug, Error)]
pub enum WaveFunctionError {
    #[error("a wave function needs at least one term")]
    EmptyTerms,
    #[error("term {term} has {got} factors, expected {expected} (one per particle)")]
    ParticleCount {
        term: usize,
        expected: usize,
        got: usize,
    },
    #[error("term {term}, particle {particle}: spatial dimension {got} != {expected}")]
    DimensionMismatch {
        term: usize,
        particle: usize,
        expected: usize,
        got: usize,
    },
    #[error("particle {particle} mixes box and oscillator factors across terms")]
    PotentialMismatch { particle: usize },
    #[error("all coefficients are zero")]
    AllCoefficientsZero,
    #[error("cannot normalize a zero-norm state")]
    ZeroNorm,
    #[error("configuration has {got} coordinates, expected {expected}")]
    ConfigurationLength { expected: usize, got: usize },
    #[error("particle {particle} at ({x}, {y}) is outside the unit box")]
    OutsideBox { particle: usize, x: f64, y: f64 },
    #[error("qubit mapping requires 3 particles, found {0}")]
    NotThreeParticles(usize),
    #[error("term {term}, particle {particle}: factor is neither of the two qubit states")]
    ForeignFactor { term: usize, particle: usize },
}

/// One product term: a complex coefficient times one basis factor per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub coefficient: Complex64,
    pub factors: Vec<BasisState>,
}

impl ProductTerm {
    pub fn new(coefficient: Complex64, factors: Vec<BasisState>) -> Self {
        ProductTerm {
            coefficient,
            factors,
        }
    }

    /// Sum of the factors' energy eigenvalues.
    pub fn energy(&self) -> f64 {
        self.factors.iter().map(|f| f.energy()).sum()
    }
}

/// A point of configuration space: all particle coordinates flattened
/// particle-major, plus the time (only non-stationary states read it).
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub coordinates: Vec<f64>,
    pub time: f64,
}

impl Configuration {
    pub fn new(coordinates: Vec<f64>) -> Self {
        Configuration {
            coordinates,
            time: 0.0,
        }
    }

    pub fn at_time(coordinates: Vec<f64>, time: f64) -> Self {
        Configuration { coordinates, time }
    }
}

/// psi, its configuration-space gradient and |psi|^2 at one point.
#[derive(Debug, Clone)]
pub struct FieldEval {
    pub psi: Complex64,
    pub grad: Vec<Complex64>,
    pub abs2: f64,
}

impl FieldEval {
    pub fn zeroed(n_coords: usize) -> Self {
        FieldEval {
            psi: Complex64::new(0.0, 0.0),
            grad: vec![Complex64::new(0.0, 0.0); n_coords],
            abs2: 0.0,
        }
    }
}

/// Potential wells a particle can sit in; fixes V(x) in the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PotentialKind {
    Box,
    Harmonic,
}

#[derive(Debug, Clone)]
pub struct WaveFunction {
    particles: usize,
    dimension: usize,
    terms: Vec<ProductTerm>,
    stationary_energy: Option<f64>,
    term_energies: Vec<f64>,
    potentials: Vec<PotentialKind>,
    // Distinct (particle, state) evaluation slots shared across terms, so
    // repeated factors (GHZ/W shapes) are evaluated once per point.
    distinct: Vec<(usize, BasisState)>,
    term_slots: Vec<Vec<usize>>,
}

/// Per-term energies are compared with this tolerance to decide stationarity.
const STATIONARY_TOL: f64 = 1e-12;

impl WaveFunction {
    pub fn build(terms: Vec<ProductTerm>) -> Result<Self, WaveFunctionError> {
        if terms.is_empty() {
            return Err(WaveFunctionError::EmptyTerms);
        }
        let particles = terms[0].factors.len();
        if particles == 0 {
            return Err(WaveFunctionError::EmptyTerms);
        }
        let dimension = terms[0].factors[0].dimension();
        for (t, term) in terms.iter().enumerate() {
            if term.factors.len() != particles {
                return Err(WaveFunctionError::ParticleCount {
                    term: t,
                    expected: particles,
                    got: term.factors.len(),
                });
            }
            for (p, f) in term.factors.iter().enumerate() {
                if f.dimension() != dimension {
                    return Err(WaveFunctionError::DimensionMismatch {
                        term: t,
                        particle: p,
                        expected: dimension,
                        got: f.dimension(),
                    });
                }
            }
        }
        if terms.iter().all(|t| t.coefficient.norm_sqr() == 0.0) {
            return Err(WaveFunctionError::AllCoefficientsZero);
        }

        let mut potentials = Vec::with_capacity(particles);
        for p in 0..particles {
            let kind_of = |s: &BasisState| match s.family() {
                BasisFamily::Box2D => PotentialKind::Box,
                _ => PotentialKind::Harmonic,
            };
            let kind = kind_of(&terms[0].factors[p]);
            if terms.iter().any(|t| kind_of(&t.factors[p]) != kind) {
                return Err(WaveFunctionError::PotentialMismatch { particle: p });
            }
            potentials.push(kind);
        }

        let term_energies: Vec<f64> = terms.iter().map(|t| t.energy()).collect();
        let e0 = term_energies[0];
        let scale = 1f64.max(e0.abs());
        let stationary = term_energies.iter().all(|e| (e - e0).abs() <= STATIONARY_TOL * scale);

        let mut distinct: Vec<(usize, BasisState)> = Vec::new();
        let mut term_slots = Vec::with_capacity(terms.len());
        for term in &terms {
            let mut slots = Vec::with_capacity(particles);
            for (p, f) in term.factors.iter().enumerate() {
                let slot = distinct
                    .iter()
                    .position(|(dp, ds)| *dp == p && ds == f)
                    .unwrap_or_else(|| {
                        distinct.push((p, f.clone()));
                        distinct.len() - 1
                    });
                slots.push(slot);
            }
            term_slots.push(slots);
        }

        Ok(WaveFunction {
            particles,
            dimension,
            terms,
            stationary_energy: stationary.then_some(e0),
            term_energies,
            potentials,
            distinct,
            term_slots,
        })
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of configuration-space coordinates (`particles * dimension`).
    pub fn n_coords(&self) -> usize {
        self.particles * self.dimension
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    /// The common term energy when every product term has the same one.
    pub fn stationary_energy(&self) -> Option<f64> {
        self.stationary_energy
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary_energy.is_some()
    }

    /// Rescale coefficients to `sum |c_i|^2 = 1` (orthonormal product terms
    /// assumed). The velocity field is unchanged by this.
    pub fn normalize(mut self) -> Result<Self, WaveFunctionError> {
        let norm2: f64 = self.terms.iter().map(|t| t.coefficient.norm_sqr()).sum();
        if norm2 <= 0.0 || !norm2.is_finite() {
            return Err(WaveFunctionError::ZeroNorm);
        }
        let scale = 1.0 / norm2.sqrt();
        for term in &mut self.terms {
            term.coefficient *= scale;
        }
        Ok(self)
    }

    /// Classical potential V at a configuration (box interior: 0; harmonic:
    /// sum of coordinate squares over the particle, divided by 2).
    pub fn potential(&self, coordinates: &[f64]) -> f64 {
        let d = self.dimension;
        let mut v = 0.0;
        for (p, kind) in self.potentials.iter().enumerate() {
            if *kind == PotentialKind::Harmonic {
                for ax in 0..d {
                    let c = coordinates[p * d + ax];
                    v += 0.5 * c * c;
                }
            }
        }
        v
    }

    pub(crate) fn has_box_particles(&self) -> bool {
        self.potentials.contains(&PotentialKind::Box)
    }

    /// True when every coordinate of every box particle lies in `[0, 1]`.
    pub fn in_domain(&self, coordinates: &[f64]) -> bool {
        let d = self.dimension;
        self.potentials.iter().enumerate().all(|(p, kind)| {
            *kind != PotentialKind::Box
                || coordinates[p * d..(p + 1) * d]
                    .iter()
                    .all(|c| (0.0..=1.0).contains(c))
        })
    }

    pub fn evaluate(&self, q: &Configuration) -> Result<FieldEval, WaveFunctionError> {
        let mut out = FieldEval::zeroed(self.n_coords());
        self.evaluate_into(q, &mut out)?;
        Ok(out)
    }

    /// Evaluate psi and its gradient into a caller-owned buffer (hot path of
    /// the integrator). A node (psi = 0) is a legal output.
    pub fn evaluate_into(
        &self,
        q: &Configuration,
        out: &mut FieldEval,
    ) -> Result<(), WaveFunctionError> {
        let d = self.dimension;
        for (p, kind) in self.potentials.iter().enumerate() {
            if *kind == PotentialKind::Box {
                let (x, y) = (q.coordinates[p * d], q.coordinates[p * d + 1]);
                if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                    return Err(WaveFunctionError::OutsideBox { particle: p, x, y });
                }
            }
        }
        self.evaluate_unchecked_into(q, out)
    }

    /// Evaluation without the box domain check: the sine formulas extend
    /// smoothly past the walls, which the finite-difference probes need.
    pub(crate) fn evaluate_unchecked_into(
        &self,
        q: &Configuration,
        out: &mut FieldEval,
    ) -> Result<(), WaveFunctionError> {
        let n = self.n_coords();
        let d = self.dimension;
        if q.coordinates.len() != n {
            return Err(WaveFunctionError::ConfigurationLength {
                expected: n,
                got: q.coordinates.len(),
            });
        }

        out.grad.resize(n, Complex64::new(0.0, 0.0));
        out.grad.fill(Complex64::new(0.0, 0.0));
        let mut psi = Complex64::new(0.0, 0.0);

        // box particles share base-angle trig across their factors
        let mut trig: [Option<crate::basis::BoxTrig>; 4] = [None; 4];
        for (p, kind) in self.potentials.iter().enumerate() {
            if *kind == PotentialKind::Box && p < trig.len() {
                trig[p] = Some(crate::basis::BoxTrig::at(&q.coordinates[p * d..(p + 1) * d]));
            }
        }
        let mut slots = Vec::with_capacity(self.distinct.len());
        for (p, state) in &self.distinct {
            let eval = match trig.get(*p).and_then(|t| t.as_ref()) {
                Some(t) if state.family() == crate::basis::BasisFamily::Box2D => {
                    state.eval_box_shared(t)
                }
                _ => state.eval_unchecked(&q.coordinates[p * d..(p + 1) * d]),
            };
            slots.push(eval);
        }

        for (t, term) in self.terms.iter().enumerate() {
            let coeff = if self.stationary_energy.is_some() {
                term.coefficient
            } else {
                // per-term phase e^{-i E_t t} matters once energies differ
                term.coefficient * Complex64::from_polar(1.0, -self.term_energies[t] * q.time)
            };
            let evals = &self.term_slots[t];
            // prefix[p] = product of factor values before p; suffix likewise
            let mut prefix = [Complex64::new(1.0, 0.0); 4];
            for p in 0..self.particles {
                prefix[p + 1] = prefix[p] * slots[evals[p]].value;
            }
            psi += coeff * prefix[self.particles];
            let mut suffix = Complex64::new(1.0, 0.0);
            for p in (0..self.particles).rev() {
                let eval = &slots[evals[p]];
                let outer = coeff * prefix[p] * suffix;
                for ax in 0..d {
                    out.grad[p * d + ax] += outer * eval.gradient[ax];
                }
                suffix *= eval.value;
            }
        }

        out.psi = psi;
        out.abs2 = psi.norm_sqr();
        Ok(())
    }

    /// Coefficient tensor of a three-particle state over two single-particle
    /// basis states, `|0> -> basis0`, `|1> -> basis1`, zero-filled for absent
    /// terms.
    pub fn qubit_coefficients(
        &self,
        basis0: &BasisState,
        basis1: &BasisState,
    ) -> Result<[[[Complex64; 2]; 2]; 2], WaveFunctionError> {
        if self.particles != 3 {
            return Err(WaveFunctionError::NotThreeParticles(self.particles));
        }
        let mut tensor = [[[Complex64::new(0.0, 0.0); 2]; 2]; 2];
        for (t, term) in self.terms.iter().enumerate() {
            let mut idx = [0usize; 3];
            for (p, f) in term.factors.iter().enumerate() {
                idx[p] = if f == basis0 {
                    0
                } else if f == basis1 {
                    1
                } else {
                    return Err(WaveFunctionError::ForeignFactor { term: t, particle: p });
                };
            }
            tensor[idx[0]][idx[1]][idx[2]] += term.coefficient;
        }
        Ok(tensor)
    }
}
