//! Trajectory dynamics for pilot-wave (de Broglie-Bohm) quantum mechanics.
//!
//! The crate builds stationary superpositions of single-particle energy
//! eigenstates (2-d box, 2-d and 3-d harmonic oscillator in Cartesian and
//! angular-momentum bases), integrates the guidance equation with an adaptive
//! Dormand-Prince 5(4) scheme, estimates maximal Lyapunov exponents with the
//! Benettin rescaling procedure, and computes complexity/entanglement
//! measures (participation ratio, Meyer-Wallach, geometric measure,
//! three-tangle) on the expansion coefficients.
//!
//! Units are fixed to `hbar = m = omega = 1`; box side length is 1.

pub mod basis;
pub mod chaos;
pub mod config;
pub mod dynamics;
pub mod families;
pub mod measures;
pub mod ode;
pub mod regularity;
pub mod wavefunction;

pub use basis::{BasisFamily, BasisState, PointEval};
pub use chaos::{
    EnsembleResult, InitialDirection, LyapunovEstimate, LyapunovParams, LyapunovStatus, Sampler,
    SectionPoint,
};
pub use dynamics::{EnergyDiagnostics, IntegratorParams, Trajectory, TrajectoryStatus};
pub use measures::{CoefficientVector, ThreeQubitState, WParams};
pub use regularity::{RotatingFrame, StructureKind, StructureReport};
pub use wavefunction::{Configuration, FieldEval, ProductTerm, WaveFunction};
