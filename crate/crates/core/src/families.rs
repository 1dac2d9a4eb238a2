//! Parametrized wave-function families used by the sweep runner: two
//! four-mode stationary superpositions in the 3-d oscillator's
//! angular-momentum basis (amplitudes driven by `alpha`, phases by `beta`),
//! and three one-parameter W-class slices over polar-oscillator qubits.
//!
//! Generator ids (`eq31`, `eq32`, `eq100`, `eq101`, `eq101-prime`) are the
//! stable vocabulary of the experiment-config format.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::basis::{BasisFamily, BasisState};
use crate::measures::{w_state, CoefficientVector, ThreeQubitState, WParams};
use crate::wavefunction::{ProductTerm, WaveFunction};

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("unknown generator id {0:?}")]
    UnknownGenerator(String),
    #[error("parameter {name} = {value} outside [{lo}, {hi}]")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("generator {id:?} has no parameter named {name:?}")]
    UnknownParameter { id: GeneratorId, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorId {
    Eq31,
    Eq32,
    Eq100,
    Eq101,
    Eq101Prime,
}

impl GeneratorId {
    pub fn parse(s: &str) -> Result<Self, FamilyError> {
        match s {
            "eq31" => Ok(GeneratorId::Eq31),
            "eq32" => Ok(GeneratorId::Eq32),
            "eq100" => Ok(GeneratorId::Eq100),
            "eq101" => Ok(GeneratorId::Eq101),
            "eq101-prime" => Ok(GeneratorId::Eq101Prime),
            other => Err(FamilyError::UnknownGenerator(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorId::Eq31 => "eq31",
            GeneratorId::Eq32 => "eq32",
            GeneratorId::Eq100 => "eq100",
            GeneratorId::Eq101 => "eq101",
            GeneratorId::Eq101Prime => "eq101-prime",
        }
    }

    /// Sweepable parameter names; the first is the default.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            GeneratorId::Eq31 => &["alpha", "beta"],
            GeneratorId::Eq32 => &["alpha"],
            _ => &["a"],
        }
    }

    pub fn has_qubit_encoding(self) -> bool {
        matches!(
            self,
            GeneratorId::Eq100 | GeneratorId::Eq101 | GeneratorId::Eq101Prime
        )
    }
}

/// A generated member of a family: the normalized wave function, its
/// normalized coefficient list (for the participation ratio) and, for
/// qubit-encoded families, the 2x2x2 tensor.
#[derive(Debug, Clone)]
pub struct GeneratedState {
    pub wavefunction: WaveFunction,
    pub coefficients: CoefficientVector,
    pub qubit: Option<ThreeQubitState>,
}

fn sph(k: i32, l: i32, m: i32) -> BasisState {
    BasisState::new(BasisFamily::Harm3DSph, &[k, l, m]).expect("valid quantum numbers")
}

fn pol(nr: i32, nl: i32) -> BasisState {
    BasisState::new(BasisFamily::Harm2DPolar, &[nr, nl]).expect("valid quantum numbers")
}

fn assemble(
    states: Vec<Vec<BasisState>>,
    coeffs: Vec<Complex64>,
    labels: Vec<String>,
    qubit: Option<ThreeQubitState>,
) -> GeneratedState {
    let terms = coeffs
        .iter()
        .zip(states)
        .map(|(c, factors)| ProductTerm::new(*c, factors))
        .collect();
    let wavefunction = WaveFunction::build(terms)
        .expect("family terms are consistent")
        .normalize()
        .expect("family amplitudes never all vanish");
    let coefficients = wavefunction
        .terms()
        .iter()
        .map(|t| t.coefficient)
        .collect::<Vec<_>>();
    GeneratedState {
        wavefunction,
        coefficients: CoefficientVector::with_labels(coefficients, labels),
        qubit,
    }
}

/// Four-mode superposition of energy 13/2: amplitudes
/// `(cos a, sin a, cos^2 a, sin^2 a)` with beta-dependent phases
/// `(0, b + pi/3, 2 pi cos b + pi/5, -2 b + pi/7)`.
pub fn eq31(alpha: f64, beta: f64) -> GeneratedState {
    let states = vec![
        vec![sph(1, 3, 0)],
        vec![sph(1, 3, 1)],
        vec![sph(2, 1, -1)],
        vec![sph(2, 1, 0)],
    ];
    let coeffs = vec![
        Complex64::from_polar(alpha.cos(), 0.0),
        Complex64::from_polar(alpha.sin(), beta + PI / 3.0),
        Complex64::from_polar(alpha.cos().powi(2), 2.0 * PI * beta.cos() + PI / 5.0),
        Complex64::from_polar(alpha.sin().powi(2), -2.0 * beta + PI / 7.0),
    ];
    let labels = ["(1,3,0)", "(1,3,1)", "(2,1,-1)", "(2,1,0)"]
        .map(String::from)
        .to_vec();
    assemble(states, coeffs, labels, None)
}

/// Same amplitude pattern over different eigenstates, energy 17/2; only the
/// fixed printed phases.
pub fn eq32(alpha: f64) -> GeneratedState {
    let states = vec![
        vec![sph(2, 3, 2)],
        vec![sph(2, 3, -1)],
        vec![sph(3, 1, 1)],
        vec![sph(3, 1, 0)],
    ];
    let coeffs = vec![
        Complex64::from_polar(alpha.cos(), 0.0),
        Complex64::from_polar(alpha.sin(), PI / 3.0),
        Complex64::from_polar(alpha.cos().powi(2), PI / 5.0),
        Complex64::from_polar(alpha.sin().powi(2), PI / 7.0),
    ];
    let labels = ["(2,3,2)", "(2,3,-1)", "(3,1,1)", "(3,1,0)"]
        .map(String::from)
        .to_vec();
    assemble(states, coeffs, labels, None)
}

/// Three-particle W-class state over two polar-oscillator qubit states:
/// `sqrt(a)|001> + sqrt(b)|010> + sqrt(c)|100> + sqrt(1-a-b-c)|000>`.
fn w_family(
    params: WParams,
    basis0: BasisState,
    basis1: BasisState,
) -> Result<GeneratedState, FamilyError> {
    params.validate().map_err(|_| FamilyError::ParamOutOfRange {
        name: "a",
        value: params.a,
        lo: 0.0,
        hi: 1.0,
    })?;
    let qubit = w_state(params).expect("validated above");
    let d = (1.0 - params.a - params.b - params.c).max(0.0);
    let states = vec![
        vec![basis0.clone(), basis0.clone(), basis1.clone()],
        vec![basis0.clone(), basis1.clone(), basis0.clone()],
        vec![basis1.clone(), basis0.clone(), basis0.clone()],
        vec![basis0.clone(), basis0.clone(), basis0.clone()],
    ];
    let coeffs = vec![
        Complex64::new(params.a.sqrt(), 0.0),
        Complex64::new(params.b.sqrt(), 0.0),
        Complex64::new(params.c.sqrt(), 0.0),
        Complex64::new(d.sqrt(), 0.0),
    ];
    let labels = ["001", "010", "100", "000"].map(String::from).to_vec();
    Ok(assemble(states, coeffs, labels, Some(qubit)))
}

/// `W(a, 1/2 - a, 1/2)` over qubits `|0> = pol(4,0)`, `|1> = pol(3,1)`
/// (energy 15), `a` in `[0, 1/2]`.
pub fn eq100(a: f64) -> Result<GeneratedState, FamilyError> {
    check_range("a", a, 0.0, 0.5)?;
    w_family(
        WParams {
            a,
            b: 0.5 - a,
            c: 0.5,
        },
        pol(4, 0),
        pol(3, 1),
    )
}

/// `W(a, 1/4, 1/4)` over qubits `|0> = pol(4,0)`, `|1> = pol(3,1)`
/// (energy 15), `a` in `[0, 1/2]`.
pub fn eq101(a: f64) -> Result<GeneratedState, FamilyError> {
    check_range("a", a, 0.0, 0.5)?;
    w_family(
        WParams {
            a,
            b: 0.25,
            c: 0.25,
        },
        pol(4, 0),
        pol(3, 1),
    )
}

/// `W(a, 1/4, 1/4)` over the higher-energy qubits `|0> = pol(4,2)`,
/// `|1> = pol(3,3)` (energy 21), `a` in `[0, 1/2]`.
pub fn eq101_prime(a: f64) -> Result<GeneratedState, FamilyError> {
    check_range("a", a, 0.0, 0.5)?;
    w_family(
        WParams {
            a,
            b: 0.25,
            c: 0.25,
        },
        pol(4, 2),
        pol(3, 3),
    )
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), FamilyError> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(FamilyError::ParamOutOfRange {
            name,
            value,
            lo,
            hi,
        })
    }
}

/// Build a family member with the sweep parameter bound by name; `fixed`
/// supplies the second parameter of two-parameter families (eq31's other
/// angle), defaulting to `beta = 0` / `alpha = pi/4`.
pub fn generate(
    id: GeneratorId,
    parameter: &str,
    value: f64,
    fixed: Option<f64>,
) -> Result<GeneratedState, FamilyError> {
    match (id, parameter) {
        (GeneratorId::Eq31, "alpha") => Ok(eq31(value, fixed.unwrap_or(0.0))),
        (GeneratorId::Eq31, "beta") => Ok(eq31(fixed.unwrap_or(PI / 4.0), value)),
        (GeneratorId::Eq32, "alpha") => Ok(eq32(value)),
        (GeneratorId::Eq100, "a") => eq100(value),
        (GeneratorId::Eq101, "a") => eq101(value),
        (GeneratorId::Eq101Prime, "a") => eq101_prime(value),
        (id, name) => Err(FamilyError::UnknownParameter {
            id,
            name: name.to_string(),
        }),
    }
}
