//! Serializable schema for wave functions and solver parameters, shared by
//! the experiment-config file format. Coefficients accept either
//! `{abs, phase}` (mirroring `r e^{i chi}` notation losslessly) or
//! `{re, im}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use num_complex::Complex64;

use crate::basis::{BasisError, BasisFamily, BasisState};
use crate::chaos::{InitialDirection, LyapunovParams, Sampler};
use crate::dynamics::IntegratorParams;
use crate::wavefunction::{ProductTerm, WaveFunction, WaveFunctionError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("state.terms[{term}].factors[{particle}].family: unknown family {name:?}")]
    UnknownFamily {
        term: usize,
        particle: usize,
        name: String,
    },
    #[error("state.terms[{term}].factors[{particle}]: {source}")]
    BadQuantumNumbers {
        term: usize,
        particle: usize,
        source: BasisError,
    },
    #[error("state.qubit_basis.{which}: {source}")]
    BadQubitBasis {
        which: &'static str,
        source: BasisError,
    },
    #[error("state.qubit_basis.{which}.family: unknown family {name:?}")]
    UnknownQubitFamily { which: &'static str, name: String },
    #[error("state: {0}")]
    State(#[from] WaveFunctionError),
    #[error("lyapunov.e0: expected \"random\" or a coordinate vector, got {0:?}")]
    BadDirection(String),
}

/// Family tags used by the JSON format.
pub fn parse_family(name: &str) -> Option<BasisFamily> {
    match name {
        "box2d" => Some(BasisFamily::Box2D),
        "harm2d_cart" => Some(BasisFamily::Harm2DCart),
        "harm2d_polar" => Some(BasisFamily::Harm2DPolar),
        "harm3d_cart" => Some(BasisFamily::Harm3DCart),
        "harm3d_sph" => Some(BasisFamily::Harm3DSph),
        _ => None,
    }
}

pub fn family_name(family: BasisFamily) -> &'static str {
    match family {
        BasisFamily::Box2D => "box2d",
        BasisFamily::Harm2DCart => "harm2d_cart",
        BasisFamily::Harm2DPolar => "harm2d_polar",
        BasisFamily::Harm3DCart => "harm3d_cart",
        BasisFamily::Harm3DSph => "harm3d_sph",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Polar { abs: f64, phase: f64 },
    Cartesian { re: f64, im: f64 },
}

impl CoefficientSpec {
    pub fn to_complex(&self) -> Complex64 {
        match *self {
            CoefficientSpec::Polar { abs, phase } => Complex64::from_polar(abs, phase),
            CoefficientSpec::Cartesian { re, im } => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub family: String,
    pub quantum_numbers: Vec<i32>,
}

impl FactorSpec {
    pub fn from_state(state: &BasisState) -> Self {
        FactorSpec {
            family: family_name(state.family()).to_string(),
            quantum_numbers: state.quantum_numbers().to_vec(),
        }
    }

    fn build(&self) -> Result<BasisState, BuildFactorError> {
        let family = parse_family(&self.family).ok_or(BuildFactorError::Family)?;
        BasisState::new(family, &self.quantum_numbers).map_err(BuildFactorError::Numbers)
    }
}

enum BuildFactorError {
    Family,
    Numbers(BasisError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coefficient: CoefficientSpec,
    pub factors: Vec<FactorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitBasisSpec {
    pub basis0: FactorSpec,
    pub basis1: FactorSpec,
}

/// Declarative wave-function description: one factor per particle per term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub terms: Vec<TermSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_basis: Option<QubitBasisSpec>,
}

impl StateSpec {
    pub fn build(&self) -> Result<WaveFunction, ConfigError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (t, term) in self.terms.iter().enumerate() {
            let mut factors = Vec::with_capacity(term.factors.len());
            for (p, factor) in term.factors.iter().enumerate() {
                let state = factor.build().map_err(|e| match e {
                    BuildFactorError::Family => ConfigError::UnknownFamily {
                        term: t,
                        particle: p,
                        name: factor.family.clone(),
                    },
                    BuildFactorError::Numbers(source) => ConfigError::BadQuantumNumbers {
                        term: t,
                        particle: p,
                        source,
                    },
                })?;
                factors.push(state);
            }
            terms.push(ProductTerm::new(term.coefficient.to_complex(), factors));
        }
        Ok(WaveFunction::build(terms)?)
    }

    pub fn qubit_states(&self) -> Result<Option<(BasisState, BasisState)>, ConfigError> {
        let Some(q) = &self.qubit_basis else {
            return Ok(None);
        };
        let build = |which: &'static str, f: &FactorSpec| {
            f.build().map_err(|e| match e {
                BuildFactorError::Family => ConfigError::UnknownQubitFamily {
                    which,
                    name: f.family.clone(),
                },
                BuildFactorError::Numbers(source) => ConfigError::BadQubitBasis { which, source },
            })
        };
        Ok(Some((build("basis0", &q.basis0)?, build("basis1", &q.basis1)?)))
    }

    pub fn from_wavefunction(wf: &WaveFunction) -> Self {
        StateSpec {
            terms: wf
                .terms()
                .iter()
                .map(|t| TermSpec {
                    coefficient: CoefficientSpec::Cartesian {
                        re: t.coefficient.re,
                        im: t.coefficient.im,
                    },
                    factors: t.factors.iter().map(FactorSpec::from_state).collect(),
                })
                .collect(),
            qubit_basis: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_abs2: f64,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        let p = IntegratorParams::default();
        IntegratorSpec {
            rel_tol: p.rel_tol,
            abs_tol: p.abs_tol,
            max_step: p.max_step,
            min_abs2: p.min_abs2,
        }
    }
}

impl IntegratorSpec {
    pub fn to_params(&self) -> IntegratorParams {
        IntegratorParams {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            min_abs2: self.min_abs2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DirectionSpec {
    Keyword(String),
    Vector(Vec<f64>),
}

impl Default for DirectionSpec {
    fn default() -> Self {
        DirectionSpec::Keyword("random".to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovSpec {
    pub d0: f64,
    pub dt: f64,
    pub n_steps: u64,
    pub e0: DirectionSpec,
    /// Defaults to the experiment seed when absent.
    pub seed: Option<u64>,
}

impl Default for LyapunovSpec {
    fn default() -> Self {
        let p = LyapunovParams::default();
        LyapunovSpec {
            d0: p.d0,
            dt: p.dt,
            n_steps: p.n_steps,
            e0: DirectionSpec::default(),
            seed: None,
        }
    }
}

impl LyapunovSpec {
    pub fn to_params(&self, default_seed: u64) -> Result<LyapunovParams, ConfigError> {
        let e0 = match &self.e0 {
            DirectionSpec::Keyword(k) if k == "random" => InitialDirection::Random,
            DirectionSpec::Keyword(k) => return Err(ConfigError::BadDirection(k.clone())),
            DirectionSpec::Vector(v) => InitialDirection::Fixed(v.clone()),
        };
        Ok(LyapunovParams {
            d0: self.d0,
            dt: self.dt,
            n_steps: self.n_steps,
            e0,
            seed: self.seed.unwrap_or(default_seed),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub edge: f64,
    #[serde(default = "default_center")]
    pub center: Vec<f64>,
    pub count: usize,
}

fn default_center() -> Vec<f64> {
    vec![0.0]
}

impl SamplerSpec {
    pub fn to_sampler(&self) -> Sampler {
        Sampler {
            edge: self.edge,
            center: self.center.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_spec_round_trips_through_json() {
        let json = r#"{
            "terms": [
                {"coefficient": {"abs": 1.0, "phase": 0.0},
                 "factors": [{"family": "harm3d_sph", "quantum_numbers": [0, 3, 1]}]},
                {"coefficient": {"re": 0.5, "im": -0.25},
                 "factors": [{"family": "harm3d_sph", "quantum_numbers": [1, 1, 0]}]}
            ]
        }"#;
        let spec: StateSpec = serde_json::from_str(json).unwrap();
        let round = serde_json::to_string(&spec).unwrap();
        let again: StateSpec = serde_json::from_str(&round).unwrap();
        assert_eq!(spec, again);
        let wf = spec.build().unwrap();
        assert_eq!(wf.particles(), 1);
        assert_eq!(wf.dimension(), 3);
    }

    #[test]
    fn errors_name_the_offending_term() {
        let json = r#"{
            "terms": [
                {"coefficient": {"abs": 1.0, "phase": 0.0},
                 "factors": [{"family": "harm3d_sph", "quantum_numbers": [0, 1, 2]}]}
            ]
        }"#;
        let spec: StateSpec = serde_json::from_str(json).unwrap();
        let err = spec.build().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("terms[0]"), "{msg}");
        assert!(msg.contains("factors[0]"), "{msg}");

        let json = r#"{
            "terms": [
                {"coefficient": {"abs": 1.0, "phase": 0.0},
                 "factors": [{"family": "harmonic", "quantum_numbers": [0, 1]}]}
            ]
        }"#;
        let spec: StateSpec = serde_json::from_str(json).unwrap();
        assert!(matches!(
            spec.build(),
            Err(ConfigError::UnknownFamily { term: 0, particle: 0, .. })
        ));
    }

    #[test]
    fn lyapunov_spec_direction_forms() {
        let spec: LyapunovSpec = serde_json::from_str(r#"{"e0": "random"}"#).unwrap();
        assert_eq!(
            spec.to_params(7).unwrap().e0,
            InitialDirection::Random
        );
        assert_eq!(spec.to_params(7).unwrap().seed, 7);

        let spec: LyapunovSpec =
            serde_json::from_str(r#"{"e0": [1.0, 0.0], "seed": 3}"#).unwrap();
        let p = spec.to_params(7).unwrap();
        assert_eq!(p.e0, InitialDirection::Fixed(vec![1.0, 0.0]));
        assert_eq!(p.seed, 3);

        let spec: LyapunovSpec = serde_json::from_str(r#"{"e0": "up"}"#).unwrap();
        assert!(spec.to_params(7).is_err());
    }

    #[test]
    fn integrator_spec_defaults_match_params() {
        let spec: IntegratorSpec = serde_json::from_str("{}").unwrap();
        assert_eq!(spec.to_params(), IntegratorParams::default());
    }
}
