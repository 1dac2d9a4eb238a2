//! The experiment-config file format: one JSON document that names a
//! command, the state it acts on, solver parameters and output location.
//! Identical config plus seed reproduces byte-identical CSV outputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use bohm_core::config::{IntegratorSpec, LyapunovSpec, SamplerSpec, StateSpec};
use bohm_core::families::GeneratorId;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    State(#[from] bohm_core::config::ConfigError),
}

fn field_err(field: &str, message: impl Into<String>) -> ValidationError {
    ValidationError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Trajectory,
    Lyapunov,
    Ensemble,
    Poincare,
    Measures,
    Sweep,
    Benchmark,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Trajectory => "trajectory",
            Command::Lyapunov => "lyapunov",
            Command::Ensemble => "ensemble",
            Command::Poincare => "poincare",
            Command::Measures => "measures",
            Command::Sweep => "sweep",
            Command::Benchmark => "benchmark",
        }
    }

    fn is_stochastic(self) -> bool {
        matches!(
            self,
            Command::Lyapunov | Command::Ensemble | Command::Sweep | Command::Benchmark
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub t_span: [f64; 2],
    pub sample_every: f64,
    #[serde(default)]
    pub diagnostics: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareSpec {
    pub coordinate: usize,
    pub level: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub generator: String,
    pub parameter: String,
    pub grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub energy: f64,
    #[serde(default = "default_bench_y")]
    pub y: f64,
    #[serde(default)]
    pub py: f64,
    #[serde(default = "default_bench_t")]
    pub t_max: f64,
}

fn default_bench_y() -> f64 {
    -0.25
}

fn default_bench_t() -> f64 {
    1e4
}

/// Declarative description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_position: Option<Vec<f64>>,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub lyapunov: LyapunovSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poincare: Option<PoincareSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self, ValidationError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural validation: required sections per command, dimensions,
    /// grids, seeds. Returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>, ValidationError> {
        let mut warnings = Vec::new();

        if self.command.is_stochastic() && self.seed.is_none() {
            return Err(field_err(
                "seed",
                format!("required for the {} command", self.command.as_str()),
            ));
        }

        // sweeps build their states from the generator; benchmarks have none
        let needs_state = !matches!(self.command, Command::Benchmark | Command::Sweep);
        let wf = match (&self.state, needs_state) {
            (Some(spec), _) => Some(spec.build()?),
            (None, true) => {
                return Err(field_err(
                    "state",
                    format!("required for the {} command", self.command.as_str()),
                ))
            }
            (None, false) => None,
        };
        if let (Some(spec), Some(wf)) = (&self.state, &wf) {
            if let Some((b0, b1)) = spec.qubit_states()? {
                // surface basis mismatches at validation time
                if wf.particles() == 3 {
                    wf.qubit_coefficients(&b0, &b1)
                        .map_err(|e| field_err("state.qubit_basis", e.to_string()))?;
                } else if matches!(self.command, Command::Measures | Command::Sweep) {
                    return Err(field_err(
                        "state.qubit_basis",
                        "a qubit encoding needs exactly 3 particles",
                    ));
                }
            }
        }

        if let (Some(wf), Some(x0)) = (&wf, &self.initial_position) {
            if x0.len() != wf.n_coords() {
                return Err(field_err(
                    "initial_position",
                    format!("expected {} coordinates, got {}", wf.n_coords(), x0.len()),
                ));
            }
        }
        if let (Some(wf), Some(m)) = (&wf, &self.masses) {
            if m.len() != wf.particles() || m.iter().any(|&x| !(x > 0.0)) {
                return Err(field_err(
                    "masses",
                    format!("need {} positive entries", wf.particles()),
                ));
            }
        }

        match self.command {
            Command::Trajectory => {
                let t = self
                    .trajectory
                    .as_ref()
                    .ok_or_else(|| field_err("trajectory", "required for this command"))?;
                if !(t.sample_every > 0.0) {
                    return Err(field_err("trajectory.sample_every", "must be positive"));
                }
                self.require_x0()?;
            }
            Command::Lyapunov => {
                self.require_x0()?;
            }
            Command::Ensemble => {
                let s = self
                    .sampler
                    .as_ref()
                    .ok_or_else(|| field_err("sampler", "required for this command"))?;
                if s.count == 0 {
                    return Err(field_err("sampler.count", "must be >= 1"));
                }
            }
            Command::Poincare => {
                let p = self
                    .poincare
                    .as_ref()
                    .ok_or_else(|| field_err("poincare", "required for this command"))?;
                let n = wf.as_ref().map_or(0, |w| w.n_coords());
                if p.coordinate >= n {
                    return Err(field_err(
                        "poincare.coordinate",
                        format!("index {} outside configuration dimension {n}", p.coordinate),
                    ));
                }
                if !(p.t_max > 0.0) {
                    return Err(field_err("poincare.t_max", "must be positive"));
                }
                self.require_x0()?;
            }
            Command::Measures => {}
            Command::Sweep => {
                let s = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| field_err("sweep", "required for this command"))?;
                let id = GeneratorId::parse(&s.generator)
                    .map_err(|e| field_err("sweep.generator", e.to_string()))?;
                if !id.parameters().contains(&s.parameter.as_str()) {
                    return Err(field_err(
                        "sweep.parameter",
                        format!(
                            "generator {} accepts {:?}, got {:?}",
                            id.as_str(),
                            id.parameters(),
                            s.parameter
                        ),
                    ));
                }
                if s.grid.is_empty() {
                    return Err(field_err("sweep.grid", "must not be empty"));
                }
                if s.grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(field_err("sweep.grid", "must be strictly sorted"));
                }
                let sampler = self
                    .sampler
                    .as_ref()
                    .ok_or_else(|| field_err("sampler", "required for this command"))?;
                if sampler.count == 0 {
                    return Err(field_err("sampler.count", "must be >= 1"));
                }
            }
            Command::Benchmark => {
                let b = self
                    .benchmark
                    .as_ref()
                    .ok_or_else(|| field_err("benchmark", "required for this command"))?;
                if bohm_core::chaos::henon_heiles_section_start(b.energy, b.y, b.py).is_none() {
                    return Err(field_err(
                        "benchmark",
                        format!(
                            "the energy shell E = {} cannot close at (y, py) = ({}, {})",
                            b.energy, b.y, b.py
                        ),
                    ));
                }
            }
        }

        // parameter-range checks shared by every command that integrates
        self.integrator
            .to_params()
            .validate()
            .map_err(|e| field_err("integrator", e.to_string()))?;
        let lp = self
            .lyapunov
            .to_params(self.seed.unwrap_or(0))
            .map_err(|e| field_err("lyapunov.e0", e.to_string()))?;
        lp.validate()
            .map_err(|e| field_err("lyapunov", e.to_string()))?;
        if lp.d0 > 1e-4 {
            warnings.push(format!(
                "lyapunov.d0 = {:e} is large relative to the field scale; \
                 separations may leave the linear regime",
                lp.d0
            ));
        }
        Ok(warnings)
    }

    fn require_x0(&self) -> Result<(), ValidationError> {
        if self.initial_position.is_none() {
            return Err(field_err(
                "initial_position",
                format!("required for the {} command", self.command.as_str()),
            ));
        }
        Ok(())
    }
}
