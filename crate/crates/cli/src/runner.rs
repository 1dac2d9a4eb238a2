//! Command dispatch: build the state, run the requested job(s), persist CSV
//! outputs and a `run.json` record with config echo, per-job statuses and an
//! output manifest.

use std::fs::File;
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use bohm_core::basis::BasisState;
use bohm_core::chaos::{
    average_lyapunov, henon_heiles_lyapunov, henon_heiles_section_start, lyapunov,
    poincare_section, LyapunovEstimate,
};
use bohm_core::config::family_name;
use bohm_core::dynamics::{attach_diagnostics, integrate_with_masses, DiagnosticsPath};
use bohm_core::families::{generate, GeneratorId};
use bohm_core::measures::{
    geometric_entanglement, meyer_wallach, participation_ratio, three_tangle, ThreeQubitState,
};
use bohm_core::regularity::detect_structure;
use bohm_core::wavefunction::{Configuration, WaveFunction};

use crate::experiment::{Command, ExperimentConfig, ValidationError};
use crate::output::{format_float, write_atomic, CsvWriter, OutputRecord};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    pub seed_override: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct JobRecord {
    pub name: String,
    pub status: String,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

/// Everything worth knowing about a finished run; serialized as `run.json`.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub code_version: String,
    pub command: String,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub warnings: Vec<String>,
    pub jobs: Vec<JobRecord>,
    pub outputs: Vec<OutputRecord>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub regularity: Value,
    pub config: ExperimentConfig,
}

fn axis_names(dim: usize) -> &'static [&'static str] {
    if dim == 2 {
        &["x", "y"]
    } else {
        &["x", "y", "z"]
    }
}

fn coordinate_headers(particles: usize, dim: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(particles * dim);
    for p in 1..=particles {
        for axis in axis_names(dim) {
            names.push(format!("{axis}{p}"));
        }
    }
    names
}

fn describe_state(s: &BasisState) -> String {
    format!("{}{:?}", family_name(s.family()), s.quantum_numbers())
}

fn regularity_json(wf: &WaveFunction) -> Value {
    let report = detect_structure(wf);
    json!({
        "independent_count": report.independent_count,
        "matches": report.matches.iter().map(|m| json!({
            "kind": format!("{:?}", m.kind),
            "coords": m.coords.iter().map(|c| json!({
                "particle": c.particle,
                "role": format!("{:?}", c.role),
            })).collect::<Vec<_>>(),
            "factors": m.factors.iter().map(|(a, b)| {
                json!([describe_state(a), describe_state(b)])
            }).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// Execute a validated config. Outputs land in `options.output_dir`; the
/// same config and seed produce byte-identical CSVs.
pub fn run(mut config: ExperimentConfig, options: &RunOptions) -> Result<RunRecord, RunError> {
    if let Some(seed) = options.seed_override {
        config.seed = Some(seed);
    }
    let warnings = config.validate()?;
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let dir = &options.output_dir;

    let mut jobs = Vec::new();
    let mut outputs = Vec::new();
    let mut regularity = Value::Null;

    let wf = match &config.state {
        Some(spec) => {
            let wf = spec.build().map_err(ValidationError::from)?;
            regularity = regularity_json(&wf);
            Some(wf)
        }
        None => None,
    };

    let seed = config.seed.unwrap_or(0);
    let iparams = config.integrator.to_params();
    let lparams = config
        .lyapunov
        .to_params(seed)
        .map_err(ValidationError::from)?;

    match config.command {
        Command::Trajectory => {
            let wf = wf.as_ref().expect("validated");
            let spec = config.trajectory.as_ref().expect("validated");
            let x0 = Configuration::at_time(
                config.initial_position.clone().expect("validated"),
                spec.t_span[0],
            );
            let mut traj = integrate_with_masses(
                wf,
                config.masses.clone(),
                &x0,
                (spec.t_span[0], spec.t_span[1]),
                &iparams,
                spec.sample_every,
            )
            .map_err(|e| RunError::Numerical(e.to_string()))?;

            let mut csv = CsvWriter::new(&format!(
                "t,{}",
                coordinate_headers(wf.particles(), wf.dimension()).join(",")
            ));
            for (t, q) in &traj.samples {
                let mut row = vec![*t];
                row.extend_from_slice(&q.coordinates);
                csv.float_row(&row);
            }
            outputs.push(write_atomic(
                &dir.join("trajectory.csv"),
                csv.into_string().as_bytes(),
            )?);

            if spec.diagnostics {
                attach_diagnostics(wf, &mut traj, DiagnosticsPath::FiniteDifference)
                    .map_err(|e| RunError::Numerical(e.to_string()))?;
                let mut csv = CsvWriter::new("t,abs2,kinetic,potential,quantum,total");
                let diags = traj.diagnostics.as_ref().expect("just attached");
                for ((t, _), d) in traj.samples.iter().zip(diags) {
                    csv.float_row(&[
                        *t,
                        d.abs2,
                        d.energy.kinetic,
                        d.energy.potential,
                        d.energy.quantum,
                        d.energy.total,
                    ]);
                }
                outputs.push(write_atomic(
                    &dir.join("diagnostics.csv"),
                    csv.into_string().as_bytes(),
                )?);
            }
            jobs.push(JobRecord {
                name: "trajectory".into(),
                status: format!("{:?}", traj.status),
                detail: json!({
                    "samples": traj.samples.len(),
                    "final_time": traj.final_time(),
                }),
            });
        }

        Command::Lyapunov => {
            let wf = wf.as_ref().expect("validated");
            let x0 = Configuration::new(config.initial_position.clone().expect("validated"));
            let est = lyapunov(wf, &x0, &lparams, &iparams)
                .map_err(|e| RunError::Numerical(e.to_string()))?;
            outputs.push(write_atomic(
                &dir.join("lyapunov.csv"),
                lyapunov_csv(&est).as_bytes(),
            )?);
            jobs.push(JobRecord {
                name: "lyapunov".into(),
                status: format!("{:?}", est.status),
                detail: json!({ "final_h": est.final_h, "rescalings": est.h_series.len() }),
            });
        }

        Command::Ensemble => {
            let wf = wf.as_ref().expect("validated");
            let sampler_spec = config.sampler.as_ref().expect("validated");
            let sampler = sampler_spec.to_sampler();
            let result = average_lyapunov(wf, &sampler, sampler_spec.count, &lparams, &iparams)
                .map_err(|e| RunError::Numerical(e.to_string()))?;

            let mut csv = CsvWriter::new(&format!(
                "sample,{},final_h,status",
                coordinate_headers(wf.particles(), wf.dimension()).join(",")
            ));
            for (i, (x0, est)) in result.per_sample.iter().enumerate() {
                let mut fields = vec![i.to_string()];
                fields.extend(x0.iter().map(|v| format_float(*v)));
                fields.push(format_float(est.final_h));
                fields.push(format!("{:?}", est.status));
                csv.row(&fields);
            }
            outputs.push(write_atomic(
                &dir.join("ensemble.csv"),
                csv.into_string().as_bytes(),
            )?);
            jobs.push(JobRecord {
                name: "ensemble".into(),
                status: "Completed".into(),
                detail: json!({
                    "mean_h": result.mean_h,
                    "std_h": result.std_h,
                    "excluded": result.excluded,
                    "samples": result.per_sample.len(),
                }),
            });
        }

        Command::Poincare => {
            let wf = wf.as_ref().expect("validated");
            let spec = config.poincare.as_ref().expect("validated");
            let x0 = Configuration::new(config.initial_position.clone().expect("validated"));
            let (points, status) =
                poincare_section(wf, &x0, (spec.coordinate, spec.level), spec.t_max, &iparams)
                    .map_err(|e| RunError::Numerical(e.to_string()))?;
            let mut csv = CsvWriter::new(&format!(
                "t,{},direction",
                coordinate_headers(wf.particles(), wf.dimension()).join(",")
            ));
            for p in &points {
                let mut fields = vec![format_float(p.time)];
                fields.extend(p.coordinates.iter().map(|v| format_float(*v)));
                fields.push(p.direction.to_string());
                csv.row(&fields);
            }
            outputs.push(write_atomic(
                &dir.join("section.csv"),
                csv.into_string().as_bytes(),
            )?);
            jobs.push(JobRecord {
                name: "poincare".into(),
                status: format!("{status:?}"),
                detail: json!({ "crossings": points.len() }),
            });
        }

        Command::Measures => {
            let wf = wf.as_ref().expect("validated");
            let spec = config.state.as_ref().expect("validated");
            let coeffs = bohm_core::measures::CoefficientVector::new(
                wf.terms().iter().map(|t| t.coefficient).collect(),
            );
            let (coeffs, pr_scale) = coeffs
                .normalize()
                .map_err(|e| RunError::Numerical(e.to_string()))?;
            let pr = participation_ratio(&coeffs)
                .map_err(|e| RunError::Numerical(e.to_string()))?;

            let qubit = match spec.qubit_states().map_err(ValidationError::from)? {
                Some((b0, b1)) => {
                    let tensor = wf
                        .qubit_coefficients(&b0, &b1)
                        .map_err(|e| RunError::Numerical(e.to_string()))?;
                    let (state, scale) = ThreeQubitState::new(tensor)
                        .normalize()
                        .map_err(|e| RunError::Numerical(e.to_string()))?;
                    Some((state, scale))
                }
                None => None,
            };
            let mut fields = vec![format_float(pr)];
            let mut detail = json!({ "PR": pr, "coefficient_scale": pr_scale });
            if let Some((state, scale)) = &qubit {
                let q = meyer_wallach(state).map_err(|e| RunError::Numerical(e.to_string()))?;
                let eg = geometric_entanglement(state)
                    .map_err(|e| RunError::Numerical(e.to_string()))?;
                let tau = three_tangle(state).map_err(|e| RunError::Numerical(e.to_string()))?;
                fields.extend([format_float(q), format_float(eg), format_float(tau)]);
                detail = json!({
                    "PR": pr,
                    "Q": q,
                    "EG": eg,
                    "tau3": tau,
                    "coefficient_scale": pr_scale,
                    "qubit_scale": scale,
                });
            } else {
                fields.extend(["".into(), "".into(), "".into()]);
            }
            let mut csv = CsvWriter::new("PR,Q,EG,tau3");
            csv.row(&fields);
            outputs.push(write_atomic(
                &dir.join("measures.csv"),
                csv.into_string().as_bytes(),
            )?);
            jobs.push(JobRecord {
                name: "measures".into(),
                status: "Completed".into(),
                detail,
            });
        }

        Command::Sweep => {
            let spec = config.sweep.as_ref().expect("validated");
            let sampler_spec = config.sampler.as_ref().expect("validated");
            let id = GeneratorId::parse(&spec.generator).expect("validated");
            let record = run_sweep(
                dir,
                id,
                spec,
                sampler_spec,
                &lparams,
                &iparams,
                &mut jobs,
            )?;
            outputs.push(record);
        }

        Command::Benchmark => {
            let spec = config.benchmark.as_ref().expect("validated");
            let x0 = henon_heiles_section_start(spec.energy, spec.y, spec.py)
                .expect("validated: shell closes");
            let mut params = lparams.clone();
            params.n_steps = (spec.t_max / params.dt).round().max(1.0) as u64;
            let (est, drift) = henon_heiles_lyapunov(spec.energy, &x0, &params, &iparams)
                .map_err(|e| RunError::Numerical(e.to_string()))?;
            outputs.push(write_atomic(
                &dir.join("benchmark.csv"),
                lyapunov_csv(&est).as_bytes(),
            )?);
            jobs.push(JobRecord {
                name: "henon-heiles".into(),
                status: format!("{:?}", est.status),
                detail: json!({
                    "final_h": est.final_h,
                    "energy_drift": drift,
                    "x0": x0.to_vec(),
                }),
            });
        }
    }

    let mut record = RunRecord {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        command: config.command.as_str().to_string(),
        started_unix,
        wall_seconds: clock.elapsed().as_secs_f64(),
        warnings,
        jobs,
        outputs,
        regularity,
        config,
    };
    let json = serde_json::to_vec_pretty(&record).expect("record serializes");
    let run_json = write_atomic(&dir.join("run.json"), &json)?;
    record.outputs.push(run_json);
    Ok(record)
}

fn lyapunov_csv(est: &LyapunovEstimate) -> String {
    let mut csv = CsvWriter::new("T,h");
    for (t, h) in &est.h_series {
        csv.float_row(&[*t, *h]);
    }
    csv.into_string()
}

/// Sweeps append completed rows to the temp file as grid points finish, so
/// an interrupted run still leaves valid rows behind; the rename publishes
/// the complete table.
#[allow(clippy::too_many_arguments)]
fn run_sweep(
    dir: &Path,
    id: GeneratorId,
    spec: &crate::experiment::SweepSpec,
    sampler_spec: &bohm_core::config::SamplerSpec,
    lparams: &bohm_core::chaos::LyapunovParams,
    iparams: &bohm_core::dynamics::IntegratorParams,
    jobs: &mut Vec<JobRecord>,
) -> Result<OutputRecord, RunError> {
    let with_qubit = id.has_qubit_encoding();
    let header = if with_qubit {
        "param,mean_h,std_h,excluded,PR,Q,EG,tau3"
    } else {
        "param,mean_h,std_h,excluded,PR"
    };

    std::fs::create_dir_all(dir)?;
    let final_path = dir.join("sweep.csv");
    let tmp_path = dir.join(format!("sweep.csv.tmp-{}", std::process::id()));
    let mut tmp = File::create(&tmp_path)?;
    writeln!(tmp, "{header}")?;

    for &value in &spec.grid {
        let label = format!("{}[{}={}]", id.as_str(), spec.parameter, value);
        let point = (|| -> Result<Vec<String>, String> {
            let generated = generate(id, &spec.parameter, value, spec.fixed)
                .map_err(|e| e.to_string())?;
            let sampler = sampler_spec.to_sampler();
            let ensemble = average_lyapunov(
                &generated.wavefunction,
                &sampler,
                sampler_spec.count,
                lparams,
                iparams,
            )
            .map_err(|e| e.to_string())?;
            let pr = participation_ratio(&generated.coefficients).map_err(|e| e.to_string())?;
            let mut fields = vec![
                format_float(value),
                format_float(ensemble.mean_h),
                format_float(ensemble.std_h),
                ensemble.excluded.to_string(),
                format_float(pr),
            ];
            if with_qubit {
                let qubit = generated.qubit.as_ref().expect("qubit-encoded family");
                fields.push(format_float(meyer_wallach(qubit).map_err(|e| e.to_string())?));
                fields.push(format_float(
                    geometric_entanglement(qubit).map_err(|e| e.to_string())?,
                ));
                fields.push(format_float(three_tangle(qubit).map_err(|e| e.to_string())?));
            }
            Ok(fields)
        })();
        match point {
            Ok(fields) => {
                writeln!(tmp, "{}", fields.join(","))?;
                tmp.flush()?;
                jobs.push(JobRecord {
                    name: label,
                    status: "Completed".into(),
                    detail: Value::Null,
                });
            }
            Err(message) => {
                // keep going: completed rows stay valid, the failure is recorded
                jobs.push(JobRecord {
                    name: label,
                    status: format!("Failed: {message}"),
                    detail: Value::Null,
                });
            }
        }
    }
    tmp.sync_all()?;
    drop(tmp);
    std::fs::rename(&tmp_path, &final_path)?;

    let content = std::fs::read(&final_path)?;
    let mut hasher = <sha2::Sha256 as sha2::Digest>::new();
    sha2::Digest::update(&mut hasher, &content);
    Ok(OutputRecord {
        path: final_path.to_string_lossy().into_owned(),
        bytes: content.len() as u64,
        sha256: format!("{:x}", sha2::Digest::finalize(hasher)),
    })
}
