use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bohm_cli::experiment::{BenchmarkSpec, Command, ExperimentConfig};
use bohm_cli::runner::{run, RunError, RunOptions};

/// Pilot-wave trajectory experiments: integrate guidance-equation
/// trajectories, estimate Lyapunov exponents, compute Poincare sections and
/// coefficient-space measures, and sweep parametrized state families.
#[derive(Parser)]
#[command(name = "bohm", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute an experiment config and write CSV results plus run.json
    Run {
        /// Path to the experiment config (JSON)
        config: PathBuf,
        /// Output directory (default: config's output_dir, else runs/<stem>)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for ensemble jobs (default: env BOHM_JOBS, else all cores)
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config without running it
    Validate {
        config: PathBuf,
    },
    /// Built-in classical benchmarks for the Lyapunov machinery
    Benchmark {
        #[command(subcommand)]
        which: BenchCmd,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Benettin estimate on the Henon-Heiles flow at a given energy
    #[command(name = "henon-heiles")]
    HenonHeiles {
        /// Energy of the initial shell (bounded motion needs E <= 1/6)
        #[arg(long)]
        energy: f64,
        /// Section coordinate y of the start point (x = 0, px from energy)
        #[arg(long, default_value_t = -0.25, allow_hyphen_values = true)]
        y: f64,
        /// Section momentum py of the start point
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        py: f64,
        /// Total integration time
        #[arg(long, default_value_t = 1e4)]
        t_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn init_jobs(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("BOHM_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        // ignore the error when a pool already exists (tests, reruns)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn default_out(config_path: &PathBuf, config: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &config.output_dir {
        return PathBuf::from(dir);
    }
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    PathBuf::from("runs").join(stem)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Run {
            config,
            out,
            jobs,
            seed,
        } => {
            init_jobs(jobs);
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let parsed = match ExperimentConfig::from_json(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let options = RunOptions {
                output_dir: out.unwrap_or_else(|| default_out(&config, &parsed)),
                seed_override: seed,
            };
            finish(run(parsed, &options))
        }
        Cmd::Validate { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            match ExperimentConfig::from_json(&text).and_then(|c| c.validate()) {
                Ok(warnings) => {
                    println!("{}: ok", config.display());
                    for w in warnings {
                        println!("warning: {w}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Cmd::Benchmark { which } => match which {
            BenchCmd::HenonHeiles {
                energy,
                y,
                py,
                t_max,
                out,
                seed,
                jobs,
            } => {
                init_jobs(jobs);
                let config = ExperimentConfig {
                    command: Command::Benchmark,
                    seed: Some(seed),
                    output_dir: None,
                    state: None,
                    initial_position: None,
                    integrator: Default::default(),
                    lyapunov: Default::default(),
                    sampler: None,
                    trajectory: None,
                    poincare: None,
                    sweep: None,
                    benchmark: Some(BenchmarkSpec {
                        energy,
                        y,
                        py,
                        t_max,
                    }),
                    masses: None,
                };
                let options = RunOptions {
                    output_dir: out.unwrap_or_else(|| PathBuf::from("runs/henon-heiles")),
                    seed_override: None,
                };
                finish(run(config, &options))
            }
        },
    }
}

fn finish(result: Result<bohm_cli::runner::RunRecord, RunError>) -> ExitCode {
    match result {
        Ok(record) => {
            for w in &record.warnings {
                eprintln!("warning: {w}");
            }
            for job in &record.jobs {
                println!("{}: {}", job.name, job.status);
            }
            for output in &record.outputs {
                println!("wrote {} ({} bytes)", output.path, output.bytes);
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Validation(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(RunError::Numerical(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(RunError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
