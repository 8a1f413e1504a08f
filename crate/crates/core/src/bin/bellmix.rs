use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bellmix::fixtures::paper_fixtures;
use bellmix::measurement::{counts_to_csv, counts_to_json, read_counts, simulate_counts, AcquisitionConfig};
use bellmix::metrics::MetricsReport;
use bellmix::optics::{standard_projector_set, ProjectorSet};
use bellmix::states::{generate, mix_duty_cycle, SourceConfig};
use bellmix::sweep::{run_sweep, SweepSpec};
use bellmix::tomography::{acquisition_matching, bootstrap_errors, mle_reconstruct, MleOptions};
use bellmix::{DensityMatrix, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;
const EXIT_FIXTURE_FAILED: u8 = 1;

#[derive(Parser)]
#[command(name = "bellmix", version, about = "Duty-cycle mixed two-photon states: simulate, reconstruct, score")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the density matrix of a source configuration.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate tomography counts (CSV, or JSON when --out ends in .json).
    Simulate {
        #[arg(long, conflicts_with = "state")]
        config: Option<PathBuf>,
        /// Density matrix JSON to measure instead of a source configuration.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        projectors: Option<PathBuf>,
        #[arg(long)]
        pairs: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        accidentals: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximum-likelihood reconstruction from counts.
    Reconstruct {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        projectors: Option<PathBuf>,
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 0)]
        resamples: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Purity, tangle, visibility and optional fidelity of a state.
    Metrics {
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a duty-cycle sweep described by a JSON spec.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        pairs: Option<f64>,
        #[arg(long)]
        resamples: Option<usize>,
        /// Run sweep points concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Check metrics against the published reference values.
    PaperFixtures,
}

#[derive(Args)]
struct SeedArg {
    /// Master seed; overrides any seed in the config.
    #[arg(long, env = "BELLMIX_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct TargetArgs {
    /// Target density matrix JSON for the fidelity.
    #[arg(long, conflicts_with = "target_alpha")]
    target: Option<PathBuf>,
    /// Use the ideal duty-cycle mixture at this α as the target.
    #[arg(long)]
    target_alpha: Option<f64>,
}

enum Failure {
    Config(Error),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig { .. } | Error::OutOfRange { .. } | Error::NotNormalized { .. } => {
                Failure::Config(e)
            }
            _ => Failure::Data(e),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Failure::Data(Error::Io {
                    path: parent.to_path_buf(),
                    source: e,
                }))?;
            }
            std::fs::write(path, text).map_err(|e| {
                Failure::Data(Error::Io {
                    path: path.to_path_buf(),
                    source: e,
                })
            })
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let newline = if text.ends_with('\n') { "" } else { "\n" };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = write!(stdout, "{text}{newline}");
            Ok(())
        }
    }
}

fn read_state(path: &Path) -> CliResult<DensityMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::Data(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::Data(Error::Parse {
            what: format!("density matrix {}", path.display()),
            message: e.to_string(),
        })
    })
}

fn projector_set(path: Option<&Path>) -> CliResult<ProjectorSet> {
    match path {
        Some(p) => Ok(ProjectorSet::from_json_file(p)?),
        None => Ok(standard_projector_set()),
    }
}

fn source_config(path: Option<&Path>) -> CliResult<SourceConfig> {
    match path {
        Some(p) => SourceConfig::from_json_file(p).map_err(config_err),
        None => Ok(SourceConfig::default()),
    }
}

fn target(args: &TargetArgs) -> CliResult<Option<(DensityMatrix, String)>> {
    if let Some(path) = &args.target {
        return Ok(Some((read_state(path)?, path.display().to_string())));
    }
    if let Some(alpha) = args.target_alpha {
        let rho = mix_duty_cycle(alpha).map_err(config_err)?;
        return Ok(Some((rho, format!("duty-cycle mixture alpha={alpha}"))));
    }
    Ok(None)
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output")
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Generate { config, out } => {
            let rho = generate(&source_config(config.as_deref())?).map_err(config_err)?;
            emit(out.as_deref(), &json(&rho))?;
        }
        Command::Simulate {
            config,
            state,
            projectors,
            pairs,
            accidentals,
            seed,
            out,
        } => {
            let rho = match state {
                Some(p) => read_state(&p)?,
                None => generate(&source_config(config.as_deref())?).map_err(config_err)?,
            };
            let set = projector_set(projectors.as_deref())?;
            let defaults = AcquisitionConfig::default();
            let acq = AcquisitionConfig {
                pairs_per_setting: pairs.unwrap_or(defaults.pairs_per_setting),
                accidental_rate: accidentals,
                seed: seed.seed.unwrap_or(defaults.seed),
            };
            acq.validate().map_err(config_err)?;
            let counts = simulate_counts(&rho, &set, &acq)?;
            let as_json = out
                .as_deref()
                .and_then(Path::extension)
                .is_some_and(|e| e.eq_ignore_ascii_case("json"));
            let text = if as_json {
                counts_to_json(&counts)
            } else {
                counts_to_csv(&counts, &set)?
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Reconstruct {
            counts,
            projectors,
            target: target_args,
            resamples,
            seed,
            max_iterations,
            out,
        } => {
            let set = projector_set(projectors.as_deref())?;
            let records = read_counts(&counts, &set)?;
            let mut options = MleOptions::default();
            if let Some(n) = max_iterations {
                options.max_iterations = n;
            }
            let mut result = mle_reconstruct(&records, &set, &options)?;
            if let Some((rho, description)) = target(&target_args)? {
                result = result.with_target(&rho, &description);
            }
            if resamples > 0 {
                let acq = acquisition_matching(&records, seed.seed.unwrap_or(AcquisitionConfig::default().seed))?;
                result.metric_errors = Some(bootstrap_errors(&result, &set, &acq, resamples, &options)?);
            }
            emit(out.as_deref(), &result.to_json_string())?;
            if !result.converged {
                eprintln!("warning: no convergence after {} iterations", result.iterations);
                return Ok(EXIT_NOT_CONVERGED);
            }
        }
        Command::Metrics {
            state,
            target: target_args,
            out,
        } => {
            let rho = read_state(&state)?;
            let t = target(&target_args)?;
            let report = MetricsReport::evaluate(&rho, t.as_ref().map(|(s, d)| (s, d.as_str())));
            emit(out.as_deref(), &json(&report))?;
        }
        Command::Sweep {
            config,
            out,
            seed,
            pairs,
            resamples,
            parallel,
        } => {
            let mut spec = SweepSpec::from_json_file(&config).map_err(config_err)?;
            if let Some(s) = seed.seed {
                spec.acquisition.seed = s;
            }
            if let Some(p) = pairs {
                spec.acquisition.pairs_per_setting = p;
            }
            if let Some(r) = resamples {
                spec.resamples = r;
            }
            if let Some(dir) = out {
                spec.outputs = Some(dir);
            }
            spec.validate().map_err(config_err)?;
            let outcome = run_sweep(&spec, parallel)?;
            match &spec.outputs {
                Some(dir) => outcome.write(dir, &standard_projector_set())?,
                None => emit(None, &outcome.csv())?,
            }
            if !outcome.all_converged() {
                eprintln!("warning: some sweep points did not converge");
                return Ok(EXIT_NOT_CONVERGED);
            }
        }
        Command::PaperFixtures => {
            let report = paper_fixtures()?;
            let _ = write!(std::io::stdout().lock(), "{report}");
            if !report.all_passed() {
                return Ok(EXIT_FIXTURE_FAILED);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Data(e)) => {
            eprintln!("data error: {e}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
