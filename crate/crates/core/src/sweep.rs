//! Duty-cycle sweeps: generate, simulate, reconstruct and score a grid of α
//! values, writing per-point artifacts and a summary CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::DensityMatrix;
use crate::error::{Error, Result};
use crate::measurement::{counts_to_csv, derive_seed, simulate_counts, AcquisitionConfig, CountRecord};
use crate::metrics::{self, theory};
use crate::optics::{standard_projector_set, ProjectorSet};
use crate::states::{check_unit_interval, generate, mix_duty_cycle, NoiseParams, SourceConfig};
use crate::tomography::{bootstrap_errors, mle_reconstruct, MleOptions, ReconstructionResult};

const SWEEP_STREAM: u64 = 0x5eed;

pub const SWEEP_CSV_HEADER: &str = "run,alpha,visibility,tangle,purity,fidelity,\
visibility_err,tangle_err,purity_err,fidelity_err,\
visibility_theory,tangle_theory,purity_theory,converged,iterations";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub noise: NoiseParams,
    /// Output directory; the command line may override it.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
    /// Appends the two-retarder completely mixed run.
    #[serde(default)]
    pub include_completely_mixed: bool,
    /// Bootstrap resamples per point; 0 skips error bars.
    #[serde(default)]
    pub resamples: usize,
    #[serde(default)]
    pub mle: MleOptions,
}

impl SweepSpec {
    pub fn new(alphas: Vec<f64>) -> Self {
        SweepSpec {
            alphas,
            acquisition: AcquisitionConfig::default(),
            noise: NoiseParams::default(),
            outputs: None,
            include_completely_mixed: false,
            resamples: 0,
            mle: MleOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::config("alphas", "must not be empty"));
        }
        for (i, &a) in self.alphas.iter().enumerate() {
            check_unit_interval("alpha", a)?;
            if self.alphas[..i].contains(&a) {
                return Err(Error::config("alphas", format!("{a} listed twice")));
            }
        }
        if self.resamples == 1 {
            return Err(Error::config("resamples", "must be 0 or at least 2"));
        }
        self.acquisition.validate()?;
        self.noise.validate()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(text).map_err(|e| Error::parse("sweep spec", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep spec serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    /// Pump retarder only, duty cycle α.
    Lcr,
    /// Pump and signal retarders at half duty cycle.
    TwoVpr,
}

impl RunKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RunKind::Lcr => "lcr",
            RunKind::TwoVpr => "two_vpr",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub run: RunKind,
    pub alpha: f64,
    pub seed: u64,
    pub state: DensityMatrix,
    pub counts: Vec<CountRecord>,
    pub result: ReconstructionResult,
    /// Ideal `(visibility, tangle, purity)` of the noiseless target.
    pub theory: (f64, f64, f64),
}

impl SweepPoint {
    pub fn dir_name(&self) -> String {
        match self.run {
            RunKind::Lcr => format!("alpha_{}", self.alpha),
            RunKind::TwoVpr => "completely_mixed".to_string(),
        }
    }

    pub fn csv_row(&self) -> String {
        let m = &self.result.metrics;
        let e = self.result.metric_errors.as_ref();
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.run.as_str(),
            self.alpha,
            m.visibility,
            m.tangle,
            m.purity,
            opt(m.fidelity_to_target),
            opt(e.map(|e| e.visibility)),
            opt(e.map(|e| e.tangle)),
            opt(e.map(|e| e.purity)),
            opt(e.and_then(|e| e.fidelity)),
            self.theory.0,
            self.theory.1,
            self.theory.2,
            self.result.converged,
            self.result.iterations,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
}

impl SweepOutcome {
    pub fn csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            writeln!(out, "{}", p.csv_row()).expect("string write");
        }
        out
    }

    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.result.converged)
    }

    /// Writes `sweep.csv` and `<point>/{state.json,counts.csv,recon.json}`.
    pub fn write(&self, dir: &Path, set: &ProjectorSet) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for p in &self.points {
            let sub = dir.join(p.dir_name());
            fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            let state = serde_json::to_string_pretty(&p.state).expect("state serializes");
            write_file(&sub.join("state.json"), &state)?;
            write_file(&sub.join("counts.csv"), &counts_to_csv(&p.counts, set)?)?;
            write_file(&sub.join("recon.json"), &p.result.to_json_string())?;
        }
        write_file(&dir.join("sweep.csv"), &self.csv())
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

struct Job {
    run: RunKind,
    alpha: f64,
    index: usize,
}

fn run_point(spec: &SweepSpec, set: &ProjectorSet, job: &Job) -> Result<SweepPoint> {
    let mut config = SourceConfig::with_alpha(job.alpha);
    config.noise = spec.noise;
    let (target, description, theory) = match job.run {
        RunKind::Lcr => (
            mix_duty_cycle(job.alpha)?,
            format!("duty-cycle mixture alpha={}", job.alpha),
            (theory::visibility(job.alpha), theory::tangle(job.alpha), theory::purity(job.alpha)),
        ),
        RunKind::TwoVpr => {
            config.signal_dc = 0.5;
            (DensityMatrix::maximally_mixed(), "identity/4".to_string(), (0.0, 0.0, 0.25))
        }
    };
    let state = generate(&config)?;
    let seed = derive_seed(spec.acquisition.seed, &[SWEEP_STREAM, job.index as u64]);
    let acq = spec.acquisition.with_seed(seed);
    let counts = simulate_counts(&state, set, &acq)?;
    let mut result = mle_reconstruct(&counts, set, &spec.mle)?.with_target(&target, &description);
    if spec.resamples >= 2 {
        result.metric_errors = Some(bootstrap_errors(&result, set, &acq, spec.resamples, &spec.mle)?);
    }
    Ok(SweepPoint {
        run: job.run,
        alpha: job.alpha,
        seed,
        state,
        counts,
        result,
        theory,
    })
}

/// Runs every point. Point `i` draws from a seed derived from the master
/// seed and `i`, so serial and parallel runs agree bit for bit.
pub fn run_sweep(spec: &SweepSpec, parallel: bool) -> Result<SweepOutcome> {
    spec.validate()?;
    let set = standard_projector_set();
    let mut jobs: Vec<Job> = spec
        .alphas
        .iter()
        .enumerate()
        .map(|(index, &alpha)| Job {
            run: RunKind::Lcr,
            alpha,
            index,
        })
        .collect();
    if spec.include_completely_mixed {
        jobs.push(Job {
            run: RunKind::TwoVpr,
            alpha: 0.5,
            index: spec.alphas.len(),
        });
    }
    let with_context = |job: &Job| {
        run_point(spec, &set, job).map_err(|e| match e {
            Error::MismatchedData(m) => Error::MismatchedData(format!("alpha {}: {m}", job.alpha)),
            Error::InvalidState(m) => Error::InvalidState(format!("alpha {}: {m}", job.alpha)),
            other => other,
        })
    };
    let points = if parallel {
        jobs.par_iter().map(with_context).collect::<Result<Vec<_>>>()?
    } else {
        jobs.iter().map(with_context).collect::<Result<Vec<_>>>()?
    };
    Ok(SweepOutcome { points })
}

/// Closed-form `(visibility, tangle, purity)` columns agree with direct
/// evaluation on the ideal state; exposed for checks on emitted tables.
pub fn ideal_metrics(alpha: f64) -> Result<(f64, f64, f64)> {
    let rho = mix_duty_cycle(alpha)?;
    Ok((metrics::visibility(&rho)?, metrics::tangle(&rho), metrics::purity(&rho)))
}
