//! Maximum-likelihood state reconstruction from tomography counts and
//! parametric-bootstrap error bars.
//!
//! The estimator is the diluted fixed-point iteration
//! `ρ ← (𝟙+εR)ρ(𝟙+εR) / tr(…)` with `R(ρ) = Σⱼ nⱼ/(N pⱼ(ρ)) Πⱼ`, started at
//! `𝟙/4`. The dilution `ε` is halved whenever a step would lower the
//! likelihood, so accepted iterates are monotone.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::measurement::{derive_seed, simulate_counts, validate_records, AcquisitionConfig, CountRecord};
use crate::metrics::MetricsReport;
use crate::optics::ProjectorSet;

/// Floor applied to model probabilities inside logs and ratios.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

const BOOTSTRAP_STREAM: u64 = 0xb007;
const MIN_DILUTION: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step raises the log-likelihood by less than
    /// `tolerance · |log L|`.
    pub tolerance: f64,
    /// Initial dilution `ε`.
    pub dilution: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_iterations: 10_000,
            tolerance: 1e-10,
            dilution: 1.0,
        }
    }
}

/// Flattened (projector, count) terms shared by the likelihood and the
/// iteration.
struct Dataset<'a> {
    terms: Vec<(&'a ComplexMatrix, f64)>,
    total: f64,
}

impl<'a> Dataset<'a> {
    fn new(records: &[CountRecord], set: &'a ProjectorSet) -> Result<Self> {
        validate_records(records, set)?;
        let mut terms = Vec::with_capacity(4 * records.len());
        for r in records {
            let setting = set.setting(r.setting_index)?;
            for (o, &n) in setting.outcomes.iter().zip(&r.outcome_counts) {
                if n > 0 {
                    terms.push((&o.projector, n as f64));
                }
            }
        }
        let total = terms.iter().map(|(_, n)| n).sum();
        Ok(Dataset { terms, total })
    }

    fn log_likelihood(&self, rho: &ComplexMatrix) -> f64 {
        self.terms
            .iter()
            .map(|(p, n)| n * rho.trace_product(p).re.max(PROBABILITY_FLOOR).ln())
            .sum()
    }

    /// `R(ρ)` and the number of outcomes with counts but floored probability.
    fn r_operator(&self, rho: &ComplexMatrix) -> (ComplexMatrix, usize) {
        let mut r = ComplexMatrix::zeros(4);
        let mut floored = 0;
        for (p, n) in &self.terms {
            let prob = rho.trace_product(p).re;
            if prob < PROBABILITY_FLOOR {
                floored += 1;
            }
            let w = n / (self.total * prob.max(PROBABILITY_FLOOR));
            r = &r + &p.scale_re(w);
        }
        (r, floored)
    }
}

/// `Σⱼ nⱼ log pⱼ(ρ)` over outcomes with nonzero counts.
pub fn log_likelihood(rho: &DensityMatrix, records: &[CountRecord], set: &ProjectorSet) -> Result<f64> {
    Ok(Dataset::new(records, set)?.log_likelihood(rho.matrix()))
}

/// Per-metric bootstrap standard deviations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricErrors {
    pub purity: f64,
    pub tangle: f64,
    pub visibility: f64,
    pub fidelity: Option<f64>,
    pub resamples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub rho_hat: DensityMatrix,
    pub log_likelihood: f64,
    /// Log-likelihood after each accepted iteration, starting with `𝟙/4`.
    pub log_likelihood_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_dilution: f64,
    /// Outcomes with counts whose model probability hit the floor at the
    /// last iteration; nonzero signals a data/model mismatch.
    pub floored_outcomes: usize,
    pub metrics: MetricsReport,
    #[serde(default)]
    pub metric_errors: Option<MetricErrors>,
    /// Reference state for `metrics.fidelity_to_target`.
    #[serde(default)]
    pub target: Option<DensityMatrix>,
}

impl ReconstructionResult {
    /// Attaches a target state and recomputes the fidelity.
    pub fn with_target(mut self, target: &DensityMatrix, description: &str) -> Self {
        self.metrics = self.metrics.with_target(&self.rho_hat, target, description);
        self.target = Some(target.clone());
        self
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("reconstruction result", e))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

pub fn mle_reconstruct(
    records: &[CountRecord],
    set: &ProjectorSet,
    options: &MleOptions,
) -> Result<ReconstructionResult> {
    mle_reconstruct_observed(records, set, options, |_, _, _| {})
}

/// As [`mle_reconstruct`], calling `observe(iteration, ρ, log L)` after every
/// accepted iterate.
pub fn mle_reconstruct_observed(
    records: &[CountRecord],
    set: &ProjectorSet,
    options: &MleOptions,
    mut observe: impl FnMut(usize, &DensityMatrix, f64),
) -> Result<ReconstructionResult> {
    if options.max_iterations == 0 || !(options.tolerance >= 0.0) || !(options.dilution > 0.0) {
        return Err(Error::config(
            "mle options",
            "need max_iterations > 0, tolerance >= 0 and dilution > 0",
        ));
    }
    let data = Dataset::new(records, set)?;
    if records.len() != set.len() {
        return Err(Error::MismatchedData(format!(
            "counts cover {} of {} settings",
            records.len(),
            set.len()
        )));
    }
    if data.total <= 0.0 {
        return Err(Error::NoCounts);
    }

    let id = ComplexMatrix::identity(4);
    let mut rho = DensityMatrix::maximally_mixed().into_matrix();
    let mut ll = data.log_likelihood(&rho);
    let mut trace = vec![ll];
    let mut eps = options.dilution;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let (r, _) = data.r_operator(&rho);
        let a = &id + &r.scale_re(eps);
        let stepped = &(&a * &rho) * &a;
        let candidate = stepped.scale_re(1.0 / stepped.trace().re).hermitian_part();
        let cand_ll = data.log_likelihood(&candidate);
        let gain = cand_ll - ll;
        let threshold = options.tolerance * ll.abs();

        if gain >= 0.0 {
            rho = candidate;
            ll = cand_ll;
            trace.push(ll);
            observe(iterations, &DensityMatrix::from_matrix_unchecked(rho.clone()), ll);
            if gain <= threshold {
                converged = true;
                break;
            }
        } else if -gain <= threshold {
            // Already at the maximum to working precision.
            converged = true;
            break;
        } else {
            eps *= 0.5;
            if eps < MIN_DILUTION {
                break;
            }
        }
    }

    let (_, floored_outcomes) = data.r_operator(&rho);
    let rho_hat = crate::algebra::nearest_physical(&rho)?;
    let metrics = MetricsReport::evaluate(&rho_hat, None);
    Ok(ReconstructionResult {
        rho_hat,
        log_likelihood: ll,
        log_likelihood_trace: trace,
        iterations,
        converged,
        final_dilution: eps,
        floored_outcomes,
        metrics,
        metric_errors: None,
        target: None,
    })
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Parametric bootstrap: resimulate counts from `result.rho_hat` with `acq`,
/// reconstruct each resample and take the sample standard deviation of every
/// metric. Resample `r` uses a seed derived from `(acq.seed, r)`, so the
/// output does not depend on thread scheduling.
pub fn bootstrap_errors(
    result: &ReconstructionResult,
    set: &ProjectorSet,
    acq: &AcquisitionConfig,
    resamples: usize,
    options: &MleOptions,
) -> Result<MetricErrors> {
    if resamples < 2 {
        return Err(Error::config("resamples", format!("need at least 2, got {resamples}")));
    }
    acq.validate()?;
    let reports: Vec<MetricsReport> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(acq.seed, &[BOOTSTRAP_STREAM, r as u64]);
            let counts = simulate_counts(&result.rho_hat, set, &acq.with_seed(seed))?;
            let rec = mle_reconstruct(&counts, set, options)?;
            let target = result.target.as_ref().map(|t| (t, ""));
            Ok(MetricsReport::evaluate(&rec.rho_hat, target))
        })
        .collect::<Result<_>>()?;

    let column = |f: fn(&MetricsReport) -> f64| sample_std(&reports.iter().map(f).collect::<Vec<_>>());
    Ok(MetricErrors {
        purity: column(|m| m.purity),
        tangle: column(|m| m.tangle),
        visibility: column(|m| m.visibility),
        fidelity: result
            .target
            .as_ref()
            .map(|_| column(|m| m.fidelity_to_target.unwrap_or(0.0))),
        resamples,
    })
}

/// Acquisition settings matching an observed data set: mean pairs per
/// setting taken from the recorded totals.
pub fn acquisition_matching(records: &[CountRecord], seed: u64) -> Result<AcquisitionConfig> {
    let total: u64 = records.iter().map(CountRecord::total).sum();
    if records.is_empty() || total == 0 {
        return Err(Error::NoCounts);
    }
    Ok(AcquisitionConfig::new(total as f64 / records.len() as f64, seed))
}
