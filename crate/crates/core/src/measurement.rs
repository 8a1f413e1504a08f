//! Born-rule outcome probabilities and seeded Poisson coincidence counts.
//!
//! Every outcome draws from its own ChaCha stream whose seed is hashed from
//! `(master seed, setting, outcome)`, so results do not depend on the order
//! or thread in which settings are simulated.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::DensityMatrix;
use crate::error::{Error, Result};
use crate::metrics::IDLER_HWP_DEG;
use crate::optics::{analyzer_projectors, ProjectorSet, WaveplateSetting};

/// Stream tag separating visibility scans from tomography counts.
const SCAN_STREAM: u64 = 0x5ca4;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic child seed for the stream addressed by `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master), |acc, &p| {
        mix64(acc ^ mix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// One Poisson draw; a zero mean always yields zero.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as u64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    /// Mean number of detected pairs per analyzer setting.
    pub pairs_per_setting: f64,
    /// Flat background mean added to every outcome.
    #[serde(default)]
    pub accidental_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig {
            pairs_per_setting: 1e5,
            accidental_rate: 0.0,
            seed: 42,
        }
    }
}

impl AcquisitionConfig {
    pub fn new(pairs_per_setting: f64, seed: u64) -> Self {
        AcquisitionConfig {
            pairs_per_setting,
            accidental_rate: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pairs_per_setting > 0.0 && self.pairs_per_setting.is_finite()) {
            return Err(Error::config(
                "pairs_per_setting",
                format!("must be positive, got {}", self.pairs_per_setting),
            ));
        }
        if !(self.accidental_rate >= 0.0 && self.accidental_rate.is_finite()) {
            return Err(Error::config(
                "accidental_rate",
                format!("must be nonnegative, got {}", self.accidental_rate),
            ));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        AcquisitionConfig {
            seed,
            ..self.clone()
        }
    }
}

/// Coincidence counts of the four outcomes of one analyzer setting, in the
/// projector set's outcome order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting_index: usize,
    pub outcome_counts: [u64; 4],
    #[serde(default)]
    pub duration_tag: String,
}

impl CountRecord {
    pub fn total(&self) -> u64 {
        self.outcome_counts.iter().sum()
    }
}

/// `p_k = tr(ρ Π_k)` for the four outcomes of one setting.
pub fn born_probabilities(
    rho: &DensityMatrix,
    set: &ProjectorSet,
    setting_index: usize,
) -> Result<[f64; 4]> {
    let setting = set.setting(setting_index)?;
    let mut p = [0.0; 4];
    for (pk, o) in p.iter_mut().zip(&setting.outcomes) {
        *pk = rho.probability(&o.projector).max(0.0);
    }
    Ok(p)
}

fn duration_tag(acq: &AcquisitionConfig) -> String {
    format!("pairs={}", acq.pairs_per_setting)
}

/// Independent Poisson counts with mean `pairs·p_k + accidental_rate` for
/// every outcome of every setting.
pub fn simulate_counts(
    rho: &DensityMatrix,
    set: &ProjectorSet,
    acq: &AcquisitionConfig,
) -> Result<Vec<CountRecord>> {
    acq.validate()?;
    let tag = duration_tag(acq);
    (0..set.len())
        .into_par_iter()
        .map(|s| {
            let p = born_probabilities(rho, set, s)?;
            let mut counts = [0u64; 4];
            for (k, c) in counts.iter_mut().enumerate() {
                let mut rng = stream(acq.seed, &[s as u64, k as u64]);
                *c = sample_poisson(acq.pairs_per_setting * p[k] + acq.accidental_rate, &mut rng);
            }
            Ok(CountRecord {
                setting_index: s,
                outcome_counts: counts,
                duration_tag: tag.clone(),
            })
        })
        .collect()
}

/// Counts rounded from their noiseless means.
pub fn expected_counts(
    rho: &DensityMatrix,
    set: &ProjectorSet,
    acq: &AcquisitionConfig,
) -> Result<Vec<CountRecord>> {
    acq.validate()?;
    (0..set.len())
        .map(|s| {
            let p = born_probabilities(rho, set, s)?;
            Ok(CountRecord {
                setting_index: s,
                outcome_counts: p.map(|pk| (acq.pairs_per_setting * pk + acq.accidental_rate).round() as u64),
                duration_tag: duration_tag(acq),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub signal_hwp_deg: f64,
    pub count: u64,
}

/// Transmitted–transmitted coincidences as the signal HWP rotates, with the
/// idler HWP at −22.5° and both QWPs at 0°.
pub fn visibility_scan(
    rho: &DensityMatrix,
    hwp_angles_deg: &[f64],
    acq: &AcquisitionConfig,
) -> Result<Vec<ScanPoint>> {
    acq.validate()?;
    let idler = WaveplateSetting::new(0.0, IDLER_HWP_DEG);
    Ok(hwp_angles_deg
        .iter()
        .enumerate()
        .map(|(i, &angle)| {
            let [tt, ..] = analyzer_projectors(&WaveplateSetting::new(0.0, angle), &idler);
            let p = rho.probability(&tt.projector).max(0.0);
            let mut rng = stream(acq.seed, &[SCAN_STREAM, i as u64]);
            ScanPoint {
                signal_hwp_deg: angle,
                count: sample_poisson(acq.pairs_per_setting * p + acq.accidental_rate, &mut rng),
            }
        })
        .collect())
}

/// Least-squares fit of `offset + a·cos 4θ + b·sin 4θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinusoidFit {
    pub offset: f64,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

impl SinusoidFit {
    pub fn amplitude(&self) -> f64 {
        self.cos_coeff.hypot(self.sin_coeff)
    }

    pub fn visibility(&self) -> f64 {
        self.amplitude() / self.offset
    }

    pub fn eval(&self, angle_deg: f64) -> f64 {
        let x = 4.0 * angle_deg.to_radians();
        self.offset + self.cos_coeff * x.cos() + self.sin_coeff * x.sin()
    }
}

pub fn fit_sinusoid(points: &[ScanPoint]) -> Result<SinusoidFit> {
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for p in points {
        let x = 4.0 * p.signal_hwp_deg.to_radians();
        let row = [1.0, x.cos(), x.sin()];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * p.count as f64;
        }
    }
    let sol = solve3(ata, atb).ok_or_else(|| {
        Error::InvalidState("scan angles do not determine a 4θ sinusoid".into())
    })?;
    Ok(SinusoidFit {
        offset: sol[0],
        cos_coeff: sol[1],
        sin_coeff: sol[2],
    })
}

/// Gaussian elimination with partial pivoting on a 3×3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..3 {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = ((r + 1)..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Checks indices and that each setting appears at most once.
pub fn validate_records(records: &[CountRecord], set: &ProjectorSet) -> Result<()> {
    let mut seen = vec![false; set.len()];
    for r in records {
        if r.setting_index >= set.len() {
            return Err(Error::MismatchedData(format!(
                "setting index {} but projector set has {} settings",
                r.setting_index,
                set.len()
            )));
        }
        if std::mem::replace(&mut seen[r.setting_index], true) {
            return Err(Error::MismatchedData(format!(
                "setting {} appears twice",
                r.setting_index
            )));
        }
    }
    Ok(())
}

pub const COUNTS_CSV_HEADER: &str = "setting_index,outcome_label,count";

/// One row per outcome: `setting_index,outcome_label,count`.
pub fn counts_to_csv(records: &[CountRecord], set: &ProjectorSet) -> Result<String> {
    validate_records(records, set)?;
    let mut out = String::from(COUNTS_CSV_HEADER);
    out.push('\n');
    for r in records {
        let setting = set.setting(r.setting_index)?;
        for (o, n) in setting.outcomes.iter().zip(r.outcome_counts) {
            writeln!(out, "{},{},{}", r.setting_index, o.label, n).expect("string write");
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct CountRow {
    setting_index: usize,
    outcome_label: String,
    count: u64,
}

/// Parses the per-outcome CSV; every referenced setting must list all four
/// of its outcomes exactly once.
pub fn counts_from_csv(text: &str, set: &ProjectorSet) -> Result<Vec<CountRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse("counts CSV", e))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != COUNTS_CSV_HEADER.split(',').collect::<Vec<_>>() {
        return Err(Error::parse(
            "counts CSV",
            format!("header must be `{COUNTS_CSV_HEADER}`"),
        ));
    }
    let mut filled: Vec<Option<[Option<u64>; 4]>> = vec![None; set.len()];
    for row in reader.deserialize::<CountRow>() {
        let row = row.map_err(|e| Error::parse("counts CSV", e))?;
        if row.setting_index >= set.len() {
            return Err(Error::MismatchedData(format!(
                "setting index {} but projector set has {} settings",
                row.setting_index,
                set.len()
            )));
        }
        let k = set.outcome_index(row.setting_index, &row.outcome_label)?;
        let slot = &mut filled[row.setting_index].get_or_insert([None; 4])[k];
        if slot.replace(row.count).is_some() {
            return Err(Error::MismatchedData(format!(
                "outcome {} of setting {} listed twice",
                row.outcome_label, row.setting_index
            )));
        }
    }
    let mut records = Vec::new();
    for (s, f) in filled.into_iter().enumerate() {
        let Some(f) = f else { continue };
        let mut counts = [0u64; 4];
        for (k, c) in f.iter().enumerate() {
            counts[k] = c.ok_or_else(|| {
                Error::MismatchedData(format!("setting {s} is missing outcome {k}"))
            })?;
        }
        records.push(CountRecord {
            setting_index: s,
            outcome_counts: counts,
            duration_tag: String::new(),
        });
    }
    Ok(records)
}

pub fn counts_to_json(records: &[CountRecord]) -> String {
    serde_json::to_string_pretty(records).expect("count records serialize")
}

pub fn counts_from_json(text: &str, set: &ProjectorSet) -> Result<Vec<CountRecord>> {
    let records: Vec<CountRecord> =
        serde_json::from_str(text).map_err(|e| Error::parse("counts JSON", e))?;
    validate_records(&records, set)?;
    Ok(records)
}

/// Reads counts as JSON when the file ends in `.json`, CSV otherwise.
pub fn read_counts(path: &Path, set: &ProjectorSet) -> Result<Vec<CountRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        counts_from_json(&text, set)
    } else {
        counts_from_csv(&text, set)
    }
}
