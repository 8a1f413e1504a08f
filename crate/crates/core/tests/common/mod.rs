//! Shared test helpers: a brute-force likelihood search over diagonal states.
#![allow(dead_code)]

use bellmix::algebra::ComplexMatrix;
use bellmix::measurement::CountRecord;
use bellmix::optics::{AnalyzerBasis, ProjectorSet};
use bellmix::DensityMatrix;

/// Sums counts over the orbit of the local phase flips `Z⊗𝟙` and `𝟙⊗Z`.
///
/// A phase flip swaps the two ports of a D/A or R/L arm and fixes an H/V arm,
/// so the symmetrized likelihood is invariant under both flips. Being concave,
/// it then has a maximizer that is diagonal in the HV basis.
pub fn phase_flip_symmetrize(records: &[CountRecord], set: &ProjectorSet) -> Vec<CountRecord> {
    records
        .iter()
        .map(|r| {
            let s = set.setting(r.setting_index).unwrap();
            let flips = |b: Option<AnalyzerBasis>| {
                if b == Some(AnalyzerBasis::HorizontalVertical) {
                    vec![0]
                } else {
                    vec![0, 1]
                }
            };
            let (fs, fi) = (flips(s.signal_basis), flips(s.idler_basis));
            let mut out = [0u64; 4];
            for (k, slot) in out.iter_mut().enumerate() {
                for &a in &fs {
                    for &b in &fi {
                        *slot += r.outcome_counts[k ^ (a << 1) ^ b];
                    }
                }
            }
            CountRecord {
                setting_index: r.setting_index,
                outcome_counts: out,
                duration_tag: r.duration_tag.clone(),
            }
        })
        .collect()
}

/// Likelihood terms `(n, diag Π)`; for diagonal `ρ = diag(d)`,
/// `p = Σᵢ dᵢ Πᵢᵢ`.
fn diagonal_terms(records: &[CountRecord], set: &ProjectorSet) -> Vec<(f64, [f64; 4])> {
    let mut terms = Vec::new();
    for r in records {
        let s = set.setting(r.setting_index).unwrap();
        for (o, &n) in s.outcomes.iter().zip(&r.outcome_counts) {
            if n > 0 {
                let w = [0, 1, 2, 3].map(|i| o.projector.get(i, i).re);
                terms.push((n as f64, w));
            }
        }
    }
    terms
}

fn diag_log_likelihood(terms: &[(f64, [f64; 4])], d: &[f64; 4]) -> f64 {
    terms
        .iter()
        .map(|(n, w)| n * (0..4).map(|i| d[i] * w[i]).sum::<f64>().max(1e-300).ln())
        .sum()
}

/// Maximizes the likelihood over `diag(d)` on a coarse simplex grid followed
/// by repeated local grid refinement.
pub fn brute_force_diagonal_mle(records: &[CountRecord], set: &ProjectorSet) -> [f64; 4] {
    let terms = diagonal_terms(records, set);
    let mut best = [0.25; 4];
    let mut best_ll = f64::NEG_INFINITY;
    let steps = 50;
    for i in 0..=steps {
        for j in 0..=(steps - i) {
            for k in 0..=(steps - i - j) {
                let d = [
                    i as f64 / steps as f64,
                    j as f64 / steps as f64,
                    k as f64 / steps as f64,
                    (steps - i - j - k) as f64 / steps as f64,
                ];
                let ll = diag_log_likelihood(&terms, &d);
                if ll > best_ll {
                    best_ll = ll;
                    best = d;
                }
            }
        }
    }
    let mut h = 1.0 / steps as f64;
    for _ in 0..10 {
        h /= 4.0;
        let centre = best;
        for a in -8..=8 {
            for b in -8..=8 {
                for c in -8..=8 {
                    let d0 = centre[0] + a as f64 * h;
                    let d1 = centre[1] + b as f64 * h;
                    let d2 = centre[2] + c as f64 * h;
                    let d3 = 1.0 - d0 - d1 - d2;
                    if d0 < 0.0 || d1 < 0.0 || d2 < 0.0 || d3 < 0.0 {
                        continue;
                    }
                    let d = [d0, d1, d2, d3];
                    let ll = diag_log_likelihood(&terms, &d);
                    if ll > best_ll {
                        best_ll = ll;
                        best = d;
                    }
                }
            }
        }
    }
    best
}

pub fn diagonal_state(d: &[f64; 4]) -> DensityMatrix {
    DensityMatrix::new(ComplexMatrix::from_real_diagonal(d)).unwrap()
}
