//! Figures of merit for two-photon states: purity, tangle (squared
//! concurrence), ±45° correlation visibility and fidelity.

use serde::{Deserialize, Serialize};

use crate::algebra::{singular_values, trace_norm, ComplexMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::optics::{analyzer_projectors, WaveplateSetting};

/// Signal HWP angles giving N(+45°) and N(−45°); the idler HWP sits at
/// [`IDLER_HWP_DEG`] and both QWPs at 0°.
pub const SIGNAL_HWP_PLUS_DEG: f64 = 22.5;
pub const SIGNAL_HWP_MINUS_DEG: f64 = -22.5;
pub const IDLER_HWP_DEG: f64 = -22.5;

/// `tr(ρ²)`
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().frobenius_sq()
}

/// `Y ⊗ Y`, real in the HV basis.
fn spin_flip() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4);
    m.set(0, 3, (-1.0).into());
    m.set(1, 2, 1.0.into());
    m.set(2, 1, 1.0.into());
    m.set(3, 0, (-1.0).into());
    m
}

/// Wootters concurrence `max(0, λ1 − λ2 − λ3 − λ4)`.
///
/// The `λi` are the square roots of the eigenvalues of `ρ(Y⊗Y)ρ*(Y⊗Y)`,
/// equivalently the singular values of `√ρ (Y⊗Y) (√ρ)*`, which is what is
/// computed here.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let s = rho.sqrt();
    let m = &(&s * &spin_flip()) * &s.conj();
    let l = singular_values(&m);
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

pub fn tangle(rho: &DensityMatrix) -> f64 {
    concurrence(rho).powi(2)
}

/// Noiseless transmitted–transmitted coincidence probability with the signal
/// HWP at `signal_hwp_deg`, idler HWP at −22.5° and QWPs at 0°.
pub fn correlation_rate(rho: &DensityMatrix, signal_hwp_deg: f64) -> f64 {
    let signal = WaveplateSetting::new(0.0, signal_hwp_deg);
    let idler = WaveplateSetting::new(0.0, IDLER_HWP_DEG);
    let [tt, ..] = analyzer_projectors(&signal, &idler);
    rho.probability(&tt.projector).max(0.0)
}

/// `|N₊ − N₋| / (N₊ + N₋)` from the ±45° correlation rates.
pub fn visibility_from_rates(n_plus: f64, n_minus: f64) -> Result<f64> {
    let total = n_plus + n_minus;
    if !(total >= 1e-15) {
        return Err(Error::DegenerateDenominator(total));
    }
    Ok(((n_plus - n_minus) / total).abs())
}

pub fn visibility(rho: &DensityMatrix) -> Result<f64> {
    visibility_from_rates(
        correlation_rate(rho, SIGNAL_HWP_PLUS_DEG),
        correlation_rate(rho, SIGNAL_HWP_MINUS_DEG),
    )
}

/// Uhlmann fidelity `tr|√ρ √σ|` (not squared).
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let f = trace_norm(&(&rho.sqrt() * &sigma.sqrt()));
    f.min(1.0)
}

/// Closed-form predictions for the duty-cycle family
/// `(1−α)|Φ−⟩⟨Φ−| + α|Φ+⟩⟨Φ+|`.
pub mod theory {
    pub fn purity(alpha: f64) -> f64 {
        2.0 * (alpha - 0.5).powi(2) + 0.5
    }

    pub fn tangle(alpha: f64) -> f64 {
        (1.0 - 2.0 * alpha).powi(2)
    }

    pub fn visibility(alpha: f64) -> f64 {
        (1.0 - 2.0 * alpha).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub purity: f64,
    pub tangle: f64,
    pub visibility: f64,
    /// Absent when no target state was supplied.
    pub fidelity_to_target: Option<f64>,
    pub target_description: Option<String>,
}

pub const METRICS_CSV_HEADER: &str = "alpha,purity,tangle,visibility,fidelity";

impl MetricsReport {
    /// Visibility falls back to 0 when both ±45° rates vanish.
    pub fn evaluate(rho: &DensityMatrix, target: Option<(&DensityMatrix, &str)>) -> Self {
        MetricsReport {
            purity: purity(rho),
            tangle: tangle(rho),
            visibility: visibility(rho).unwrap_or(0.0),
            fidelity_to_target: target.map(|(sigma, _)| fidelity(rho, sigma)),
            target_description: target.map(|(_, d)| d.to_string()),
        }
    }

    pub fn with_target(mut self, rho: &DensityMatrix, sigma: &DensityMatrix, description: &str) -> Self {
        self.fidelity_to_target = Some(fidelity(rho, sigma));
        self.target_description = Some(description.to_string());
        self
    }

    /// `alpha,purity,tangle,visibility,fidelity`; fidelity empty if absent.
    pub fn csv_row(&self, alpha: f64) -> String {
        format!(
            "{alpha},{},{},{},{}",
            self.purity,
            self.tangle,
            self.visibility,
            self.fidelity_to_target.map(|f| f.to_string()).unwrap_or_default()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bell_state, generate, mix_duty_cycle, BellState, SourceConfig};

    fn alphas() -> impl Iterator<Item = f64> {
        (0..=100).map(|i| i as f64 / 100.0)
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&mix_duty_cycle(0.5).unwrap()) - 0.5).abs() < 1e-15);
        for b in BellState::ALL {
            assert!((purity(&bell_state(b).density()) - 1.0).abs() < 1e-15);
        }
        assert!((purity(&DensityMatrix::maximally_mixed()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tangle_examples() {
        for b in BellState::ALL {
            assert!((tangle(&bell_state(b).density()) - 1.0).abs() < 1e-12, "{b}");
        }
        assert!(tangle(&mix_duty_cycle(0.5).unwrap()).abs() < 1e-12);
        assert!(tangle(&DensityMatrix::maximally_mixed()).abs() < 1e-12);
        for i in 0..=10 {
            let alpha = i as f64 / 10.0;
            let t = tangle(&mix_duty_cycle(alpha).unwrap());
            assert!((t - theory::tangle(alpha)).abs() < 1e-10, "alpha {alpha}: {t}");
        }
    }

    #[test]
    fn tangle_of_product_state_is_zero() {
        let mut m = ComplexMatrix::zeros(4);
        m.set(0, 0, 1.0.into());
        assert!(tangle(&DensityMatrix::new(m).unwrap()) < 1e-14);
    }

    #[test]
    fn visibility_examples() {
        assert!((visibility(&mix_duty_cycle(0.0).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!(visibility(&mix_duty_cycle(0.5).unwrap()).unwrap().abs() < 1e-12);
        assert!((visibility(&mix_duty_cycle(0.25).unwrap()).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(visibility_from_rates(0.0, 0.0), Err(Error::DegenerateDenominator(_))));
    }

    #[test]
    fn phi_minus_correlations_are_diagonal_antidiagonal() {
        let rho = bell_state(BellState::PhiMinus).density();
        // Signal D, idler A: maximal. Signal A, idler A: none.
        assert!((correlation_rate(&rho, 22.5) - 0.5).abs() < 1e-12);
        assert!(correlation_rate(&rho, -22.5).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let q = mix_duty_cycle(0.25).unwrap();
        assert!((fidelity(&q, &q) - 1.0).abs() < 1e-12);
        let pp = bell_state(BellState::PhiPlus).density();
        let pm = bell_state(BellState::PhiMinus).density();
        assert!(fidelity(&pp, &pm).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed();
        assert!((fidelity(&mixed, &pp) - 0.5).abs() < 1e-12);
        assert!((fidelity(&pp, &mixed) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_for_duty_cycle_family() {
        for alpha in alphas() {
            let rho = mix_duty_cycle(alpha).unwrap();
            let p = purity(&rho);
            let t = tangle(&rho);
            let v = visibility(&rho).unwrap();
            assert!((p - theory::purity(alpha)).abs() <= 1e-12);
            assert!((t - theory::tangle(alpha)).abs() <= 1e-10, "alpha {alpha} tangle {t}");
            assert!((v - theory::visibility(alpha)).abs() <= 1e-10);
            assert!((v * v - t).abs() <= 1e-9);
        }
    }

    #[test]
    fn completely_mixed_config() {
        let rho = generate(&SourceConfig {
            alpha: 0.5,
            signal_dc: 0.5,
            ..SourceConfig::default()
        })
        .unwrap();
        let r = MetricsReport::evaluate(&rho, Some((&DensityMatrix::maximally_mixed(), "1/4")));
        assert!((r.purity - 0.25).abs() < 1e-12);
        assert!(r.tangle.abs() < 1e-12);
        assert!((r.fidelity_to_target.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_csv_and_json() {
        let rho = mix_duty_cycle(0.5).unwrap();
        let r = MetricsReport::evaluate(&rho, None);
        assert_eq!(r.csv_row(0.5), "0.5,0.5,0,0,");
        assert_eq!(METRICS_CSV_HEADER.split(',').count(), r.csv_row(0.5).split(',').count());
        let json = serde_json::to_string(&r).unwrap();
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
