//! States produced by the two-crystal SPDC source with variable polarization
//! rotators (VPRs) in the pump and signal beams.
//!
//! A pump-VPR duty cycle `alpha` is the fraction of time the pump sits at
//! +45° (emitting `|Φ+⟩`) rather than −45° (emitting `|Φ−⟩`), so `alpha = 0`
//! is the pure `|Φ−⟩` source. A second VPR in the signal arm flips H↔V on the signal
//! photon for a fraction `signal_dc` of the time, turning `Φ∓` into `Ψ∓`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, DensityMatrix, PureState, ONE, ZERO};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        })
    }
}

impl FromStr for BellState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi+" | "phiplus" => Ok(BellState::PhiPlus),
            "phi-" | "phiminus" => Ok(BellState::PhiMinus),
            "psi+" | "psiplus" => Ok(BellState::PsiPlus),
            "psi-" | "psiminus" => Ok(BellState::PsiMinus),
            _ => Err(Error::parse("Bell state", format!("unknown name `{s}`"))),
        }
    }
}

pub fn bell_state(kind: BellState) -> PureState {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let amps = match kind {
        BellState::PhiPlus => [h, ZERO, ZERO, h],
        BellState::PhiMinus => [h, ZERO, ZERO, -h],
        BellState::PsiPlus => [ZERO, h, h, ZERO],
        BellState::PsiMinus => [ZERO, h, -h, ZERO],
    };
    PureState::new(amps).expect("Bell states are normalized")
}

/// `β|HH⟩ − e^{iφ}γ|VV⟩`, the state emitted for a pump split into amplitudes
/// `β` (crystal producing HH) and `γ` (crystal producing VV) with relative
/// phase `φ`.
pub fn pump_state(phi: f64, beta: C64, gamma: C64) -> Result<PureState> {
    let vv = -C64::from_polar(1.0, phi) * gamma;
    PureState::new([beta, ZERO, ZERO, vv])
}

/// Diagonal ½ on HH and VV with coherence `α − ½` between them, i.e.
/// `(1−α)|Φ−⟩⟨Φ−| + α|Φ+⟩⟨Φ+|`.
pub fn mix_duty_cycle(alpha: f64) -> Result<DensityMatrix> {
    check_unit_interval("alpha", alpha)?;
    let mut m = ComplexMatrix::from_real_diagonal(&[0.5, 0.0, 0.0, 0.5]);
    let coherence = C64::new(alpha - 0.5, 0.0);
    m.set(0, 3, coherence);
    m.set(3, 0, coherence);
    Ok(DensityMatrix::from_matrix_unchecked(m))
}

/// `X ⊗ 𝟙`: H↔V on the signal photon.
pub fn signal_flip() -> ComplexMatrix {
    let mut x = ComplexMatrix::zeros(2);
    x.set(0, 1, ONE);
    x.set(1, 0, ONE);
    x.kron(&ComplexMatrix::identity(2))
}

/// Signal-arm VPR at half-wave (`true`) or zero retardance (`false`).
pub fn apply_signal_rotator(state: &DensityMatrix, half_wave: bool) -> DensityMatrix {
    if half_wave {
        state.transformed(&signal_flip())
    } else {
        state.clone()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    /// Fractional damping of every off-diagonal element (the two-crystal coherence).
    #[serde(default)]
    pub dephasing: f64,
    /// Weight of `𝟙/4` admixed after dephasing.
    #[serde(default)]
    pub depolarizing: f64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        check_unit_interval("dephasing", self.dephasing)?;
        check_unit_interval("depolarizing", self.depolarizing)
    }

    pub fn is_noiseless(&self) -> bool {
        self.dephasing == 0.0 && self.depolarizing == 0.0
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.validate()?;
        let keep = 1.0 - self.dephasing;
        let m = rho.matrix();
        let dephased = ComplexMatrix::from_fn(4, |r, c| {
            if r == c {
                m.get(r, c)
            } else {
                m.get(r, c) * keep
            }
        });
        let p = self.depolarizing;
        let out = &dephased.scale_re(1.0 - p) + &ComplexMatrix::identity(4).scale_re(p / 4.0);
        Ok(DensityMatrix::from_matrix_unchecked(out))
    }
}

/// Pump and VPR settings defining one generated state.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceConfig {
    /// Pump-VPR duty cycle, the weight of the pump-flipped (`Φ+`-type) branch.
    pub alpha: f64,
    /// Pump relative phase, radians.
    pub phi: f64,
    pub beta: C64,
    pub gamma: C64,
    /// Signal-VPR duty cycle.
    pub signal_dc: f64,
    pub noise: NoiseParams,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            alpha: 0.0,
            phi: 0.0,
            beta: C64::new(FRAC_1_SQRT_2, 0.0),
            gamma: C64::new(FRAC_1_SQRT_2, 0.0),
            signal_dc: 0.0,
            noise: NoiseParams::default(),
        }
    }
}

impl SourceConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        SourceConfig {
            alpha,
            ..SourceConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("alpha", self.alpha)?;
        check_unit_interval("signal_dc", self.signal_dc)?;
        if !self.phi.is_finite() {
            return Err(Error::config("phi", "must be finite"));
        }
        let norm_sq = self.beta.norm_sqr() + self.gamma.norm_sqr();
        if !((norm_sq - 1.0).abs() <= PureState::NORM_TOL) {
            return Err(Error::config(
                "beta/gamma",
                format!("|beta|^2 + |gamma|^2 = {norm_sq}, expected 1"),
            ));
        }
        self.noise.validate()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: SourceConfigJson =
            serde_json::from_str(text).map_err(|e| Error::parse("source config", e))?;
        let config = SourceConfig::from(raw);
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&SourceConfigJson::from(self)).expect("plain struct")
    }
}

/// Flat on-disk form; every field optional.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceConfigJson {
    alpha: Option<f64>,
    phi: Option<f64>,
    beta_re: Option<f64>,
    beta_im: Option<f64>,
    gamma_re: Option<f64>,
    gamma_im: Option<f64>,
    signal_dc: Option<f64>,
    dephasing: Option<f64>,
    depolarizing: Option<f64>,
}

impl From<SourceConfigJson> for SourceConfig {
    fn from(j: SourceConfigJson) -> Self {
        let d = SourceConfig::default();
        let complex = |re: Option<f64>, im: Option<f64>, default: C64| match (re, im) {
            (None, None) => default,
            (re, im) => C64::new(re.unwrap_or(0.0), im.unwrap_or(0.0)),
        };
        SourceConfig {
            alpha: j.alpha.unwrap_or(d.alpha),
            phi: j.phi.unwrap_or(d.phi),
            beta: complex(j.beta_re, j.beta_im, d.beta),
            gamma: complex(j.gamma_re, j.gamma_im, d.gamma),
            signal_dc: j.signal_dc.unwrap_or(d.signal_dc),
            noise: NoiseParams {
                dephasing: j.dephasing.unwrap_or(0.0),
                depolarizing: j.depolarizing.unwrap_or(0.0),
            },
        }
    }
}

impl From<&SourceConfig> for SourceConfigJson {
    fn from(c: &SourceConfig) -> Self {
        SourceConfigJson {
            alpha: Some(c.alpha),
            phi: Some(c.phi),
            beta_re: Some(c.beta.re),
            beta_im: Some(c.beta.im),
            gamma_re: Some(c.gamma.re),
            gamma_im: Some(c.gamma.im),
            signal_dc: Some(c.signal_dc),
            dephasing: Some(c.noise.dephasing),
            depolarizing: Some(c.noise.depolarizing),
        }
    }
}

/// Duty-cycle average of the four pump/signal branches, followed by noise.
///
/// Pump and signal VPRs switch independently, so branch weights factor:
/// `(1−α)(1−s)` for the `Φ−`-type pump state, `α(1−s)` for its pump-flipped
/// partner, and `(1−α)s`, `αs` for the same two after the signal flip.
pub fn generate(config: &SourceConfig) -> Result<DensityMatrix> {
    config.validate()?;
    let minus = pump_state(config.phi, config.beta, config.gamma)?.density();
    // +45° pump flips the sign of the VV amplitude.
    let plus = pump_state(config.phi + std::f64::consts::PI, config.beta, config.gamma)?.density();
    let (a, s) = (config.alpha, config.signal_dc);

    let branches = [
        ((1.0 - a) * (1.0 - s), minus.clone()),
        (a * (1.0 - s), plus.clone()),
        ((1.0 - a) * s, apply_signal_rotator(&minus, true)),
        (a * s, apply_signal_rotator(&plus, true)),
    ];
    let mut acc = ComplexMatrix::zeros(4);
    for (w, rho) in &branches {
        if *w > 0.0 {
            acc = &acc + &rho.matrix().scale_re(*w);
        }
    }
    let mixed = DensityMatrix::from_matrix_unchecked(acc);
    if config.noise.is_noiseless() {
        Ok(mixed)
    } else {
        config.noise.apply(&mixed)
    }
}

pub(crate) fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            min: 0.0,
            max: 1.0,
        })
    }
}
