//! Jones-calculus model of the two-arm polarization analyzer and the
//! nine-setting, 36-outcome tomography projector set.
//!
//! Each arm is a half-wave plate, then a quarter-wave plate, then a PBS whose
//! transmitted port passes H and reflected port passes V. Outcome projectors
//! are the PBS port states propagated back through the plates.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, ONE, ZERO};
use crate::error::{Error, Result};

const PROJECTOR_TOL: f64 = 1e-10;

/// `R(θ) · diag(1, e^{−iδ}) · R(−θ)` for a retarder with fast axis at
/// `angle_deg` from horizontal.
pub fn waveplate_jones(angle_deg: f64, retardance: f64) -> ComplexMatrix {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let rot = |s: f64| {
        ComplexMatrix::from_rows(&[
            vec![C64::new(c, 0.0), C64::new(-s, 0.0)],
            vec![C64::new(s, 0.0), C64::new(c, 0.0)],
        ])
        .expect("2x2")
    };
    let retarder = ComplexMatrix::from_rows(&[
        vec![ONE, ZERO],
        vec![ZERO, C64::from_polar(1.0, -retardance)],
    ])
    .expect("2x2");
    &(&rot(s) * &retarder) * &rot(-s)
}

pub fn half_wave_plate(angle_deg: f64) -> ComplexMatrix {
    waveplate_jones(angle_deg, PI)
}

pub fn quarter_wave_plate(angle_deg: f64) -> ComplexMatrix {
    waveplate_jones(angle_deg, FRAC_PI_2)
}

/// Waveplate orientations in one analyzer arm, degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveplateSetting {
    pub qwp_angle: f64,
    pub hwp_angle: f64,
}

impl WaveplateSetting {
    pub fn new(qwp_angle: f64, hwp_angle: f64) -> Self {
        WaveplateSetting {
            qwp_angle,
            hwp_angle,
        }
    }

    /// Jones matrix of the arm before the PBS (HWP first in the beam).
    pub fn jones(&self) -> ComplexMatrix {
        &quarter_wave_plate(self.qwp_angle) * &half_wave_plate(self.hwp_angle)
    }

    /// Single-photon states routed to the transmitted and reflected ports.
    pub fn port_states(&self) -> [[C64; 2]; 2] {
        let back = self.jones().adjoint();
        let t = back.apply(&[ONE, ZERO]);
        let r = back.apply(&[ZERO, ONE]);
        [[t[0], t[1]], [r[0], r[1]]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    #[serde(rename = "T")]
    Transmitted,
    #[serde(rename = "R")]
    Reflected,
}

impl Port {
    pub const BOTH: [Port; 2] = [Port::Transmitted, Port::Reflected];

    fn letter(self) -> char {
        match self {
            Port::Transmitted => 'T',
            Port::Reflected => 'R',
        }
    }
}

/// Single-arm measurement bases used by the standard set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnalyzerBasis {
    #[serde(rename = "HV")]
    HorizontalVertical,
    #[serde(rename = "DA")]
    Diagonal,
    #[serde(rename = "RL")]
    Circular,
}

impl AnalyzerBasis {
    pub const ALL: [AnalyzerBasis; 3] = [
        AnalyzerBasis::HorizontalVertical,
        AnalyzerBasis::Diagonal,
        AnalyzerBasis::Circular,
    ];

    pub fn waveplates(self) -> WaveplateSetting {
        match self {
            AnalyzerBasis::HorizontalVertical => WaveplateSetting::new(0.0, 0.0),
            AnalyzerBasis::Diagonal => WaveplateSetting::new(0.0, 22.5),
            AnalyzerBasis::Circular => WaveplateSetting::new(45.0, 0.0),
        }
    }
}

impl fmt::Display for AnalyzerBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnalyzerBasis::HorizontalVertical => "HV",
            AnalyzerBasis::Diagonal => "DA",
            AnalyzerBasis::Circular => "RL",
        })
    }
}

/// One coincidence outcome: which port fired in each arm, and its projector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub label: String,
    pub signal_port: Port,
    pub idler_port: Port,
    pub projector: ComplexMatrix,
}

/// Outcome labels in projector order within every setting.
pub const OUTCOME_LABELS: [&str; 4] = ["TT", "TR", "RT", "RR"];

pub fn outcome_label(signal: Port, idler: Port) -> String {
    [signal.letter(), idler.letter()].iter().collect()
}

/// The four projectors of one analyzer setting, ordered TT, TR, RT, RR.
pub fn analyzer_projectors(signal: &WaveplateSetting, idler: &WaveplateSetting) -> [Outcome; 4] {
    let s = signal.port_states();
    let i = idler.port_states();
    let mut k = 0;
    [0, 1, 2, 3].map(|_| {
        let (sp, ip) = (Port::BOTH[k / 2], Port::BOTH[k % 2]);
        let (a, b) = (s[k / 2], i[k % 2]);
        k += 1;
        let ket = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
        Outcome {
            label: outcome_label(sp, ip),
            signal_port: sp,
            idler_port: ip,
            projector: ComplexMatrix::outer(&ket, &ket),
        }
    })
}

/// A pair of arm settings and its four outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub index: usize,
    /// Basis names, when the setting comes from the standard table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_basis: Option<AnalyzerBasis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idler_basis: Option<AnalyzerBasis>,
    pub signal: WaveplateSetting,
    pub idler: WaveplateSetting,
    pub outcomes: Vec<Outcome>,
}

impl AnalyzerSetting {
    pub fn name(&self) -> String {
        match (self.signal_basis, self.idler_basis) {
            (Some(s), Some(i)) => format!("{s}/{i}"),
            _ => format!("setting {}", self.index),
        }
    }
}

/// Complete tomography measurement: settings, each a four-outcome PBS pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProjectorSetJson", into = "ProjectorSetJson")]
pub struct ProjectorSet {
    settings: Vec<AnalyzerSetting>,
}

#[derive(Serialize, Deserialize)]
struct ProjectorSetJson {
    settings: Vec<AnalyzerSetting>,
}

impl From<ProjectorSet> for ProjectorSetJson {
    fn from(p: ProjectorSet) -> Self {
        ProjectorSetJson {
            settings: p.settings,
        }
    }
}

impl TryFrom<ProjectorSetJson> for ProjectorSet {
    type Error = Error;

    fn try_from(j: ProjectorSetJson) -> Result<Self> {
        ProjectorSet::new(j.settings)
    }
}

impl ProjectorSet {
    /// Validates completeness per setting and that every projector is a
    /// trace-one Hermitian idempotent.
    pub fn new(settings: Vec<AnalyzerSetting>) -> Result<Self> {
        if settings.is_empty() {
            return Err(Error::InvalidState("projector set has no settings".into()));
        }
        let id = ComplexMatrix::identity(4);
        for (k, s) in settings.iter().enumerate() {
            let bad = |msg: String| Err(Error::InvalidState(format!("setting {k}: {msg}")));
            if s.index != k {
                return bad(format!("index field is {}", s.index));
            }
            if s.outcomes.len() != 4 {
                return bad(format!("{} outcomes, expected 4", s.outcomes.len()));
            }
            let mut sum = ComplexMatrix::zeros(4);
            for o in &s.outcomes {
                let p = &o.projector;
                if p.dim() != 4 {
                    return bad(format!("outcome {} is not 4x4", o.label));
                }
                let idem = (p * p).max_abs_diff(p);
                let herm = p.hermiticity_error();
                let tr = (p.trace() - ONE).norm();
                if idem > PROJECTOR_TOL || herm > PROJECTOR_TOL || tr > PROJECTOR_TOL {
                    return bad(format!("outcome {} is not a rank-1 projector", o.label));
                }
                sum = &sum + p;
            }
            if sum.max_abs_diff(&id) > PROJECTOR_TOL {
                return bad("outcomes do not sum to identity".into());
            }
            let mut labels: Vec<&str> = s.outcomes.iter().map(|o| o.label.as_str()).collect();
            labels.sort_unstable();
            labels.dedup();
            if labels.len() != 4 {
                return bad("duplicate outcome labels".into());
            }
        }
        Ok(ProjectorSet { settings })
    }

    pub fn settings(&self) -> &[AnalyzerSetting] {
        &self.settings
    }

    pub fn setting(&self, index: usize) -> Result<&AnalyzerSetting> {
        self.settings.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.settings.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    /// All projectors in (setting, outcome) order.
    pub fn projectors(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.settings
            .iter()
            .flat_map(|s| s.outcomes.iter().map(|o| &o.projector))
    }

    pub fn outcome_index(&self, setting: usize, label: &str) -> Result<usize> {
        let s = self.setting(setting)?;
        s.outcomes
            .iter()
            .position(|o| o.label == label)
            .ok_or_else(|| {
                Error::MismatchedData(format!("setting {setting} has no outcome `{label}`"))
            })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("projector set serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("projector set", e))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

/// All nine pairs of {H/V, D/A, R/L} on signal × idler, 36 outcomes.
pub fn standard_projector_set() -> ProjectorSet {
    let mut settings = Vec::with_capacity(9);
    for sb in AnalyzerBasis::ALL {
        for ib in AnalyzerBasis::ALL {
            let (signal, idler) = (sb.waveplates(), ib.waveplates());
            settings.push(AnalyzerSetting {
                index: settings.len(),
                signal_basis: Some(sb),
                idler_basis: Some(ib),
                signal,
                idler,
                outcomes: analyzer_projectors(&signal, &idler).to_vec(),
            });
        }
    }
    ProjectorSet::new(settings).expect("standard set is valid")
}
