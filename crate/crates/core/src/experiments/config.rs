//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "n_sites": 23,
//!   "strong_pitch_um": 5.0,
//!   "weak_pitch_um": 16.0,
//!   "coupling_law": { "amplitude_per_mm": 3.944, "decay_per_um": 0.1899 },
//!   "nnn": { "mode": "uniform", "m": 0.05 },
//!   "defect": { "enabled": false, "attach_site": 12, "distance_um": 5.0 },
//!   "sweep": { "parameter": "nnn_m", "values": { "start": 0.0, "stop": 0.06, "step": 0.005 } },
//!   "search_window_mm": [10.0, 80.0]
//! }
//! ```
//!
//! Unknown keys are rejected. Either the pitch or the coupling of each bond
//! must be given; a coupling wins when both are present.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BondInput, ChainSpec, CouplingLaw, DefectSpec, NnnMode};
use crate::observables::PeakRule;

use super::{linspace_step, SweepParameter, SweepPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub n_sites: usize,
    #[serde(default)]
    pub strong_pitch_um: Option<f64>,
    #[serde(default)]
    pub strong_coupling_per_mm: Option<f64>,
    #[serde(default)]
    pub weak_pitch_um: Option<f64>,
    #[serde(default)]
    pub weak_coupling_per_mm: Option<f64>,
    #[serde(default)]
    pub coupling_law: Option<RawLaw>,
    #[serde(default)]
    pub nnn: Option<RawNnn>,
    #[serde(default)]
    pub defect: Option<RawDefect>,
    #[serde(default)]
    pub sweep: Option<RawSweep>,
    #[serde(default)]
    pub search_window_mm: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawLaw {
    pub amplitude_per_mm: f64,
    pub decay_per_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNnn {
    pub mode: NnnMode,
    #[serde(default)]
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDefect {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub attach_site: Option<usize>,
    #[serde(default)]
    pub distance_um: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub parameter: SweepParameter,
    pub values: SweepValues,
}

/// Either an explicit list or an inclusive stepped range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValues {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl SweepValues {
    pub fn expand(&self) -> Result<Vec<f64>> {
        match self {
            SweepValues::List(v) => Ok(v.clone()),
            SweepValues::Range { start, stop, step } => linspace_step(*start, *stop, *step),
        }
    }
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: ChainSpec,
    pub law: CouplingLaw,
    /// Present when a next-nearest-neighbour mode or an island is configured.
    pub defect: Option<DefectSpec>,
    pub plan: Option<SweepPlan>,
    pub window: Option<(f64, f64)>,
    /// Non-fatal remarks, such as a bond given both as pitch and coupling.
    pub notes: Vec<String>,
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}

/// Parses config text; `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let config_err = |message: String| Error::Config {
        path: origin.to_string(),
        message,
    };

    let law = match &raw.coupling_law {
        Some(l) => CouplingLaw::new(l.amplitude_per_mm, l.decay_per_um),
        None => Ok(CouplingLaw::default()),
    }
    .map_err(|e| config_err(format!("coupling_law: {e}")))?;

    let strong = BondInput {
        pitch_um: raw.strong_pitch_um,
        coupling_per_mm: raw.strong_coupling_per_mm,
    };
    let weak = BondInput {
        pitch_um: raw.weak_pitch_um,
        coupling_per_mm: raw.weak_coupling_per_mm,
    };
    let (spec, notes) = ChainSpec::resolve(raw.n_sites, strong, weak, &law)
        .map_err(|e| config_err(e.to_string()))?;

    let nnn = raw.nnn.clone().unwrap_or(RawNnn {
        mode: NnnMode::None,
        m: 0.0,
    });
    let island = raw.defect.as_ref().is_some_and(|d| d.enabled);
    let defect = if nnn.mode != NnnMode::None || raw.defect.is_some() {
        let rd = raw.defect.clone().unwrap_or(RawDefect {
            enabled: false,
            attach_site: None,
            distance_um: None,
        });
        let mut d = DefectSpec::centered(
            spec.n_sites,
            rd.distance_um.or(raw.strong_pitch_um).unwrap_or(5.0),
            nnn.m,
            nnn.mode,
        )
        .with_island(island);
        if let Some(site) = rd.attach_site {
            d.attach_site = site;
        }
        d.validate(spec.n_sites)
            .map_err(|e| config_err(format!("defect: {e}")))?;
        Some(d)
    } else {
        None
    };

    let window = match raw.search_window_mm {
        Some([lo, hi]) if lo >= 0.0 && hi > lo => Some((lo, hi)),
        Some([lo, hi]) => {
            return Err(config_err(format!(
                "search_window_mm: need 0 <= lo < hi, got [{lo}, {hi}]"
            )))
        }
        None => None,
    };

    let plan = match &raw.sweep {
        Some(s) => {
            let values = s
                .values
                .expand()
                .map_err(|e| config_err(format!("sweep.values: {e}")))?;
            let plan = SweepPlan {
                base: spec.clone(),
                law,
                defect: defect.clone(),
                parameter: s.parameter,
                values,
                window,
                rule: PeakRule::default(),
            };
            plan.validate()
                .map_err(|e| config_err(format!("sweep: {e}")))?;
            Some(plan)
        }
        None => None,
    };

    Ok(ExperimentConfig {
        spec,
        law,
        defect,
        plan,
        window,
        notes,
    })
}
