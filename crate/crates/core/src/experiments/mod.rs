//! Scripted parameter studies over chain designs.
//!
//! A [`SweepPlan`] varies one parameter of a base chain, locates the
//! receiving-time peak at every value and collects the results into a
//! [`SweepResult`]. Points are independent and evaluated in parallel; the
//! output is sorted by parameter value so it does not depend on scheduling.

mod config;
mod fit;
mod io;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    build_hamiltonian, build_modified_hamiltonian, ChainSpec, CouplingLaw, DefectSpec, NnnMode,
};
use crate::observables::{default_window, find_peak, PeakRule, TransferPeak};
use crate::propagator::Propagator;

pub use config::{load_config, parse_config, ExperimentConfig, SweepValues};
pub use fit::{linear_fit, FitResult};
pub use io::{
    read_field_csv, read_sweep_csv, write_field_csv, write_sweep_csv, write_sweep_metadata,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// End-bond pitch, μm.
    WeakPitch,
    /// Interior pitch, μm.
    StrongPitch,
    /// Next-nearest-neighbour attenuation `m`.
    NnnM,
    /// Island-to-chain distance, μm.
    DefectDistance,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::WeakPitch => "weak_pitch",
            SweepParameter::StrongPitch => "strong_pitch",
            SweepParameter::NnnM => "nnn_m",
            SweepParameter::DefectDistance => "defect_distance",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weak_pitch" => Ok(SweepParameter::WeakPitch),
            "strong_pitch" => Ok(SweepParameter::StrongPitch),
            "nnn_m" => Ok(SweepParameter::NnnM),
            "defect_distance" => Ok(SweepParameter::DefectDistance),
            other => Err(Error::invalid("parameter", format!("unknown sweep parameter {other:?}"))),
        }
    }
}

/// One parameter study.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub base: ChainSpec,
    pub law: CouplingLaw,
    /// Defect applied at every point. `NnnM` and `DefectDistance` sweeps fall
    /// back to a centred uniform-mode defect when absent.
    pub defect: Option<DefectSpec>,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Peak search window, mm. Defaults to [`default_window`] of each point.
    pub window: Option<(f64, f64)>,
    pub rule: PeakRule,
}

impl SweepPlan {
    pub fn new(base: ChainSpec, parameter: SweepParameter, values: Vec<f64>) -> Self {
        SweepPlan {
            base,
            law: CouplingLaw::default(),
            defect: None,
            parameter,
            values,
            window: None,
            rule: PeakRule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("values", "sweep value list is empty"));
        }
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::invalid("values", "sweep values must be strictly monotone"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "sweep values must be finite"));
        }
        self.base.validate()
    }

    fn defect_or_default(&self) -> DefectSpec {
        self.defect.clone().unwrap_or_else(|| {
            DefectSpec::centered(
                self.base.n_sites,
                self.base.strong_pitch.unwrap_or(5.0),
                0.0,
                NnnMode::Uniform,
            )
        })
    }

    /// Chain and defect for one swept value.
    pub fn point_setup(&self, value: f64) -> Result<(ChainSpec, Option<DefectSpec>)> {
        let mut spec = self.base.clone();
        let mut defect = self.defect.clone();
        match self.parameter {
            SweepParameter::WeakPitch => {
                spec = spec.with_weak_coupling(self.law.coupling_from_pitch(value)?)?;
                spec.weak_pitch = Some(value);
            }
            SweepParameter::StrongPitch => {
                spec = spec.with_strong_coupling(self.law.coupling_from_pitch(value)?)?;
                spec.strong_pitch = Some(value);
            }
            SweepParameter::NnnM => {
                let mut d = self.defect_or_default();
                d.nnn_attenuation = value;
                defect = Some(d);
            }
            SweepParameter::DefectDistance => {
                let mut d = self.defect_or_default();
                d.distance = value;
                d.island = true;
                defect = Some(d);
            }
        }
        Ok((spec, defect))
    }

    fn evaluate(&self, value: f64) -> Result<SweepPoint> {
        let (spec, defect) = self.point_setup(value)?;
        let h = match &defect {
            Some(d) => build_modified_hamiltonian(&spec, d, &self.law)?,
            None => build_hamiltonian(&spec)?,
        };
        let window = match self.window {
            Some(w) => w,
            None => default_window(&spec)?,
        };
        // The island, when present, is the last site; efficiency is read at
        // the original receiving site.
        let TransferPeak { tau, eta } =
            find_peak(&Propagator::new(&h)?, spec.n_sites, window, self.rule)?;
        Ok(SweepPoint { value, tau, eta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    /// Receiving time `τ*`, mm.
    pub tau: f64,
    /// Peak efficiency `η*`.
    pub eta: f64,
}

/// Provenance written next to a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub spec: ChainSpec,
    pub law: CouplingLaw,
    pub defect: Option<DefectSpec>,
    pub window_mm: Option<(f64, f64)>,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    /// Sorted by ascending parameter value.
    pub points: Vec<SweepPoint>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn taus(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.tau).collect()
    }

    pub fn etas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.eta).collect()
    }

    pub fn point_at(&self, value: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| (p.value - value).abs() < 1e-12)
    }
}

pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let mut points = plan
        .values
        .par_iter()
        .map(|&v| plan.evaluate(v))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(SweepResult {
        parameter: plan.parameter,
        points,
        metadata: SweepMetadata {
            spec: plan.base.clone(),
            law: plan.law,
            defect: plan.defect.clone(),
            window_mm: plan.window,
            tool_version: crate::VERSION.to_string(),
        },
    })
}

/// Receiving-time study against `1/α` at fixed interior coupling.
#[derive(Debug, Clone)]
pub struct AlphaSweep {
    pub result: SweepResult,
    /// Fit of `τ*` against `1/α = J/Jw`.
    pub fit: FitResult,
    /// Interior coupling implied by the slope, `π√(N−2)/(2·slope)`.
    pub implied_strong_coupling: f64,
}

/// Fits `τ*` against `1/α` for a sweep over the end-bond pitch.
pub fn fit_alpha_sweep(result: SweepResult) -> Result<AlphaSweep> {
    if result.parameter != SweepParameter::WeakPitch {
        return Err(Error::invalid("parameter", "alpha fit needs a weak_pitch sweep"));
    }
    let spec = &result.metadata.spec;
    let law = result.metadata.law;
    let points = result
        .points
        .iter()
        .map(|p| Ok((spec.strong_coupling / law.coupling_from_pitch(p.value)?, p.tau)))
        .collect::<Result<Vec<_>>>()?;
    let fit = linear_fit(&points)?;
    let implied = PI * ((spec.n_sites - 2) as f64).sqrt() / (2.0 * fit.slope);
    Ok(AlphaSweep {
        result,
        fit,
        implied_strong_coupling: implied,
    })
}

/// Sweeps the end-bond pitch at fixed `J` on an `n_sites` chain and fits `τ*(1/α)`.
pub fn sweep_alpha(
    n_sites: usize,
    strong_coupling: f64,
    weak_pitches: &[f64],
    law: &CouplingLaw,
) -> Result<AlphaSweep> {
    let first = weak_pitches
        .first()
        .ok_or_else(|| Error::invalid("values", "no weak pitches given"))?;
    let base = ChainSpec::from_couplings(n_sites, strong_coupling, law.coupling_from_pitch(*first)?)?;
    let plan = SweepPlan {
        law: *law,
        ..SweepPlan::new(base, SweepParameter::WeakPitch, weak_pitches.to_vec())
    };
    fit_alpha_sweep(run_sweep(&plan)?)
}

/// Sweeps the interior pitch at fixed end-bond coupling.
pub fn sweep_strong_coupling(
    n_sites: usize,
    weak_coupling: f64,
    strong_pitches: &[f64],
    law: &CouplingLaw,
) -> Result<SweepResult> {
    let first = strong_pitches
        .first()
        .ok_or_else(|| Error::invalid("values", "no strong pitches given"))?;
    let base = ChainSpec::from_couplings(n_sites, law.coupling_from_pitch(*first)?, weak_coupling)?;
    let plan = SweepPlan {
        law: *law,
        ..SweepPlan::new(base, SweepParameter::StrongPitch, strong_pitches.to_vec())
    };
    run_sweep(&plan)
}

/// Sweeps the next-nearest-neighbour attenuation `m` (no island).
pub fn sweep_m(
    spec: &ChainSpec,
    m_values: &[f64],
    mode: NnnMode,
    law: &CouplingLaw,
) -> Result<SweepResult> {
    let defect = DefectSpec::centered(spec.n_sites, spec.strong_pitch.unwrap_or(5.0), 0.0, mode);
    let plan = SweepPlan {
        law: *law,
        defect: Some(defect),
        ..SweepPlan::new(spec.clone(), SweepParameter::NnnM, m_values.to_vec())
    };
    run_sweep(&plan)
}

/// Sweeps the island distance at fixed `m` (uniform mode), island attached
/// beside the central site.
pub fn sweep_defect_distance(
    spec: &ChainSpec,
    m: f64,
    distances: &[f64],
    law: &CouplingLaw,
) -> Result<SweepResult> {
    let defect = DefectSpec::centered(spec.n_sites, 5.0, m, NnnMode::Uniform).with_island(true);
    let plan = SweepPlan {
        law: *law,
        defect: Some(defect),
        ..SweepPlan::new(spec.clone(), SweepParameter::DefectDistance, distances.to_vec())
    };
    run_sweep(&plan)
}

/// `start, start+step, …` up to `stop` inclusive (within 1e−9 of a step).
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) || start.is_nan() || stop.is_nan() || stop < start {
        return Err(Error::invalid(
            "range",
            format!("need step > 0 and stop >= start, got {start}..{stop} step {step}"),
        ));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}
