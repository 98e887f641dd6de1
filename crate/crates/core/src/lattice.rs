//! Chain geometry and coupling matrices.
//!
//! Site indices in this module's public API are 1-based, matching the usual
//! labelling of a chain from the sending site (1) to the receiving site (N).
//! Matrices themselves are stored 0-based.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponential dependence of the evanescent coupling rate on waveguide pitch:
/// `J(p) = A·exp(−k·p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingLaw {
    /// Coupling rate extrapolated to zero pitch, mm⁻¹.
    pub amplitude: f64,
    /// Decay constant, μm⁻¹.
    pub decay: f64,
}

impl Default for CouplingLaw {
    /// Law characterized for femtosecond-written borosilicate waveguides at 810 nm.
    fn default() -> Self {
        CouplingLaw {
            amplitude: 3.944,
            decay: 0.1899,
        }
    }
}

impl CouplingLaw {
    pub fn new(amplitude: f64, decay: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid("amplitude", format!("must be > 0, got {amplitude}")));
        }
        if !(decay > 0.0 && decay.is_finite()) {
            return Err(Error::invalid("decay", format!("must be > 0, got {decay}")));
        }
        Ok(CouplingLaw { amplitude, decay })
    }

    /// Coupling rate (mm⁻¹) at pitch `p` (μm).
    pub fn coupling_from_pitch(&self, p: f64) -> Result<f64> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::invalid("pitch", format!("must be >= 0, got {p}")));
        }
        Ok(self.amplitude * (-self.decay * p).exp())
    }

    /// Pitch (μm) that yields coupling `j` (mm⁻¹). Exact inverse of
    /// [`coupling_from_pitch`](Self::coupling_from_pitch).
    pub fn pitch_from_coupling(&self, j: f64) -> Result<f64> {
        if !(j > 0.0 && j <= self.amplitude) {
            return Err(Error::invalid(
                "coupling",
                format!("must lie in (0, {}], got {j}", self.amplitude),
            ));
        }
        Ok((self.amplitude / j).ln() / self.decay)
    }
}

/// One bond of the chain described either by its pitch or by its coupling.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BondInput {
    pub pitch_um: Option<f64>,
    pub coupling_per_mm: Option<f64>,
}

impl BondInput {
    pub fn pitch(p: f64) -> Self {
        BondInput {
            pitch_um: Some(p),
            coupling_per_mm: None,
        }
    }

    pub fn coupling(j: f64) -> Self {
        BondInput {
            pitch_um: None,
            coupling_per_mm: Some(j),
        }
    }
}

/// A boundary-controlled chain: `N` sites, interior bonds `J`, end bonds `Jw = αJ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_sites: usize,
    /// Interior coupling `J`, mm⁻¹.
    pub strong_coupling: f64,
    /// End-bond coupling `Jw`, mm⁻¹.
    pub weak_coupling: f64,
    /// Interior pitch, μm, when the chain was specified geometrically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_pitch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_pitch: Option<f64>,
}

impl ChainSpec {
    pub fn from_couplings(n_sites: usize, strong: f64, weak: f64) -> Result<Self> {
        let spec = ChainSpec {
            n_sites,
            strong_coupling: strong,
            weak_coupling: weak,
            strong_pitch: None,
            weak_pitch: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_pitches(
        n_sites: usize,
        strong_pitch: f64,
        weak_pitch: f64,
        law: &CouplingLaw,
    ) -> Result<Self> {
        let spec = ChainSpec {
            n_sites,
            strong_coupling: law.coupling_from_pitch(strong_pitch)?,
            weak_coupling: law.coupling_from_pitch(weak_pitch)?,
            strong_pitch: Some(strong_pitch),
            weak_pitch: Some(weak_pitch),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a spec from mixed pitch/coupling inputs. A direct coupling wins
    /// over a pitch given for the same bond; each such conflict is returned
    /// as a note.
    pub fn resolve(
        n_sites: usize,
        strong: BondInput,
        weak: BondInput,
        law: &CouplingLaw,
    ) -> Result<(Self, Vec<String>)> {
        let mut notes = Vec::new();
        let mut bond = |name: &'static str, input: BondInput| -> Result<(f64, Option<f64>)> {
            match (input.coupling_per_mm, input.pitch_um) {
                (Some(j), Some(p)) => {
                    let from_pitch = law.coupling_from_pitch(p)?;
                    notes.push(format!(
                        "{name}: both pitch ({p} um -> {from_pitch:.6} /mm) and coupling ({j} /mm) given; using the coupling"
                    ));
                    Ok((j, None))
                }
                (Some(j), None) => Ok((j, None)),
                (None, Some(p)) => Ok((law.coupling_from_pitch(p)?, Some(p))),
                (None, None) => Err(Error::invalid(name, "neither pitch nor coupling given")),
            }
        };
        let (strong_coupling, strong_pitch) = bond("strong bond", strong)?;
        let (weak_coupling, weak_pitch) = bond("weak bond", weak)?;
        let spec = ChainSpec {
            n_sites,
            strong_coupling,
            weak_coupling,
            strong_pitch,
            weak_pitch,
        };
        spec.validate()?;
        Ok((spec, notes))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 3 {
            return Err(Error::invalid(
                "n_sites",
                format!("a boundary-controlled chain needs at least 3 sites, got {}", self.n_sites),
            ));
        }
        if !(self.strong_coupling > 0.0 && self.strong_coupling.is_finite()) {
            return Err(Error::invalid(
                "strong_coupling",
                format!("must be > 0, got {}", self.strong_coupling),
            ));
        }
        if !(self.weak_coupling > 0.0 && self.weak_coupling <= self.strong_coupling) {
            return Err(Error::invalid(
                "weak_coupling",
                format!(
                    "must lie in (0, J = {}], got {}",
                    self.strong_coupling, self.weak_coupling
                ),
            ));
        }
        Ok(())
    }

    /// `α = Jw / J`.
    pub fn alpha(&self) -> f64 {
        self.weak_coupling / self.strong_coupling
    }

    /// Whether `α < 1/√N`, the regime where end-to-end transfer is efficient.
    /// Outside it the chain is still simulated.
    pub fn in_transfer_regime(&self) -> bool {
        self.alpha() < 1.0 / (self.n_sites as f64).sqrt()
    }

    /// Interior pitch, taken from the spec or inverted through `law`.
    pub fn strong_pitch_or(&self, law: &CouplingLaw) -> Result<f64> {
        match self.strong_pitch {
            Some(p) => Ok(p),
            None => law.pitch_from_coupling(self.strong_coupling),
        }
    }

    /// Same chain with a different end-bond coupling.
    pub fn with_weak_coupling(&self, weak: f64) -> Result<Self> {
        let spec = ChainSpec {
            weak_coupling: weak,
            weak_pitch: None,
            ..self.clone()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_strong_coupling(&self, strong: f64) -> Result<Self> {
        let spec = ChainSpec {
            strong_coupling: strong,
            strong_pitch: None,
            ..self.clone()
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// How next-nearest-neighbour couplings are added to the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NnnMode {
    /// Nearest-neighbour couplings only.
    #[default]
    None,
    /// `m·J` on every interior pair `(i, i+2)`, `i ∈ [2, N−3]`.
    Uniform,
    /// Bare next-nearest coupling `A·exp(−2k·p_s)` on every interior pair,
    /// attenuated by `m` only on the pair straddling the defect site.
    Shadowed,
}

impl FromStr for NnnMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NnnMode::None),
            "uniform" => Ok(NnnMode::Uniform),
            "shadowed" => Ok(NnnMode::Shadowed),
            other => Err(Error::invalid(
                "nnn_mode",
                format!("unknown mode {other:?} (expected none, uniform or shadowed)"),
            )),
        }
    }
}

impl fmt::Display for NnnMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NnnMode::None => "none",
            NnnMode::Uniform => "uniform",
            NnnMode::Shadowed => "shadowed",
        })
    }
}

/// A defect placed beside the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectSpec {
    /// 1-based chain site the island sits beside.
    pub attach_site: usize,
    /// Distance from the island to the chain axis, μm.
    pub distance: f64,
    /// Attenuation `m` of next-nearest couplings, in `[0, 1)`.
    pub nnn_attenuation: f64,
    pub nnn_mode: NnnMode,
    /// Whether the island is added as an extra lattice site.
    pub island: bool,
}

impl DefectSpec {
    /// Defect beside the central site of an `n_sites` chain.
    pub fn centered(n_sites: usize, distance: f64, nnn_attenuation: f64, nnn_mode: NnnMode) -> Self {
        DefectSpec {
            attach_site: n_sites.div_ceil(2),
            distance,
            nnn_attenuation,
            nnn_mode,
            island: false,
        }
    }

    pub fn with_island(mut self, island: bool) -> Self {
        self.island = island;
        self
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.nnn_attenuation) {
            return Err(Error::invalid(
                "nnn_attenuation",
                format!("m must lie in [0, 1), got {}", self.nnn_attenuation),
            ));
        }
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::invalid(
                "distance",
                format!("must be > 0, got {}", self.distance),
            ));
        }
        if self.attach_site < 2 || self.attach_site + 1 > n_sites {
            return Err(Error::invalid(
                "attach_site",
                format!("must lie in [2, {}], got {}", n_sites.saturating_sub(1), self.attach_site),
            ));
        }
        Ok(())
    }
}

/// Real symmetric coupling matrix (mm⁻¹): the single-excitation Hamiltonian
/// with zero on-site terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    inner: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn zeros(n: usize) -> Self {
        CouplingMatrix {
            inner: DMatrix::zeros(n, n),
        }
    }

    /// Validates exact symmetry, zero diagonal and non-negative couplings.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                actual: m.ncols(),
            });
        }
        let n = m.nrows();
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::invalid(
                    "coupling matrix",
                    format!("diagonal entry {} is {}, expected 0", i + 1, m[(i, i)]),
                ));
            }
            for j in (i + 1)..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::Asymmetric {
                        row: i + 1,
                        col: j + 1,
                        upper: m[(i, j)],
                        lower: m[(j, i)],
                    });
                }
                if !(m[(i, j)] >= 0.0 && m[(i, j)].is_finite()) {
                    return Err(Error::invalid(
                        "coupling matrix",
                        format!("entry ({}, {}) is {}", i + 1, j + 1, m[(i, j)]),
                    ));
                }
            }
        }
        Ok(CouplingMatrix { inner: m })
    }

    /// Chain with the given nearest-neighbour bonds; `bonds[i]` couples sites
    /// `i+1` and `i+2`.
    pub fn from_bonds(bonds: &[f64]) -> Result<Self> {
        let mut h = CouplingMatrix::zeros(bonds.len() + 1);
        for (i, &b) in bonds.iter().enumerate() {
            h.set_coupling(i + 1, i + 2, b)?;
        }
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    /// Coupling between 1-based sites `a` and `b`.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.inner[(a - 1, b - 1)]
    }

    /// Sets both mirrored entries for 1-based sites `a != b`.
    pub fn set_coupling(&mut self, a: usize, b: usize, value: f64) -> Result<()> {
        let n = self.dim();
        for s in [a, b] {
            if s == 0 || s > n {
                return Err(Error::SiteOutOfRange { index: s, len: n });
            }
        }
        if a == b {
            return Err(Error::invalid("coupling", "on-site terms are fixed at zero"));
        }
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::invalid("coupling", format!("must be >= 0, got {value}")));
        }
        self.inner[(a - 1, b - 1)] = value;
        self.inner[(b - 1, a - 1)] = value;
        Ok(())
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Number of nonzero entries, mirrored pairs counted twice.
    pub fn nonzero_count(&self) -> usize {
        self.inner.iter().filter(|x| **x != 0.0).count()
    }

    /// Uniform rescaling `H → cH`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if c.is_nan() || c <= 0.0 {
            return Err(Error::invalid("scale", format!("must be > 0, got {c}")));
        }
        Ok(CouplingMatrix {
            inner: &self.inner * c,
        })
    }
}

/// Nearest-neighbour boundary-controlled chain.
pub fn build_hamiltonian(spec: &ChainSpec) -> Result<CouplingMatrix> {
    spec.validate()?;
    let n = spec.n_sites;
    let bonds: Vec<f64> = (1..n)
        .map(|i| {
            if i == 1 || i == n - 1 {
                spec.weak_coupling
            } else {
                spec.strong_coupling
            }
        })
        .collect();
    CouplingMatrix::from_bonds(&bonds)
}

/// Chain with next-nearest-neighbour corrections selected by
/// `defect.nnn_mode`, and the island site appended when `defect.island` is set.
pub fn build_modified_hamiltonian(
    spec: &ChainSpec,
    defect: &DefectSpec,
    law: &CouplingLaw,
) -> Result<CouplingMatrix> {
    defect.validate(spec.n_sites)?;
    let mut h = build_hamiltonian(spec)?;
    let n = spec.n_sites;
    let m = defect.nnn_attenuation;
    // Interior next-nearest pairs (i, i+2) for i in [2, N-3].
    let interior = 2..n.saturating_sub(2);
    match defect.nnn_mode {
        NnnMode::None => {}
        NnnMode::Uniform => {
            if m > 0.0 {
                for i in interior {
                    h.set_coupling(i, i + 2, m * spec.strong_coupling)?;
                }
            }
        }
        NnnMode::Shadowed => {
            let bare = law.coupling_from_pitch(2.0 * spec.strong_pitch_or(law)?)?;
            let straddled = defect.attach_site - 1;
            for i in interior {
                let value = if i == straddled { m * bare } else { bare };
                h.set_coupling(i, i + 2, value)?;
            }
        }
    }
    if defect.island {
        h = attach_defect(&h, defect, law)?;
    }
    Ok(h)
}

/// Appends an island site coupled to `defect.attach_site` with
/// `J_d = A·exp(−k·d)`.
pub fn attach_defect(
    h: &CouplingMatrix,
    defect: &DefectSpec,
    law: &CouplingLaw,
) -> Result<CouplingMatrix> {
    let n = h.dim();
    if defect.attach_site == 0 || defect.attach_site > n {
        return Err(Error::SiteOutOfRange {
            index: defect.attach_site,
            len: n,
        });
    }
    let jd = law.coupling_from_pitch(defect.distance)?;
    let mut out = CouplingMatrix::zeros(n + 1);
    out.inner.view_mut((0, 0), (n, n)).copy_from(&h.inner);
    out.set_coupling(defect.attach_site, n + 1, jd)?;
    Ok(out)
}

/// Fully engineered chain with bonds `(λ/2)·√(i(N−i))`, which transfers
/// site 1 to site N perfectly at `z = π/λ`.
pub fn build_pst_hamiltonian(n_sites: usize, rate: f64) -> Result<CouplingMatrix> {
    if n_sites < 2 {
        return Err(Error::invalid("n_sites", format!("need at least 2 sites, got {n_sites}")));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid("rate", format!("must be > 0, got {rate}")));
    }
    let bonds: Vec<f64> = (1..n_sites)
        .map(|i| 0.5 * rate * ((i * (n_sites - i)) as f64).sqrt())
        .collect();
    CouplingMatrix::from_bonds(&bonds)
}

/// `J_eff = Jw/√(N−1)`.
pub fn effective_coupling(spec: &ChainSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.weak_coupling / ((spec.n_sites - 1) as f64).sqrt())
}

/// Two-site model coupling sender and receiver directly through `J_eff`.
pub fn effective_two_site_hamiltonian(spec: &ChainSpec) -> Result<CouplingMatrix> {
    CouplingMatrix::from_bonds(&[effective_coupling(spec)?])
}
