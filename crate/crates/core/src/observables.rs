//! Transfer efficiency, receiving-time search and closed-form estimates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, build_hamiltonian, ChainSpec, CouplingMatrix};
use crate::propagator::Propagator;

/// Number of coarse-grid intervals used by the peak search.
pub const COARSE_INTERVALS: usize = 2000;

/// Relative precision of the refined peak position.
pub const PEAK_REL_TOL: f64 = 1e-7;

/// Populations below this are round-off, not peaks. Near `z = 0` the
/// receiving site of a long chain sits at ~1e−30 and its noise has spurious
/// local maxima.
pub const PEAK_FLOOR: f64 = 1e-12;

/// Location and height of a transfer peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferPeak {
    /// Propagation length of the peak, mm.
    pub tau: f64,
    /// Receiving-site population at `tau`.
    pub eta: f64,
}

/// Which maximum of the receiving-site population counts as the peak.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PeakRule {
    /// First interior local maximum of the coarse scan.
    #[default]
    FirstLocalMaximum,
    /// Highest point of the first revival lobe. The lobe ends where the
    /// population first drops below `drop_fraction` times its running maximum,
    /// so several humps inside one revival are merged.
    RevivalLobe { drop_fraction: f64 },
}

/// Population of 1-based `receiving_site` after propagating `z` from site 1.
pub fn transfer_efficiency(h: &CouplingMatrix, receiving_site: usize, z: f64) -> Result<f64> {
    Propagator::new(h)?.transfer_probability(1, receiving_site, z)
}

/// Searches `window` (mm) for the receiving-time peak of an excitation injected at site 1.
pub fn find_optimal_receiving_time(
    h: &CouplingMatrix,
    receiving_site: usize,
    window: (f64, f64),
) -> Result<TransferPeak> {
    find_peak(&Propagator::new(h)?, receiving_site, window, PeakRule::default())
}

/// Peak search on a prepared propagator.
///
/// A coarse scan with [`COARSE_INTERVALS`] steps locates the peak according
/// to `rule`; three-point parabolic iteration then refines it to
/// [`PEAK_REL_TOL`]. Fails with [`Error::PeakAtBoundary`] when the scan finds
/// no interior maximum.
pub fn find_peak(
    prop: &Propagator,
    receiving_site: usize,
    window: (f64, f64),
    rule: PeakRule,
) -> Result<TransferPeak> {
    let (lo, hi) = window;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid(
            "window",
            format!("must satisfy 0 <= lo < hi, got ({lo}, {hi})"),
        ));
    }
    if receiving_site == 0 || receiving_site > prop.dim() {
        return Err(Error::SiteOutOfRange {
            index: receiving_site,
            len: prop.dim(),
        });
    }
    let f = |z: f64| -> f64 {
        prop.transfer_amplitude(1, receiving_site, z)
            .map(|a| a.norm_sqr())
            .unwrap_or(0.0)
    };

    let step = (hi - lo) / COARSE_INTERVALS as f64;
    let zs: Vec<f64> = (0..=COARSE_INTERVALS).map(|k| lo + k as f64 * step).collect();
    let ps: Vec<f64> = zs.iter().map(|&z| f(z)).collect();
    let last = ps.len() - 1;

    let k = match rule {
        PeakRule::FirstLocalMaximum => {
            (1..last).find(|&k| ps[k] > PEAK_FLOOR && ps[k] > ps[k - 1] && ps[k] >= ps[k + 1])
        }
        PeakRule::RevivalLobe { drop_fraction } => {
            let mut best = 0;
            for k in 1..=last {
                if ps[k] > ps[best] {
                    best = k;
                } else if ps[k] < drop_fraction * ps[best] {
                    break;
                }
            }
            (best > 0 && best < last && ps[best] > PEAK_FLOOR).then_some(best)
        }
    };
    let k = k.ok_or(Error::PeakAtBoundary { lo, hi })?;

    let tau = refine_maximum(&f, (zs[k - 1], zs[k], zs[k + 1]), (ps[k - 1], ps[k], ps[k + 1]));
    Ok(TransferPeak {
        tau,
        eta: f(tau).clamp(0.0, 1.0),
    })
}

/// Successive parabolic interpolation on a bracket `a < b < c` with
/// `f(b) >= f(a), f(c)`.
fn refine_maximum(f: &impl Fn(f64) -> f64, bracket: (f64, f64, f64), values: (f64, f64, f64)) -> f64 {
    let (mut a, mut b, mut c) = bracket;
    let (mut fa, mut fb, mut fc) = values;
    for _ in 0..200 {
        let tol = PEAK_REL_TOL * b.abs().max(1e-12);
        if c - a <= tol {
            break;
        }
        let num = (b - a).powi(2) * (fb - fc) - (b - c).powi(2) * (fb - fa);
        let den = (b - a) * (fb - fc) - (b - c) * (fb - fa);
        let mut x = if den != 0.0 { b - 0.5 * num / den } else { f64::NAN };
        if !(x > a && x < c) {
            x = if b - a > c - b { b - 0.381_966 * (b - a) } else { b + 0.381_966 * (c - b) };
        }
        let min_step = 0.25 * tol;
        if (x - b).abs() < min_step {
            x = if b - a > c - b { b - min_step } else { b + min_step };
        }
        let fx = f(x);
        if x > b {
            if fx >= fb {
                (a, fa) = (b, fb);
                (b, fb) = (x, fx);
            } else {
                (c, fc) = (x, fx);
            }
        } else if fx >= fb {
            (c, fc) = (b, fb);
            (b, fb) = (x, fx);
        } else {
            (a, fa) = (x, fx);
        }
    }
    b
}

/// Closed-form receiving time `π√(N−2)/(2·Jw)`, mm.
pub fn analytic_receiving_time(spec: &ChainSpec) -> Result<f64> {
    spec.validate()?;
    Ok(PI * ((spec.n_sites - 2) as f64).sqrt() / (2.0 * spec.weak_coupling))
}

/// `J_eff = Jw/√(N−1)`, mm⁻¹.
pub fn effective_coupling(spec: &ChainSpec) -> Result<f64> {
    lattice::effective_coupling(spec)
}

/// Search window used when none is configured: `(0.2·τ, 3·τ)` around the
/// closed-form receiving time.
pub fn default_window(spec: &ChainSpec) -> Result<(f64, f64)> {
    let tau = analytic_receiving_time(spec)?;
    Ok((0.2 * tau, 3.0 * tau))
}

/// Peak of the plain chain using the default window and rule.
pub fn chain_peak(spec: &ChainSpec) -> Result<TransferPeak> {
    let h = build_hamiltonian(spec)?;
    find_optimal_receiving_time(&h, spec.n_sites, default_window(spec)?)
}

/// Grid size for RMS comparisons.
const RABI_POINTS: usize = 2001;

/// RMS of `p_N(z) − sin²(j_eff·z)` over a uniform grid on `[0, z_max]`,
/// where `p_N` is the population of the last site of `h` after injection at site 1.
pub fn rabi_deviation(h: &CouplingMatrix, j_eff: f64, z_max: f64) -> Result<f64> {
    if !(z_max > 0.0 && z_max.is_finite()) {
        return Err(Error::invalid("z_max", format!("must be > 0, got {z_max}")));
    }
    let prop = Propagator::new(h)?;
    let n = h.dim();
    let step = z_max / (RABI_POINTS - 1) as f64;
    let mut sum = 0.0;
    for k in 0..RABI_POINTS {
        let z = k as f64 * step;
        let full = prop.transfer_probability(1, n, z)?;
        let model = (j_eff * z).sin().powi(2);
        sum += (full - model).powi(2);
    }
    Ok((sum / RABI_POINTS as f64).sqrt())
}

/// Compares the full chain against the effective two-site Rabi model.
pub fn rabi_comparison(spec: &ChainSpec, z_max: f64) -> Result<f64> {
    let h = build_hamiltonian(spec)?;
    rabi_deviation(&h, effective_coupling(spec)?, z_max)
}
