//! C ABI over the `cradle` library.
//!
//! Every function returns a [`CradleStatus`]; results come back through out
//! pointers. After a failure, [`cradle_last_error`] describes it for the
//! calling thread. Chains are opaque handles released with [`cradle_chain_free`].
//! Sites are 1-based, as in the Rust API.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the access the function
//! documents; nulls are reported as [`CradleStatus::NullPointer`]. Chain
//! handles must come from this library and must not be used after
//! [`cradle_chain_free`]. Enum arguments must hold one of the declared values.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cradle::lattice::{build_hamiltonian, build_modified_hamiltonian, build_pst_hamiltonian};
use cradle::observables::{analytic_receiving_time, default_window, find_peak};
use cradle::photonstats::{simulate_counts, ClickCounts, Estimator, PairLaw, SourceKind, SourceModel};
use cradle::{ChainSpec, CouplingLaw, CouplingMatrix, DefectSpec, Error, NnnMode, PeakRule, Propagator, StateVector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CradleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    SiteOutOfRange = 3,
    PeakAtBoundary = 4,
    InsufficientCounts = 5,
    BufferTooSmall = 6,
    Unsupported = 7,
    Io = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CradleNnnMode {
    None = 0,
    Uniform = 1,
    Shadowed = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CradleSourceKind {
    HeraldedPair = 0,
    Thermal = 1,
    Coherent = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CradlePairLaw {
    Bernoulli = 0,
    Poisson = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CradleEstimator {
    /// Heralded anti-correlation g2(0).
    G2Zero = 0,
    /// Signal-idler cross-correlation.
    CrossCorrelation = 1,
    /// Unheralded signal-arm autocorrelation.
    SignalAutocorrelation = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CradleSourceModel {
    pub kind: CradleSourceKind,
    pub mean: f64,
    pub transmission: f64,
    pub herald_efficiency: f64,
    pub dark_count: f64,
    pub pair_law: CradlePairLaw,
}

/// Gate counts per click pattern, indexed by `d1 | d2 << 1 | d3 << 2`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CradleClickCounts {
    pub n_gates: u64,
    pub patterns: [u64; 8],
}

/// Opaque chain handle.
pub struct CradleChain {
    spec: Option<ChainSpec>,
    law: CouplingLaw,
    /// Receiving site; the island, when attached, sits after it.
    receiver: usize,
    propagator: Propagator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CradleStatus {
    match err {
        Error::SiteOutOfRange { .. } => CradleStatus::SiteOutOfRange,
        Error::PeakAtBoundary { .. } => CradleStatus::PeakAtBoundary,
        Error::InsufficientCoincidences { .. } | Error::InsufficientSingles { .. } | Error::EmptyRecords => {
            CradleStatus::InsufficientCounts
        }
        Error::Io(_) => CradleStatus::Io,
        Error::DegenerateFit(_) => CradleStatus::Internal,
        _ => CradleStatus::InvalidParameter,
    }
}

/// Runs `f`, records any error or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), (CradleStatus, String)>) -> CradleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CradleStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CradleStatus::Internal
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (CradleStatus, String)>;
}

impl<T> IntoFfi<T> for Result<T, Error> {
    fn ffi(self) -> Result<T, (CradleStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(name: &str) -> (CradleStatus, String) {
    (CradleStatus::NullPointer, format!("{name} is null"))
}

/// Writes through an out pointer after checking it.
unsafe fn put<T>(ptr: *mut T, name: &str, value: T) -> Result<(), (CradleStatus, String)> {
    if ptr.is_null() {
        return Err(null(name));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn chain_ref<'a>(chain: *const CradleChain) -> Result<&'a CradleChain, (CradleStatus, String)> {
    chain.as_ref().ok_or_else(|| null("chain"))
}

fn into_handle(
    spec: Option<ChainSpec>,
    law: CouplingLaw,
    receiver: usize,
    h: &CouplingMatrix,
    out: *mut *mut CradleChain,
) -> Result<(), (CradleStatus, String)> {
    let propagator = Propagator::new(h).ffi()?;
    let handle = Box::new(CradleChain {
        spec,
        law,
        receiver,
        propagator,
    });
    unsafe { put(out, "out", Box::into_raw(handle)) }
}

/// Why the most recent call on this thread failed, or null if it succeeded.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cradle_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cradle_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `J(p) = amplitude·exp(−decay·p)`; pass `amplitude <= 0` for the default law.
#[no_mangle]
pub unsafe extern "C" fn cradle_coupling_from_pitch(
    amplitude: f64,
    decay: f64,
    pitch_um: f64,
    out: *mut f64,
) -> CradleStatus {
    guard(|| {
        let law = law_or_default(amplitude, decay)?;
        put(out, "out", law.coupling_from_pitch(pitch_um).ffi()?)
    })
}

fn law_or_default(amplitude: f64, decay: f64) -> Result<CouplingLaw, (CradleStatus, String)> {
    if amplitude <= 0.0 {
        Ok(CouplingLaw::default())
    } else {
        CouplingLaw::new(amplitude, decay).ffi()
    }
}

/// Boundary-controlled chain from couplings in 1/mm, default coupling law.
#[no_mangle]
pub unsafe extern "C" fn cradle_chain_new(
    n_sites: usize,
    strong_coupling: f64,
    weak_coupling: f64,
    out: *mut *mut CradleChain,
) -> CradleStatus {
    guard(|| {
        let spec = ChainSpec::from_couplings(n_sites, strong_coupling, weak_coupling).ffi()?;
        let h = build_hamiltonian(&spec).ffi()?;
        into_handle(Some(spec), CouplingLaw::default(), n_sites, &h, out)
    })
}

/// Chain from pitches in um. `amplitude <= 0` selects the default law.
#[no_mangle]
pub unsafe extern "C" fn cradle_chain_from_pitches(
    n_sites: usize,
    strong_pitch_um: f64,
    weak_pitch_um: f64,
    amplitude: f64,
    decay: f64,
    out: *mut *mut CradleChain,
) -> CradleStatus {
    guard(|| {
        let law = law_or_default(amplitude, decay)?;
        let spec = ChainSpec::from_pitches(n_sites, strong_pitch_um, weak_pitch_um, &law).ffi()?;
        let h = build_hamiltonian(&spec).ffi()?;
        into_handle(Some(spec), law, n_sites, &h, out)
    })
}

/// Engineered chain with bonds `(rate/2)·√(i(N−i))`.
#[no_mangle]
pub unsafe extern "C" fn cradle_chain_new_pst(
    n_sites: usize,
    rate: f64,
    out: *mut *mut CradleChain,
) -> CradleStatus {
    guard(|| {
        let h = build_pst_hamiltonian(n_sites, rate).ffi()?;
        into_handle(None, CouplingLaw::default(), n_sites, &h, out)
    })
}

/// New chain with next-nearest-neighbour terms and, when `island` is nonzero,
/// an island site `distance_um` from the central site. `chain` is unchanged.
#[no_mangle]
pub unsafe extern "C" fn cradle_chain_with_defect(
    chain: *const CradleChain,
    mode: CradleNnnMode,
    m: f64,
    distance_um: f64,
    island: bool,
    out: *mut *mut CradleChain,
) -> CradleStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let spec = c.spec.clone().ok_or((
            CradleStatus::Unsupported,
            "defects apply to boundary-controlled chains only".to_string(),
        ))?;
        let mode = match mode {
            CradleNnnMode::None => NnnMode::None,
            CradleNnnMode::Uniform => NnnMode::Uniform,
            CradleNnnMode::Shadowed => NnnMode::Shadowed,
        };
        let defect = DefectSpec::centered(spec.n_sites, distance_um, m, mode).with_island(island);
        let h = build_modified_hamiltonian(&spec, &defect, &c.law).ffi()?;
        into_handle(Some(spec), c.law, c.receiver, &h, out)
    })
}

/// Releases a handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cradle_chain_free(chain: *mut CradleChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Number of sites including any island, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cradle_chain_dim(chain: *const CradleChain) -> usize {
    chain.as_ref().map_or(0, |c| c.propagator.dim())
}

/// Site populations at `z` after injection at site 1. `out` must hold
/// `cradle_chain_dim` values.
#[no_mangle]
pub unsafe extern "C" fn cradle_chain_probabilities(
    chain: *const CradleChain,
    z: f64,
    out: *mut f64,
    len: usize,
) -> CradleStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let n = c.propagator.dim();
        if out.is_null() {
            return Err(null("out"));
        }
        if len < n {
            return Err((CradleStatus::BufferTooSmall, format!("need {n} values, got {len}")));
        }
        let psi = StateVector::localized(n, 1).ffi()?;
        let p = c.propagator.evolve(&psi, z).ffi()?.probabilities();
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&p);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cradle_chain_transfer_probability(
    chain: *const CradleChain,
    from: usize,
    to: usize,
    z: f64,
    out: *mut f64,
) -> CradleStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        put(out, "out", c.propagator.transfer_probability(from, to, z).ffi()?)
    })
}

/// Closed-form receiving time, mm; unsupported for engineered chains.
#[no_mangle]
pub unsafe extern "C" fn cradle_chain_analytic_time(chain: *const CradleChain, out: *mut f64) -> CradleStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let spec = c.spec.as_ref().ok_or((
            CradleStatus::Unsupported,
            "no closed form for this chain".to_string(),
        ))?;
        put(out, "out", analytic_receiving_time(spec).ffi()?)
    })
}

/// First receiving-site maximum in `[lo, hi]` mm. Passing `hi <= lo` uses
/// the default window around the closed-form time.
#[no_mangle]
pub unsafe extern "C" fn cradle_chain_find_peak(
    chain: *const CradleChain,
    lo: f64,
    hi: f64,
    tau: *mut f64,
    eta: *mut f64,
) -> CradleStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let window = if hi > lo {
            (lo, hi)
        } else {
            let spec = c.spec.as_ref().ok_or((
                CradleStatus::Unsupported,
                "an explicit window is required for this chain".to_string(),
            ))?;
            default_window(spec).ffi()?
        };
        let peak = find_peak(&c.propagator, c.receiver, window, PeakRule::FirstLocalMaximum).ffi()?;
        put(tau, "tau", peak.tau)?;
        put(eta, "eta", peak.eta)
    })
}

/// Simulates `n_gates` gates and tallies click patterns.
#[no_mangle]
pub unsafe extern "C" fn cradle_simulate_counts(
    model: *const CradleSourceModel,
    n_gates: u64,
    seed: u64,
    out: *mut CradleClickCounts,
) -> CradleStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let model = SourceModel {
            kind: match m.kind {
                CradleSourceKind::HeraldedPair => SourceKind::HeraldedPair,
                CradleSourceKind::Thermal => SourceKind::Thermal,
                CradleSourceKind::Coherent => SourceKind::Coherent,
            },
            mean: m.mean,
            transmission: m.transmission,
            herald_efficiency: m.herald_efficiency,
            dark_count: m.dark_count,
            pair_law: match m.pair_law {
                CradlePairLaw::Bernoulli => PairLaw::Bernoulli,
                CradlePairLaw::Poisson => PairLaw::Poisson,
            },
        };
        let c = simulate_counts(&model, n_gates, seed).ffi()?;
        put(
            out,
            "out",
            CradleClickCounts {
                n_gates: c.n_gates,
                patterns: c.patterns,
            },
        )
    })
}

/// Correlation estimate with its delta-method standard error.
#[no_mangle]
pub unsafe extern "C" fn cradle_estimate(
    counts: *const CradleClickCounts,
    estimator: CradleEstimator,
    value: *mut f64,
    std_error: *mut f64,
) -> CradleStatus {
    guard(|| {
        let c = counts.as_ref().ok_or_else(|| null("counts"))?;
        if c.patterns.iter().sum::<u64>() != c.n_gates {
            return Err((
                CradleStatus::InvalidParameter,
                "pattern counts do not add up to n_gates".to_string(),
            ));
        }
        let counts = ClickCounts {
            n_gates: c.n_gates,
            patterns: c.patterns,
        };
        let est = match estimator {
            CradleEstimator::G2Zero => Estimator::G2Zero,
            CradleEstimator::CrossCorrelation => Estimator::CrossCorrelation,
            CradleEstimator::SignalAutocorrelation => Estimator::SignalAutocorrelation,
        };
        let e = est.estimate(&counts).ffi()?;
        put(value, "value", e.value)?;
        put(std_error, "std_error", e.std_error)
    })
}
