//! Simulation toolkit for energy transport through boundary-controlled
//! photonic chains.
//!
//! A chain of `N` identical waveguides is coupled strongly (`J`) in its
//! interior and weakly (`Jw = αJ`) to the two end sites. An excitation
//! injected at site 1 shuttles to site `N` and back, much like the end balls
//! of a Newton's cradle. The crate covers:
//!
//! * [`lattice`]: pitch/coupling conversion and coupling-matrix construction
//!   (plain chain, next-nearest-neighbour corrections, defect islands, the
//!   engineered `√(i(N−i))` chain and the effective two-site model).
//! * [`propagator`]: exact single-excitation evolution by spectral
//!   decomposition, plus an independent series-based oracle.
//! * [`observables`]: transfer efficiency, receiving-time search and the
//!   closed-form estimates.
//! * [`experiments`]: parameter sweeps, least-squares fits, JSON configs
//!   and CSV persistence.
//! * [`photonstats`]: gated Monte Carlo of heralded photon detection with
//!   Hanbury-Brown–Twiss correlation estimators.
//!
//! Units: couplings in mm⁻¹, pitches and distances in μm, propagation
//! length `z` in mm (ħ = 1).

pub mod error;
pub mod experiments;
pub mod lattice;
pub mod observables;
pub mod photonstats;
pub mod propagator;

pub use error::{Error, Result};
pub use lattice::{ChainSpec, CouplingLaw, CouplingMatrix, DefectSpec, NnnMode};
pub use observables::{PeakRule, TransferPeak};
pub use propagator::{ProbabilityField, Propagator, Spectrum, StateVector};

/// Version string recorded in persisted metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
