//! Pulse-level simulation and statistical design of itinerant microwave
//! photon links between superconducting transmon qutrits.
//!
//! The crate is organised bottom-up:
//!
//! - [`qcore`]: dense operators, density matrices and a fixed-step RK4
//!   Lindblad integrator with time-dependent coefficients.
//! - [`resonator`]: eigenmodes of a transfer resonator coupled to a Purcell
//!   filter, the photon emission rate of the driven qutrit and the
//!   reflection coefficient.
//! - [`drive`]: three-level dressing by the Raman drive, target photon
//!   envelopes and emission/absorption drive schedules.
//! - [`cascade`]: the cascaded two-node master equation and the emission,
//!   transfer and entanglement protocols built on it.
//! - [`tomo`]: simulated dispersive readout, assignment correction, state
//!   and process tomography.
//! - [`metrics`]: wave-packet energy and loss estimators, spectra and the
//!   error-budget ablation ladder.
//! - [`design`]: bandwidth sweeps, Monte Carlo yield and tolerance maps.
//!
//! Internally every frequency and rate is angular, in rad/ns, and intervals
//! are in ns. Decay rates `1/T` carry no factor of 2π. Configuration and
//! reported values use cyclic units; see [`units`].

pub mod cascade;
pub mod design;
pub mod drive;
mod error;
pub mod metrics;
pub mod qcore;
pub mod resonator;
pub mod tomo;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
