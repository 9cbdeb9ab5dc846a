//! Floquet analysis of the periodically driven Lipkin-Meshkov-Glick model.
//!
//! The crate is organised bottom-up:
//!
//! * [`spin`]: collective spin matrices, coherent states, Bloch/(Q,P) maps
//! * [`model`]: the driven Hamiltonian, rotating frame, RWA Hamiltonian and
//!   the symmetric-phase oscillator
//! * [`floquet`]: one-period propagators, quasienergies, RWA comparison
//! * [`landscape`]: the `m = 0` quasienergy landscape, its stationary points
//!   and phase diagrams
//! * [`dynamics`]: coherent-state evolution in lab, rotating and
//!   stroboscopic frames

pub mod bessel;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod integrator;
pub mod landscape;
pub mod linalg;
pub mod model;
pub mod spin;

pub use error::{Error, Result};
pub use integrator::IntegratorSettings;
pub use model::{ModelParams, OscillatorParams};
pub use spin::{BlochPoint, CollectiveSpinOps, StateVector};
