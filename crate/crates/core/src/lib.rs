//! Inverse-designed nearest-neighbour spin chains.
//!
//! The crate reconstructs mirror-symmetric tridiagonal Hamiltonians from a
//! prescribed spectrum, builds the closed-form "dome" family in one and two
//! dimensions, simulates single-excitation dynamics (unitary and Lindblad),
//! evaluates transfer / entanglement fidelities, runs seeded disorder and
//! decoherence sweeps, and plans cascaded long-distance transfers.
//!
//! Conventions used throughout:
//!
//! * Energies are expressed in units of the rate `J`, times in units of `1/J`.
//!   One evolution period is therefore `T = 2π`.
//! * Sites are 0-based in the API (`0` is the first qubit of the chain).
//! * State vectors live in `span{|vac>, |site 0>, ..., |site D-1>}`; index 0 of
//!   every amplitude vector / density matrix is the vacuum.

pub mod cascade;
pub mod dynamics;
pub mod error;
pub mod inverse_eigen;
pub mod metrics;
pub mod models;
pub mod noise;
pub mod spectrum;

pub use error::{Error, Result};

/// Complex scalar used for amplitudes and density matrices.
pub type C64 = num_complex::Complex64;

/// One full evolution period in units of `1/J`.
pub const PERIOD: f64 = 2.0 * std::f64::consts::PI;
