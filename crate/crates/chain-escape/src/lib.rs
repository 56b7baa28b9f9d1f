//! Simulation of an infinite pinned harmonic chain driven by a constant
//! force on particle 0, truncated to desk scale.
//!
//! The chain couples each particle to its neighbors (stiffness `omega^2`)
//! and to its own lattice site (pinning `omega0^2`); a constant force `f`
//! acts on particle 0. The library provides:
//!
//! - the static equilibrium profile and the escape constant C ([`equilibrium`]),
//! - exact-in-time evolution through the Fourier propagator ([`spectral`]),
//! - direct velocity-Verlet evolution on a truncated window ([`integrator`]),
//! - per-particle / windowed / total energy accounting and escape
//!   diagnostics ([`energy`]),
//! - the leading-order band-edge asymptotics of the radiating part and its
//!   residual scan ([`asymptotics`]),
//! - a batch CLI emitting reproducible CSV/JSON tables ([`cli`]).

pub mod asymptotics;
pub mod cli;
pub mod energy;
pub mod equilibrium;
pub mod integrator;
pub mod model;
pub mod spectral;

pub use model::{LatticeParams, LatticeState};

use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    /// Out-of-range run settings (quadrature nodes, time step, CLI flags).
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// Node count too small for the requested spatial window.
    #[error("aliasing: {0}")]
    Aliasing(String),

    /// A spectral state lost conjugate symmetry (inverse transform not real).
    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} outside window [{lo}, {hi}]")]
    IndexOutOfWindow { index: i64, lo: i64, hi: i64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ChainError>;
