//! Effective dynamics of an optically pumped N-level impurity coupled to a
//! thermal fermionic reservoir.
//!
//! The crate builds the time-dependent Lindbladian
//! `L_t = L_at + eta cos(omega t) L_p + lambda^2 L_R` from microscopic data
//! (atomic Hamiltonian, coupling operators, spectral densities, pump),
//! integrates the master, pre-master and Pauli equations, solves the balance
//! condition for the quasi-stationary populations, computes generalized
//! Einstein A/B coefficients, and numerically verifies the structural
//! properties behind all of it: Spohn irreducibility, GKLS form, spectral
//! gaps of the Howland operator and positivity of the stimulated rates.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod error;
pub mod linalg;
pub mod model;
pub mod lindblad;
pub mod steady;
pub mod dynamics;
pub mod einstein;
pub mod verify;
pub mod howland;
pub mod scenarios;
pub mod io;

pub use error::{Error, Result};
