//! Exact dissipative dynamics of a single bosonic or fermionic mode coupled to
//! a structured thermal reservoir.
//!
//! The reservoir enters only through its spectral density J(ω). From it the
//! crate computes the two single-particle Green functions that determine the
//! reduced dynamics completely:
//!
//! * the retarded propagator `u(t, t0)`, solved from the memory-kernel
//!   integro-differential equation `du/dt = -iω_S u - ∫ g(t-τ) u(τ) dτ`,
//! * the equal-time fluctuation function `v(t, t)`, a double quadrature of the
//!   thermal noise kernel against `u`.
//!
//! Everything downstream is exact given `(u, v)`: reconstruction of the reduced
//! density matrix in a truncated Fock basis, extraction of the time-local
//! master-equation coefficients, Wigner-function rendering, and classification
//! of the steady state as thermal, thermal-like, qumemory, or oscillating
//! qumemory depending on the reservoir's localized (bound-state) modes.
//!
//! A brute-force cross-check lives in [`oracle`]: the reservoir is discretized
//! into explicit modes and the quadratic total Hamiltonian is diagonalized, so
//! the continuum solvers can be validated against exact finite dynamics.
//!
//! See the `examples/` directory for runnable entry points covering each
//! capability, and the `qdyn` binary for batch runs driven by JSON configs.

pub mod cli;
pub mod error;
pub mod fock;
pub mod greens;
pub mod master;
mod numerics;
pub mod oracle;
pub mod spectral;
pub mod wigner;

pub use error::{Error, Result};
