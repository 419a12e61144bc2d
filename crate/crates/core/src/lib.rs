//! Discretized adiabatic evolution of interpolating Hamiltonians, the
//! runtime bounds that guarantee it, and numerical instrumentation of each
//! inequality in their proof.
//!
//! The step unitary is `U_j = exp(+i(T/L)H(j/L))` unless the physics sign
//! convention is selected.

pub mod error;
pub mod evolution;
pub mod hamiltonian;
pub mod numerics;
pub mod problems;
pub mod proofcheck;
pub mod spectral;
pub mod theorem;

pub use error::{Error, Result};
