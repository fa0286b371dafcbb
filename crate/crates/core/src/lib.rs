//! Simulator for entangling two non-interacting qubits through repeated
//! projective measurements of a shared ancilla.
//!
//! Module map:
//! - [`qcore`]: complex matrices, pure states, density matrices, eigensolver.
//! - [`model`]: Hamiltonian, feedback controls, basis and Bell states, projectors.
//! - [`dynamics`]: unitary propagation between measurements.
//! - [`measurement`]: nonselective and selective ancilla measurements.
//! - [`metrics`]: trace distance, concurrence, fidelity.
//! - [`analytic`]: closed-form oracles for the field-free dynamics.
//! - [`protocol`]: measurement schedule, feedback, trajectories, ensembles, sweeps.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod dynamics;
pub mod error;
pub mod measurement;
pub mod metrics;
pub mod model;
pub mod protocol;
pub mod qcore;

pub use error::{Error, Result};
