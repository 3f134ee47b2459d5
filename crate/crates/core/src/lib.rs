//! Discrete-time quantum walks on Rydberg atom arrays.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: site tables and coupling tessellations for dimer, tetramer
//!   and octamer lattices, including seams for torus and Möbius surfaces.
//! - [`walk`]: pure-state evolution under tessellation rotations, coins and
//!   coined shift operators.
//! - [`decoherence`]: density-matrix evolution under stroboscopic dephasing.
//! - [`microphysics`]: exchange interactions, pulse dynamics, leakage and
//!   error budgets of the atomic implementation.
//! - [`topology`]: two-band Floquet analysis, winding and Chern numbers.
//! - [`experiments`]: the named numerical experiments built from the above.
//!
//! Grid sweeps go through [`par`], which runs on rayon when the `parallel`
//! feature is enabled and sequentially otherwise.

pub mod decoherence;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod microphysics;
pub mod par;
pub mod topology;
pub mod walk;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
