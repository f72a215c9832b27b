//! Imaginary-time spectral toolkit for the periodic transverse-field Ising
//! chain.
//!
//! The crate simulates a measurement-driven workflow for extracting the full
//! spectrum of `H = -J sum X_i X_{i+1} - h_T sum Z_i` (periodic) on small
//! chains: imaginary-time evolution realized as unitary updates ([`qite`]),
//! a Krylov-subspace eigensolver over the imaginary-time trajectory
//! ([`qlanczos`]), symmetry-guided assembly of the complete eigensystem
//! ([`pipeline`]), and real-time / thermal observables computed from any
//! spectrum ([`observables`]). Exact dense diagonalization ([`oracle`])
//! provides the ground truth everything is validated against, and
//! [`noise`] provides the shot-sampling, readout-error-mitigation and
//! zero-noise-extrapolation measurement models.

pub mod error;
pub mod io;
pub mod linalg;
pub mod noise;
pub mod observables;
pub mod oracle;
pub mod pauli;
pub mod pipeline;
pub mod qite;
pub mod qlanczos;
pub mod state;

pub use error::{Error, Result};
