//! Simulation and analysis of continuous-variable distributed displacement sensing.
//!
//! A single squeezed-vacuum mode split by a balanced beam-splitter array across
//! `M` homodyne sensor nodes estimates a common field-quadrature displacement
//! with rms error scaling as `1/M` (lossless), against `1/√M` for the best
//! product of squeezed states. This crate provides:
//!
//! - [`gaussian`]: exact Gaussian-state engine (xxpp ordering, vacuum variance 1/4).
//! - [`fock`]: truncated Fock-space density matrices and Uhlmann fidelity, used
//!   as a brute-force reference for the Gaussian closed forms.
//! - [`protocols`]: analytic rms errors of the entangled and product schemes,
//!   Monte Carlo estimation campaigns and the distributed Mach-Zehnder phase sensor.
//! - [`allocation`]: weighted-sum estimation over heterogeneous transmissivities,
//!   including water-filling photon allocation and weight optimization.
//! - [`fisher`]: quantum Fisher information for displacements of single-mode
//!   Gaussian states and the separable-state Cramér-Rao bound.

pub mod allocation;
pub mod error;
pub mod fisher;
pub mod fock;
pub mod gaussian;
pub mod protocols;

pub use error::{Error, Result};
