//! Spectral fractional Laplacian with inhomogeneous Dirichlet data on boxes.
//!
//! Forward operators, Poisson and Green operators, Schrödinger solvers, DN maps
//! and their linearization, Fourier reconstruction of potentials from the
//! linearized DN map, and verification kernels for CGO amplitudes, gauge
//! identities and stationary-phase expansions.

#![forbid(unsafe_code)]

pub mod cgo;
pub mod dnmap;
pub mod eigenbasis;
pub mod error;
pub mod fracops;
pub mod gauge;
pub mod grid;
pub mod inversion;
pub mod numerics;
pub mod solvers;

pub use error::{Error, Result};
pub use num_complex::Complex64;
