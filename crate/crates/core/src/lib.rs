//! Multi-domain Gauss-Lobatto-Legendre discretization of 1-D Schrödinger
//! operators, Chebyshev time propagation, and high-harmonic observables.
//!
//! * [`gll`]: Legendre polynomials, GLL rules, differentiation and stiffness matrices.
//! * [`mapping`]: element sizing from the local de Broglie wavelength and the global grid.
//! * [`hamiltonian`]: banded renormalized Hamiltonian and finite-difference references.
//! * [`eigen`]: eigenpairs and spectral bounds.
//! * [`propagator`]: laser pulse and Chebyshev propagator.
//! * [`observables`], [`superposition`], [`spa`]: harmonic observables and control.
//!
//! Everything is in atomic units. The crate is `no_std` and needs `alloc`.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod eigen;
mod error;
pub mod gll;
pub mod hamiltonian;
pub mod linalg;
pub mod mapping;
pub mod observables;
pub mod potential;
pub mod propagator;
pub mod quadrature;
pub mod rng;
pub mod spa;
pub mod superposition;

pub use error::{Error, Result};
pub use num_complex::Complex64;
