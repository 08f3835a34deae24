//! Dense and banded symmetric kernels.
//!
//! Matrices are plain row-major `Vec<f64>` buffers. Eigenvector sets are
//! stored one vector per row.

mod band;
mod dense;

pub use band::{BandLu, SymmetricBand};
pub use dense::{symmetric_eigen, tridiagonal_eigenvalues, SymmetricEigen};


pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flip `v` so that its first component larger than `1e-6 * max|v|` is positive.
pub fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-6 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}
