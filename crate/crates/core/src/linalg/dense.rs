use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::{Error, Result};

/// Ascending eigenpairs of a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    /// Row `k` (`vectors[k*n..(k+1)*n]`) is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }
}

/// Full diagonalization of the symmetric row-major matrix `a` (`n * n`).
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<SymmetricEigen> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
    }
    let m = DMatrix::from_row_slice(n, n, a);
    let eig = m
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::EigenNoConvergence { iterations: 0 })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n * n);
    for &k in &order {
        values.push(eig.eigenvalues[k]);
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        super::fix_sign(&mut v);
        vectors.extend_from_slice(&v);
    }
    Ok(SymmetricEigen { n, values, vectors })
}

/// Ascending eigenvalues of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off[i]` couples `i` and `i + 1`).
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, found: off.len() });
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    let mut vals: Vec<f64> = m
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::EigenNoConvergence { iterations: 0 })?
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use std::f64::consts::PI;

    #[test]
    fn free_chain_spectrum() {
        let n = 40;
        let vals = tridiagonal_eigenvalues(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13, "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn eigenpairs_satisfy_the_equation() {
        let n = 12;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0 / (1.0 + i as f64 + j as f64) + if i == j { i as f64 } else { 0.0 };
            }
        }
        let e = symmetric_eigen(&a, n).unwrap();
        for k in 0..n {
            let v = e.vector(k);
            for i in 0..n {
                let y: f64 = (0..n).map(|j| a[i * n + j] * v[j]).sum();
                assert!((y - e.values[k] * v[i]).abs() < 1e-12);
            }
            let first = v.iter().find(|x| x.abs() > 1e-6).unwrap();
            assert!(*first > 0.0);
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}
