use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul};
use num_traits::Zero;

use crate::{Error, Result};

/// Symmetric band matrix holding the upper triangle only.
///
/// Entry `(i, i + d)` for `0 <= d <= bandwidth` lives at
/// `data[i * (bandwidth + 1) + d]`. Slots past the last column stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymmetricBand {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bw: bandwidth, data: vec![0.0; n * (bandwidth + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        (j < self.n && j - i <= self.bw).then(|| i * (self.bw + 1) + (j - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)`.
    ///
    /// # Panics
    /// If the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * (self.bw + 1)]).collect()
    }

    /// Number of upper-triangle slots inside the matrix.
    pub fn stored_entries(&self) -> usize {
        (0..self.n).map(|i| (self.n - 1 - i).min(self.bw) + 1).sum()
    }

    /// Number of upper-triangle entries that are actually nonzero.
    pub fn nonzero_entries(&self) -> usize {
        self.data.iter().filter(|x| **x != 0.0).count()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n.min(i + self.bw + 1) {
                let v = self.get(i, j);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }

    /// `y = A x` for real or complex vectors.
    pub fn apply_into<T>(&self, x: &[T], y: &mut [T]) -> Result<()>
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        if x.len() != self.n || y.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len().min(y.len()) });
        }
        let w = self.bw + 1;
        y.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            let xi = x[i];
            let mut acc = xi * row[0];
            let top = (self.n - 1 - i).min(self.bw);
            for d in 1..=top {
                let a = row[d];
                acc = acc + x[i + d] * a;
                y[i + d] = y[i + d] + xi * a;
            }
            y[i] = y[i] + acc;
        }
        Ok(())
    }

    pub fn apply<T>(&self, x: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        let mut y = vec![T::zero(); self.n];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }

    /// Gershgorin enclosure `(lo, hi)` of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut radius = vec![0.0; self.n];
        for i in 0..self.n {
            for d in 1..=(self.n - 1 - i).min(self.bw) {
                let a = self.get(i, i + d).abs();
                radius[i] += a;
                radius[i + d] += a;
            }
        }
        let diag = self.diagonal();
        let lo = diag.iter().zip(&radius).map(|(d, r)| d - r).fold(f64::INFINITY, f64::min);
        let hi = diag.iter().zip(&radius).map(|(d, r)| d + r).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Number of eigenvalues strictly below `sigma`, from the inertia of the
    /// banded LDLᵀ factorization of `A - sigma I`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut a = self.data.clone();
        for i in 0..n {
            a[i * w] -= sigma;
        }
        let tiny = f64::EPSILON * self.max_abs().max(sigma.abs()).max(f64::MIN_POSITIVE);
        let mut negatives = 0;
        for k in 0..n {
            let mut dk = a[k * w];
            if dk.abs() < tiny {
                dk = -tiny;
                a[k * w] = dk;
            }
            if dk < 0.0 {
                negatives += 1;
            }
            let last = (n - 1).min(k + bw);
            for i in k + 1..=last {
                let aki = a[k * w + (i - k)];
                if aki == 0.0 {
                    continue;
                }
                let l = aki / dk;
                for j in i..=last {
                    a[i * w + (j - i)] -= l * a[k * w + (j - k)];
                }
            }
        }
        negatives
    }

    /// LU factorization of `A - sigma I` with partial pivoting.
    pub fn shifted_lu(&self, sigma: f64) -> BandLu {
        BandLu::factor(self, sigma)
    }
}

/// Banded LU factors of a shifted symmetric band matrix, used for inverse
/// iteration. Exactly singular pivots are nudged to a tiny value so that
/// solves near an eigenvalue stay finite.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    bw: usize,
    /// Row `i` holds columns `i - bw ..= i + 2 bw`.
    u: Vec<f64>,
    mult: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    fn width(bw: usize) -> usize {
        3 * bw + 1
    }

    fn at(&self, i: usize, j: usize) -> usize {
        i * Self::width(self.bw) + (j + self.bw - i)
    }

    fn factor(a: &SymmetricBand, sigma: f64) -> Self {
        let (n, bw) = (a.n, a.bw);
        let mut lu = Self { n, bw, u: vec![0.0; n * Self::width(bw)], mult: vec![0.0; n * bw], piv: vec![0; n] };
        for i in 0..n {
            for j in i.saturating_sub(bw)..n.min(i + bw + 1) {
                let s = lu.at(i, j);
                lu.u[s] = a.get(i, j) - if i == j { sigma } else { 0.0 };
            }
        }
        let tiny = f64::EPSILON * a.max_abs().max(sigma.abs()).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last = (n - 1).min(k + bw);
            let right = (n - 1).min(k + 2 * bw);
            let mut p = k;
            for r in k + 1..=last {
                if lu.u[lu.at(r, k)].abs() > lu.u[lu.at(p, k)].abs() {
                    p = r;
                }
            }
            lu.piv[k] = p;
            if p != k {
                for c in k..=right {
                    let (sk, sp) = (lu.at(k, c), lu.at(p, c));
                    lu.u.swap(sk, sp);
                }
            }
            let skk = lu.at(k, k);
            if lu.u[skk].abs() < tiny {
                lu.u[skk] = tiny;
            }
            let pivot = lu.u[skk];
            for r in k + 1..=last {
                let srk = lu.at(r, k);
                let l = lu.u[srk] / pivot;
                lu.mult[k * bw + (r - k - 1)] = l;
                lu.u[srk] = 0.0;
                if l != 0.0 {
                    for c in k + 1..=right {
                        let (src, skc) = (lu.at(r, c), lu.at(k, c));
                        lu.u[src] -= l * lu.u[skc];
                    }
                }
            }
        }
        lu
    }

    /// Solves `(A - sigma I) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for r in k + 1..=(n - 1).min(k + bw) {
                b[r] -= self.mult[k * bw + (r - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(n - 1).min(k + 2 * bw) {
                s -= self.u[self.at(k, c)] * b[c];
            }
            b[k] = s / self.u[self.at(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigen;
    use crate::rng::SplitMix64;
    use num_complex::Complex64;

    fn random_band(n: usize, bw: usize, seed: u64) -> SymmetricBand {
        let mut rng = SplitMix64::new(seed);
        let mut a = SymmetricBand::zeros(n, bw);
        for i in 0..n {
            for j in i..n.min(i + bw + 1) {
                a.set(i, j, rng.uniform(-1.0, 1.0));
            }
        }
        a
    }

    #[test]
    fn apply_matches_dense_product() {
        let a = random_band(17, 3, 1);
        let dense = a.to_dense();
        let x: Vec<f64> = (0..17).map(|i| (i as f64).sin()).collect();
        let y = a.apply(&x).unwrap();
        for i in 0..17 {
            let e: f64 = (0..17).map(|j| dense[i * 17 + j] * x[j]).sum();
            assert!((y[i] - e).abs() < 1e-14);
        }
        let xc: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, -2.0 * v)).collect();
        let yc = a.apply(&xc).unwrap();
        for i in 0..17 {
            assert!((yc[i] - Complex64::new(y[i], -2.0 * y[i])).norm() < 1e-13);
        }
    }

    #[test]
    fn inertia_counts_match_dense_spectrum() {
        let a = random_band(30, 4, 2);
        let e = symmetric_eigen(&a.to_dense(), 30).unwrap();
        for k in 0..29 {
            let sigma = 0.5 * (e.values[k] + e.values[k + 1]);
            assert_eq!(a.count_below(sigma), k + 1);
        }
        assert_eq!(a.count_below(e.values[0] - 1.0), 0);
    }

    #[test]
    fn lu_solves_shifted_system() {
        let a = random_band(25, 3, 3);
        let lu = a.shifted_lu(0.3);
        let x: Vec<f64> = (0..25).map(|i| 1.0 + i as f64 * 0.1).collect();
        let mut b = a.apply(&x).unwrap();
        b.iter_mut().zip(&x).for_each(|(b, x)| *b -= 0.3 * x);
        lu.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn gershgorin_encloses_spectrum_and_counts_slots() {
        let a = random_band(20, 2, 4);
        let e = symmetric_eigen(&a.to_dense(), 20).unwrap();
        let (lo, hi) = a.gershgorin();
        assert!(lo <= e.values[0] && e.values[19] <= hi);
        assert_eq!(a.stored_entries(), 20 + 19 + 18);
    }
}
