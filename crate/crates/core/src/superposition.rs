//! Initial superpositions of field-free eigenstates, and the dipole matrix
//! series that makes every superposition's response available from one
//! propagation per basis state.
//!
//! The propagator is linear, so for `ψ(0) = Σ_j c_j φ_j` the dipole
//! acceleration is `d̈(t) = Σ_jk c_j* c_k D_jk(t)` with
//! `D_jk(t) = ⟨U(t)φ_j| V' |U(t)φ_k⟩`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use num_complex::Complex64;

use crate::eigen::EigenResult;
use crate::propagator::WavefunctionState;
use crate::{Error, Result};

/// Ways of writing an initial superposition of eigenstates `φ_j`.
#[derive(Debug, Clone, PartialEq)]
pub enum SuperpositionSpec {
    /// `Σ c_j φ_j`, normalized on construction.
    Coefficients(Vec<(usize, Complex64)>),
    /// `(φ_0 + e^{iθ} φ_j)/√2`.
    Phase { j: usize, theta: f64 },
    /// `cos φ · φ_0 + sin φ · φ_1`.
    Rotation { phi: f64 },
}

impl SuperpositionSpec {
    pub fn eigenstate(j: usize) -> Self {
        SuperpositionSpec::Coefficients(vec![(j, Complex64::new(1.0, 0.0))])
    }

    /// Normalized dense coefficient vector over the first `basis` states.
    pub fn coefficients(&self, basis: usize) -> Result<Vec<Complex64>> {
        let mut c = vec![Complex64::new(0.0, 0.0); basis];
        let mut put = |j: usize, v: Complex64| -> Result<()> {
            let slot = c.get_mut(j).ok_or(Error::IndexOutOfRange { index: j, len: basis })?;
            *slot += v;
            Ok(())
        };
        match self {
            SuperpositionSpec::Coefficients(list) => {
                for (j, v) in list {
                    put(*j, *v)?;
                }
            }
            SuperpositionSpec::Phase { j, theta } => {
                put(0, Complex64::new(FRAC_1_SQRT_2, 0.0))?;
                put(*j, Complex64::from_polar(FRAC_1_SQRT_2, *theta))?;
            }
            SuperpositionSpec::Rotation { phi } => {
                put(0, Complex64::new(phi.cos(), 0.0))?;
                put(1, Complex64::new(phi.sin(), 0.0))?;
            }
        }
        let n: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(Error::Degenerate("superposition has zero norm"));
        }
        c.iter_mut().for_each(|z| *z /= n);
        Ok(c)
    }

    /// Largest eigenstate index referenced, plus one.
    pub fn basis_needed(&self) -> usize {
        match self {
            SuperpositionSpec::Coefficients(list) => list.iter().map(|(j, _)| j + 1).max().unwrap_or(0),
            SuperpositionSpec::Phase { j, .. } => j + 1,
            SuperpositionSpec::Rotation { .. } => 2,
        }
    }
}

/// Normalized state `Σ c_j φ_j` in the tilde convention.
pub fn superposition_state(spec: &SuperpositionSpec, basis: &EigenResult) -> Result<WavefunctionState> {
    let c = spec.coefficients(basis.len())?;
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim];
    for (k, ck) in c.iter().enumerate() {
        if *ck == Complex64::new(0.0, 0.0) {
            continue;
        }
        amps.iter_mut().zip(basis.vector(k)).for_each(|(a, u)| *a += ck * u);
    }
    let n: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= n);
    Ok(WavefunctionState::new(amps))
}

/// `D_jk(t_s)` for all samples `s`, stored sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleSeries {
    pub basis: usize,
    pub dt: f64,
    data: Vec<Complex64>,
}

impl DipoleSeries {
    pub fn new(basis: usize, dt: f64) -> Self {
        Self { basis, dt, data: Vec::new() }
    }

    pub fn samples(&self) -> usize {
        self.data.len() / (self.basis * self.basis).max(1)
    }

    /// Appends `D_jk = Σ_i conj(ψ_j,i) V'_i ψ_k,i` for the given states.
    pub fn push(&mut self, states: &[&[Complex64]], dv: &[f64]) -> Result<()> {
        if states.len() != self.basis {
            return Err(Error::DimensionMismatch { expected: self.basis, found: states.len() });
        }
        let b = self.basis;
        let start = self.data.len();
        self.data.resize(start + b * b, Complex64::new(0.0, 0.0));
        for j in 0..b {
            for k in j..b {
                let v: Complex64 =
                    states[j].iter().zip(states[k]).zip(dv).map(|((a, c), w)| a.conj() * c * *w).sum();
                self.data[start + j * b + k] = v;
                self.data[start + k * b + j] = v.conj();
            }
        }
        Ok(())
    }

    pub fn entry(&self, sample: usize, j: usize, k: usize) -> Complex64 {
        self.data[sample * self.basis * self.basis + j * self.basis + k]
    }

    /// `d̈(t_s) = c† D(t_s) c` for a coefficient vector over the basis.
    pub fn acceleration(&self, c: &[Complex64]) -> Result<Vec<f64>> {
        if c.len() > self.basis {
            return Err(Error::DimensionMismatch { expected: self.basis, found: c.len() });
        }
        let b = self.basis;
        let active: Vec<usize> = (0..c.len()).filter(|&j| c[j].norm_sqr() > 0.0).collect();
        Ok(self
            .data
            .chunks_exact(b * b)
            .map(|d| {
                let mut s = 0.0;
                for &j in &active {
                    let cj = c[j].conj();
                    s += (cj * c[j] * d[j * b + j]).re;
                    for &k in active.iter().filter(|&&k| k > j) {
                        s += 2.0 * (cj * d[j * b + k] * c[k]).re;
                    }
                }
                s
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn basis() -> EigenResult {
        // Three orthonormal vectors in R^4.
        let v = vec![
            0.5, 0.5, 0.5, 0.5, //
            0.5, -0.5, 0.5, -0.5, //
            0.5, 0.5, -0.5, -0.5,
        ];
        EigenResult { dim: 4, values: vec![-1.0, -0.5, -0.2], vectors: v, residuals: vec![0.0; 3], backend: crate::eigen::Backend::Dense }
    }

    #[test]
    fn forms() {
        let b = basis();
        let g = superposition_state(&SuperpositionSpec::Rotation { phi: 0.0 }, &b).unwrap();
        assert!(g.amplitudes.iter().zip(b.vector(0)).all(|(a, u)| (a.re - u).abs() < 1e-16 && a.im == 0.0));
        let p = superposition_state(&SuperpositionSpec::Phase { j: 1, theta: 0.0 }, &b).unwrap();
        for i in 0..4 {
            let e = (b.vector(0)[i] + b.vector(1)[i]) * FRAC_1_SQRT_2;
            assert!((p.amplitudes[i].re - e).abs() < 1e-15);
        }
        assert!(superposition_state(&SuperpositionSpec::Phase { j: 5, theta: 0.0 }, &b).is_err());
        assert!(SuperpositionSpec::Coefficients(vec![]).coefficients(3).is_err());
        assert_eq!(SuperpositionSpec::Rotation { phi: 1.0 }.basis_needed(), 2);
    }

    #[test]
    fn states_are_normalized() {
        let b = basis();
        for k in 0..20 {
            let t = k as f64 * 0.37;
            let spec = SuperpositionSpec::Coefficients(vec![
                (0, Complex64::from_polar(1.0 + t, t)),
                (1, Complex64::new(t.sin(), -0.3)),
                (2, Complex64::new(0.1, t.cos())),
            ]);
            let s = superposition_state(&spec, &b).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            let s = superposition_state(&SuperpositionSpec::Phase { j: 2, theta: t * PI }, &b).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn series_reproduces_direct_expectation() {
        let b = basis();
        let dv = [0.3, -1.0, 2.0, 0.7];
        let states: Vec<Vec<Complex64>> = (0..3)
            .map(|k| b.vector(k).iter().enumerate().map(|(i, u)| Complex64::from_polar(*u, 0.2 * (i * k) as f64)).collect())
            .collect();
        let refs: Vec<&[Complex64]> = states.iter().map(|s| s.as_slice()).collect();
        let mut d = DipoleSeries::new(3, 0.1);
        d.push(&refs, &dv).unwrap();
        d.push(&refs, &dv).unwrap();
        assert_eq!(d.samples(), 2);
        let c = [Complex64::new(0.6, 0.1), Complex64::new(-0.2, 0.5), Complex64::new(0.3, -0.4)];
        let psi: Vec<Complex64> = (0..4).map(|i| (0..3).map(|k| c[k] * states[k][i]).sum()).collect();
        let direct: f64 = psi.iter().zip(&dv).map(|(z, w)| z.norm_sqr() * w).sum();
        let a = d.acceleration(&c).unwrap();
        assert!((a[0] - direct).abs() < 1e-14 && (a[1] - direct).abs() < 1e-14);
        assert!(d.push(&refs[..2], &dv).is_err());
    }
}
