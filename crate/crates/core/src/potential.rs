//! One-dimensional potentials `V(r)` with analytic or interpolated derivatives.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A potential energy curve in hartree as a function of position in bohr.
pub trait Potential {
    fn value(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> f64;

    /// Interval outside of which the potential is undefined.
    fn domain(&self) -> Option<(f64, f64)> {
        None
    }

    fn checked_value(&self, r: f64) -> Result<f64> {
        match self.domain() {
            Some((lo, hi)) if r < lo - 1e-12 * lo.abs().max(1.0) || r > hi + 1e-12 * hi.abs().max(1.0) => {
                Err(Error::Extrapolation { r })
            }
            _ => Ok(self.value(r)),
        }
    }
}

impl<P: Potential + ?Sized> Potential for &P {
    fn value(&self, r: f64) -> f64 {
        (**self).value(r)
    }
    fn derivative(&self, r: f64) -> f64 {
        (**self).derivative(r)
    }
    fn domain(&self) -> Option<(f64, f64)> {
        (**self).domain()
    }
}

/// The model potentials used by the benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `-1/sqrt(a + r²)`.
    SoftCoulomb { a: f64 },
    /// `D (1 - exp(-a (r - r_e)))² - D`.
    Morse { depth: f64, range: f64, r_e: f64 },
    /// Flat bottom; walls come from the Dirichlet ends of the grid.
    Box,
    Tabulated(CubicSpline),
}

impl PotentialKind {
    /// Exact Morse level `E_n` for mass `mu`, or `None` for other variants.
    pub fn morse_level(&self, n: usize, mu: f64) -> Option<f64> {
        match *self {
            PotentialKind::Morse { depth, range, .. } => {
                let omega = range * (2.0 * depth / mu).sqrt();
                let x = omega * (n as f64 + 0.5);
                Some(-depth + x - x * x / (4.0 * depth))
            }
            _ => None,
        }
    }
}

impl Potential for PotentialKind {
    fn value(&self, r: f64) -> f64 {
        match self {
            PotentialKind::SoftCoulomb { a } => -1.0 / (a + r * r).sqrt(),
            PotentialKind::Morse { depth, range, r_e } => {
                let y = 1.0 - (-range * (r - r_e)).exp();
                depth * y * y - depth
            }
            PotentialKind::Box => 0.0,
            PotentialKind::Tabulated(s) => s.eval(r),
        }
    }

    fn derivative(&self, r: f64) -> f64 {
        match self {
            PotentialKind::SoftCoulomb { a } => r / (a + r * r).powf(1.5),
            PotentialKind::Morse { depth, range, r_e } => {
                let e = (-range * (r - r_e)).exp();
                2.0 * depth * range * e * (1.0 - e)
            }
            PotentialKind::Box => 0.0,
            PotentialKind::Tabulated(s) => s.derivative(r),
        }
    }

    fn domain(&self) -> Option<(f64, f64)> {
        match self {
            PotentialKind::Tabulated(s) => Some(s.range()),
            _ => None,
        }
    }
}

/// A potential given by closures for `V` and `V'`.
pub struct FnPotential<F, G> {
    pub value: F,
    pub derivative: G,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> Potential for FnPotential<F, G> {
    fn value(&self, r: f64) -> f64 {
        (self.value)(r)
    }
    fn derivative(&self, r: f64) -> f64 {
        (self.derivative)(r)
    }
}

/// Natural cubic spline through tabulated samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        if n < 2 {
            return Err(Error::InvalidParameter("a spline needs at least two samples"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("spline abscissae must increase strictly"));
        }
        // Tridiagonal system for the second derivatives, natural ends.
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for i in 1..k {
                let h = x[i + 1] - x[i];
                let f = h / diag[i - 1];
                diag[i] -= f * h;
                rhs[i] -= f * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (1..k).rev() {
                let h = x[i + 1] - x[i];
                m[i] = (rhs[i - 1] - h * m[i + 1]) / diag[i - 1];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, r: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let i = self.segment(r);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - r) / h;
        let b = (r - self.x[i]) / h;
        a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let i = self.segment(r);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - r) / h;
        let b = (r - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivative(p: &dyn Potential, r: f64) {
        let h = 1e-5 * r.abs().max(1.0);
        let fd = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
        assert!((fd - p.derivative(r)).abs() < 1e-7 * (1.0 + fd.abs()), "r={r}");
    }

    #[test]
    fn analytic_derivatives() {
        let sc = PotentialKind::SoftCoulomb { a: 2.0 };
        let morse = PotentialKind::Morse { depth: 200.0, range: 0.05, r_e: 20.0 };
        for r in [-30.0, -1.0, 0.0, 0.7, 5.0, 19.0, 20.0, 45.0] {
            check_derivative(&sc, r);
            check_derivative(&morse, r);
        }
        assert_eq!(sc.derivative(0.0), 0.0);
        assert_eq!(morse.value(20.0), -200.0);
        assert_eq!(sc.value(0.0), -1.0 / 2f64.sqrt());
    }

    #[test]
    fn morse_levels() {
        let morse = PotentialKind::Morse { depth: 200.0, range: 0.05, r_e: 20.0 };
        assert!((morse.morse_level(100, 1.0).unwrap() + 112.1253125).abs() < 1e-12);
        assert!((morse.morse_level(300, 1.0).unwrap() + 12.3753125).abs() < 1e-12);
        assert!(PotentialKind::Box.morse_level(0, 1.0).is_none());
    }

    #[test]
    fn spline_reproduces_cubic_interior_and_rejects_extrapolation() {
        let x: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = CubicSpline::new(x, y).unwrap();
        for k in 0..50 {
            let r = 1.0 + 0.13 * k as f64 * 0.9;
            assert!((s.eval(r) - r.sin()).abs() < 1e-6);
            assert!((s.derivative(r) - r.cos()).abs() < 1e-4);
        }
        let p = PotentialKind::Tabulated(s);
        assert!(matches!(p.checked_value(10.5), Err(Error::Extrapolation { .. })));
        assert!(p.checked_value(10.0).is_ok());
        assert!(CubicSpline::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn spline_interpolates_its_knots_and_lines() {
        let s = CubicSpline::new(vec![0.0, 1.0, 3.0, 4.5], vec![1.0, -2.0, 0.5, 7.0]).unwrap();
        for (x, y) in [(0.0, 1.0), (1.0, -2.0), (3.0, 0.5), (4.5, 7.0)] {
            assert!((s.eval(x) - y).abs() < 1e-14);
        }
        let line = CubicSpline::new(vec![0.0, 2.0], vec![1.0, 5.0]).unwrap();
        assert!((line.eval(0.5) - 2.0).abs() < 1e-15);
        assert!((line.derivative(1.7) - 2.0).abs() < 1e-15);
    }
}
