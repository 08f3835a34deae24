//! Sequential parametrization: coordinate-wise maximization over a growing
//! set of complex superposition coefficients.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaOptions {
    /// Largest number of coefficients that may become active.
    pub max_states: usize,
    /// Relative sweep improvement below which the next coefficient is
    /// activated.
    pub plateau: f64,
    pub max_sweeps: usize,
    /// Bracket width at which a golden-section search stops.
    pub line_tolerance: f64,
    /// Keep the phase of the first coefficient at zero.
    pub fix_first_phase: bool,
}

impl Default for SpaOptions {
    fn default() -> Self {
        Self { max_states: 2, plateau: 1e-3, max_sweeps: 200, line_tolerance: 1e-7, fix_first_phase: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaResult {
    /// Normalized coefficients; inactive states are zero.
    pub coefficients: Vec<Complex64>,
    pub value: f64,
    /// Objective after the initial evaluation and after every sweep.
    pub history: Vec<f64>,
    /// Number of active coefficients after each entry of `history`.
    pub active_history: Vec<usize>,
    pub evaluations: usize,
    pub active: usize,
}

fn normalize(c: &mut [Complex64]) {
    let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        c.iter_mut().for_each(|z| *z /= n);
    }
}

/// Coefficients `r_k e^{iθ_k}` with `r_j = sin α` and the other
/// amplitudes rescaled to carry `cos² α`.
fn compose(amp: &[f64], phase: &[f64], j: usize, alpha: Option<f64>) -> Vec<Complex64> {
    let rest = amp.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, r)| r * r).sum::<f64>().sqrt();
    amp.iter()
        .zip(phase)
        .enumerate()
        .map(|(k, (r, t))| {
            let r = match alpha {
                Some(a) if k == j => a.sin(),
                Some(a) if rest > 0.0 => r * a.cos() / rest,
                _ => *r,
            };
            Complex64::from_polar(r, *t)
        })
        .collect()
}

/// Amplitude given to a zero coefficient while its phase is searched.
const PROBE_AMPLITUDE: f64 = 1e-2;

struct Counter<'a, F> {
    f: &'a mut F,
    evaluations: usize,
}

impl<F: FnMut(&[Complex64]) -> Result<f64>> Counter<'_, F> {
    fn eval(&mut self, c: &[Complex64]) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.f)(c)?;
        if !v.is_finite() {
            return Err(Error::Degenerate("objective is not finite"));
        }
        Ok(v)
    }
}

/// Golden-section maximization of `g` on `[a, b]`, seeded with the current
/// point `x0` whose value is `f0`. Returns the best point seen.
fn golden<G: FnMut(f64) -> Result<f64>>(mut g: G, mut a: f64, mut b: f64, x0: f64, f0: f64, tol: f64) -> Result<(f64, f64)> {
    const R: f64 = 0.618_033_988_749_894_9;
    let mut best = (x0, f0);
    let mut x1 = b - R * (b - a);
    let mut x2 = a + R * (b - a);
    let mut f1 = g(x1)?;
    let mut f2 = g(x2)?;
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best.1 {
            best = (x, f);
        }
    }
    while b - a > tol {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - R * (b - a);
            f1 = g(x1)?;
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + R * (b - a);
            f2 = g(x2)?;
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    Ok(best)
}

/// Maximizes `objective` over normalized coefficient vectors of length
/// `options.max_states`.
///
/// Active coefficients start from `guess` (its length sets the initial
/// active count). Each sweep line-searches the amplitude angle and then the
/// phase of every active coefficient. When a sweep improves the objective by
/// less than `options.plateau` relative, the next coefficient is activated
/// at zero; with all coefficients active the search stops at the plateau.
pub fn spa_optimize<F>(mut objective: F, guess: &[Complex64], options: &SpaOptions) -> Result<SpaResult>
where
    F: FnMut(&[Complex64]) -> Result<f64>,
{
    if guess.is_empty() || guess.len() > options.max_states {
        return Err(Error::InvalidParameter("initial guess must hold between 1 and max_states coefficients"));
    }
    if !(options.plateau > 0.0) || !(options.line_tolerance > 0.0) {
        return Err(Error::InvalidParameter("plateau and line tolerances must be positive"));
    }
    let mut c = vec![Complex64::new(0.0, 0.0); options.max_states];
    c[..guess.len()].copy_from_slice(guess);
    normalize(&mut c);
    if c.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::InvalidParameter("initial guess is zero"));
    }
    let mut amp: Vec<f64> = c.iter().map(|z| z.norm()).collect();
    let mut phase: Vec<f64> = c.iter().map(|z| z.arg()).collect();
    let mut active = guess.len();
    let mut f = Counter { f: &mut objective, evaluations: 0 };
    let mut value = f.eval(&c)?;
    let mut history = vec![value];
    let mut active_history = vec![active];
    for _ in 0..options.max_sweeps {
        let start = value;
        for j in 0..active {
            if !(j == 0 && options.fix_first_phase) {
                let probe = if amp[j] == 0.0 { Some(PROBE_AMPLITUDE.asin()) } else { None };
                let base = if probe.is_some() { f.eval(&compose(&amp, &phase, j, probe))? } else { value };
                let theta0 = phase[j];
                let mut trial = phase.clone();
                let (theta, v) = golden(
                    |t| {
                        trial[j] = t;
                        f.eval(&compose(&amp, &trial, j, probe))
                    },
                    theta0 - PI,
                    theta0 + PI,
                    theta0,
                    base,
                    options.line_tolerance,
                )?;
                if v > base {
                    phase[j] = theta.rem_euclid(2.0 * PI);
                    if probe.is_none() {
                        value = v;
                    }
                }
            }
            if active > 1 {
                let alpha0 = amp[j].clamp(0.0, 1.0).asin();
                let (alpha, v) = golden(
                    |a| f.eval(&compose(&amp, &phase, j, Some(a))),
                    0.0,
                    FRAC_PI_2,
                    alpha0,
                    value,
                    options.line_tolerance,
                )?;
                if v > value {
                    c = compose(&amp, &phase, j, Some(alpha));
                    amp = c.iter().map(|z| z.norm()).collect();
                    value = v;
                }
            }
        }
        history.push(value);
        active_history.push(active);
        let gain = value - start;
        let stalled = gain <= 1e-15 * value.abs().max(1.0);
        if gain <= options.plateau * start.abs() || stalled {
            if active == options.max_states {
                break;
            }
            active += 1;
        }
    }
    let coefficients = compose(&amp, &phase, 0, None);
    Ok(SpaResult { coefficients, value, history, active_history, evaluations: f.evaluations, active })
}
