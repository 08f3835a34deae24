//! Laser pulse and Chebyshev propagation in the mass-weighted representation.
//!
//! One step of length `Δt` applies
//!
//! ```text
//! ψ(t+Δt) = e^{−i(ΔE/2 + E_lo)Δt} Σ_n (2 − δ_{n0}) J_n(α) φ_n,   α = ΔE Δt / 2
//! φ_0 = ψ,  φ_1 = −i X ψ,  φ_{n+1} = −2i X φ_n + φ_{n−1}
//! X = 2 (H(t+Δt/2) − E_lo − ΔE/2) / ΔE,  H(t) = Ã − diag(r E(t))
//! ```

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;
use num_complex::Complex64;

use crate::eigen::SpectralBounds;
use crate::hamiltonian::SparseHamiltonian;
use crate::{Error, Result};

/// `E(t) = s E₀ G(t − T_s) sin(ω₀ (t − T_s))` with a unit-peak Gaussian `G`
/// of full width at half maximum `τ` centred on `t_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub e0: f64,
    pub omega0: f64,
    pub fwhm: f64,
    pub center: f64,
    /// `+1` or `−1`.
    pub sign: f64,
    pub shift: f64,
}

impl PulseSpec {
    /// Pulse centred in a window of length `4τ`, so `t_c = 2τ`.
    pub fn centered(e0: f64, omega0: f64, fwhm: f64) -> Self {
        Self { e0, omega0, fwhm, center: 2.0 * fwhm, sign: 1.0, shift: 0.0 }
    }

    pub fn field_free() -> Self {
        Self { e0: 0.0, omega0: 0.0, fwhm: 1.0, center: 0.0, sign: 1.0, shift: 0.0 }
    }

    pub fn flipped(self) -> Self {
        Self { sign: -self.sign, ..self }
    }

    pub fn shifted(self, shift: f64) -> Self {
        Self { shift, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e0 >= 0.0) {
            return Err(Error::InvalidParameter("field amplitude must be non-negative"));
        }
        if !(self.fwhm > 0.0) {
            return Err(Error::InvalidParameter("envelope width must be positive"));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::InvalidParameter("field sign must be +1 or -1"));
        }
        Ok(())
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let x = t - self.shift - self.center;
        (-4.0 * LN_2 * x * x / (self.fwhm * self.fwhm)).exp()
    }

    pub fn max_abs(&self) -> f64 {
        self.e0
    }
}

pub fn field_value(pulse: &PulseSpec, t: f64) -> f64 {
    if pulse.e0 == 0.0 {
        return 0.0;
    }
    pulse.sign * pulse.e0 * pulse.envelope(t) * (pulse.omega0 * (t - pulse.shift)).sin()
}

/// `J_0(α) … J_K(α)` by Miller's downward recurrence normalized with
/// `J_0 + 2 Σ J_{2k} = 1`, where `K` is the first index above `α` with
/// `|J_K| < tolerance`.
pub fn bessel_j_sequence(alpha: f64, tolerance: f64) -> Vec<f64> {
    if alpha == 0.0 {
        return vec![1.0];
    }
    let mut margin = 20.0 + 10.0 * alpha.cbrt() + (-tolerance.log10()).max(0.0);
    loop {
        let start = (alpha + margin).ceil() as usize + 1;
        let j = miller(alpha, start);
        let cut = (0..j.len()).find(|&n| n as f64 > alpha && j[n].abs() < tolerance);
        match cut {
            Some(k) if k + 10 < start => return j[..=k].to_vec(),
            _ => margin *= 2.0,
        }
    }
}

fn miller(x: f64, start: usize) -> Vec<f64> {
    let mut j = vec![0.0; start + 2];
    j[start + 1] = 0.0;
    j[start] = 1e-300;
    for n in (1..=start).rev() {
        j[n - 1] = 2.0 * n as f64 / x * j[n] - j[n + 1];
        if j[n - 1].abs() > 1e250 {
            for v in j[n - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut sum = j[0];
    for k in (2..=start).step_by(2) {
        sum += 2.0 * j[k];
    }
    j.truncate(start + 1);
    j.iter_mut().for_each(|v| *v /= sum);
    j
}

/// `a_n = (2 − δ_{n0}) (−i)^n J_n(α)`, so that `Σ a_n T_n(x) = e^{−iαx}`
/// on `[−1, 1]`.
pub fn chebyshev_coeffs(alpha: f64, tolerance: f64) -> Vec<Complex64> {
    let phases = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0)];
    bessel_j_sequence(alpha, tolerance)
        .iter()
        .enumerate()
        .map(|(n, j)| phases[n % 4] * if n == 0 { *j } else { 2.0 * j })
        .collect()
}

/// How the spectral interval follows the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Renormalization {
    /// Widen the field-free interval by `|E(t_mid)| max|r|` in every step.
    PerStep,
    /// Widen once by `E₀ max|r|` for the whole run.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub dt: f64,
    pub duration: f64,
    pub tolerance: f64,
    pub renormalization: Renormalization,
    /// Observers run every `stride` steps.
    pub stride: usize,
}

impl PropagationConfig {
    pub fn new(dt: f64, duration: f64) -> Self {
        Self { dt, duration, tolerance: 1e-12, renormalization: Renormalization::PerStep, stride: 1 }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.duration >= 0.0) {
            return Err(Error::InvalidParameter("time step and duration must be positive"));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-8) {
            return Err(Error::InvalidParameter("Chebyshev tolerance must lie in (0, 1e-8]"));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("observer stride must be positive"));
        }
        Ok(())
    }
}

/// Amplitudes on the interior grid points, tilde convention.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionState {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl WavefunctionState {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes, time: 0.0 }
    }

    pub fn from_real(v: &[f64]) -> Self {
        Self::new(v.iter().map(|x| Complex64::new(*x, 0.0)).collect())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Scratch vectors of the three-term recursion plus the accumulator.
#[derive(Debug, Clone)]
pub struct Workspace {
    prev: Vec<Complex64>,
    cur: Vec<Complex64>,
    next: Vec<Complex64>,
    acc: Vec<Complex64>,
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        Self { prev: z.clone(), cur: z.clone(), next: z.clone(), acc: z }
    }
}

/// Diagnostics of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub field: f64,
    pub terms: usize,
    pub lo: f64,
    pub hi: f64,
    pub norm_change: f64,
}

/// Threshold on `|‖ψ′‖ − ‖ψ‖|` above which a step is reported as a bounds
/// violation.
pub const NORM_GROWTH_LIMIT: f64 = 1e-6;

/// Chebyshev stepper for one Hamiltonian; shareable across threads, each
/// trajectory brings its own [`Workspace`].
#[derive(Debug, Clone)]
pub struct ChebyshevPropagator<'a> {
    h: &'a SparseHamiltonian,
    bounds: SpectralBounds,
    pub tolerance: f64,
    pub renormalization: Renormalization,
    rmax: f64,
}

impl<'a> ChebyshevPropagator<'a> {
    /// `bounds` supplies the field-free enclosure; the dipole widening is
    /// recomputed from the field.
    pub fn new(h: &'a SparseHamiltonian, bounds: SpectralBounds, tolerance: f64, renormalization: Renormalization) -> Self {
        Self { h, bounds, tolerance, renormalization, rmax: h.max_abs_position() }
    }

    pub fn hamiltonian(&self) -> &SparseHamiltonian {
        self.h
    }

    pub fn step_bounds(&self, field: f64, pulse: &PulseSpec) -> SpectralBounds {
        let amplitude = match self.renormalization {
            Renormalization::PerStep => field.abs(),
            Renormalization::Global => pulse.max_abs(),
        };
        self.bounds.with_extent(amplitude * self.rmax)
    }

    /// Advances `psi` by `dt` with the field sampled at the step midpoint.
    pub fn step(&self, psi: &mut WavefunctionState, pulse: &PulseSpec, dt: f64, ws: &mut Workspace) -> Result<StepInfo> {
        let dim = self.h.dim();
        if psi.amplitudes.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: psi.amplitudes.len() });
        }
        let field = field_value(pulse, psi.time + 0.5 * dt);
        let b = self.step_bounds(field, pulse);
        let width = b.width();
        let alpha = 0.5 * width * dt;
        let coeffs = bessel_j_sequence(alpha, self.tolerance);
        let scale = 2.0 / width;
        let shift = b.lo + 0.5 * width;
        let norm_before = psi.norm_sqr().sqrt();

        let Workspace { prev, cur, next, acc } = ws;
        let x = &self.h.positions;
        let minus_i = Complex64::new(0.0, -1.0);
        // X φ = scale (Ã φ − (r E + shift) φ)
        let apply_x = |src: &[Complex64], dst: &mut [Complex64]| -> Result<()> {
            self.h.apply_into(src, dst)?;
            for i in 0..dim {
                dst[i] = (dst[i] - src[i] * (x[i] * field + shift)) * scale;
            }
            Ok(())
        };
        prev.copy_from_slice(&psi.amplitudes);
        for i in 0..dim {
            acc[i] = prev[i] * coeffs[0];
        }
        if coeffs.len() > 1 {
            apply_x(prev, cur)?;
            for i in 0..dim {
                cur[i] *= minus_i;
                acc[i] += cur[i] * (2.0 * coeffs[1]);
            }
        }
        for c in coeffs.iter().skip(2) {
            apply_x(cur, next)?;
            let w = 2.0 * c;
            for i in 0..dim {
                let v = next[i] * Complex64::new(0.0, -2.0) + prev[i];
                next[i] = v;
                acc[i] += v * w;
            }
            core::mem::swap(prev, cur);
            core::mem::swap(cur, next);
        }
        let phase = Complex64::from_polar(1.0, -shift * dt);
        for (p, a) in psi.amplitudes.iter_mut().zip(acc.iter()) {
            *p = a * phase;
        }
        psi.time += dt;
        let norm_after = psi.norm_sqr().sqrt();
        let norm_change = norm_after - norm_before;
        if !(norm_change.abs() <= NORM_GROWTH_LIMIT * norm_before.max(f64::MIN_POSITIVE)) {
            return Err(Error::BoundsViolation { time: psi.time, norm_change });
        }
        Ok(StepInfo { field, terms: coeffs.len(), lo: b.lo, hi: b.hi, norm_change })
    }
}

/// Callback run on the sampled states of a trajectory.
pub trait Observer {
    fn observe(&mut self, t: f64, field: f64, psi: &[Complex64]) -> Result<()>;
}

impl<F: FnMut(f64, f64, &[Complex64]) -> Result<()>> Observer for F {
    fn observe(&mut self, t: f64, field: f64, psi: &[Complex64]) -> Result<()> {
        self(t, field, psi)
    }
}

/// Per-sample record of a propagation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<f64>,
    pub norms: Vec<f64>,
    pub max_terms: usize,
    pub max_width: f64,
}

/// Steps `psi` over `[t, t + duration]`, sampling at `t` and every
/// `config.stride` steps.
pub fn propagate(
    h: &SparseHamiltonian,
    pulse: &PulseSpec,
    psi: &mut WavefunctionState,
    config: &PropagationConfig,
    bounds: &SpectralBounds,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    config.validate()?;
    pulse.validate()?;
    let prop = ChebyshevPropagator::new(h, *bounds, config.tolerance, config.renormalization);
    let mut ws = Workspace::new(h.dim());
    let mut traj = Trajectory::default();
    let record = |traj: &mut Trajectory, psi: &WavefunctionState, observers: &mut [&mut dyn Observer]| -> Result<()> {
        let field = field_value(pulse, psi.time);
        traj.times.push(psi.time);
        traj.fields.push(field);
        traj.norms.push(psi.norm_sqr().sqrt());
        for o in observers.iter_mut() {
            o.observe(psi.time, field, &psi.amplitudes)?;
        }
        Ok(())
    };
    record(&mut traj, psi, observers)?;
    let t0 = psi.time;
    let steps = config.steps();
    for s in 1..=steps {
        let info = prop.step(psi, pulse, config.dt, &mut ws)?;
        // Keep the clock free of accumulated rounding.
        psi.time = t0 + s as f64 * config.dt;
        traj.max_terms = traj.max_terms.max(info.terms);
        traj.max_width = traj.max_width.max(info.hi - info.lo);
        if s % config.stride == 0 {
            record(&mut traj, psi, observers)?;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{eigs, spectral_bounds, EigenOptions, Target};
    use crate::gll::gll_rule;
    use crate::hamiltonian::assemble;
    use crate::linalg::symmetric_eigen;
    use crate::mapping::{build_grid, DomainDecomposition};
    use crate::potential::FnPotential;
    use core::f64::consts::PI;

    fn box_h(n: usize, m: usize) -> SparseHamiltonian {
        let rule = gll_rule(n).unwrap();
        let b: Vec<f64> = (0..=m).map(|k| PI * k as f64 / m as f64).collect();
        let g = build_grid(&DomainDecomposition::from_breakpoints(b).unwrap(), &rule);
        assemble(&g, &rule, &FnPotential { value: |_| 0.0, derivative: |_| 0.0 }, 1.0).unwrap()
    }

    #[test]
    fn pulse_examples() {
        let p = PulseSpec { e0: 0.06, omega0: 0.1, fwhm: 206.5, center: 10.0 * PI, sign: 1.0, shift: 0.0 };
        assert!(field_value(&p, 10.0 * PI).abs() < 1e-15);
        assert!((p.envelope(p.center + 0.5 * p.fwhm) - 0.5).abs() < 1e-15);
        assert!((p.envelope(p.center - 0.5 * p.fwhm) - 0.5).abs() < 1e-15);
        let q = PulseSpec::centered(0.06, 0.1, 206.5);
        assert_eq!(q.center, 413.0);
        // Zero crossings every π/ω₀.
        for k in 1..20 {
            assert!(field_value(&q, k as f64 * PI / 0.1).abs() < 1e-15);
        }
        assert_eq!(field_value(&q.flipped(), 100.0), -field_value(&q, 100.0));
        assert_eq!(field_value(&q.shifted(7.0), 107.0), field_value(&q, 100.0));
        assert!(PulseSpec { sign: 0.5, ..q }.validate().is_err());
    }

    #[test]
    fn bessel_values_match_integral_oracle_and_libm() {
        for alpha in [0.1, 1.0, 7.3, 30.0, 250.0] {
            let j = bessel_j_sequence(alpha, 1e-14);
            assert!((j.len() as f64) > alpha);
            assert!(j.last().unwrap().abs() < 1e-14);
            // (1/π) ∫_0^π cos(nτ − α sin τ) dτ by the trapezoid rule, which
            // converges geometrically for this periodic integrand.
            let m = 4000;
            for n in [0usize, 1, 2, 5, j.len() / 2, j.len() - 1] {
                let mut s = 0.0;
                for k in 0..m {
                    let t = 2.0 * PI * k as f64 / m as f64;
                    s += (n as f64 * t - alpha * t.sin()).cos();
                }
                let oracle = s / m as f64;
                assert!((j[n] - oracle).abs() < 1e-13, "α={alpha} n={n}: {} vs {oracle}", j[n]);
                assert!((j[n] - libm::jn(n as i32, alpha)).abs() < 1e-13);
            }
        }
        assert_eq!(bessel_j_sequence(0.0, 1e-12), vec![1.0]);
    }

    #[test]
    fn truncation_length_grows_like_alpha() {
        for alpha in [10.0, 100.0, 1000.0] {
            let k = bessel_j_sequence(alpha, 1e-12).len() as f64;
            assert!(k > alpha && k < alpha + 12.0 * alpha.cbrt() + 20.0, "α={alpha}: {k}");
        }
    }

    #[test]
    fn chebyshev_series_reconstructs_the_exponential() {
        assert_eq!(chebyshev_coeffs(0.0, 1e-12), vec![Complex64::new(1.0, 0.0)]);
        for alpha in [0.5, 4.0, 40.0] {
            let a = chebyshev_coeffs(alpha, 1e-14);
            for k in 0..=100 {
                let x = -1.0 + 2.0 * k as f64 / 100.0;
                let (mut t0, mut t1) = (1.0, x);
                let mut s = a[0] + a.get(1).copied().unwrap_or_default() * x;
                for c in a.iter().skip(2) {
                    let t2 = 2.0 * x * t1 - t0;
                    s += c * t2;
                    t0 = t1;
                    t1 = t2;
                }
                let exact = Complex64::from_polar(1.0, -alpha * x);
                assert!((s - exact).norm() < 1e-12, "α={alpha} x={x}");
            }
        }
    }

    #[test]
    fn eigenstate_acquires_its_phase() {
        let h = box_h(6, 8);
        let b = spectral_bounds(&h, 0.0).unwrap();
        let e = eigs(&h, Target::Lowest(3), &EigenOptions::default()).unwrap();
        let prop = ChebyshevPropagator::new(&h, b, 1e-14, Renormalization::PerStep);
        let mut ws = Workspace::new(h.dim());
        let pulse = PulseSpec::field_free();
        let mut psi = WavefunctionState::from_real(e.vector(2));
        let dt = 0.1;
        for _ in 0..1000 {
            prop.step(&mut psi, &pulse, dt, &mut ws).unwrap();
        }
        let phase = Complex64::from_polar(1.0, -e.values[2] * 100.0);
        let err: f64 = psi.amplitudes.iter().zip(e.vector(2)).map(|(z, u)| (z - phase * u).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn wavepacket_matches_spectral_propagation() {
        let h = box_h(5, 10);
        let n = h.dim();
        let dense = symmetric_eigen(&h.matrix.to_dense(), n).unwrap();
        let b = spectral_bounds(&h, 0.0).unwrap();
        let packet: Vec<Complex64> = h
            .positions
            .iter()
            .zip(&h.gamma)
            .map(|(x, g)| Complex64::from_polar((-(x - 1.2f64).powi(2) * 4.0).exp() * g.sqrt(), 3.0 * x))
            .collect();
        let nrm: f64 = packet.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let packet: Vec<Complex64> = packet.iter().map(|z| z / nrm).collect();
        let mut psi = WavefunctionState::new(packet.clone());
        let cfg = PropagationConfig { dt: 0.02, duration: 2.0, tolerance: 1e-14, ..PropagationConfig::new(0.02, 2.0) };
        let traj = propagate(&h, &PulseSpec::field_free(), &mut psi, &cfg, &b, &mut []).unwrap();
        assert_eq!(traj.times.len(), 101);
        for w in traj.norms.windows(2) {
            assert!((w[1] - w[0]).abs() < 1e-10);
        }
        let mut oracle = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let u = dense.vector(k);
            let c: Complex64 = u.iter().zip(&packet).map(|(a, z)| z * a).sum();
            let c = c * Complex64::from_polar(1.0, -dense.values[k] * 2.0);
            oracle.iter_mut().zip(u).for_each(|(o, a)| *o += c * a);
        }
        let err: f64 = psi.amplitudes.iter().zip(&oracle).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn observers_see_every_sample() {
        let h = box_h(3, 4);
        let b = spectral_bounds(&h, 0.0).unwrap();
        let mut psi = WavefunctionState::from_real(&vec![0.0; h.dim()]);
        psi.amplitudes[3] = Complex64::new(1.0, 0.0);
        let mut seen = Vec::new();
        let mut obs = |t: f64, _f: f64, _p: &[Complex64]| -> Result<()> {
            seen.push(t);
            Ok(())
        };
        let cfg = PropagationConfig { stride: 2, ..PropagationConfig::new(0.1, 1.0) };
        propagate(&h, &PulseSpec::field_free(), &mut psi, &cfg, &b, &mut [&mut obs]).unwrap();
        assert_eq!(seen.len(), 6);
        assert!((seen[5] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_narrow_bounds_are_detected() {
        let h = box_h(6, 8);
        let mut b = spectral_bounds(&h, 0.0).unwrap();
        b = SpectralBounds { field_free_hi: b.field_free_hi * 0.3, hi: b.hi * 0.3, ..b };
        let prop = ChebyshevPropagator::new(&h, b, 1e-12, Renormalization::PerStep);
        let mut ws = Workspace::new(h.dim());
        let mut psi = WavefunctionState::from_real(&vec![1.0 / (h.dim() as f64).sqrt(); h.dim()]);
        let mut failed = false;
        for _ in 0..50 {
            if let Err(Error::BoundsViolation { .. }) = prop.step(&mut psi, &PulseSpec::field_free(), 0.5, &mut ws) {
                failed = true;
                break;
            }
        }
        assert!(failed);
    }
}
