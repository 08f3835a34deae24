//! Dipole acceleration, harmonic spectra, Gabor profiles, ionization and
//! the cutoff-band yield.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::eigen::EigenResult;
use crate::{Error, Result};

/// `⟨ψ|V'|ψ⟩ = Σ_i |ψ̃_i|² V'(r_i)`. The `−E(t)` force term is not included.
pub fn dipole_acceleration(psi: &[Complex64], dv: &[f64]) -> f64 {
    psi.iter().zip(dv).map(|(z, w)| z.norm_sqr() * w).sum()
}

/// `⟨u|V'|v⟩` for real tilde-convention vectors.
pub fn transition_element(u: &[f64], v: &[f64], dv: &[f64]) -> f64 {
    u.iter().zip(v).zip(dv).map(|((a, b), w)| a * b * w).sum()
}

/// `2|c_i||c_j| cos(ω_ij t − ϑ) ⟨φ_i|V'|φ_j⟩` with `ω_ij = λ_j − λ_i`.
#[allow(clippy::too_many_arguments)]
pub fn field_free_acceleration(
    ci: f64,
    cj: f64,
    theta: f64,
    states: &EigenResult,
    i: usize,
    j: usize,
    dv: &[f64],
    t: f64,
) -> Result<f64> {
    for k in [i, j] {
        if k >= states.len() {
            return Err(Error::IndexOutOfRange { index: k, len: states.len() });
        }
    }
    let omega = states.values[j] - states.values[i];
    let m = transition_element(states.vector(i), states.vector(j), dv);
    Ok(2.0 * ci.abs() * cj.abs() * (omega * t - theta).cos() * m)
}

/// `1 − Σ_n |⟨φ_n|ψ⟩|²` over the states of `bound` with negative energy.
pub fn ionization_probability(psi: &[Complex64], bound: &EigenResult) -> f64 {
    let mut p = 0.0;
    for k in 0..bound.len() {
        if bound.values[k] >= 0.0 {
            continue;
        }
        let c: Complex64 = bound.vector(k).iter().zip(psi).map(|(u, z)| z * u).sum();
        p += c.norm_sqr();
    }
    1.0 - p
}

/// Apodization and zero padding applied before the transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Fraction of the record covered by each cos⁴ ramp.
    pub ramp_fraction: f64,
    /// The record is zero-padded to the next power of two at or above
    /// `pad_factor` times its length.
    pub pad_factor: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { ramp_fraction: 0.1, pad_factor: 4 }
    }
}

/// Window weights: `sin⁴(π s / 2)` rising over the first `ramp_fraction`
/// of the record, mirrored at the end, 1 in between.
pub fn window(n: usize, ramp_fraction: f64) -> Vec<f64> {
    let ramp = ((n as f64) * ramp_fraction).floor() as usize;
    let mut w = vec![1.0; n];
    for k in 0..ramp.min(n / 2) {
        let s = (PI * 0.5 * k as f64 / ramp as f64).sin();
        let v = s * s * s * s;
        w[k] = v;
        w[n - 1 - k] = v;
    }
    w
}

pub fn padded_len(n: usize, pad_factor: usize) -> usize {
    (n.max(1) * pad_factor.max(1)).next_power_of_two()
}

/// Harmonic spectrum on the positive-frequency bins.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// `ω_k = 2πk/(L Δt)`, `k = 1 … L/2`.
    pub omega: Vec<f64>,
    /// `|d̈(ω)|²/ω²`.
    pub s: Vec<f64>,
    /// `|d̈(ω)|²`.
    pub power: Vec<f64>,
    pub dt: f64,
    pub samples: usize,
    pub padded_len: usize,
    pub options: SpectrumOptions,
    /// `Σ|d̈_w(t)|² Δt` of the windowed record.
    pub parseval_time: f64,
    /// `Σ_k |d̈(ω_k)|² Δω / 2π` over all bins.
    pub parseval_frequency: f64,
}

impl SpectrumResult {
    pub fn resolution(&self) -> f64 {
        2.0 * PI / (self.padded_len as f64 * self.dt)
    }
}

/// `S(ω) = |d̈(ω)|²/ω²` with `d̈(ω) = Δt Σ_n w_n d̈_n e^{−iω t_n}`.
///
/// `dft` must replace its argument by its forward discrete Fourier transform
/// `X_k = Σ_n x_n e^{−2πi kn/L}`.
pub fn harmonic_spectrum<F>(series: &[f64], dt: f64, options: &SpectrumOptions, dft: F) -> Result<SpectrumResult>
where
    F: FnOnce(&mut [Complex64]),
{
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("sampling step must be positive"));
    }
    let n = series.len();
    let len = padded_len(n, options.pad_factor);
    let w = window(n, options.ramp_fraction);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut parseval_time = 0.0;
    for k in 0..n {
        let v = series[k] * w[k];
        buf[k] = Complex64::new(v, 0.0);
        parseval_time += v * v * dt;
    }
    dft(&mut buf);
    let dw = 2.0 * PI / (len as f64 * dt);
    let parseval_frequency = buf.iter().map(|z| (z * dt).norm_sqr()).sum::<f64>() * dw / (2.0 * PI);
    let half = len / 2;
    let mut omega = Vec::with_capacity(half);
    let mut s = Vec::with_capacity(half);
    let mut power = Vec::with_capacity(half);
    for (k, z) in buf.iter().enumerate().take(half + 1).skip(1) {
        let om = k as f64 * dw;
        let p = (z * dt).norm_sqr();
        omega.push(om);
        power.push(p);
        s.push(p / (om * om));
    }
    Ok(SpectrumResult { omega, s, power, dt, samples: n, padded_len: len, options: *options, parseval_time, parseval_frequency })
}

/// Trapezoid integral of `|d̈(ω)|²` over `[lo, hi]`, interpolating linearly
/// at the band edges.
pub fn yield_functional(spec: &SpectrumResult, lo: f64, hi: f64) -> Result<f64> {
    band_integral(&spec.omega, &spec.power, lo, hi)
}

/// Trapezoid integral of tabulated `y(x)` over `[lo, hi] ⊂ [x_0, x_last]`.
pub fn band_integral(x: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if x.len() < 2 || !(lo <= hi) || lo < x[0] || hi > x[x.len() - 1] {
        return Err(Error::BandOutsideAxis { lower: lo, upper: hi });
    }
    let at = |t: f64| -> f64 {
        let i = x.partition_point(|v| *v <= t).clamp(1, x.len() - 1);
        let (x0, x1) = (x[i - 1], x[i]);
        y[i - 1] + (y[i] - y[i - 1]) * (t - x0) / (x1 - x0)
    };
    if lo == hi {
        return Ok(0.0);
    }
    let mut pts = vec![(lo, at(lo))];
    for (xi, yi) in x.iter().zip(y) {
        if *xi > lo && *xi < hi {
            pts.push((*xi, *yi));
        }
    }
    pts.push((hi, at(hi)));
    Ok(pts.windows(2).map(|p| 0.5 * (p[1].0 - p[0].0) * (p[0].1 + p[1].1)).sum())
}

/// `(I_p + 3.17 U_p)/ω₀` with `U_p = E₀²/(4ω₀²)`.
pub fn standard_cutoff_order(ip: f64, e0: f64, omega0: f64) -> f64 {
    (ip + 3.17 * e0 * e0 / (4.0 * omega0 * omega0)) / omega0
}

/// Cutoff estimate from the harmonic envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffEstimate {
    /// Cutoff in units of `ω₀`: the end of the plateau segment.
    pub order: f64,
    /// Start of the noise floor segment.
    pub floor_start: f64,
    /// Fitted orders and `log10` envelope values.
    pub orders: Vec<f64>,
    pub envelope: Vec<f64>,
    /// Slopes (decades per order) of plateau, fall-off and floor.
    pub slopes: [f64; 3],
}

/// Harmonic orders over which the cutoff fit is made.
pub const CUTOFF_FIT_ORDERS: (usize, usize) = (5, 40);

/// Fits a continuous three-segment linear function (plateau, fall-off,
/// floor) to the `log10` envelope of `S` and returns its first breakpoint.
///
/// The envelope at integer order `q` is the largest `S` with
/// `ω/ω₀ ∈ [q − 1, q + 1]`. Breakpoints are searched on a 0.05-order grid.
pub fn estimate_cutoff(spec: &SpectrumResult, omega0: f64, orders: (usize, usize)) -> Result<CutoffEstimate> {
    let (lo, hi) = orders;
    if hi < lo + 4 {
        return Err(Error::InvalidParameter("cutoff fit range needs at least five orders"));
    }
    let top = spec.omega[spec.omega.len() - 1] / omega0;
    if (hi as f64 + 1.0) > top {
        return Err(Error::BandOutsideAxis { lower: lo as f64 * omega0, upper: (hi + 1) as f64 * omega0 });
    }
    let mut qs = Vec::new();
    let mut env = Vec::new();
    for q in lo..=hi {
        let (a, b) = ((q as f64 - 1.0) * omega0, (q as f64 + 1.0) * omega0);
        let m = spec
            .omega
            .iter()
            .zip(&spec.s)
            .filter(|(w, _)| **w >= a && **w <= b)
            .map(|(_, s)| *s)
            .fold(0.0, f64::max);
        qs.push(q as f64);
        env.push(m.max(f64::MIN_POSITIVE).log10());
    }
    let (qa, qb) = (lo as f64, hi as f64);
    let steps = (((qb - qa) / 0.05).round()) as usize;
    let mut best: Option<(f64, f64, f64, Vector4<f64>)> = None;
    for i in 1..steps {
        let b1 = qa + 0.05 * i as f64;
        for k in i + 1..steps {
            let b2 = qa + 0.05 * k as f64;
            let basis = |q: f64| Vector4::new(1.0, q - qa, (q - b1).max(0.0), (q - b2).max(0.0));
            let mut ata = Matrix4::zeros();
            let mut atb = Vector4::zeros();
            for (q, y) in qs.iter().zip(&env) {
                let f = basis(*q);
                ata += f * f.transpose();
                atb += f * *y;
            }
            let Some(p) = ata.lu().solve(&atb) else { continue };
            let sse: f64 = qs.iter().zip(&env).map(|(q, y)| (basis(*q).dot(&p) - y).powi(2)).sum();
            if best.as_ref().is_none_or(|b| sse < b.0 - 1e-12) {
                best = Some((sse, b1, b2, p));
            }
        }
    }
    let (_, b1, b2, p) = best.ok_or(Error::Degenerate("cutoff fit failed"))?;
    Ok(CutoffEstimate {
        order: b1,
        floor_start: b2,
        orders: qs,
        envelope: env,
        slopes: [p[1], p[1] + p[2], p[1] + p[2] + p[3]],
    })
}

/// Gaussian-window time-frequency map.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborResult {
    pub times: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Row-major `times × omegas` array of `|∫ d̈(t') g(t' − t) e^{−iωt'} dt'|²`.
    pub values: Vec<f64>,
    /// Band integral of `values` at each time.
    pub profile: Vec<f64>,
    pub sigma: f64,
}

/// Window width of one third of an optical cycle.
pub fn default_gabor_sigma(omega0: f64) -> f64 {
    2.0 * PI / omega0 / 3.0
}

/// Sliding Gaussian transform with `g(s) = exp(−s²/(2σ²))` truncated at
/// `±5σ`, at `n_omega` frequencies spanning `band` and every `time_stride`-th
/// sample.
pub fn gabor_profile(
    series: &[f64],
    dt: f64,
    sigma: f64,
    band: (f64, f64),
    n_omega: usize,
    time_stride: usize,
) -> Result<GaborResult> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter("Gabor width must be positive"));
    }
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(band.0 < band.1) || n_omega < 2 {
        return Err(Error::InvalidParameter("Gabor band needs lo < hi and two frequencies"));
    }
    let stride = time_stride.max(1);
    let omegas: Vec<f64> = (0..n_omega).map(|k| band.0 + (band.1 - band.0) * k as f64 / (n_omega - 1) as f64).collect();
    let half = (5.0 * sigma / dt).ceil() as isize;
    let g: Vec<f64> = (-half..=half).map(|s| (-((s as f64 * dt).powi(2)) / (2.0 * sigma * sigma)).exp()).collect();
    // e^{−iωt} at the window offsets, per frequency; phases of the centre
    // sample are applied separately.
    let rotors: Vec<Vec<Complex64>> = omegas
        .iter()
        .map(|w| (-half..=half).map(|s| Complex64::from_polar(1.0, -w * s as f64 * dt)).collect())
        .collect();
    let n = series.len() as isize;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut profile = Vec::new();
    let mut centre = 0isize;
    while centre < n {
        let lo = (-half).max(-centre);
        let hi = half.min(n - 1 - centre);
        let mut row = Vec::with_capacity(n_omega);
        for r in &rotors {
            let mut acc = Complex64::new(0.0, 0.0);
            for s in lo..=hi {
                let idx = (s + half) as usize;
                acc += r[idx] * (series[(centre + s) as usize] * g[idx]);
            }
            row.push((acc * dt).norm_sqr());
        }
        let dw = (band.1 - band.0) / (n_omega - 1) as f64;
        let integral = row.windows(2).map(|p| 0.5 * dw * (p[0] + p[1])).sum();
        times.push(centre as f64 * dt);
        values.extend_from_slice(&row);
        profile.push(integral);
        centre += stride as isize;
    }
    Ok(GaborResult { times, omegas, values, profile, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &mut [Complex64]) {
        let n = x.len();
        let src = x.to_vec();
        for (k, out) in x.iter_mut().enumerate() {
            *out = src
                .iter()
                .enumerate()
                .map(|(m, v)| v * Complex64::from_polar(1.0, -2.0 * PI * ((k * m) % n) as f64 / n as f64))
                .sum();
        }
    }

    #[test]
    fn window_shape() {
        let w = window(100, 0.1);
        assert_eq!(w[0], 0.0);
        assert_eq!(w[99], 0.0);
        assert!(w[10..90].iter().all(|v| *v == 1.0));
        assert!(w[1..10].windows(2).all(|p| p[1] > p[0]));
        assert_eq!(padded_len(1000, 4), 4096);
        assert_eq!(padded_len(1024, 4), 4096);
    }

    #[test]
    fn single_tone_and_parseval() {
        let dt = 0.5;
        let w1 = 0.8;
        let series: Vec<f64> = (0..2048).map(|k| (w1 * k as f64 * dt).cos()).collect();
        let spec = harmonic_spectrum(&series, dt, &SpectrumOptions::default(), naive_dft).unwrap();
        let (imax, _) = spec.power.iter().enumerate().fold((0, 0.0), |m, (i, p)| if *p > m.1 { (i, *p) } else { m });
        assert!((spec.omega[imax] - w1).abs() <= spec.resolution());
        let peak = spec.power[imax];
        // Away from the main lobe everything is 60 dB down.
        for (w, p) in spec.omega.iter().zip(&spec.power) {
            if (w - w1).abs() > 0.35 {
                assert!(*p < 1e-6 * peak, "ω={w}: {}", p / peak);
            }
        }
        assert!((spec.parseval_time - spec.parseval_frequency).abs() < 1e-10 * spec.parseval_time);
        assert!((spec.resolution() - 2.0 * PI / (8192.0 * dt)).abs() < 1e-15);
        assert!(spec.s.iter().all(|v| *v >= 0.0));
        assert!(matches!(harmonic_spectrum(&[], dt, &SpectrumOptions::default(), naive_dft), Err(Error::EmptySeries)));
    }

    #[test]
    fn band_integrals() {
        let x: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let v = band_integral(&x, &y, 1.05, 7.33).unwrap();
        let exact = (7.33f64.powi(2) + 7.33) - (1.05f64.powi(2) + 1.05);
        assert!((v - exact).abs() < 1e-12);
        assert_eq!(band_integral(&x, &y, 3.0, 3.0).unwrap(), 0.0);
        assert!(band_integral(&x, &vec![0.0; 101], 1.0, 2.0).unwrap() == 0.0);
        assert!(matches!(band_integral(&x, &y, -1.0, 2.0), Err(Error::BandOutsideAxis { .. })));
        assert!(matches!(band_integral(&x, &y, 2.0, 11.0), Err(Error::BandOutsideAxis { .. })));
    }

    #[test]
    fn cutoff_of_a_synthetic_envelope() {
        // log10 S: flat to order 12, falling 0.8 decades per order to a floor.
        let omega0 = 0.1;
        let omega: Vec<f64> = (1..=6000).map(|k| k as f64 * 0.001).collect();
        let s: Vec<f64> = omega
            .iter()
            .map(|w| {
                let q = w / omega0;
                let env = if q < 12.0 { 0.0 } else { -0.8 * (q - 12.0) };
                10f64.powf(env.max(-6.0))
            })
            .collect();
        let spec = SpectrumResult {
            power: s.iter().zip(&omega).map(|(s, w)| s * w * w).collect(),
            omega,
            s,
            dt: 0.05,
            samples: 0,
            padded_len: 0,
            options: SpectrumOptions::default(),
            parseval_time: 0.0,
            parseval_frequency: 0.0,
        };
        let c = estimate_cutoff(&spec, omega0, CUTOFF_FIT_ORDERS).unwrap();
        // The [q−1, q+1] envelope shifts the knee by one order.
        assert!((c.order - 13.0).abs() < 0.2, "{}", c.order);
        assert!((c.floor_start - 20.5).abs() < 0.3, "{}", c.floor_start);
        assert!((c.slopes[1] + 0.8).abs() < 0.05);
        assert!((standard_cutoff_order(0.5, 0.06, 0.1) - 7.853).abs() < 1e-3);
    }

    #[test]
    fn gabor_localizes_a_burst() {
        let dt = 0.1;
        let (t1, t2) = (300.0, 360.0);
        let series: Vec<f64> = (0..8000)
            .map(|k| {
                let t = k as f64 * dt;
                if (t1..=t2).contains(&t) { (1.5 * t).cos() } else { 0.0 }
            })
            .collect();
        let sigma = 5.0;
        let g = gabor_profile(&series, dt, sigma, (1.3, 1.7), 9, 10).unwrap();
        let (imax, _) = g.profile.iter().enumerate().fold((0, 0.0), |m, (i, p)| if *p > m.1 { (i, *p) } else { m });
        let tmax = g.times[imax];
        assert!(tmax >= t1 - 2.0 * sigma && tmax <= t2 + 2.0 * sigma);
        let peak = g.profile[imax];
        for (t, p) in g.times.iter().zip(&g.profile) {
            if *t < t1 - 6.0 * sigma || *t > t2 + 6.0 * sigma {
                assert!(*p < 1e-9 * peak);
            }
        }
        assert_eq!(g.values.len(), g.times.len() * 9);
        let z = gabor_profile(&vec![0.0; 100], dt, sigma, (1.0, 2.0), 4, 1).unwrap();
        assert!(z.profile.iter().all(|v| *v == 0.0));
        assert!(gabor_profile(&series, dt, 0.0, (1.0, 2.0), 4, 1).is_err());
    }
}
