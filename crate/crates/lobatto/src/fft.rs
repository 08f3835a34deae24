use lobatto_core::observables::{harmonic_spectrum, SpectrumOptions, SpectrumResult};
use lobatto_core::Complex64;
use rustfft::FftPlanner;

/// In-place forward transform `X_k = Σ_n x_n e^{−2πi kn/L}`.
pub fn forward(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

pub fn spectrum(series: &[f64], dt: f64, options: &SpectrumOptions) -> lobatto_core::Result<SpectrumResult> {
    harmonic_spectrum(series, dt, options, forward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_direct_sum() {
        let x: Vec<Complex64> = (0..64).map(|k| Complex64::new((0.3 * k as f64).sin(), (k % 5) as f64)).collect();
        let mut y = x.clone();
        forward(&mut y);
        for (k, yk) in y.iter().enumerate() {
            let d: Complex64 =
                x.iter().enumerate().map(|(n, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * n) as f64 / 64.0)).sum();
            assert!((d - yk).norm() < 1e-10);
        }
    }
}
