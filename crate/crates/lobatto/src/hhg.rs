//! Driven propagation of an eigenbasis and the observables of arbitrary
//! superpositions built from it.
//!
//! The propagator is linear, so a superposition `Σ c_j φ_j` evolves into
//! `Σ c_j U φ_j`. Propagating each basis state once under a given field and
//! recording `D_jk(t) = ⟨Uφ_j|V'|Uφ_k⟩` gives `d̈(t) = c† D(t) c` for every
//! coefficient vector without further propagation.

use lobatto_core::eigen::{EigenResult, SpectralBounds};
use lobatto_core::hamiltonian::SparseHamiltonian;
use lobatto_core::observables::{estimate_cutoff, yield_functional, CutoffEstimate, SpectrumResult};
use lobatto_core::propagator::{
    field_value, ChebyshevPropagator, PropagationConfig, PulseSpec, WavefunctionState, Workspace,
};
use lobatto_core::superposition::DipoleSeries;
use lobatto_core::Complex64;
use rayon::prelude::*;

use crate::config::SpectrumConfig;
use crate::error::AppResult;
use crate::fft;

/// Projections `⟨φ_n|Uφ_j⟩` onto a set of bound states, sampled sparsely.
#[derive(Debug, Clone)]
pub struct Projections {
    pub times: Vec<f64>,
    pub bound: usize,
    pub basis: usize,
    /// Sample-major, then bound state, then basis state.
    data: Vec<Complex64>,
}

impl Projections {
    /// `1 − Σ_n |Σ_j c_j ⟨φ_n|Uφ_j⟩|²` at every sample.
    pub fn ionization(&self, c: &[Complex64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.bound * self.basis)
            .map(|p| {
                let kept: f64 = p
                    .chunks_exact(self.basis)
                    .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr())
                    .sum();
                1.0 - kept
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BasisRun {
    pub series: DipoleSeries,
    pub times: Vec<f64>,
    pub fields: Vec<f64>,
    pub projections: Option<Projections>,
    pub final_states: Vec<WavefunctionState>,
    pub max_terms: usize,
    pub max_width: f64,
    /// Largest `|‖ψ_j(T)‖ − 1|` over the basis.
    pub norm_drift: f64,
}

impl BasisRun {
    pub fn acceleration(&self, c: &[Complex64]) -> AppResult<Vec<f64>> {
        Ok(self.series.acceleration(c)?)
    }

    pub fn spectrum(&self, c: &[Complex64], cfg: &SpectrumConfig) -> AppResult<SpectrumResult> {
        Ok(fft::spectrum(&self.acceleration(c)?, self.series.dt, &cfg.options())?)
    }
}

/// Propagates `φ_0 … φ_{count−1}` of `basis` in lockstep under `pulse`,
/// sampling every `config.stride` steps. Bound-state projections are taken
/// every `ionization.1` steps when `ionization` is given.
pub fn propagate_basis(
    h: &SparseHamiltonian,
    basis: &EigenResult,
    count: usize,
    pulse: &PulseSpec,
    config: &PropagationConfig,
    bounds: &SpectralBounds,
    ionization: Option<(&EigenResult, usize)>,
) -> AppResult<BasisRun> {
    config.validate()?;
    pulse.validate()?;
    if count == 0 || count > basis.len() {
        return Err(lobatto_core::Error::CountExceedsDimension { count, dimension: basis.len() }.into());
    }
    let prop = ChebyshevPropagator::new(h, *bounds, config.tolerance, config.renormalization);
    let dim = h.dim();
    let mut states: Vec<(WavefunctionState, Workspace)> =
        (0..count).map(|j| (WavefunctionState::from_real(basis.vector(j)), Workspace::new(dim))).collect();
    let sample_dt = config.dt * config.stride as f64;
    let mut run = BasisRun {
        series: DipoleSeries::new(count, sample_dt),
        times: Vec::new(),
        fields: Vec::new(),
        projections: ionization.map(|(b, _)| Projections {
            times: Vec::new(),
            bound: b.len(),
            basis: count,
            data: Vec::new(),
        }),
        final_states: Vec::new(),
        max_terms: 0,
        max_width: 0.0,
        norm_drift: 0.0,
    };
    let t0 = states[0].0.time;
    let sample = |run: &mut BasisRun, states: &[(WavefunctionState, Workspace)], s: usize| -> AppResult<()> {
        let t = states[0].0.time;
        if s.is_multiple_of(config.stride) {
            let refs: Vec<&[Complex64]> = states.iter().map(|(p, _)| p.amplitudes.as_slice()).collect();
            run.series.push(&refs, &h.force_gradient)?;
            run.times.push(t);
            run.fields.push(field_value(pulse, t));
        }
        if let (Some((bound, stride)), Some(proj)) = (ionization, run.projections.as_mut()) {
            if s.is_multiple_of(stride) {
                proj.times.push(t);
                for n in 0..bound.len() {
                    let phi = bound.vector(n);
                    for (psi, _) in states {
                        proj.data.push(phi.iter().zip(&psi.amplitudes).map(|(u, z)| z * *u).sum());
                    }
                }
            }
        }
        Ok(())
    };
    sample(&mut run, &states, 0)?;
    for s in 1..=config.steps() {
        let infos = states
            .par_iter_mut()
            .map(|(psi, ws)| {
                let info = prop.step(psi, pulse, config.dt, ws)?;
                psi.time = t0 + s as f64 * config.dt;
                Ok(info)
            })
            .collect::<lobatto_core::Result<Vec<_>>>()?;
        for info in infos {
            run.max_terms = run.max_terms.max(info.terms);
            run.max_width = run.max_width.max(info.hi - info.lo);
        }
        sample(&mut run, &states, s)?;
    }
    run.norm_drift = states.iter().map(|(p, _)| (p.norm_sqr().sqrt() - 1.0).abs()).fold(0.0, f64::max);
    run.final_states = states.into_iter().map(|(p, _)| p).collect();
    Ok(run)
}

/// The yield band `[ω_c, 3ω_c]` in a.u.
pub fn yield_band(cutoff_order: f64, omega0: f64) -> (f64, f64) {
    (cutoff_order * omega0, 3.0 * cutoff_order * omega0)
}

pub fn cutoff(spec: &SpectrumResult, omega0: f64, cfg: &SpectrumConfig) -> AppResult<CutoffEstimate> {
    Ok(estimate_cutoff(spec, omega0, cfg.cutoff_fit)?)
}

/// `J` of the superposition `c` over `band`.
pub fn yield_of(run: &BasisRun, c: &[Complex64], cfg: &SpectrumConfig, band: (f64, f64)) -> AppResult<f64> {
    let spec = run.spectrum(c, cfg)?;
    Ok(yield_functional(&spec, band.0, band.1)?)
}

pub fn unit(count: usize, j: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); count];
    c[j] = Complex64::new(1.0, 0.0);
    c
}
