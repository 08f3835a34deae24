//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use lobatto_core::eigen::Backend;
use lobatto_core::mapping::MappingSpec;
use lobatto_core::observables::SpectrumOptions;
use lobatto_core::propagator::{PropagationConfig, PulseSpec, Renormalization};
use lobatto_core::superposition::SuperpositionSpec;
use lobatto_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_tag")]
    pub tag: String,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub potential: PotentialConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub eigen: EigenConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseConfig>,
    #[serde(default)]
    pub propagation: PropagationSection,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_states: Option<BoundStatesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<BenchmarkConfig>,
}

fn default_tag() -> String {
    "run".into()
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    SoftCoulomb { a: f64 },
    Morse { depth: f64, range: f64, r_e: f64 },
    Box,
    /// Two columns, `r` in bohr and `V` in hartree, interpolated by a natural
    /// cubic spline.
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub order: usize,
    pub r_min: f64,
    pub r_max: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub e_asy: f64,
    /// Size the half `[r_min, mid]` and reflect it.
    #[serde(default)]
    pub mirror: bool,
    /// Element count; `β` is adjusted to reach it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<usize>,
    /// Equal element size in bohr, replacing the adaptive mapping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    0.3
}

impl GridConfig {
    pub fn mapping(&self) -> MappingSpec {
        let mut spec = match self.uniform {
            Some(size) => MappingSpec::uniform(self.r_min, self.r_max, size),
            None => MappingSpec::new(self.r_min, self.r_max, self.beta, self.e_asy, self.mu),
        };
        spec.mu = self.mu;
        spec.mirror = self.mirror;
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Auto,
    Dense,
    BandBisection,
    Lanczos,
}

impl From<BackendChoice> for Backend {
    fn from(b: BackendChoice) -> Self {
        match b {
            BackendChoice::Auto => Backend::Auto,
            BackendChoice::Dense => Backend::Dense,
            BackendChoice::BandBisection => Backend::BandBisection,
            BackendChoice::Lanczos => Backend::Lanczos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    /// Number of lowest eigenpairs.
    #[serde(default = "default_states")]
    pub states: usize,
    #[serde(default = "default_backend")]
    pub backend: BackendChoice,
    #[serde(default = "default_eigen_tol")]
    pub tolerance: f64,
    /// Extra eigenvalue indices checked against an analytic level formula.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<usize>,
}

fn default_states() -> usize {
    3
}

fn default_backend() -> BackendChoice {
    BackendChoice::Auto
}

fn default_eigen_tol() -> f64 {
    1e-10
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { states: default_states(), backend: default_backend(), tolerance: default_eigen_tol(), levels: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub e0: f64,
    pub omega0: f64,
    pub fwhm: f64,
    /// Envelope centre; `2τ` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default = "one")]
    pub sign: f64,
    #[serde(default)]
    pub shift: f64,
}

impl PulseConfig {
    pub fn pulse(&self) -> PulseSpec {
        let mut p = PulseSpec::centered(self.e0, self.omega0, self.fwhm);
        if let Some(c) = self.center {
            p.center = c;
        }
        p.sign = self.sign;
        p.shift = self.shift;
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenormalizationChoice {
    PerStep,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Total time; `4τ` of the pulse when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default = "default_cheb_tol")]
    pub tolerance: f64,
    #[serde(default = "default_renorm")]
    pub renormalization: RenormalizationChoice,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Sampling stride of the ionization probability.
    #[serde(default = "default_ion_stride")]
    pub ionization_stride: usize,
}

fn default_dt() -> f64 {
    0.05
}

fn default_cheb_tol() -> f64 {
    1e-12
}

fn default_renorm() -> RenormalizationChoice {
    RenormalizationChoice::PerStep
}

fn default_stride() -> usize {
    1
}

fn default_ion_stride() -> usize {
    20
}

impl Default for PropagationSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            duration: None,
            tolerance: default_cheb_tol(),
            renormalization: default_renorm(),
            stride: default_stride(),
            ionization_stride: default_ion_stride(),
        }
    }
}

impl PropagationSection {
    pub fn resolve(&self, pulse: Option<&PulseConfig>) -> AppResult<PropagationConfig> {
        let duration = match (self.duration, pulse) {
            (Some(d), _) => d,
            (None, Some(p)) => 4.0 * p.fwhm,
            (None, None) => return Err(AppError::config("propagation.duration is required without a [pulse] table")),
        };
        Ok(PropagationConfig {
            dt: self.dt,
            duration,
            tolerance: self.tolerance,
            renormalization: match self.renormalization {
                RenormalizationChoice::PerStep => Renormalization::PerStep,
                RenormalizationChoice::Global => Renormalization::Global,
            },
            stride: self.stride,
        })
    }
}

/// Initial state: one eigenstate, the phase form `(|φ₀⟩ + e^{iϑ}|φ_j⟩)/√2`,
/// the rotation form `cos φ|φ₀⟩ + sin φ|φ₁⟩`, or explicit coefficients
/// `[index, re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    State(usize),
    Phase { j: usize, theta: f64 },
    Rotation { phi: f64 },
    Coefficients(Vec<(usize, f64, f64)>),
}

impl Default for InitialState {
    fn default() -> Self {
        Self::State(0)
    }
}

impl InitialState {
    pub fn spec(&self) -> SuperpositionSpec {
        match self {
            Self::State(j) => SuperpositionSpec::eigenstate(*j),
            Self::Phase { j, theta } => SuperpositionSpec::Phase { j: *j, theta: *theta },
            Self::Rotation { phi } => SuperpositionSpec::Rotation { phi: *phi },
            Self::Coefficients(c) => {
                SuperpositionSpec::Coefficients(c.iter().map(|(j, re, im)| (*j, Complex64::new(*re, *im))).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "default_ramp")]
    pub ramp_fraction: f64,
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
    /// Harmonic orders entering the cutoff fit.
    #[serde(default = "default_fit_orders")]
    pub cutoff_fit: (usize, usize),
    /// Lower edge `ω_c/ω₀` of the yield band; estimated from the
    /// ground-state run when absent. The upper edge is `3ω_c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_order: Option<f64>,
    /// Gabor window width in a.u.; a third of an optical cycle when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gabor_sigma: Option<f64>,
    #[serde(default = "default_gabor_omegas")]
    pub gabor_omegas: usize,
    #[serde(default = "default_gabor_stride")]
    pub gabor_stride: usize,
}

fn default_ramp() -> f64 {
    0.1
}

fn default_pad() -> usize {
    4
}

fn default_fit_orders() -> (usize, usize) {
    lobatto_core::observables::CUTOFF_FIT_ORDERS
}

fn default_gabor_omegas() -> usize {
    64
}

fn default_gabor_stride() -> usize {
    20
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            ramp_fraction: default_ramp(),
            pad_factor: default_pad(),
            cutoff_fit: default_fit_orders(),
            cutoff_order: None,
            gabor_sigma: None,
            gabor_omegas: default_gabor_omegas(),
            gabor_stride: default_gabor_stride(),
        }
    }
}

impl SpectrumConfig {
    pub fn options(&self) -> SpectrumOptions {
        SpectrumOptions { ramp_fraction: self.ramp_fraction, pad_factor: self.pad_factor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundStatesConfig {
    /// Element counts of an accuracy-versus-points sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParameter {
    /// Relative phase of `(|φ₀⟩ + e^{iϑ}|φ_j⟩)/√2`.
    Theta,
    /// Rotation angle of `cos φ|φ₀⟩ + sin φ|φ₁⟩`.
    Phi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub parameter: ScanParameter,
    #[serde(default = "default_scan_points")]
    pub points: usize,
    /// Partner state `j` of the phase form.
    #[serde(default = "one_usize")]
    pub partner: usize,
    /// Also scan with the field sign reversed.
    #[serde(default)]
    pub flip: bool,
}

fn default_scan_points() -> usize {
    33
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    #[serde(default = "two")]
    pub max_states: usize,
    #[serde(default = "default_plateau")]
    pub plateau: f64,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "default_line_tol")]
    pub line_tolerance: f64,
    /// Initial coefficients; equal weights on the first two states when
    /// empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guess: Vec<(f64, f64)>,
}

fn two() -> usize {
    2
}

fn default_plateau() -> f64 {
    1e-3
}

fn default_sweeps() -> usize {
    50
}

fn default_line_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// `(N, M)` pairs over `[r_min, r_max]`.
    pub pairs: Vec<(usize, usize)>,
    /// Use the adaptive mapping with `M` elements instead of equal sizes.
    #[serde(default)]
    pub mapped: bool,
    #[serde(default = "default_bench_steps")]
    pub steps: usize,
}

fn default_bench_steps() -> usize {
    20
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(format!("reading {}", path.display()), e))?;
        let mut cfg = Self::from_toml(&text).map_err(|source| AppError::Parse { path: path.to_path_buf(), source })?;
        // Tables are looked up next to the configuration file.
        if let PotentialConfig::Tabulated { path: table } = &mut cfg.potential {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    *table = dir.join(&*table);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> AppResult<()> {
        let g = &self.grid;
        if g.order == 0 {
            return Err(AppError::config("grid.order must be at least 1"));
        }
        if !(g.r_min < g.r_max) {
            return Err(AppError::config("grid.r_min must be below grid.r_max"));
        }
        if !(g.mu > 0.0) {
            return Err(AppError::config("grid.mu must be positive"));
        }
        if g.uniform.is_none() && !(g.beta > 0.0 && g.beta <= 1.0) {
            return Err(AppError::config("grid.beta must lie in (0, 1]"));
        }
        if let Some(0) = g.elements {
            return Err(AppError::config("grid.elements must be positive"));
        }
        if self.eigen.states == 0 {
            return Err(AppError::config("eigen.states must be positive"));
        }
        if let Some(p) = &self.pulse {
            p.pulse().validate().map_err(|e| AppError::config(format!("pulse: {e}")))?;
        }
        if !(self.propagation.dt > 0.0) || self.propagation.stride == 0 || self.propagation.ionization_stride == 0 {
            return Err(AppError::config("propagation.dt and strides must be positive"));
        }
        if !(self.spectrum.ramp_fraction >= 0.0 && self.spectrum.ramp_fraction <= 0.5) || self.spectrum.pad_factor == 0 {
            return Err(AppError::config("spectrum.ramp_fraction must lie in [0, 0.5] and pad_factor be positive"));
        }
        if let Some(s) = &self.scan {
            if s.points < 2 {
                return Err(AppError::config("scan.points must be at least 2"));
            }
        }
        if let Some(o) = &self.optimize {
            if o.max_states == 0 || o.guess.len() > o.max_states {
                return Err(AppError::config("optimize.guess must not exceed optimize.max_states"));
            }
        }
        Ok(())
    }
}
