//! Grid, Hamiltonian and field-free eigenbasis built from a configuration.

use lobatto_core::eigen::{eigs, spectral_bounds, EigenOptions, EigenResult, SpectralBounds, Target};
use lobatto_core::gll::{gll_rule, GllRule};
use lobatto_core::hamiltonian::{assemble, SparseHamiltonian};
use lobatto_core::mapping::{build_grid, decompose, decompose_with_count, DomainDecomposition, GlobalGrid};
use lobatto_core::potential::PotentialKind;

use crate::config::{EigenConfig, GridConfig, PotentialConfig, RunConfig};
use crate::error::{AppError, AppResult};
use crate::io::read_tabulated;

pub fn load_potential(cfg: &PotentialConfig) -> AppResult<PotentialKind> {
    Ok(match cfg {
        PotentialConfig::SoftCoulomb { a } => PotentialKind::SoftCoulomb { a: *a },
        PotentialConfig::Morse { depth, range, r_e } => PotentialKind::Morse { depth: *depth, range: *range, r_e: *r_e },
        PotentialConfig::Box => PotentialKind::Box,
        PotentialConfig::Tabulated { path } => PotentialKind::Tabulated(read_tabulated(path)?),
    })
}

pub struct System {
    pub potential: PotentialKind,
    pub mu: f64,
    pub rule: GllRule,
    pub decomposition: DomainDecomposition,
    pub grid: GlobalGrid,
    pub hamiltonian: SparseHamiltonian,
}

impl System {
    pub fn build(potential: PotentialKind, grid: &GridConfig) -> AppResult<Self> {
        let rule = gll_rule(grid.order)?;
        let spec = grid.mapping();
        let decomposition = match grid.elements {
            Some(m) if grid.uniform.is_none() => decompose_with_count(&potential, &spec, m)?,
            Some(m) => {
                let b = (0..=m).map(|k| grid.r_min + (grid.r_max - grid.r_min) * k as f64 / m as f64).collect();
                DomainDecomposition::from_breakpoints(b)?
            }
            None => decompose(&potential, &spec)?,
        };
        let g = build_grid(&decomposition, &rule);
        let hamiltonian = assemble(&g, &rule, &potential, grid.mu)?;
        Ok(Self { potential, mu: grid.mu, rule, decomposition, grid: g, hamiltonian })
    }

    pub fn from_config(cfg: &RunConfig) -> AppResult<Self> {
        Self::build(load_potential(&cfg.potential)?, &cfg.grid)
    }

    pub fn points(&self) -> usize {
        self.grid.len()
    }

    pub fn lowest_states(&self, eigen: &EigenConfig, count: usize, seed: u64) -> AppResult<EigenResult> {
        if count > self.hamiltonian.dim() {
            return Err(AppError::config(format!(
                "{count} states requested from a Hamiltonian of dimension {}",
                self.hamiltonian.dim()
            )));
        }
        let opts = EigenOptions { backend: eigen.backend.into(), tolerance: eigen.tolerance, seed, ..Default::default() };
        Ok(eigs(&self.hamiltonian, Target::Lowest(count), &opts)?)
    }

    /// Every eigenpair with negative energy.
    pub fn bound_states(&self, eigen: &EigenConfig, seed: u64) -> AppResult<EigenResult> {
        let opts = EigenOptions { backend: eigen.backend.into(), tolerance: eigen.tolerance, seed, ..Default::default() };
        let lo = self.hamiltonian.min_potential().min(0.0) - 1.0;
        Ok(eigs(&self.hamiltonian, Target::Window { lo, hi: 0.0 }, &opts)?)
    }

    pub fn bounds(&self) -> AppResult<SpectralBounds> {
        Ok(spectral_bounds(&self.hamiltonian, 0.0)?)
    }

    /// Analytic level `n`, when the potential has one.
    pub fn exact_level(&self, n: usize) -> Option<f64> {
        match self.potential {
            PotentialKind::Morse { .. } => self.potential.morse_level(n, self.mu),
            PotentialKind::Box => {
                let l = self.grid.points[self.grid.len() - 1] - self.grid.points[0];
                let k = (n + 1) as f64 * std::f64::consts::PI / l;
                Some(k * k / (2.0 * self.mu))
            }
            _ => None,
        }
    }
}
