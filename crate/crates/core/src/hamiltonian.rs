//! Banded multi-domain Hamiltonian in the mass-weighted representation, and
//! finite-difference reference operators.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul};
use num_traits::Zero;

use crate::gll::{stiffness_matrix, GllRule, StiffnessMatrix};
use crate::linalg::SymmetricBand;
use crate::mapping::GlobalGrid;
use crate::potential::Potential;
use crate::{Error, Result};

/// Weak-form block `a^k(v_i, v_j)` of one element, before renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementBlock {
    pub element: usize,
    pub size: usize,
    pub data: Vec<f64>,
}

impl ElementBlock {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }
}

/// `S/(2μ𝒥_k) + diag(V(r_j) 𝒥_k w_j)` for 0-based element `k`.
pub fn elemental_block<P: Potential + ?Sized>(
    k: usize,
    grid: &GlobalGrid,
    rule: &GllRule,
    stiffness: &StiffnessMatrix,
    v: &P,
    mu: f64,
) -> Result<ElementBlock> {
    if grid.order != rule.order || stiffness.size != rule.len() {
        return Err(Error::DimensionMismatch { expected: grid.order + 1, found: stiffness.size });
    }
    if k >= grid.num_elements {
        return Err(Error::IndexOutOfRange { index: k, len: grid.num_elements });
    }
    let size = rule.len();
    let jac = grid.jacobians[k];
    let kin = 1.0 / (2.0 * mu * jac);
    let mut data: Vec<f64> = stiffness.data.iter().map(|s| kin * s).collect();
    for j in 0..size {
        let r = grid.points[grid.global_index(k, j)];
        data[j * size + j] += v.checked_value(r)? * jac * rule.weights[j];
    }
    Ok(ElementBlock { element: k, size, data })
}

/// Sum of elemental blocks over the whole grid, as a band matrix of
/// bandwidth `N` on all `N·M + 1` points; no renormalization, no boundary
/// conditions.
pub fn assemble_weak_form<P: Potential + ?Sized>(grid: &GlobalGrid, rule: &GllRule, v: &P, mu: f64) -> Result<SymmetricBand> {
    if grid.order != rule.order {
        return Err(Error::DimensionMismatch { expected: grid.order, found: rule.order });
    }
    let n = rule.order;
    let s = stiffness_matrix(rule);
    let mut a = SymmetricBand::zeros(grid.len(), n);
    for k in 0..grid.num_elements {
        let block = elemental_block(k, grid, rule, &s, v, mu)?;
        let base = grid.global_index(k, 0);
        for i in 0..=n {
            for j in i..=n {
                a.add(base + i, base + j, block.get(i, j));
            }
        }
    }
    Ok(a)
}

/// Boundary treatment of the outer grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
}

/// Renormalized Hamiltonian `Ã` on the interior points, together with the
/// diagonal data the propagator and observables need.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    pub matrix: SymmetricBand,
    /// Interior positions `r_i` (bohr).
    pub positions: Vec<f64>,
    /// `V(r_i)` (hartree).
    pub potential: Vec<f64>,
    /// `V'(r_i)` (hartree/bohr).
    pub force_gradient: Vec<f64>,
    /// Merged quadrature weights `γ_i` (bohr).
    pub gamma: Vec<f64>,
    pub order: usize,
    pub num_elements: usize,
    pub boundary: Boundary,
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply<T>(&self, psi: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        self.matrix.apply(psi)
    }

    pub fn apply_into<T>(&self, psi: &[T], out: &mut [T]) -> Result<()>
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        self.matrix.apply_into(psi, out)
    }

    pub fn min_potential(&self) -> f64 {
        self.potential.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_position(&self) -> f64 {
        self.positions.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Upper-triangle slots held by the band storage.
    pub fn stored_entries(&self) -> usize {
        self.matrix.stored_entries()
    }

    /// Upper-triangle entries that are nonzero.
    pub fn structural_nonzeros(&self) -> usize {
        self.matrix.nonzero_entries()
    }
}

/// Assembles, renormalizes by `1/√(γ_i γ_j)` and removes the two outer points.
/// The result has dimension `N·M − 1`.
pub fn assemble<P: Potential + ?Sized>(grid: &GlobalGrid, rule: &GllRule, v: &P, mu: f64) -> Result<SparseHamiltonian> {
    if grid.order != rule.order {
        return Err(Error::DimensionMismatch { expected: grid.order, found: rule.order });
    }
    let total = grid.len();
    if total < 3 {
        return Err(Error::Degenerate("no interior points left after Dirichlet conditions"));
    }
    let n = rule.order;
    let a = assemble_weak_form(grid, rule, v, mu)?;
    let dim = total - 2;
    let scale: Vec<f64> = grid.gamma.iter().map(|g| 1.0 / g.sqrt()).collect();
    let mut m = SymmetricBand::zeros(dim, n);
    for i in 0..dim {
        for j in i..dim.min(i + n + 1) {
            let (gi, gj) = (i + 1, j + 1);
            m.set(i, j, a.get(gi, gj) * scale[gi] * scale[gj]);
        }
    }
    let positions: Vec<f64> = grid.points[1..total - 1].to_vec();
    let potential = positions.iter().map(|r| v.value(*r)).collect();
    let force_gradient = positions.iter().map(|r| v.derivative(*r)).collect();
    Ok(SparseHamiltonian {
        matrix: m,
        positions,
        potential,
        force_gradient,
        gamma: grid.gamma[1..total - 1].to_vec(),
        order: n,
        num_elements: grid.num_elements,
        boundary: Boundary::Dirichlet,
    })
}

/// Band-storage slot count `(NM+1)(N+1) − N(N+1)/2 − 2(N+1)`, or `None`
/// for the degenerate `N = M = 1` case where it would be negative.
pub fn nnz_count(order: usize, elements: usize) -> Option<usize> {
    let (n, m) = (order as i64, elements as i64);
    let c = (n * m + 1) * (n + 1) - n * (n + 1) / 2 - 2 * (n + 1);
    (c >= 0 && !(order == 1 && elements == 1)).then_some(c as usize)
}

/// Central finite-difference Hamiltonian of accuracy order 2 or 4 on the
/// uniform interior `points`, with walls one step past either end. The
/// fourth-order stencil reaches past the wall; there the wavefunction is
/// continued as an odd image.
pub fn fd_hamiltonian<P: Potential + ?Sized>(order: usize, points: &[f64], v: &P, mu: f64) -> Result<SparseHamiltonian> {
    if order != 2 && order != 4 {
        return Err(Error::InvalidParameter("finite-difference order must be 2 or 4"));
    }
    let dim = points.len();
    if dim < 2 {
        return Err(Error::Degenerate("finite-difference grid needs at least two points"));
    }
    let h = points[1] - points[0];
    if !(h > 0.0) || points.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::NonUniformGrid);
    }
    let stencil: &[f64] = if order == 2 {
        &[2.0, -1.0]
    } else {
        &[30.0 / 12.0, -16.0 / 12.0, 1.0 / 12.0]
    };
    let c = 1.0 / (2.0 * mu * h * h);
    let bw = stencil.len() - 1;
    let mut m = SymmetricBand::zeros(dim, bw);
    let mut potential = Vec::with_capacity(dim);
    for (i, &r) in points.iter().enumerate() {
        let vi = v.checked_value(r)?;
        potential.push(vi);
        m.set(i, i, c * stencil[0] + vi);
        for (d, s) in stencil.iter().enumerate().skip(1) {
            if i + d < dim {
                m.set(i, i + d, c * s);
            }
        }
    }
    if order == 4 {
        m.add(0, 0, -c * stencil[2]);
        m.add(dim - 1, dim - 1, -c * stencil[2]);
    }
    Ok(SparseHamiltonian {
        matrix: m,
        positions: points.to_vec(),
        potential,
        force_gradient: points.iter().map(|r| v.derivative(*r)).collect(),
        gamma: vec![h; dim],
        order: bw,
        num_elements: dim + 1,
        boundary: Boundary::Dirichlet,
    })
}
