//! Element sizing by phase-space content and the global collocation grid.
//!
//! Each element `[r0, r1]` holds the same amount `β` of phase space at the
//! reference energy `E_asy`:
//!
//! ```text
//! (√(2μ)/π) ∫_{r0}^{r1} √max(E_asy − V(r), 0) dr = β
//! ```

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::gll::GllRule;
use crate::potential::Potential;
use crate::quadrature;
use crate::{Error, Result};

const PHASE_REL_TOL: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-10;
const MAX_EXPANSIONS: usize = 200;
const RESIDUAL_FRACTION: f64 = 0.1;

/// How to split `[r_min, r_max]` into elements.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub beta: f64,
    pub e_asy: f64,
    pub mu: f64,
    /// Fixed element size; overrides the phase-space sizing when set.
    pub uniform: Option<f64>,
    /// Size the half `[center, r_max]` and reflect it, so the grid is exactly
    /// symmetric about the midpoint.
    pub mirror: bool,
}

impl MappingSpec {
    pub fn new(r_min: f64, r_max: f64, beta: f64, e_asy: f64, mu: f64) -> Self {
        Self { r_min, r_max, beta, e_asy, mu, uniform: None, mirror: false }
    }

    pub fn uniform(r_min: f64, r_max: f64, size: f64) -> Self {
        Self { r_min, r_max, beta: 1.0, e_asy: 0.0, mu: 1.0, uniform: Some(size), mirror: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min < self.r_max) {
            return Err(Error::InvalidParameter("r_min must be below r_max"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter("beta must lie in (0, 1]"));
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParameter("mass must be positive"));
        }
        if let Some(h) = self.uniform {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter("uniform element size must be positive"));
            }
        }
        Ok(())
    }
}

/// `(√(2μ)/π) ∫_{r0}^{r1} √max(E_asy − V, 0) dr`.
pub fn phase_integral<P: Potential + ?Sized>(v: &P, r0: f64, r1: f64, e_asy: f64, mu: f64) -> Result<f64> {
    let integral = quadrature::integrate(|r| (e_asy - v.value(r)).max(0.0).sqrt(), r0, r1, PHASE_REL_TOL, 1e-300)?;
    Ok((2.0 * mu).sqrt() / PI * integral)
}

/// End of the element starting at `r0`.
///
/// Where `E_asy − V(r0) ≤ 0` the element repeats `previous_size`; pass `None`
/// only when no element has been sized yet, in which case the size of the
/// first element of the nearest allowed region is used.
pub fn next_breakpoint<P: Potential + ?Sized>(
    v: &P,
    r0: f64,
    spec: &MappingSpec,
    previous_size: Option<f64>,
) -> Result<f64> {
    if !(r0 < spec.r_max) {
        return Err(Error::InvalidParameter("element start must lie below r_max"));
    }
    if let Some(h) = spec.uniform {
        return Ok((r0 + h).min(spec.r_max));
    }
    let local = spec.e_asy - v.value(r0);
    if !(local > 0.0) {
        let h = match previous_size {
            Some(h) => h,
            None => allowed_region_size(v, r0, spec)?,
        };
        return Ok((r0 + h).min(spec.r_max));
    }
    solve_breakpoint(v, r0, spec, local)
}

fn solve_breakpoint<P: Potential + ?Sized>(v: &P, r0: f64, spec: &MappingSpec, local: f64) -> Result<f64> {
    let phase = |r1: f64| phase_integral(v, r0, r1, spec.e_asy, spec.mu);
    if phase(spec.r_max)? < spec.beta {
        return Ok(spec.r_max);
    }
    // Constant-integrand estimate, then geometric bracketing.
    let mut h = spec.beta * PI / (2.0 * spec.mu * local).sqrt();
    let mut lo = r0;
    let mut hi = (r0 + h).min(spec.r_max);
    let mut expansions = 0;
    while phase(hi)? < spec.beta {
        lo = hi;
        h *= 2.0;
        hi = (r0 + h).min(spec.r_max);
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Bracketing { start: r0 });
        }
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phase(mid)? < spec.beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Size of the first element past the first classically allowed point at or
/// after `r0`.
fn allowed_region_size<P: Potential + ?Sized>(v: &P, r0: f64, spec: &MappingSpec) -> Result<f64> {
    const SCAN: usize = 4096;
    let span = spec.r_max - r0;
    let allowed = |r: f64| spec.e_asy - v.value(r) > 0.0;
    let mut hit = None;
    for k in 1..=SCAN {
        let r = r0 + span * k as f64 / SCAN as f64;
        if allowed(r) {
            hit = Some(r);
            break;
        }
    }
    let mut hi = hit.ok_or(Error::Bracketing { start: r0 })?;
    let mut lo = hi - span / SCAN as f64;
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if allowed(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi >= spec.r_max {
        return Err(Error::Bracketing { start: r0 });
    }
    let end = solve_breakpoint(v, hi, spec, spec.e_asy - v.value(hi))?;
    Ok(end - hi)
}

/// Element breakpoints `r⁰ < r¹ < … < r^M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDecomposition {
    pub breakpoints: Vec<f64>,
}

impl DomainDecomposition {
    pub fn from_breakpoints(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidParameter("a decomposition needs at least one element"));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("breakpoints must increase strictly"));
        }
        Ok(Self { breakpoints })
    }

    pub fn num_elements(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// `𝒥_k = (r^{k+1} − r^k)/2` for 0-based element `k`.
    pub fn jacobian(&self, k: usize) -> f64 {
        0.5 * (self.breakpoints[k + 1] - self.breakpoints[k])
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn r_min(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn r_max(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1]
    }
}

/// Chains [`next_breakpoint`] from `r_min` to `r_max`.
pub fn decompose<P: Potential + ?Sized>(v: &P, spec: &MappingSpec) -> Result<DomainDecomposition> {
    spec.validate()?;
    if spec.mirror {
        let center = 0.5 * (spec.r_min + spec.r_max);
        let half = MappingSpec { r_min: center, mirror: false, ..spec.clone() };
        let right = chain(v, &half)?;
        let mut points: Vec<f64> = right.iter().skip(1).rev().map(|b| 2.0 * center - b).collect();
        points.extend_from_slice(&right);
        return DomainDecomposition::from_breakpoints(points);
    }
    DomainDecomposition::from_breakpoints(chain(v, spec)?)
}

fn chain<P: Potential + ?Sized>(v: &P, spec: &MappingSpec) -> Result<Vec<f64>> {
    let mut points = vec![spec.r_min];
    let mut previous = None;
    let mut r = spec.r_min;
    while r < spec.r_max {
        let next = next_breakpoint(v, r, spec, previous)?;
        if !(next > r) {
            return Err(Error::Bracketing { start: r });
        }
        previous = Some(next - r);
        points.push(next);
        r = next;
    }
    let m = points.len() - 1;
    if m >= 2 {
        let last = points[m] - points[m - 1];
        let before = points[m - 1] - points[m - 2];
        if last < RESIDUAL_FRACTION * before {
            points.remove(m - 1);
        }
    }
    Ok(points)
}

/// Decomposition with `target` elements (or the nearest count reachable),
/// found by bisection on `β`.
pub fn decompose_with_count<P: Potential + ?Sized>(
    v: &P,
    spec: &MappingSpec,
    target: usize,
) -> Result<DomainDecomposition> {
    if target == 0 {
        return Err(Error::InvalidParameter("element count must be positive"));
    }
    let at = |beta: f64| decompose(v, &MappingSpec { beta, ..spec.clone() });
    let mut hi_beta = 1.0;
    let mut best = at(hi_beta)?;
    if best.num_elements() >= target {
        return Ok(best);
    }
    // Count grows as β shrinks; find a β giving at least `target`.
    let mut lo_beta = 0.5;
    loop {
        let d = at(lo_beta)?;
        if d.num_elements() >= target {
            if d.num_elements().abs_diff(target) < best.num_elements().abs_diff(target) {
                best = d;
            }
            break;
        }
        hi_beta = lo_beta;
        best = d;
        lo_beta *= 0.5;
        if lo_beta < 1e-8 {
            return Err(Error::InvalidParameter("element count target unreachable"));
        }
    }
    for _ in 0..60 {
        if best.num_elements() == target {
            break;
        }
        let mid = 0.5 * (lo_beta + hi_beta);
        let d = at(mid)?;
        let m = d.num_elements();
        if m.abs_diff(target) < best.num_elements().abs_diff(target) {
            best = d;
        }
        if m >= target {
            lo_beta = mid;
        } else {
            hi_beta = mid;
        }
        if hi_beta - lo_beta < 1e-14 {
            break;
        }
    }
    Ok(best)
}

/// Global collocation grid with merged interface weights.
///
/// Global index `i = N·k + j` addresses local node `j` of 0-based element
/// `k`; the interface node `(k, N)` is the same point as `(k + 1, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalGrid {
    pub order: usize,
    pub num_elements: usize,
    pub points: Vec<f64>,
    pub gamma: Vec<f64>,
    pub jacobians: Vec<f64>,
}

impl GlobalGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn global_index(&self, k: usize, j: usize) -> usize {
        self.order * k + j
    }

    /// Canonical `(element, local)` pair: interfaces belong to the element on
    /// their right, except the last point.
    pub fn local_index(&self, i: usize) -> (usize, usize) {
        let last = self.order * self.num_elements;
        if i >= last {
            (self.num_elements - 1, self.order)
        } else {
            (i / self.order, i % self.order)
        }
    }

    /// Hash of order, element count and point positions.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.order as u64);
        eat(self.num_elements as u64);
        for p in &self.points {
            eat(p.to_bits());
        }
        h
    }
}

/// Maps the reference rule into each element and merges interface weights.
pub fn build_grid(decomp: &DomainDecomposition, rule: &GllRule) -> GlobalGrid {
    let n = rule.order;
    let m = decomp.num_elements();
    let mut points = vec![0.0; n * m + 1];
    let mut gamma = vec![0.0; n * m + 1];
    let jacobians: Vec<f64> = (0..m).map(|k| decomp.jacobian(k)).collect();
    for k in 0..m {
        let (a, b) = (decomp.breakpoints[k], decomp.breakpoints[k + 1]);
        let mid = 0.5 * (a + b);
        let jac = jacobians[k];
        for j in 0..=n {
            let i = n * k + j;
            points[i] = if j == 0 {
                a
            } else if j == n {
                b
            } else {
                mid + jac * rule.nodes[j]
            };
            gamma[i] += jac * rule.weights[j];
        }
    }
    GlobalGrid { order: n, num_elements: m, points, gamma, jacobians }
}
