//! Eigenpairs of the banded Hamiltonian and spectral enclosures.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::hamiltonian::SparseHamiltonian;
use crate::linalg::{dot, fix_sign, norm, symmetric_eigen, SymmetricBand};
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Which part of the spectrum to compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Lowest(usize),
    Highest(usize),
    /// 0-based ascending indices `lo..hi`.
    Indices { lo: usize, hi: usize },
    /// All eigenvalues in `[lo, hi)`.
    Window { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Dense when small and a large part of the spectrum is wanted, band
    /// bisection for interior/low targets, Lanczos for the top.
    Auto,
    Dense,
    /// Sturm-count bisection with banded inverse iteration.
    BandBisection,
    /// Lanczos with full reorthogonalization.
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub backend: Backend,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { backend: Backend::Auto, max_iterations: 2000, tolerance: 1e-10, seed: 0x5eed }
    }
}

/// Dense solves are preferred up to this dimension.
pub const DENSE_LIMIT: usize = 3000;

/// Ascending eigenvalues with their vectors one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub dim: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    /// `‖Ãu − λu‖` for unit `u`.
    pub residuals: Vec<f64>,
    pub backend: Backend,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }
}

/// Eigenpairs of `h` for `target`.
pub fn eigs(h: &SparseHamiltonian, target: Target, options: &EigenOptions) -> Result<EigenResult> {
    eigs_band(&h.matrix, target, options)
}

pub fn eigs_band(a: &SymmetricBand, target: Target, options: &EigenOptions) -> Result<EigenResult> {
    let n = a.dim();
    let (lo, hi) = match target {
        Target::Lowest(c) => (0, c),
        Target::Highest(c) => (n.saturating_sub(c), n.max(c)),
        Target::Indices { lo, hi } => (lo, hi),
        Target::Window { lo, hi } => {
            if !(lo < hi) {
                return Err(Error::InvalidParameter("empty eigenvalue window"));
            }
            (a.count_below(lo), a.count_below(hi))
        }
    };
    if hi > n || lo > hi {
        return Err(Error::CountExceedsDimension { count: hi, dimension: n });
    }
    let count = hi - lo;
    let backend = match options.backend {
        Backend::Auto => {
            if n <= 64 || (n <= DENSE_LIMIT && 4 * count >= n) {
                Backend::Dense
            } else if matches!(target, Target::Highest(_)) && count <= 16 {
                Backend::Lanczos
            } else {
                Backend::BandBisection
            }
        }
        b => b,
    };
    let (values, vectors, backend) = match backend {
        Backend::Dense => {
            let e = symmetric_eigen(&a.to_dense(), n)?;
            (e.values[lo..hi].to_vec(), e.vectors[lo * n..hi * n].to_vec(), backend)
        }
        Backend::BandBisection => {
            let (v, u) = band_bisection(a, lo, hi, options)?;
            (v, u, backend)
        }
        Backend::Lanczos => {
            let (v, u) = lanczos_extremal(a, lo, hi, options, false)?;
            if lanczos_missed(a, lo, hi, &v) {
                // Converged Ritz values can step over a member of a tight
                // cluster; the inertia count catches that.
                let (v, u) = band_bisection(a, lo, hi, options)?;
                (v, u, Backend::BandBisection)
            } else {
                (v, u, backend)
            }
        }
        Backend::Auto => unreachable!(),
    };
    let mut residuals = Vec::with_capacity(count);
    let mut y = vec![0.0; n];
    for k in 0..count {
        let v = &vectors[k * n..(k + 1) * n];
        a.apply_into(v, &mut y)?;
        residuals.push(y.iter().zip(v).map(|(p, q)| (p - values[k] * q).powi(2)).sum::<f64>().sqrt());
    }
    Ok(EigenResult { dim: n, values, vectors, residuals, backend })
}

/// True when the Sturm counts show eigenvalues of the wanted index range
/// that `values` does not account for.
fn lanczos_missed(a: &SymmetricBand, lo: usize, hi: usize, values: &[f64]) -> bool {
    let (Some(first), Some(last)) = (values.first(), values.last()) else {
        return false;
    };
    let slack = 1e-9 * a.max_abs().max(f64::MIN_POSITIVE);
    if hi == a.dim() {
        a.count_below(first - slack) != lo
    } else {
        a.count_below(last + slack) != hi
    }
}

fn bisect_eigenvalue(a: &SymmetricBand, k: usize, mut lo: f64, mut hi: f64) -> f64 {
    // Invariant: count_below(lo) <= k < count_below(hi).
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return mid;
        }
        if a.count_below(mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

fn band_bisection(a: &SymmetricBand, lo: usize, hi: usize, options: &EigenOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.dim();
    let (g_lo, g_hi) = a.gershgorin();
    let pad = 1e-12 * (g_hi - g_lo).abs().max(1.0);
    let (g_lo, g_hi) = (g_lo - pad, g_hi + pad);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(hi - lo);
    let mut left = g_lo;
    for k in lo..hi {
        let lam = bisect_eigenvalue(a, k, left, g_hi);
        values.push(lam);
        // Later eigenvalues are not below this one.
        left = left.max(lam - 4.0 * f64::EPSILON * lam.abs().max(scale));
    }

    let cluster = 1e-3 * scale;
    let mut rng = SplitMix64::new(options.seed);
    let mut vectors = vec![0.0; (hi - lo) * n];
    let mut y = vec![0.0; n];
    let mut x = vec![0.0; n];
    for (k, &lam) in values.clone().iter().enumerate() {
        let lu = a.shifted_lu(lam);
        x.iter_mut().for_each(|v| *v = rng.uniform(-1.0, 1.0));
        let mut converged = false;
        for _ in 0..options.max_iterations.min(20) {
            lu.solve_in_place(&mut x);
            for j in (0..k).rev() {
                if (values[j] - lam).abs() > cluster {
                    break;
                }
                let u = &vectors[j * n..(j + 1) * n];
                let c = dot(u, &x);
                x.iter_mut().zip(u).for_each(|(p, q)| *p -= c * q);
            }
            let nx = norm(&x);
            if !(nx > 0.0) || !nx.is_finite() {
                x.iter_mut().for_each(|v| *v = rng.uniform(-1.0, 1.0));
                continue;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            a.apply_into(&x, &mut y)?;
            let rq = dot(&x, &y);
            let res: f64 = y.iter().zip(&x).map(|(p, q)| (p - rq * q).powi(2)).sum::<f64>().sqrt();
            if res <= options.tolerance * scale.max(lam.abs()) * 1e-2 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::EigenNoConvergence { iterations: 20 });
        }
        fix_sign(&mut x);
        vectors[k * n..(k + 1) * n].copy_from_slice(&x);
    }
    // Rayleigh quotients are at least as accurate as the bisection values
    // once the vectors have converged.
    for k in 0..values.len() {
        let v = &vectors[k * n..(k + 1) * n];
        a.apply_into(v, &mut y)?;
        values[k] = dot(v, &y);
    }
    Ok((values, vectors))
}

/// Lanczos with full reorthogonalization for the indices `lo..hi`, which
/// must touch one end of the spectrum.
fn lanczos_extremal(
    a: &SymmetricBand,
    lo: usize,
    hi: usize,
    options: &EigenOptions,
    accept_unconverged: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.dim();
    let count = hi - lo;
    let top = hi == n;
    if !top && lo != 0 {
        return Err(Error::InvalidParameter("Lanczos computes extremal eigenvalues only"));
    }
    if count == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut rng = SplitMix64::new(options.seed);
    let mut basis: Vec<f64> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut q: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let nq = norm(&q);
    q.iter_mut().for_each(|v| *v /= nq);
    let mut w = vec![0.0; n];
    let max_steps = options.max_iterations.min(n);
    for step in 0..max_steps {
        basis.extend_from_slice(&q);
        a.apply_into(&q, &mut w)?;
        let al = dot(&q, &w);
        alpha.push(al);
        for _ in 0..2 {
            for j in 0..=step {
                let v = &basis[j * n..(j + 1) * n];
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(p, r)| *p -= c * r);
            }
        }
        let b = norm(&w);
        let m = step + 1;
        let done = m == n || b <= 1e-14 * scale || (accept_unconverged && m == max_steps);
        if m >= count && (m % 10 == 0 || done || m == max_steps) {
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let e = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
            let wanted: Vec<usize> = if top { order[m - count..].to_vec() } else { order[..count].to_vec() };
            let ok = wanted.iter().all(|&i| (b * e.eigenvectors[(m - 1, i)]).abs() <= options.tolerance * 1e-2 * scale);
            if ok || done {
                let mut values = Vec::with_capacity(count);
                let mut vectors = vec![0.0; count * n];
                for (slot, &i) in wanted.iter().enumerate() {
                    values.push(e.eigenvalues[i]);
                    let out = &mut vectors[slot * n..(slot + 1) * n];
                    for j in 0..m {
                        let s = e.eigenvectors[(j, i)];
                        out.iter_mut().zip(&basis[j * n..(j + 1) * n]).for_each(|(o, v)| *o += s * v);
                    }
                    let nv = norm(out);
                    out.iter_mut().for_each(|v| *v /= nv);
                    fix_sign(out);
                }
                return Ok((values, vectors));
            }
        }
        if done {
            break;
        }
        beta.push(b);
        q.iter_mut().zip(&w).for_each(|(p, r)| *p = r / b);
    }
    Err(Error::EigenNoConvergence { iterations: max_steps })
}

/// `u = ũ / √γ`.
pub fn denormalize(u_tilde: &[f64], gamma: &[f64]) -> Vec<f64> {
    u_tilde.iter().zip(gamma).map(|(u, g)| u / g.sqrt()).collect()
}

/// `ũ = u √γ`.
pub fn normalize(u: &[f64], gamma: &[f64]) -> Vec<f64> {
    u.iter().zip(gamma).map(|(u, g)| u * g.sqrt()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsMethod {
    ExactExtremal,
    Gershgorin,
    LanczosEstimate,
}

/// Enclosure `[lo, hi]` of the spectrum of `Ã − diag(r E)` for all fields
/// with `|E| max|r| ≤ dipole_extent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub lo: f64,
    pub hi: f64,
    /// The field-free enclosure before `dipole_extent` is added.
    pub field_free_lo: f64,
    pub field_free_hi: f64,
    pub dipole_extent: f64,
    pub method: BoundsMethod,
    pub safety: f64,
}

impl SpectralBounds {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Same field-free enclosure with a different dipole extent.
    pub fn with_extent(&self, dipole_extent: f64) -> Self {
        Self {
            lo: self.field_free_lo - dipole_extent,
            hi: self.field_free_hi + dipole_extent,
            dipole_extent,
            ..*self
        }
    }
}

pub const BOUNDS_SAFETY: f64 = 0.05;

/// Spectral enclosure from `min V` (the kinetic part is positive
/// semidefinite) and an upper estimate of `λ_max`, each widened by 5% of
/// the spectral width.
pub fn spectral_bounds(h: &SparseHamiltonian, dipole_extent: f64) -> Result<SpectralBounds> {
    if !(dipole_extent >= 0.0) {
        return Err(Error::InvalidParameter("dipole extent must be non-negative"));
    }
    let a = &h.matrix;
    let n = a.dim();
    let vmin = h.min_potential();
    let (g_lo, g_hi) = a.gershgorin();
    let floor = vmin.max(g_lo);
    let (top, method) = if n <= 400 {
        let e = symmetric_eigen(&a.to_dense(), n)?;
        (e.values[n - 1], BoundsMethod::ExactExtremal)
    } else {
        let (theta, residual) = lanczos_top_estimate(a, 60)?;
        let est = theta + residual;
        if est >= g_hi {
            (g_hi, BoundsMethod::Gershgorin)
        } else {
            (est, BoundsMethod::LanczosEstimate)
        }
    };
    let width = (top - floor).max(f64::MIN_POSITIVE);
    let field_free_lo = floor - BOUNDS_SAFETY * width;
    let field_free_hi = if method == BoundsMethod::Gershgorin { top } else { top + BOUNDS_SAFETY * width };
    Ok(SpectralBounds {
        lo: field_free_lo - dipole_extent,
        hi: field_free_hi + dipole_extent,
        field_free_lo,
        field_free_hi,
        dipole_extent,
        method,
        safety: BOUNDS_SAFETY,
    })
}

/// Largest Ritz value after `steps` Lanczos steps and its residual norm.
fn lanczos_top_estimate(a: &SymmetricBand, steps: usize) -> Result<(f64, f64)> {
    let opts = EigenOptions { max_iterations: steps, tolerance: 0.0, ..EigenOptions::default() };
    let n = a.dim();
    match lanczos_extremal(a, n - 1, n, &opts, true) {
        Ok((vals, vecs)) => {
            let mut y = vec![0.0; n];
            a.apply_into(&vecs, &mut y)?;
            let res = y.iter().zip(&vecs).map(|(p, q)| (p - vals[0] * q).powi(2)).sum::<f64>().sqrt();
            Ok((vals[0], res))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gll::gll_rule;
    use crate::hamiltonian::assemble;
    use crate::mapping::{build_grid, decompose, DomainDecomposition, MappingSpec};
    use crate::potential::{FnPotential, PotentialKind};
    use core::f64::consts::PI;

    fn box_h(n: usize, m: usize) -> SparseHamiltonian {
        let rule = gll_rule(n).unwrap();
        let b: Vec<f64> = (0..=m).map(|k| PI * k as f64 / m as f64).collect();
        let g = build_grid(&DomainDecomposition::from_breakpoints(b).unwrap(), &rule);
        assemble(&g, &rule, &FnPotential { value: |_| 0.0, derivative: |_| 0.0 }, 1.0).unwrap()
    }

    fn morse_h(n: usize, beta: f64) -> SparseHamiltonian {
        let morse = PotentialKind::Morse { depth: 30.0, range: 0.3, r_e: 4.0 };
        let rule = gll_rule(n).unwrap();
        let d = decompose(&morse, &MappingSpec::new(0.0, 40.0, beta, 0.0, 1.0)).unwrap();
        assemble(&build_grid(&d, &rule), &rule, &morse, 1.0).unwrap()
    }

    fn check_pairs(h: &SparseHamiltonian, r: &EigenResult) {
        for k in 0..r.len() {
            assert!(r.residuals[k] < 1e-10 * r.values[k].abs().max(1.0), "residual {k}: {}", r.residuals[k]);
            for j in 0..r.len() {
                let ip = dot(r.vector(k), r.vector(j));
                assert!((ip - if j == k { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
            let hv = h.apply(r.vector(k)).unwrap();
            let rq = dot(r.vector(k), &hv);
            assert!((rq - r.values[k]).abs() <= 1e-11 * r.values[k].abs().max(1.0));
        }
    }

    #[test]
    fn box_levels_with_every_backend() {
        let h = box_h(6, 40);
        for backend in [Backend::Dense, Backend::BandBisection, Backend::Auto] {
            let opts = EigenOptions { backend, ..Default::default() };
            let r = eigs(&h, Target::Lowest(3), &opts).unwrap();
            for (k, v) in r.values.iter().enumerate() {
                assert!((v - ((k + 1) * (k + 1)) as f64 / 2.0).abs() < 1e-10, "{backend:?} {k}: {v}");
            }
            check_pairs(&h, &r);
        }
    }

    #[test]
    fn backends_agree_on_a_mapped_grid() {
        let h = morse_h(5, 0.3);
        let n = h.dim();
        let dense = eigs(&h, Target::Indices { lo: 0, hi: n }, &EigenOptions { backend: Backend::Dense, ..Default::default() }).unwrap();
        let band = eigs(&h, Target::Indices { lo: 3, hi: 40 }, &EigenOptions { backend: Backend::BandBisection, ..Default::default() }).unwrap();
        check_pairs(&h, &band);
        for k in 0..37 {
            let d = dense.values[k + 3];
            assert!((band.values[k] - d).abs() < 1e-10 * d.abs().max(1.0), "{k}");
            let s = dot(band.vector(k), dense.vector(k + 3));
            assert!((s - 1.0).abs() < 1e-9, "vector {k}: {s}");
        }
        let top = eigs(&h, Target::Highest(2), &EigenOptions { backend: Backend::Lanczos, ..Default::default() }).unwrap();
        check_pairs(&h, &top);
        assert!((top.values[1] - dense.values[n - 1]).abs() < 1e-10 * dense.values[n - 1]);
        assert!((top.values[0] - dense.values[n - 2]).abs() < 1e-10 * dense.values[n - 1]);
        let win = eigs(&h, Target::Window { lo: -25.0, hi: -10.0 }, &EigenOptions::default()).unwrap();
        let expect: Vec<f64> = dense.values.iter().copied().filter(|v| (-25.0..-10.0).contains(v)).collect();
        assert_eq!(win.len(), expect.len());
        for (a, b) in win.values.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10 * b.abs());
        }
    }

    #[test]
    fn count_larger_than_dimension_is_rejected() {
        let h = box_h(2, 3);
        assert!(matches!(eigs(&h, Target::Lowest(6), &EigenOptions::default()), Err(Error::CountExceedsDimension { .. })));
    }

    #[test]
    fn denormalized_box_ground_state() {
        let h = box_h(8, 10);
        let r = eigs(&h, Target::Lowest(1), &EigenOptions { backend: Backend::BandBisection, ..Default::default() }).unwrap();
        let u = denormalize(r.vector(0), &h.gamma);
        for (ui, x) in u.iter().zip(&h.positions) {
            assert!((ui - x.sin() * (2.0 / PI).sqrt()).abs() < 1e-8);
        }
        let back = normalize(&u, &h.gamma);
        for (a, b) in back.iter().zip(r.vector(0)) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(denormalize(&[1.0, -2.0], &[1.0, 1.0]), vec![1.0, -2.0]);
    }

    #[test]
    fn bounds_enclose_the_spectrum() {
        for h in [box_h(6, 20), box_h(4, 200), morse_h(6, 0.2)] {
            let n = h.dim();
            let e = symmetric_eigen(&h.matrix.to_dense(), n).unwrap();
            let b = spectral_bounds(&h, 0.0).unwrap();
            let lmax = e.values[n - 1];
            assert!(b.lo <= e.values[0] && lmax <= b.hi, "{b:?}");
            let width = lmax - h.min_potential();
            assert!(b.hi <= lmax + 0.06 * width + 1e-8 * lmax.abs(), "{b:?} vs {lmax}");
            let w = spectral_bounds(&h, 480.0).unwrap();
            assert!((w.hi - b.hi - 480.0).abs() < 1e-9 && (b.lo - w.lo - 480.0).abs() < 1e-9);
            assert_eq!(b.with_extent(480.0), w);
        }
    }

    #[test]
    fn diagonal_bounds() {
        let mut a = SymmetricBand::zeros(5, 1);
        for (i, v) in [1.0, 4.0, -2.0, 3.0, 0.0].iter().enumerate() {
            a.set(i, i, *v);
        }
        let h = SparseHamiltonian {
            matrix: a,
            positions: vec![0.0; 5],
            potential: vec![1.0, 4.0, -2.0, 3.0, 0.0],
            force_gradient: vec![0.0; 5],
            gamma: vec![1.0; 5],
            order: 1,
            num_elements: 6,
            boundary: crate::hamiltonian::Boundary::Dirichlet,
        };
        let b = spectral_bounds(&h, 0.0).unwrap();
        assert!((b.lo - (-2.0 - 0.3)).abs() < 1e-12);
        assert!((b.hi - (4.0 + 0.3)).abs() < 1e-12);
        assert_eq!(b.method, BoundsMethod::ExactExtremal);
    }
}
