//! Legendre polynomials and Gauss-Lobatto-Legendre rules on [-1, 1].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::linalg::tridiagonal_eigenvalues;
use crate::{Error, Result};

const NEWTON_MAX_ITER: usize = 50;
const GOLUB_WELSCH_MAX_ORDER: usize = 60;

/// `(L_n(xi), L_n'(xi))` by upward three-term recurrence.
pub fn legendre_eval(n: usize, xi: f64) -> Result<(f64, f64)> {
    if !(xi.abs() <= 1.0 + 1e-12) {
        return Err(Error::Domain { what: "Legendre argument outside [-1, 1]", value: xi });
    }
    Ok(legendre_unchecked(n, xi))
}

fn legendre_unchecked(n: usize, xi: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    // (L_{k-1}, L_k) and (L'_{k-1}, L'_k)
    let (mut p0, mut p1) = (1.0, xi);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * xi * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// Square row-major matrix of size `(N+1)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    pub size: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }
}

/// `D[i][j]`: derivative of the `j`-th cardinal function at node `i`.
pub type DiffMatrix = SquareMatrix;
/// Reference stiffness `S[i][j] = ∫ δ_i' δ_j' dξ`.
pub type StiffnessMatrix = SquareMatrix;

/// Gauss-Lobatto-Legendre rule of polynomial degree `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct GllRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GllRule {
    pub fn new(order: usize) -> Result<Self> {
        gll_rule(order)
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature of `f` over [-1, 1].
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Value at `xi` of the cardinal function attached to node `j`.
    pub fn cardinal(&self, j: usize, xi: f64) -> f64 {
        let n = self.order;
        let xj = self.nodes[j];
        if (xi - xj).abs() < 1e-14 {
            return 1.0;
        }
        let (_, dln) = legendre_unchecked(n, xi);
        let (lnj, _) = legendre_unchecked(n, xj);
        let nn = (n * (n + 1)) as f64;
        -(1.0 - xi * xi) * dln / (nn * lnj * (xi - xj))
    }

    /// Interpolates nodal `values` at `xi`.
    pub fn interpolate(&self, values: &[f64], xi: f64) -> f64 {
        values.iter().enumerate().map(|(j, v)| v * self.cardinal(j, xi)).sum()
    }
}

/// Builds the degree-`order` GLL rule: interior nodes from the eigenvalues of
/// the Jacobi matrix of the `L_N'` recursion (or Chebyshev guesses above
/// order 60), then Newton-polished on `L_N'`.
pub fn gll_rule(order: usize) -> Result<GllRule> {
    if order == 0 {
        return Err(Error::InvalidParameter("GLL order must be at least 1"));
    }
    let n = order;
    let interior = n - 1;
    let guesses: Vec<f64> = if interior == 0 {
        Vec::new()
    } else if n <= GOLUB_WELSCH_MAX_ORDER {
        let off: Vec<f64> = (1..interior)
            .map(|k| {
                let k = k as f64;
                (k * (k + 2.0) / ((2.0 * k + 1.0) * (2.0 * k + 3.0))).sqrt()
            })
            .collect();
        tridiagonal_eigenvalues(&vec![0.0; interior], &off)?
    } else {
        (1..n).map(|j| -(PI * j as f64 / n as f64).cos()).collect()
    };

    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    // Polish the left half and mirror, so the rule is exactly symmetric.
    for j in 1..=n / 2 {
        nodes[j] = newton_polish(n, guesses[j - 1], j)?;
        nodes[n - j] = -nodes[j];
    }
    if n.is_multiple_of(2) {
        nodes[n / 2] = 0.0;
    }

    let nn = (n * (n + 1)) as f64;
    let weights = nodes
        .iter()
        .map(|&x| {
            let (ln, _) = legendre_unchecked(n, x);
            2.0 / (nn * ln * ln)
        })
        .collect();
    Ok(GllRule { order: n, nodes, weights })
}

fn newton_polish(n: usize, mut x: f64, node: usize) -> Result<f64> {
    let nn = (n * (n + 1)) as f64;
    for _ in 0..NEWTON_MAX_ITER {
        let (ln, dln) = legendre_unchecked(n, x);
        let d2ln = (2.0 * x * dln - nn * ln) / (1.0 - x * x);
        let dx = dln / d2ln;
        x -= dx;
        if dx.abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-3) {
            let (ln, dln) = legendre_unchecked(n, x);
            // |ζ'| = N(N+1)|L_N| near a node; rounding alone produces a
            // residual of order eps·N(N+1).
            let residual = ((1.0 - x * x) * dln).abs();
            if residual <= 1e-13 * (nn * ln.abs()).max(1.0) {
                return Ok(x);
            }
            break;
        }
    }
    Err(Error::NodeRefinement { order: n, node })
}

/// Cardinal differentiation matrix of `rule`.
pub fn cardinal_diff_matrix(rule: &GllRule) -> DiffMatrix {
    let n = rule.order;
    let size = n + 1;
    let ln: Vec<f64> = rule.nodes.iter().map(|&x| legendre_unchecked(n, x).0).collect();
    let mut data = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            data[i * size + j] = if i != j {
                ln[i] / (ln[j] * (rule.nodes[i] - rule.nodes[j]))
            } else if i == 0 {
                -((n * (n + 1)) as f64) / 4.0
            } else if i == n {
                ((n * (n + 1)) as f64) / 4.0
            } else {
                0.0
            };
        }
    }
    SquareMatrix { size, data }
}

/// Reference stiffness `S = D(w)ᵀ D(w)` with `D(w)[i][j] = D[i][j] √w_i`.
pub fn stiffness_matrix(rule: &GllRule) -> StiffnessMatrix {
    let d = cardinal_diff_matrix(rule);
    let size = d.size;
    let mut data = vec![0.0; size * size];
    for k in 0..size {
        let w = rule.weights[k];
        let row = d.row(k);
        for i in 0..size {
            let a = w * row[i];
            for j in i..size {
                data[i * size + j] += a * row[j];
            }
        }
    }
    for i in 0..size {
        for j in 0..i {
            data[i * size + j] = data[j * size + i];
        }
    }
    SquareMatrix { size, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_eval(0, 0.37).unwrap(), (1.0, 0.0));
        assert_eq!(legendre_eval(1, -0.5).unwrap(), (-0.5, 1.0));
        assert_eq!(legendre_eval(2, 0.0).unwrap(), (-0.5, 0.0));
        assert!(matches!(legendre_eval(3, 1.01), Err(Error::Domain { .. })));
        assert!(legendre_eval(3, 1.0 + 1e-13).is_ok());
    }

    #[test]
    fn legendre_matches_closed_forms() {
        for k in 0..=20 {
            let x = -1.0 + 0.1 * k as f64;
            let (l3, d3) = legendre_eval(3, x).unwrap();
            assert_abs_diff_eq!(l3, 0.5 * (5.0 * x * x * x - 3.0 * x), epsilon = 1e-14);
            assert_abs_diff_eq!(d3, 0.5 * (15.0 * x * x - 3.0), epsilon = 1e-13);
            let (l4, d4) = legendre_eval(4, x).unwrap();
            assert_abs_diff_eq!(l4, (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0, epsilon = 1e-14);
            assert_abs_diff_eq!(d4, (140.0 * x.powi(3) - 60.0 * x) / 8.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn low_order_rules() {
        let r1 = gll_rule(1).unwrap();
        assert_eq!(r1.nodes, vec![-1.0, 1.0]);
        assert_eq!(r1.weights, vec![1.0, 1.0]);
        let r2 = gll_rule(2).unwrap();
        assert_eq!(r2.nodes, vec![-1.0, 0.0, 1.0]);
        for (w, e) in r2.weights.iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-15);
        }
        let r3 = gll_rule(3).unwrap();
        assert_abs_diff_eq!(r3.nodes[1], -(0.2f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r3.weights[1], 5.0 / 6.0, epsilon = 1e-15);
        assert!(gll_rule(0).is_err());
    }

    #[test]
    fn rule_invariants_up_to_high_order() {
        for n in (1..=40).chain([59, 60, 61, 80, 120]) {
            let r = gll_rule(n).unwrap();
            let sum: f64 = r.weights.iter().sum();
            assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-14 * (1.0 + n as f64 / 10.0));
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]), "order {n}");
            assert!(r.weights.iter().all(|w| *w > 0.0));
            for &x in &r.nodes {
                let (_, d) = legendre_unchecked(n, x);
                let res = ((1.0 - x * x) * d).abs();
                assert!(res < 1e-12 * (1.0 + (n * n) as f64 / 900.0), "order {n}: {res}");
            }
        }
    }

    #[test]
    fn golub_welsch_and_newton_paths_agree_at_the_switch() {
        // Order 60 uses eigenvalue guesses; guesses from Chebyshev points
        // must polish onto the same nodes.
        let r = gll_rule(60).unwrap();
        for j in 1..=30 {
            let x = newton_polish(60, -(PI * j as f64 / 60.0).cos(), j).unwrap();
            assert_abs_diff_eq!(x, r.nodes[j], epsilon = 1e-14);
        }
    }

    #[test]
    fn diff_matrix_examples() {
        let d = cardinal_diff_matrix(&gll_rule(2).unwrap());
        let expect = [-1.5, 2.0, -0.5, -0.5, 0.0, 0.5, 0.5, -2.0, 1.5];
        for (a, b) in d.data.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        for n in 1..=30 {
            let d = cardinal_diff_matrix(&gll_rule(n).unwrap());
            let c = (n * (n + 1)) as f64 / 4.0;
            assert_eq!(d.get(0, 0), -c);
            assert_eq!(d.get(n, n), c);
            for i in 0..=n {
                let s: f64 = d.row(i).iter().sum();
                assert!(s.abs() < 1e-12 * (n * n) as f64, "order {n} row {i}: {s}");
            }
        }
    }

    #[test]
    fn diff_matrix_differentiates_polynomials() {
        for n in 1..=20 {
            let r = gll_rule(n).unwrap();
            let d = cardinal_diff_matrix(&r);
            for p in 0..=n {
                let f: Vec<f64> = r.nodes.iter().map(|x| x.powi(p as i32)).collect();
                for i in 0..=n {
                    let df: f64 = d.row(i).iter().zip(&f).map(|(a, b)| a * b).sum();
                    let exact = if p == 0 { 0.0 } else { p as f64 * r.nodes[i].powi(p as i32 - 1) };
                    assert!((df - exact).abs() < 1e-11, "n={n} p={p} i={i}");
                }
            }
            if n >= 2 {
                let f: Vec<f64> = r.nodes.iter().map(|x| x * x).collect();
                let df: Vec<f64> = (0..=n).map(|i| d.row(i).iter().zip(&f).map(|(a, b)| a * b).sum()).collect();
                for i in 0..=n {
                    let d2: f64 = d.row(i).iter().zip(&df).map(|(a, b)| a * b).sum();
                    assert!((d2 - 2.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn cardinal_functions_are_kronecker_at_nodes() {
        for n in [1, 2, 5, 12, 25] {
            let r = gll_rule(n).unwrap();
            for j in 0..=n {
                for (i, &x) in r.nodes.iter().enumerate() {
                    let v = r.cardinal(j, x);
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((v - e).abs() < 1e-12, "n={n} j={j} i={i}: {v}");
                }
            }
        }
    }

    #[test]
    fn cardinal_functions_match_lagrange_products() {
        for n in [2, 7, 16] {
            let r = gll_rule(n).unwrap();
            for k in 0..50 {
                let x = -0.99 + 1.98 * (k as f64 + 0.37) / 50.0;
                for j in 0..=n {
                    let lag: f64 = (0..=n)
                        .filter(|&m| m != j)
                        .map(|m| (x - r.nodes[m]) / (r.nodes[j] - r.nodes[m]))
                        .product();
                    assert!((r.cardinal(j, x) - lag).abs() < 1e-10, "n={n} j={j} x={x}");
                }
            }
            let f: Vec<f64> = r.nodes.iter().map(|x| x.powi(n as i32) - x).collect();
            assert_abs_diff_eq!(r.interpolate(&f, 0.3), 0.3f64.powi(n as i32) - 0.3, epsilon = 1e-12);
        }
    }

    #[test]
    fn stiffness_examples_and_invariants() {
        let s = stiffness_matrix(&gll_rule(1).unwrap());
        assert_eq!(s.data, vec![0.5, -0.5, -0.5, 0.5]);
        for n in 1..=25 {
            let s = stiffness_matrix(&gll_rule(n).unwrap());
            for i in 0..=n {
                let row: f64 = s.row(i).iter().sum();
                assert!(row.abs() < 1e-12 * (n * n) as f64);
                for j in 0..=n {
                    assert!((s.get(i, j) - s.get(j, i)).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn stiffness_matches_exact_integrals_of_cardinal_derivatives() {
        // Independent path: cardinal derivatives from the barycentric
        // formula, integrated exactly with a rule of twice the degree.
        for n in 2..=20 {
            let r = gll_rule(n).unwrap();
            let fine = gll_rule(2 * n).unwrap();
            let s = stiffness_matrix(&r);
            let bary: Vec<f64> = (0..=n)
                .map(|j| 1.0 / (0..=n).filter(|&m| m != j).map(|m| r.nodes[j] - r.nodes[m]).product::<f64>())
                .collect();
            let dcard = |j: usize, x: f64| -> f64 {
                // d/dx of prod_{m != j} (x - x_m) * bary_j
                let mut total = 0.0;
                for k in (0..=n).filter(|&k| k != j) {
                    let p: f64 = (0..=n).filter(|&m| m != j && m != k).map(|m| x - r.nodes[m]).product();
                    total += p;
                }
                total * bary[j]
            };
            for i in 0..=n {
                for j in 0..=n {
                    let exact = fine.integrate(|x| dcard(i, x) * dcard(j, x));
                    assert!((exact - s.get(i, j)).abs() < 1e-13 * (1.0 + exact.abs()), "n={n} ({i},{j})");
                }
            }
        }
    }

    fn poly_integral(c: &[f64]) -> f64 {
        c.iter().enumerate().filter(|(p, _)| p % 2 == 0).map(|(p, a)| 2.0 * a / (p as f64 + 1.0)).sum()
    }

    proptest! {
        #[test]
        fn quadrature_is_exact_to_degree_2n_minus_1(
            n in 1usize..=30,
            coeffs in prop::collection::vec(-1.0f64..1.0, 60),
        ) {
            let r = gll_rule(n).unwrap();
            let c = &coeffs[..2 * n];
            let q = r.integrate(|x| c.iter().rev().fold(0.0, |acc, a| acc * x + a));
            let exact = poly_integral(c);
            let scale: f64 = c.iter().map(|a| a.abs()).sum::<f64>();
            prop_assert!((q - exact).abs() <= 1e-12 * exact.abs().max(scale * 1e-2));
        }
    }
}
