//! Higher-order kernels built from the Legendre basis, their product
//! extensions to `[-1, 1]^d`, and a quadrature-based validity check.
//!
//! A kernel is *β-valid* when it integrates to one, has a finite
//! `∫‖t‖^β |K(t)| dt`, and all moments `∫ t^s K(t) dt` with
//! `1 ≤ |s| ≤ ⌊β⌋` vanish. The Legendre construction
//!
//! ```text
//! K(u) = Σ_{m=0}^{⌊β⌋} φ_m(0) φ_m(u) 1{|u| ≤ 1}
//! ```
//!
//! with `φ_m = sqrt((2m+1)/2) P_m` orthonormal on `[-1, 1]` reproduces every
//! polynomial of degree `≤ ⌊β⌋` at the origin, which is exactly the moment
//! condition. Kernels therefore depend on `β` only through `⌊β⌋`:
//!
//! | `β`        | `⌊β⌋` | kernel                |
//! |------------|-------|-----------------------|
//! | `(0, 2)`   | 0, 1  | `1/2` (rectangular)   |
//! | `[2, 4)`   | 2, 3  | `(9 − 15u²)/8`        |
//! | `[4, 6)`   | 4, 5  | degree-4 polynomial   |
//!
//! Odd orders add nothing because `φ_m(0) = 0` for odd `m`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{tensor_integrate, tensor_points, GaussLegendre};

/// Absolute tolerance on `∫K − 1` and on each vanishing moment.
pub const MOMENT_TOLERANCE: f64 = 1e-10;

/// One-dimensional polynomial kernel supported on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Kernel1D {
    order_floor: usize,
    /// Power-basis coefficients, lowest degree first.
    coefficients: Vec<f64>,
}

impl Kernel1D {
    /// Builds a kernel from raw power-basis coefficients. No validity is
    /// implied; run [`validate_kernel`] to check moments.
    pub fn from_coefficients(order_floor: usize, coefficients: Vec<f64>) -> Self {
        assert!(!coefficients.is_empty());
        Self {
            order_floor,
            coefficients,
        }
    }

    /// The rectangular kernel `1/2 · 1{|u| ≤ 1}`.
    pub fn rectangular() -> Self {
        legendre_kernel(1.0)
    }

    pub fn order_floor(&self) -> usize {
        self.order_floor
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// True when the kernel is a constant on its support.
    pub fn is_constant(&self) -> bool {
        self.coefficients[1..].iter().all(|&c| c == 0.0)
    }

    #[inline]
    /// `-1`, `0`, `1` and the sign changes of the kernel in between, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![-1.0, 0.0, 1.0];
        let steps = 4000;
        let at = |i: usize| -1.0 + 2.0 * i as f64 / steps as f64;
        for i in 0..steps {
            let (mut a, mut b) = (at(i), at(i + 1));
            let (fa, fb) = (self.eval_poly(a), self.eval_poly(b));
            if fa == 0.0 {
                out.push(a);
                continue;
            }
            if fa * fb >= 0.0 {
                continue;
            }
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if self.eval_poly(mid) * fa > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        out
    }

    /// Composite Gauss–Legendre points on `[-1, 1]` with `panels` panels
    /// between consecutive [`breakpoints`](Self::breakpoints).
    pub fn piecewise_points(&self, gl: &GaussLegendre, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for w in self.breakpoints().windows(2) {
            let (x, wt) = gl.composite_points(w[0], w[1], panels);
            xs.extend(x);
            ws.extend(wt);
        }
        (xs, ws)
    }

    fn eval_poly(&self, u: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn eval(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        self.eval_poly(u)
    }
}

/// Power-basis coefficients of the Legendre polynomials `P_0 … P_max`.
fn legendre_coefficients(max: usize) -> Vec<Vec<f64>> {
    let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
    if max >= 1 {
        polys.push(vec![0.0, 1.0]);
    }
    for k in 1..max {
        let kf = k as f64;
        let mut next = vec![0.0; k + 2];
        for (i, &c) in polys[k].iter().enumerate() {
            next[i + 1] += (2.0 * kf + 1.0) * c / (kf + 1.0);
        }
        for (i, &c) in polys[k - 1].iter().enumerate() {
            next[i] -= kf * c / (kf + 1.0);
        }
        polys.push(next);
    }
    polys
}

/// Legendre kernel of validity order `⌊β⌋`.
///
/// Any positive `beta` is accepted; see the module docs for the bucket map.
pub fn legendre_kernel(beta: f64) -> Kernel1D {
    assert!(beta > 0.0 && beta.is_finite(), "beta must be positive, got {beta}");
    let order = beta.floor() as usize;
    let polys = legendre_coefficients(order);
    let mut coefficients = vec![0.0; order + 1];
    for (m, p) in polys.iter().enumerate() {
        // φ_m(0) φ_m(u) = (2m+1)/2 · P_m(0) · P_m(u); P_m(0) is the constant coefficient.
        let scale = (2 * m + 1) as f64 / 2.0 * p[0];
        if scale == 0.0 {
            continue;
        }
        for (i, &c) in p.iter().enumerate() {
            coefficients[i] += scale * c;
        }
    }
    while coefficients.len() > 1 && *coefficients.last().unwrap() == 0.0 {
        coefficients.pop();
    }
    Kernel1D {
        order_floor: order,
        coefficients,
    }
}

/// Product kernel `K̃(x) = Π_j k(x_j) · 1{x ∈ [-1, 1]^d}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelD {
    dim: usize,
    factor: Kernel1D,
}

impl KernelD {
    pub fn rectangular(dim: usize) -> Result<Self> {
        product_kernel(Kernel1D::rectangular(), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor(&self) -> &Kernel1D {
        &self.factor
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut v = 1.0;
        for &xi in x {
            if !(-1.0..=1.0).contains(&xi) {
                return 0.0;
            }
            v *= self.factor.eval(xi);
        }
        v
    }

    /// `‖K‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        let f = &self.factor;
        let scan = (0..=20_000)
            .map(|i| f.eval(-1.0 + i as f64 / 10_000.0).abs())
            .fold(0.0f64, f64::max);
        scan.powi(self.dim as i32)
    }

    /// `∫ K²`, exact by Gauss–Legendre.
    pub fn l2_norm_sq(&self) -> f64 {
        let gl = GaussLegendre::new(self.factor.degree() + 1);
        let one_d = gl.integrate(-1.0, 1.0, |u| self.factor.eval(u).powi(2));
        one_d.powi(self.dim as i32)
    }

    /// `∫ |K|`.
    pub fn abs_integral(&self) -> f64 {
        let (xs, ws) = self.factor.piecewise_points(&GaussLegendre::new(16), 4);
        let one_d: f64 = xs.iter().zip(&ws).map(|(&u, w)| w * self.factor.eval(u).abs()).sum();
        one_d.powi(self.dim as i32)
    }

    /// `(∫ ‖t‖^β K(t) dt, ∫ ‖t‖^β |K(t)| dt)` with the Euclidean norm.
    pub fn beta_moments(&self, beta: f64) -> (f64, f64) {
        let per_dim = ((2.0e6f64).powf(1.0 / self.dim as f64) as usize).clamp(8, 512);
        let pieces = self.factor.breakpoints().len() - 1;
        let panels = (per_dim / (8 * pieces)).max(1);
        let (xs, ws) = self.factor.piecewise_points(&GaussLegendre::new(8), panels);
        let norm_pow = |t: &[f64]| t.iter().map(|v| v * v).sum::<f64>().sqrt().powf(beta);
        let signed = tensor_integrate(&xs, &ws, self.dim, |t| norm_pow(t) * self.eval(t));
        let abs = tensor_integrate(&xs, &ws, self.dim, |t| norm_pow(t) * self.eval(t).abs());
        (signed, abs)
    }
}

/// Extends a 1-D kernel to `[-1, 1]^d` by taking products.
pub fn product_kernel(k: Kernel1D, d: usize) -> Result<KernelD> {
    if d < 1 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(KernelD { dim: d, factor: k })
}

/// One moment `∫ t^s K(t) dt` that failed to vanish.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentViolation {
    pub index: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelValidityReport {
    pub beta: f64,
    pub dim: usize,
    pub order_floor: usize,
    pub quadrature_nodes: usize,
    pub integral_one_error: f64,
    pub violated_moments: Vec<MomentViolation>,
    /// `∫ ‖t‖^β |K(t)| dt`.
    pub beta_norm: f64,
    /// `∫ ‖t‖^β K(t) dt` (no absolute value).
    pub signed_beta_moment: f64,
    pub sup_norm: f64,
    pub l2_norm_sq: f64,
    pub abs_integral: f64,
}

impl KernelValidityReport {
    pub fn is_valid(&self) -> bool {
        self.integral_one_error <= MOMENT_TOLERANCE
            && self.violated_moments.is_empty()
            && self.beta_norm.is_finite()
    }

    /// Multi-indices of the violated moments only.
    pub fn violated_indices(&self) -> Vec<Vec<usize>> {
        self.violated_moments.iter().map(|v| v.index.clone()).collect()
    }
}

/// All multi-indices `s ∈ ℕ^d` with `1 ≤ |s| ≤ order`, in graded
/// lexicographic order.
pub fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, dim: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for v in (0..=remaining).rev() {
            prefix.push(v);
            rec(prefix, dim, remaining - v, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 1..=order {
        let mut all = Vec::new();
        rec(&mut Vec::new(), dim, total, &mut all);
        out.extend(all.into_iter().filter(|s| s.iter().sum::<usize>() == total));
    }
    out
}

/// Checks β-validity of `k` by tensor Gauss–Legendre quadrature.
///
/// The rule uses `max(quadrature_nodes, (deg + ⌊β⌋)/2 + 1)` nodes per
/// axis, which integrates every tested moment of a degree-`deg` kernel
/// exactly. The count actually used is reported.
pub fn validate_kernel(k: &KernelD, beta: f64, quadrature_nodes: usize) -> KernelValidityReport {
    let order = beta.floor() as usize;
    let deg = k.factor.degree();
    let nodes = quadrature_nodes.max((deg + order) / 2 + 1);
    let gl = GaussLegendre::new(nodes);

    // Kernel values on the tensor grid, computed once.
    let points: Vec<(Vec<f64>, f64, f64)> = tensor_points(&gl.nodes, &gl.weights, k.dim)
        .into_iter()
        .map(|(t, w)| {
            let kv = k.eval(&t);
            (t, w, kv)
        })
        .collect();

    let integral: f64 = points.iter().map(|(_, w, kv)| w * kv).sum();
    let violated_moments = multi_indices(k.dim, order)
        .into_iter()
        .filter_map(|s| {
            let value: f64 = points
                .iter()
                .map(|(t, w, kv)| {
                    let mono: f64 = t.iter().zip(&s).map(|(x, &e)| x.powi(e as i32)).product();
                    w * kv * mono
                })
                .sum();
            (value.abs() > MOMENT_TOLERANCE).then_some(MomentViolation { index: s, value })
        })
        .collect();

    let (signed_beta_moment, beta_norm) = k.beta_moments(beta);
    KernelValidityReport {
        beta,
        dim: k.dim,
        order_floor: order,
        quadrature_nodes: nodes,
        integral_one_error: (integral - 1.0).abs(),
        violated_moments,
        beta_norm,
        signed_beta_moment,
        sup_norm: k.sup_norm(),
        l2_norm_sq: k.l2_norm_sq(),
        abs_integral: k.abs_integral(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_moment(k: &Kernel1D, s: i32) -> f64 {
        GaussLegendre::new(20).integrate(-1.0, 1.0, |u| u.powi(s) * k.eval(u))
    }

    #[test]
    fn low_orders_are_rectangular() {
        for beta in [0.5, 1.0, 1.5, 1.999] {
            let k = legendre_kernel(beta);
            assert_eq!(k.coefficients(), &[0.5]);
            assert!((quad_moment(&k, 0) - 1.0).abs() < 1e-14);
            assert!(quad_moment(&k, 1).abs() < 1e-14);
        }
        assert_eq!(legendre_kernel(0.5).coefficients(), legendre_kernel(1.5).coefficients());
    }

    #[test]
    fn order_two_matches_closed_form() {
        let k = legendre_kernel(2.0);
        for i in 0..=100 {
            let u = -1.0 + 0.02 * i as f64;
            let want = (9.0 - 15.0 * u * u) / 8.0;
            assert!((k.eval(u) - want).abs() < 1e-12);
        }
        assert!((quad_moment(&k, 0) - 1.0).abs() < 1e-13);
        assert!(quad_moment(&k, 1).abs() < 1e-13);
        assert!(quad_moment(&k, 2).abs() < 1e-13);
        assert_eq!(k.eval(1.0 + 1e-9), 0.0);
    }

    #[test]
    fn higher_orders_kill_moments() {
        for beta in [4.0, 6.5, 8.0] {
            let k = legendre_kernel(beta);
            assert!((quad_moment(&k, 0) - 1.0).abs() < 1e-11);
            for s in 1..=(beta.floor() as i32) {
                assert!(quad_moment(&k, s).abs() < 1e-11, "beta={beta} s={s}");
            }
        }
    }

    #[test]
    fn product_kernel_rejects_zero_dimension() {
        assert!(matches!(
            product_kernel(Kernel1D::rectangular(), 0),
            Err(Error::InvalidDimension(0))
        ));
    }

    #[test]
    fn product_kernel_values() {
        let rect = KernelD::rectangular(2).unwrap();
        assert_eq!(rect.eval(&[0.3, -0.9]), 0.25);
        assert_eq!(rect.eval(&[0.3, 1.2]), 0.0);
        let k2 = product_kernel(legendre_kernel(2.0), 2).unwrap();
        assert!((k2.eval(&[0.0, 0.0]) - 81.0 / 64.0).abs() < 1e-15);
        let k1 = product_kernel(legendre_kernel(2.0), 1).unwrap();
        for u in [-0.7, 0.0, 0.4] {
            assert_eq!(k1.eval(&[u]), legendre_kernel(2.0).eval(u));
        }
    }

    #[test]
    fn rectangular_fails_order_three() {
        let rect = KernelD::rectangular(1).unwrap();
        let r = validate_kernel(&rect, 3.0, 4);
        assert_eq!(r.violated_indices(), vec![vec![2]]);
        assert!((r.violated_moments[0].value - 1.0 / 3.0).abs() < 1e-14);
        assert!(!r.is_valid());
    }

    #[test]
    fn order_two_kernel_valid_at_three_and_two() {
        let k = product_kernel(legendre_kernel(2.0), 1).unwrap();
        assert!(validate_kernel(&k, 3.0, 4).is_valid());
        assert!(validate_kernel(&k, 2.0, 4).is_valid());
    }

    #[test]
    fn product_kernel_moments_two_dims() {
        let k = product_kernel(legendre_kernel(2.0), 2).unwrap();
        let r = validate_kernel(&k, 3.5, 2);
        assert!(r.is_valid(), "{r:?}");
        // ∫ t1² t2² K = 0 too, but |s| = 4 > 3 is not tested.
        let rect = KernelD::rectangular(2).unwrap();
        let r = validate_kernel(&rect, 2.0, 2);
        let mut v = r.violated_indices();
        v.sort();
        assert_eq!(v, vec![vec![0, 2], vec![2, 0]]);
    }

    #[test]
    fn beta_norms() {
        let rect = KernelD::rectangular(1).unwrap();
        let (signed, abs) = rect.beta_moments(1.0);
        assert!((signed - 0.5).abs() < 1e-12);
        assert!((abs - 0.5).abs() < 1e-12);
        let k = product_kernel(legendre_kernel(2.0), 1).unwrap();
        let (signed, abs) = k.beta_moments(2.0);
        assert!(signed.abs() < 1e-12);
        // ∫ t²|9−15t²|/8 with root at sqrt(3/5)
        let r = (0.6f64).sqrt();
        let f = |t: f64| (3.0 * t.powi(3) - 3.0 * t.powi(5)) / 8.0; // antiderivative of t²(9−15t²)/8
        let want = 2.0 * (f(r) - f(0.0)) - 2.0 * (f(1.0) - f(r));
        assert!((abs - want).abs() < 1e-6, "{abs} vs {want}");
    }

    #[test]
    fn norms_of_rectangular() {
        let rect = KernelD::rectangular(2).unwrap();
        assert!((rect.sup_norm() - 0.25).abs() < 1e-15);
        assert!((rect.l2_norm_sq() - 0.25).abs() < 1e-14);
        assert!((rect.abs_integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(1, 3), vec![vec![1], vec![2], vec![3]]);
        assert_eq!(multi_indices(2, 2).len(), 5);
        assert!(multi_indices(3, 0).is_empty());
    }
}
