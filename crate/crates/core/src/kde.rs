//! Kernel density estimation with the bandwidth and offset schedules used by
//! the plug-in level-set estimators.
//!
//! All logarithms are natural logarithms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::Sample;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::kernels::KernelD;

/// Anything that can be evaluated pointwise as a (possibly signed) density
/// estimate.
pub trait DensityEstimate: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Values at every cell center of `grid`, in flat-index order.
    fn eval_grid(&self, grid: &Grid) -> Vec<f64> {
        grid.map_centers(|c| self.eval(c))
    }
}

impl<F> DensityEstimate for (usize, F)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.0
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.1)(x)
    }
}

impl DensityEstimate for crate::densities::DensityModel {
    fn dim(&self) -> usize {
        crate::densities::DensityModel::dim(self)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.pdf(x)
    }
}

/// `p̂_n(x) = (1 / (n h^d)) Σ_i K((X_i − x) / h)`.
///
/// Evaluation is an exact sum over the sample points whose first coordinate
/// lies within `h` of `x`. With higher-order kernels the estimate can be
/// negative.
#[derive(Debug, Clone)]
pub struct KdeEstimator {
    kernel: KernelD,
    h: f64,
    n: usize,
    dim: usize,
    /// Sample points sorted by their first coordinate, row-major.
    sorted: Vec<f64>,
    /// First coordinates of `sorted`, for window searches.
    keys: Vec<f64>,
    norm: f64,
}

impl KdeEstimator {
    pub fn new(sample: &Sample, kernel: KernelD, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(invalid("h", format!("bandwidth must be positive, got {h}")));
        }
        if kernel.dim() != sample.dim() {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim(),
                got: sample.dim(),
            });
        }
        if sample.is_empty() {
            return Err(invalid("sample", "empty sample"));
        }
        let dim = sample.dim();
        let mut rows: Vec<&[f64]> = sample.iter().collect();
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let keys = rows.iter().map(|r| r[0]).collect();
        let sorted = rows.concat();
        let n = sample.len();
        Ok(Self {
            kernel,
            h,
            n,
            dim,
            sorted,
            keys,
            norm: 1.0 / (n as f64 * h.powi(dim as i32)),
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn kernel(&self) -> &KernelD {
        &self.kernel
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    fn window(&self, x0: f64) -> (usize, usize) {
        let reach = self.h * (1.0 + 1e-12);
        let lo = self.keys.partition_point(|&k| k < x0 - reach);
        let hi = self.keys.partition_point(|&k| k <= x0 + reach);
        (lo, hi)
    }

    fn sum_window(&self, x: &[f64], lo: usize, hi: usize, scratch: &mut [f64]) -> f64 {
        let inv_h = 1.0 / self.h;
        let mut acc = 0.0;
        for i in lo..hi {
            let row = &self.sorted[i * self.dim..(i + 1) * self.dim];
            for ((s, r), c) in scratch.iter_mut().zip(row).zip(x) {
                *s = (r - c) * inv_h;
            }
            acc += self.kernel.eval(scratch);
        }
        acc * self.norm
    }
}

impl DensityEstimate for KdeEstimator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let (lo, hi) = self.window(x[0]);
        let mut scratch = vec![0.0; self.dim];
        self.sum_window(x, lo, hi, &mut scratch)
    }

    fn eval_grid(&self, grid: &Grid) -> Vec<f64> {
        assert_eq!(grid.dim(), self.dim, "grid and estimator dimensions differ");
        if self.dim == 1 {
            // Centers are increasing: slide the window with two pointers.
            let centers = grid.axis_centers(0);
            let reach = self.h * (1.0 + 1e-12);
            let (mut lo, mut hi) = (0usize, 0usize);
            let mut scratch = [0.0];
            centers
                .iter()
                .map(|&c| {
                    while lo < self.n && self.keys[lo] < c - reach {
                        lo += 1;
                    }
                    hi = hi.max(lo);
                    while hi < self.n && self.keys[hi] <= c + reach {
                        hi += 1;
                    }
                    self.sum_window(&[c], lo, hi, &mut scratch)
                })
                .collect()
        } else {
            (0..grid.len())
                .into_par_iter()
                .map_init(
                    || (vec![0.0; self.dim], vec![0.0; self.dim]),
                    |(center, scratch), flat| {
                        grid.center_into(flat, center);
                        let (lo, hi) = self.window(center[0]);
                        self.sum_window(center, lo, hi, scratch)
                    },
                )
                .collect()
        }
    }
}

/// Which error measure the schedule is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HRule {
    /// `h_n = c_h n^{-1/(2β+d)}`, tuned for `d_H`.
    #[serde(rename = "dH", alias = "dH-rule")]
    DH,
    /// `h_n = c_h (n / log n)^{-1/(2β+d)}`, tuned for `d_Δ`.
    #[serde(rename = "dDelta", alias = "dDelta-rule")]
    DDelta,
}

/// Offset schedule; `Zero` gives the plain plug-in estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OffsetRule {
    #[serde(rename = "dH", alias = "dH-rule")]
    DH,
    #[serde(rename = "dDelta", alias = "dDelta-rule")]
    DDelta,
    #[serde(rename = "zero")]
    Zero,
}

fn check_common(n: usize, beta: f64, d: usize, c: f64, c_name: &'static str) -> Result<()> {
    if n < 1 {
        return Err(invalid("n", "sample size must be at least 1"));
    }
    if !(beta > 0.0) {
        return Err(invalid("beta", format!("must be positive, got {beta}")));
    }
    if d < 1 {
        return Err(Error::InvalidDimension(d));
    }
    if !(c > 0.0) {
        return Err(invalid(c_name, format!("must be positive, got {c}")));
    }
    Ok(())
}

fn log_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", "the dDelta rule needs n ≥ 2 so that log n > 0"));
    }
    Ok((n as f64).ln())
}

/// Scheduled bandwidth.
pub fn bandwidth(n: usize, rule: HRule, beta: f64, d: usize, c_h: f64) -> Result<f64> {
    check_common(n, beta, d, c_h, "c_h")?;
    let exponent = -1.0 / (2.0 * beta + d as f64);
    let base = match rule {
        HRule::DH => n as f64,
        HRule::DDelta => n as f64 / log_n(n)?,
    };
    Ok(c_h * base.powf(exponent))
}

/// Scheduled (non-negative) offset magnitude.
pub fn offset(n: usize, rule: OffsetRule, beta: f64, d: usize, c_ell: f64) -> Result<f64> {
    if rule == OffsetRule::Zero {
        return Ok(0.0);
    }
    check_common(n, beta, d, c_ell, "c_ell")?;
    let base = c_ell * (n as f64).powf(-beta / (2.0 * beta + d as f64));
    Ok(match rule {
        OffsetRule::DDelta => base * log_n(n)?.sqrt(),
        _ => base,
    })
}

/// `max((c₆ c_h^d)^{-1}, 1)`.
pub fn min_offset_constant(c6: f64, c_h: f64, d: usize) -> f64 {
    (1.0 / (c6 * c_h.powi(d as i32))).max(1.0)
}

/// Errors when `c_ell` is below [`min_offset_constant`].
pub fn check_offset_constant(c_ell: f64, c6: f64, c_h: f64, d: usize) -> Result<()> {
    let bound = min_offset_constant(c6, c_h, d);
    if c_ell < bound {
        return Err(Error::OffsetConstantTooSmall { c_ell, bound });
    }
    Ok(())
}

/// Constants of the pointwise bias and concentration bounds for a kernel
/// density estimator on a density with `‖p‖_∞ ≤ L*` in a Hölder ball of
/// radius `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaConstants {
    /// `∫ ‖t‖^β K(t) dt` (signed).
    pub c5_signed: f64,
    /// `∫ ‖t‖^β |K(t)| dt`, the quantity the bias bound actually needs.
    pub c5: f64,
    /// `1 / (16 c₈)`.
    pub c6: f64,
    /// `‖K‖_∞ + L* + L c₅`.
    pub c7: f64,
    /// `L* ‖K‖²`.
    pub c8: f64,
    /// Upper end of the valid deviation range, `6 c₈ / c₇`.
    pub delta_max: f64,
    pub sup_norm: f64,
    pub l2_norm_sq: f64,
}

impl LemmaConstants {
    pub fn new(kernel: &KernelD, l: f64, l_star: f64, beta: f64) -> Self {
        let (c5_signed, c5) = kernel.beta_moments(beta);
        let sup_norm = kernel.sup_norm();
        let l2_norm_sq = kernel.l2_norm_sq();
        let c8 = l_star * l2_norm_sq;
        let c7 = sup_norm + l_star + l * c5;
        Self {
            c5_signed,
            c5,
            c6: 1.0 / (16.0 * c8),
            c7,
            c8,
            delta_max: 6.0 * c8 / c7,
            sup_norm,
            l2_norm_sq,
        }
    }

    /// Lower end of the valid deviation range, `2 L c₅ h^β`.
    pub fn delta_min(&self, l: f64, beta: f64, h: f64) -> f64 {
        2.0 * l * self.c5 * h.powf(beta)
    }

    /// `2 exp(−c₆ n h^d δ²)`.
    pub fn tail_bound(&self, n: usize, h: f64, d: usize, delta: f64) -> f64 {
        2.0 * (-self.c6 * n as f64 * h.powi(d as i32) * delta * delta).exp()
    }
}

/// `L · (∫ ‖t‖^β |K(t)| dt) · h^β`.
pub fn bias_bound(kernel: &KernelD, l: f64, beta: f64, h: f64) -> f64 {
    let (_, c5_abs) = kernel.beta_moments(beta);
    l * c5_abs * h.powf(beta)
}

/// Bandwidth, offset and pointwise rate sequences at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedules {
    pub n: usize,
    pub h: f64,
    pub ell: f64,
    /// `(n h^d)^{-1/2}`.
    pub phi_n: f64,
    /// `h^{β′}`.
    pub psi_n: f64,
    /// `β / (2β + d)`.
    pub mu: f64,
    pub h_rule: HRule,
    pub ell_rule: OffsetRule,
    pub c_h: f64,
    pub c_ell: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSpec {
    pub h_rule: HRule,
    pub ell_rule: OffsetRule,
    pub beta: f64,
    pub beta_prime: f64,
    pub d: usize,
    pub c_h: f64,
    pub c_ell: f64,
    /// `c₆` of the kernel/model pair, used to check `c_ell` for the dDelta rule.
    pub c6: f64,
    /// When false the `c_ell` lower bound is not enforced.
    pub enforce_offset_bound: bool,
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ell_rule == OffsetRule::DDelta && self.enforce_offset_bound {
            check_offset_constant(self.c_ell, self.c6, self.c_h, self.d)?;
        }
        Ok(())
    }

    pub fn at(&self, n: usize) -> Result<Schedules> {
        self.validate()?;
        let h = bandwidth(n, self.h_rule, self.beta, self.d, self.c_h)?;
        let ell = offset(n, self.ell_rule, self.beta, self.d, self.c_ell)?;
        Ok(Schedules {
            n,
            h,
            ell,
            phi_n: (n as f64 * h.powi(self.d as i32)).powf(-0.5),
            psi_n: h.powf(self.beta_prime),
            mu: self.beta / (2.0 * self.beta + self.d as f64),
            h_rule: self.h_rule,
            ell_rule: self.ell_rule,
            c_h: self.c_h,
            c_ell: self.c_ell,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{legendre_kernel, product_kernel};

    fn rect() -> KernelD {
        KernelD::rectangular(1).unwrap()
    }

    #[test]
    fn hand_evaluations() {
        let one = KdeEstimator::new(&Sample::from_values(vec![0.0]), rect(), 1.0).unwrap();
        assert_eq!(one.eval(&[0.5]), 0.5);
        let two = KdeEstimator::new(&Sample::from_values(vec![-0.5, 0.5]), rect(), 0.5).unwrap();
        assert_eq!(two.eval(&[0.0]), 1.0);
        assert_eq!(two.eval(&[1.01]), 0.0);
        assert_eq!(two.eval(&[-1.2]), 0.0);
    }

    #[test]
    fn constructor_errors() {
        let s = Sample::from_values(vec![0.0]);
        assert!(KdeEstimator::new(&s, rect(), 0.0).is_err());
        assert!(KdeEstimator::new(&s, KernelD::rectangular(2).unwrap(), 1.0).is_err());
    }

    #[test]
    fn grid_path_matches_pointwise() {
        let model = crate::densities::DensityModel::cone_1d();
        let s = model.sample(500, 3).unwrap();
        let k = product_kernel(legendre_kernel(2.0), 1).unwrap();
        let est = KdeEstimator::new(&s, k, 0.13).unwrap();
        let grid = Grid::new(model.domain().clone(), 257).unwrap();
        let fast = est.eval_grid(&grid);
        let slow = grid.map_centers(|c| est.eval(c));
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
        // direct definition
        let brute = |x: f64| {
            s.iter().map(|p| legendre_kernel(2.0).eval((p[0] - x) / 0.13)).sum::<f64>() / (500.0 * 0.13)
        };
        for (i, v) in fast.iter().enumerate().step_by(16) {
            assert!((v - brute(grid.center(i)[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_grid_eval() {
        let model = crate::densities::DensityModel::uniform_box(2).unwrap();
        let s = model.sample(300, 9).unwrap();
        let est = KdeEstimator::new(&s, KernelD::rectangular(2).unwrap(), 0.2).unwrap();
        let grid = Grid::new(model.domain().clone(), 12).unwrap();
        let fast = est.eval_grid(&grid);
        for (i, v) in fast.iter().enumerate() {
            let c = grid.center(i);
            let count = s
                .iter()
                .filter(|p| (p[0] - c[0]).abs() <= 0.2 && (p[1] - c[1]).abs() <= 0.2)
                .count();
            assert!((v - count as f64 * 0.25 / (300.0 * 0.04)).abs() < 1e-12);
        }
    }

    #[test]
    fn bandwidth_values() {
        assert!((bandwidth(1024, HRule::DH, 2.0, 1, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let dd = bandwidth(1024, HRule::DDelta, 2.0, 1, 1.0).unwrap();
        assert!((dd - 0.368_218_073).abs() < 1e-8, "{dd}");
        for n in [10, 100, 1000] {
            let a = bandwidth(n, HRule::DH, 1.0, 2, 1.0).unwrap();
            let b = bandwidth(n, HRule::DH, 1.0, 2, 2.0).unwrap();
            assert!((b - 2.0 * a).abs() < 1e-15);
        }
        assert!(bandwidth(1, HRule::DDelta, 1.0, 1, 1.0).is_err());
        assert!(bandwidth(1, HRule::DH, 1.0, 1, 1.0).is_ok());
    }

    #[test]
    fn offset_values() {
        let dd = offset(1024, OffsetRule::DDelta, 2.0, 1, 1.0).unwrap();
        assert!((dd - (1024f64).ln().sqrt() / 16.0).abs() < 1e-15);
        assert!((dd - 0.164_55).abs() < 1e-4);
        assert!((offset(1024, OffsetRule::DH, 2.0, 1, 1.0).unwrap() - 0.0625).abs() < 1e-15);
        assert_eq!(offset(1024, OffsetRule::Zero, 2.0, 1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn offset_constant_bound() {
        // rectangular kernel, L* = 1: c6 = 1/8, so c_ell ≥ 8 at c_h = 1
        let c = LemmaConstants::new(&rect(), 1.0, 1.0, 1.0);
        assert!((c.c6 - 0.125).abs() < 1e-15);
        assert!((min_offset_constant(c.c6, 1.0, 1) - 8.0).abs() < 1e-12);
        let err = check_offset_constant(2.0, c.c6, 1.0, 1).unwrap_err();
        assert!(err.to_string().contains("max((c6 * c_h^d)^-1, 1)"));
        assert!(check_offset_constant(8.0, c.c6, 1.0, 1).is_ok());
        assert_eq!(min_offset_constant(100.0, 1.0, 1), 1.0);
    }

    #[test]
    fn lemma_constants_rectangular() {
        let c = LemmaConstants::new(&rect(), 1.0, 1.0, 1.0);
        assert!((c.c5 - 0.5).abs() < 1e-12);
        assert!((c.c8 - 0.5).abs() < 1e-12);
        assert!((c.c7 - 2.0).abs() < 1e-12);
        assert!((c.delta_max - 1.5).abs() < 1e-12);
        assert!((c.delta_min(1.0, 1.0, 0.0625) - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn bias_bounds() {
        assert!((bias_bound(&rect(), 3.0, 1.0, 0.2) - 0.5 * 3.0 * 0.2).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for h in [0.5, 0.25, 0.1, 0.01] {
            let b = bias_bound(&rect(), 1.0, 1.0, h);
            assert!(b < last);
            last = b;
        }
        let k2 = product_kernel(legendre_kernel(2.0), 1).unwrap();
        let (signed, abs) = k2.beta_moments(2.0);
        assert!(signed.abs() < 1e-12 && abs > 0.1);
        assert!((bias_bound(&k2, 1.0, 2.0, 0.5) - abs * 0.25).abs() < 1e-12);
    }

    #[test]
    fn schedules_monotone() {
        let spec = ScheduleSpec {
            h_rule: HRule::DDelta,
            ell_rule: OffsetRule::DDelta,
            beta: 1.0,
            beta_prime: 1.0,
            d: 1,
            c_h: 1.0,
            c_ell: 8.0,
            c6: 0.125,
            enforce_offset_bound: true,
        };
        let mut prev = spec.at(16).unwrap();
        for n in [32, 64, 1000, 100_000] {
            let s = spec.at(n).unwrap();
            assert!(s.phi_n <= prev.phi_n && s.psi_n <= prev.psi_n);
            assert!((s.mu - 1.0 / 3.0).abs() < 1e-15);
            prev = s;
        }
        let bad = ScheduleSpec { c_ell: 1.0, ..spec };
        assert!(matches!(bad.at(100), Err(Error::OffsetConstantTooSmall { .. })));
        let relaxed = ScheduleSpec { enforce_offset_bound: false, ..bad };
        assert!(relaxed.at(100).is_ok());
    }
}
