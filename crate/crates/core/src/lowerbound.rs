//! Hypothesis families for minimax lower bounds on `[0, 1]^d` at level
//! `λ = 1`: radial bumps `φ_β`, the paired-ball densities
//! `p_ω = 1 + Σ_j ω_j (φ_j − φ_{N+j})`, Hamming-separated codebooks and
//! Kullback–Leibler divergences.
//!
//! Geometry: `κ = 1/q`, `N = ⌊q^d / 2⌋`, `m = ⌊q^{d−γβ}/2⌋ + 6`. Ball `j`
//! is centered at the midpoint of grid cell `j` of side `κ` (cells ordered
//! lexicographically, first coordinate most significant) and has radius
//! `κ/2`, so the `2N` balls are disjoint and lie inside the unit cube. The
//! scaled bump is `φ_j(x) = (κ/2)^β φ((x − g_j)/(κ/2))`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{DensityModel, HolderParams};
use crate::error::{invalid, Error, Result};
use crate::grid::{BoxDomain, Grid};
use crate::levelset::{GridRaster, SetPredicate};
use crate::quadrature::GaussLegendre;

/// Starting amplitude for [`calibrate_c_beta`].
pub const C_BETA_START: f64 = 0.49;
const MAX_HALVINGS: usize = 60;
const CALIBRATION_PAIRS: usize = 20_000;
/// Largest member count a [`SeparatedSubset`] extraction will collect.
pub const MAX_MEMBERS: usize = 4096;
const EXHAUSTIVE_LIMIT: u128 = 200_000;
const RANDOM_REJECTIONS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpBranch {
    /// `β < 1`: `C(1 − ‖x‖)^β`.
    SubLipschitz,
    /// `β ≥ 1`: `C(2^{1−β} − ‖x‖^β)` inside radius 1/2, `C(1 − ‖x‖)^β` outside.
    SuperLipschitz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub beta: f64,
    pub c_beta: f64,
    pub branch: BumpBranch,
    /// Whether the sampled Hölder check passed at `c_beta`.
    pub holder_verified: bool,
}

impl BumpFunction {
    pub fn new(beta: f64, c_beta: f64) -> Self {
        Self {
            beta,
            c_beta,
            branch: if beta < 1.0 {
                BumpBranch::SubLipschitz
            } else {
                BumpBranch::SuperLipschitz
            },
            holder_verified: false,
        }
    }

    /// Bump with amplitude from [`calibrate_c_beta`].
    pub fn calibrated(beta: f64, l: f64, seed: u64) -> Result<Self> {
        let cal = calibrate(beta, l, seed)?;
        Ok(Self {
            holder_verified: cal.verified,
            ..Self::new(beta, cal.c_beta)
        })
    }

    /// Radial profile `g(r)` with `φ(x) = g(‖x‖)`.
    pub fn profile(&self, r: f64) -> f64 {
        self.c_beta * unit_profile(self.beta, self.branch, r)
    }

    /// `sup φ = φ(0)`.
    pub fn peak(&self) -> f64 {
        self.profile(0.0)
    }

    /// Smallest radius `ρ` with `g(ρ) ≤ y`, for `0 ≤ y`.
    pub fn inverse_profile(&self, y: f64) -> f64 {
        if y >= self.peak() {
            return 0.0;
        }
        if y <= 0.0 {
            return 1.0;
        }
        let t = y / self.c_beta;
        let b = self.beta;
        match self.branch {
            BumpBranch::SubLipschitz => 1.0 - t.powf(1.0 / b),
            BumpBranch::SuperLipschitz => {
                if t <= 0.5f64.powf(b) {
                    1.0 - t.powf(1.0 / b)
                } else {
                    (2f64.powf(1.0 - b) - t).powf(1.0 / b)
                }
            }
        }
    }

    /// `∫_{B(0,1)} φ²`.
    pub fn l2_norm_sq(&self, dim: usize) -> f64 {
        let gl = GaussLegendre::new(20);
        let radial = gl.integrate_composite(0.0, 1.0, 8, |r| self.profile(r).powi(2) * r.powi(dim as i32 - 1));
        unit_ball_volume(dim) * dim as f64 * radial
    }
}

/// `φ_β(x)`: the piecewise radial formula, 0 outside the unit ball.
pub fn bump_eval(phi: &BumpFunction, x: &[f64]) -> f64 {
    phi.profile(x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

fn unit_profile(beta: f64, branch: BumpBranch, r: f64) -> f64 {
    if r > 1.0 {
        return 0.0;
    }
    match branch {
        BumpBranch::SubLipschitz => (1.0 - r).powf(beta),
        BumpBranch::SuperLipschitz => {
            if r <= 0.5 {
                2f64.powf(1.0 - beta) - r.powf(beta)
            } else {
                (1.0 - r).powf(beta)
            }
        }
    }
}

/// `k`-th derivative of the unit-amplitude profile at `r ≥ 0`.
fn unit_profile_derivative(beta: f64, branch: BumpBranch, k: usize, r: f64) -> f64 {
    if k == 0 {
        return unit_profile(beta, branch, r);
    }
    if r > 1.0 {
        return 0.0;
    }
    let falling: f64 = (0..k).map(|i| beta - i as f64).product();
    let outer = if k % 2 == 0 { falling } else { -falling } * (1.0 - r).powf(beta - k as f64);
    match branch {
        BumpBranch::SubLipschitz => outer,
        BumpBranch::SuperLipschitz if r <= 0.5 => -falling * r.powf(beta - k as f64),
        BumpBranch::SuperLipschitz => outer,
    }
}

/// `π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub c_beta: f64,
    pub halvings: usize,
    /// Largest sampled Hölder quotient of the unit-amplitude profile.
    pub max_quotient: f64,
    pub verified: bool,
}

/// Largest `C_β = 0.49 · 2^{-k}` for which sampled pairs satisfy the Hölder
/// condition with constant `l`. For `β ≤ 1` the profile itself is checked;
/// for `β > 1` its derivative of order `⌈β⌉ − 1` (evenly extended through
/// the origin) is checked with exponent `β − ⌈β⌉ + 1`.
pub fn calibrate_c_beta(beta: f64, l: f64, seed: u64) -> Result<f64> {
    Ok(calibrate(beta, l, seed)?.c_beta)
}

pub fn calibrate(beta: f64, l: f64, seed: u64) -> Result<Calibration> {
    if !(beta > 0.0) {
        return Err(invalid("beta", "must be positive"));
    }
    if !(l > 0.0) {
        return Err(invalid("L", "must be positive"));
    }
    let branch = BumpFunction::new(beta, 1.0).branch;
    let k = (beta.ceil() as usize).saturating_sub(1);
    let alpha = beta - k as f64;
    let f = |r: f64| {
        let v = unit_profile_derivative(beta, branch, k, r.abs());
        if r < 0.0 && k % 2 == 1 {
            -v
        } else {
            v
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(CALIBRATION_PAIRS + 64);
    for i in 0..CALIBRATION_PAIRS {
        let r = rng.gen_range(-1.5..1.5);
        let r2 = if i % 2 == 0 {
            rng.gen_range(-1.5..1.5)
        } else {
            let step = 10f64.powf(rng.gen_range(-6.0..0.0));
            if rng.gen_bool(0.5) {
                r + step
            } else {
                r - step
            }
        };
        pairs.push((r, r2));
    }
    let special = [0.0, 0.5, -0.5, 1.0, -1.0, 1e-6, 0.5 + 1e-6, 1.0 - 1e-6];
    for &a in &special {
        for &b in &special {
            pairs.push((a, b));
        }
    }
    let max_quotient = pairs
        .iter()
        .filter(|(a, b)| a != b)
        .map(|&(a, b)| (f(a) - f(b)).abs() / (a - b).abs().powf(alpha))
        .fold(0.0, f64::max);
    let mut c = C_BETA_START;
    for halvings in 0..=MAX_HALVINGS {
        if c * max_quotient <= l * (1.0 + 1e-9) {
            return Ok(Calibration {
                c_beta: c,
                halvings,
                max_quotient,
                verified: true,
            });
        }
        if halvings < MAX_HALVINGS {
            c /= 2.0;
        }
    }
    Ok(Calibration {
        c_beta: c,
        halvings: MAX_HALVINGS,
        max_quotient,
        verified: false,
    })
}

/// The paired-ball construction at one grid parameter `q`.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundFamily {
    pub q: usize,
    pub d: usize,
    pub beta: f64,
    pub gamma: f64,
    pub l: f64,
    pub kappa: f64,
    /// `N`: number of ball pairs.
    pub n_pairs: usize,
    pub m: usize,
    pub bump: BumpFunction,
}

impl LowerBoundFamily {
    pub fn build(q: usize, d: usize, beta: f64, gamma: f64, l: f64, seed: u64) -> Result<Self> {
        if q < 4 {
            return Err(invalid("q", format!("must be at least 4, got {q}")));
        }
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if !(beta > 0.0) || !(gamma >= 0.0) {
            return Err(invalid("beta/gamma", "need beta > 0 and gamma >= 0"));
        }
        if gamma * beta > 1.0 + 1e-12 {
            return Err(invalid("gamma", format!("gamma * beta = {} exceeds 1", gamma * beta)));
        }
        let cells = (q as u128).checked_pow(d as u32).filter(|&c| c <= u32::MAX as u128);
        let Some(cells) = cells else {
            return Err(invalid("q", "q^d too large"));
        };
        let n_pairs = (cells / 2) as usize;
        let m = m_for(q, d, beta, gamma);
        if n_pairs < m {
            return Err(Error::Infeasible(format!(
                "N = {n_pairs} < m = {m} at q = {q}; smallest feasible q is {}",
                min_q(d, beta, gamma, 1)
            )));
        }
        Ok(Self {
            q,
            d,
            beta,
            gamma,
            l,
            kappa: 1.0 / q as f64,
            n_pairs,
            m,
            bump: BumpFunction::calibrated(beta, l, seed)?,
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    /// Bump radius `κ/2`.
    pub fn radius(&self) -> f64 {
        self.kappa / 2.0
    }

    /// `Leb(B_1)`.
    pub fn ball_volume(&self) -> f64 {
        unit_ball_volume(self.d) * self.radius().powi(self.d as i32)
    }

    /// Center `g_j`, `0 ≤ j < 2N`.
    pub fn center(&self, j: usize) -> Vec<f64> {
        center_of(self.q, self.d, j)
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        (0..2 * self.n_pairs).map(|j| self.center(j)).collect()
    }

    pub fn density(&self, omega: &[i8]) -> Result<POmegaDensity> {
        if omega.len() != self.n_pairs {
            return Err(Error::DimensionMismatch {
                expected: self.n_pairs,
                got: omega.len(),
            });
        }
        if omega.iter().any(|v| !(-1..=1).contains(v)) {
            return Err(invalid("omega", "entries must be -1, 0 or 1"));
        }
        Ok(POmegaDensity {
            q: self.q,
            d: self.d,
            n_pairs: self.n_pairs,
            radius: self.radius(),
            bump: self.bump,
            omega: omega.to_vec(),
        })
    }

    /// `p_ω` as a [`DensityModel`] with `L* = 2` and `λ = 1`.
    pub fn model(&self, omega: &[i8]) -> Result<DensityModel> {
        let density = self.density(omega)?;
        let eps0 = density.max_deviation();
        let c0 = density.margin_constant(self.gamma, eps0);
        let params = HolderParams {
            beta: self.beta,
            beta_prime: self.beta,
            l: self.l,
            l_star: 2.0,
            r: 1.0,
            eta: 1.0,
            gamma: self.gamma,
            c0,
            eps0: if eps0 > 0.0 { eps0 } else { 1.0 },
            lambda: 1.0,
        };
        let omega_id: Vec<String> = omega.iter().map(|v| v.to_string()).collect();
        let id = format!(
            "pomega:{}:{}:{}:{}:{}",
            self.q,
            self.beta,
            self.gamma,
            self.d,
            omega_id.join(",")
        );
        Ok(DensityModel::from_pomega(id, params, density))
    }

    /// `Ω_ϱ`: `ω = (2b − 1, 0, …, 0)` for `b` in a separated subset of
    /// weight-`2⌊m/6⌋` vectors of length `m`.
    pub fn rho_members(&self, seed: u64) -> Result<Vec<Vec<i8>>> {
        let subset = extract_separated_subset(self.m, self.m / 6, seed)?;
        Ok(subset
            .members
            .iter()
            .map(|b| {
                let mut w = vec![0i8; self.n_pairs];
                for (j, &bit) in b.iter().enumerate() {
                    w[j] = 2 * bit as i8 - 1;
                }
                w
            })
            .collect())
    }

    /// `Ω_ϰ`: the zero vector followed by a separated subset of weight-`2m`
    /// vectors of length `N`. Needs `N ≥ 6m`.
    pub fn kappa_members(&self, seed: u64) -> Result<Vec<Vec<i8>>> {
        if self.n_pairs < 6 * self.m {
            return Err(Error::Infeasible(format!(
                "the d_Δ family needs N >= 6m, got N = {} and m = {} at q = {}; smallest feasible q is {}",
                self.n_pairs,
                self.m,
                self.q,
                min_q(self.d, self.beta, self.gamma, 6)
            )));
        }
        let subset = extract_separated_subset(self.n_pairs, self.m, seed)?;
        let mut out = vec![vec![0i8; self.n_pairs]];
        out.extend(
            subset
                .members
                .iter()
                .map(|b| b.iter().map(|&v| v as i8).collect::<Vec<i8>>()),
        );
        Ok(out)
    }

    /// `2 n m κ^{2β+d} ∫φ²`.
    pub fn kl_upper_bound(&self, n: usize) -> f64 {
        2.0 * n as f64 * self.m as f64 * self.kappa.powf(2.0 * self.beta + self.d as f64) * self.bump.l2_norm_sq(self.d)
    }

    /// Union of the balls `B_j ∪ B_{N+j}` for `j < m`.
    pub fn rho_mask(&self, grid: &Grid) -> GridRaster {
        let r = self.radius();
        let pairs = self.m;
        let q = self.q;
        let d = self.d;
        let n = self.n_pairs;
        GridRaster::from_bools(
            grid.clone(),
            grid.map_centers(|x| match cell_index(q, x) {
                Some(j) if j < pairs || (j >= n && j < n + pairs) => {
                    dist(x, &center_of(q, d, j)) < r
                }
                _ => false,
            }),
        )
    }
}

fn m_for(q: usize, d: usize, beta: f64, gamma: f64) -> usize {
    ((q as f64).powf(d as f64 - gamma * beta) / 2.0).floor() as usize + 6
}

/// Smallest `q ≥ 4` with `N ≥ factor · m`.
fn min_q(d: usize, beta: f64, gamma: f64, factor: usize) -> usize {
    (4usize..)
        .find(|&q| {
            let cells = (q as f64).powi(d as i32);
            (cells / 2.0).floor() >= (factor * m_for(q, d, beta, gamma)) as f64
        })
        .expect("N grows faster than m")
}

fn center_of(q: usize, d: usize, j: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    let mut rem = j;
    for axis in (0..d).rev() {
        let k = rem % q;
        rem /= q;
        out[axis] = (2 * k + 1) as f64 / (2 * q) as f64;
    }
    out
}

/// Lexicographic index of the cell of side `1/q` containing `x`.
fn cell_index(q: usize, x: &[f64]) -> Option<usize> {
    let mut idx = 0usize;
    for &v in x {
        if !(0.0..=1.0).contains(&v) {
            return None;
        }
        let k = ((v * q as f64).floor() as usize).min(q - 1);
        idx = idx * q + k;
    }
    Some(idx)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// `p_ω` on `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct POmegaDensity {
    q: usize,
    d: usize,
    n_pairs: usize,
    radius: f64,
    bump: BumpFunction,
    omega: Vec<i8>,
}

impl POmegaDensity {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn omega(&self) -> &[i8] {
        &self.omega
    }

    /// Sign of the bump on ball `j`: `ω_j` for `j < N`, `−ω_{j−N}` above.
    fn sign(&self, j: usize) -> i8 {
        if j < self.n_pairs {
            self.omega[j]
        } else if j < 2 * self.n_pairs {
            -self.omega[j - self.n_pairs]
        } else {
            0
        }
    }

    /// `1 + s_j (κ/2)^β φ((x − g_j)/(κ/2))` on the ball of the cell holding `x`.
    pub fn pdf(&self, x: &[f64]) -> f64 {
        let Some(j) = cell_index(self.q, x) else {
            return 0.0;
        };
        let s = self.sign(j);
        if s == 0 {
            return 1.0;
        }
        let r = dist(x, &center_of(self.q, self.d, j)) / self.radius;
        1.0 + s as f64 * self.radius.powf(self.bump.beta) * self.bump.profile(r)
    }

    /// `sup |p_ω − 1|`.
    pub fn max_deviation(&self) -> f64 {
        if self.omega.iter().all(|&v| v == 0) {
            0.0
        } else {
            self.radius.powf(self.bump.beta) * self.bump.peak()
        }
    }

    /// Exact `Leb{0 < |p_ω − 1| ≤ ε}`.
    pub fn margin_measure(&self, eps: f64) -> f64 {
        let active = 2 * self.omega.iter().filter(|&&v| v != 0).count();
        let rho = self.bump.inverse_profile(eps / self.radius.powf(self.bump.beta));
        active as f64 * unit_ball_volume(self.d) * self.radius.powi(self.d as i32) * (1.0 - rho.powi(self.d as i32))
    }

    /// `max_ε Leb{0 < |p_ω − 1| ≤ ε} / ε^γ` over a log grid in `(0, eps0]`.
    pub fn margin_constant(&self, gamma: f64, eps0: f64) -> f64 {
        if eps0 <= 0.0 {
            return 0.0;
        }
        (0..=400)
            .map(|i| eps0 * 10f64.powf(-8.0 * i as f64 / 400.0))
            .map(|e| self.margin_measure(e) / e.powf(gamma))
            .fold(0.0, f64::max)
    }

    /// `Γ_{p_ω}(1)`: the open balls carrying a positive bump.
    pub fn level_set(&self) -> impl SetPredicate + '_ {
        move |x: &[f64]| match cell_index(self.q, x) {
            Some(j) if self.sign(j) > 0 => dist(x, &center_of(self.q, self.d, j)) < self.radius,
            _ => false,
        }
    }
}

/// Binary vectors of fixed weight with pairwise Hamming distance at least
/// `ℓ + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct SeparatedSubset {
    pub n_bits: usize,
    pub weight: usize,
    pub members: Vec<Vec<u8>>,
    pub min_hamming: usize,
    /// `log(card) / (ℓ log(N/ℓ))`.
    pub c_hat: f64,
    /// Whether every vector of the given weight was offered to the greedy pass.
    pub exhaustive: bool,
}

impl SeparatedSubset {
    pub fn card(&self) -> usize {
        self.members.len()
    }
}

type Bits = Vec<u64>;

fn to_bits(idx: &[usize], n: usize) -> Bits {
    let mut b = vec![0u64; n.div_ceil(64)];
    for &i in idx {
        b[i / 64] |= 1 << (i % 64);
    }
    b
}

fn hamming(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as usize).sum()
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    acc
}

/// Greedy extraction of weight-`2ℓ` vectors in `{0,1}^N` with pairwise
/// Hamming distance `≥ ℓ + 1`. Small problems enumerate every candidate in
/// seeded random order; large ones draw random candidates until
/// 20 000 consecutive rejections. The result is verified pairwise.
pub fn extract_separated_subset(n: usize, ell: usize, seed: u64) -> Result<SeparatedSubset> {
    if ell < 1 || n < 6 * ell {
        return Err(invalid("N/ell", format!("need N >= 6 ell >= 6, got N = {n}, ell = {ell}")));
    }
    let weight = 2 * ell;
    let need = ell + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted: Vec<Bits> = Vec::new();
    let accept = |cand: Bits, accepted: &mut Vec<Bits>| {
        if accepted.iter().all(|a| hamming(a, &cand) >= need) {
            accepted.push(cand);
        }
    };
    let exhaustive = binomial(n, weight) <= EXHAUSTIVE_LIMIT;
    if exhaustive {
        let mut all = Vec::new();
        let mut idx: Vec<usize> = (0..weight).collect();
        loop {
            all.push(to_bits(&idx, n));
            let Some(pos) = (0..weight).rev().find(|&i| idx[i] < n - weight + i) else {
                break;
            };
            idx[pos] += 1;
            for i in pos + 1..weight {
                idx[i] = idx[i - 1] + 1;
            }
        }
        all.shuffle(&mut rng);
        for cand in all {
            if accepted.len() >= MAX_MEMBERS {
                break;
            }
            accept(cand, &mut accepted);
        }
    } else {
        let positions: Vec<usize> = (0..n).collect();
        let mut misses = 0;
        while misses < RANDOM_REJECTIONS && accepted.len() < MAX_MEMBERS {
            let idx: Vec<usize> = positions.choose_multiple(&mut rng, weight).copied().collect();
            let before = accepted.len();
            accept(to_bits(&idx, n), &mut accepted);
            misses = if accepted.len() > before { 0 } else { misses + 1 };
        }
    }
    let min_hamming = (0..accepted.len())
        .into_par_iter()
        .map(|i| {
            accepted[i + 1..]
                .iter()
                .map(|b| hamming(&accepted[i], b))
                .min()
                .unwrap_or(usize::MAX)
        })
        .min()
        .unwrap_or(usize::MAX);
    debug_assert!(min_hamming >= need);
    let members: Vec<Vec<u8>> = accepted
        .iter()
        .map(|b| (0..n).map(|i| ((b[i / 64] >> (i % 64)) & 1) as u8).collect())
        .collect();
    let c_hat = (members.len() as f64).ln() / (ell as f64 * (n as f64 / ell as f64).ln());
    Ok(SeparatedSubset {
        n_bits: n,
        weight,
        members,
        min_hamming,
        c_hat,
        exhaustive,
    })
}

/// `∫ p log(p/q)` by the cell-center rule on `p`'s domain; `+∞` when `q`
/// vanishes somewhere `p` is positive.
pub fn kl_divergence(p: &DensityModel, q_model: &DensityModel, resolution: usize) -> Result<f64> {
    if p.dim() != q_model.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q_model.dim(),
        });
    }
    let grid = Grid::new(p.domain().clone(), resolution)?;
    let pv = grid.map_centers(|x| p.pdf(x));
    let qv = grid.map_centers(|x| q_model.pdf(x));
    Ok(kl_from_tables(&pv, &qv, grid.cell_volume()))
}

fn kl_from_tables(p: &[f64], q: &[f64], vol: f64) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc * vol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetMetric {
    /// `Leb(G₁ Δ G₂)` on the `Ω_ϰ` family.
    DDelta,
    /// `Σ_{j ≤ m} Leb(G₁ Δ G₂ ∩ (B_j ∪ B_{N+j}))` on the `Ω_ϱ` family.
    DRho,
}

/// Numerical check of the separation and divergence conditions of the
/// lower-bound lemma on one family.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaA2Report {
    pub metric: SetMetric,
    pub q: usize,
    pub d: usize,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub n_pairs: usize,
    pub m: usize,
    pub c_beta: f64,
    pub n: usize,
    pub resolution: usize,
    pub card: usize,
    pub log_card: f64,
    pub min_hamming: usize,
    pub distance_min: f64,
    pub distance_max: f64,
    /// Largest `ε` with `d(Γ_p, Γ_q) ≥ 2ε` for all distinct members.
    pub eps_admissible: f64,
    /// `n`-sample divergence: pairwise maximum for `d_ϱ`, maximum against
    /// `p_0` for `d_Δ`.
    pub max_kl: f64,
    /// Smallest `C` with `max K ≤ C log(card)`.
    pub kl_ratio: f64,
    pub kl_upper_bound: f64,
    pub kl_bound_holds: bool,
    /// `d_ϱ` between the first two members.
    pub d_rho_first_pair: f64,
    pub max_density: f64,
    pub min_density: f64,
    pub max_mass_error: f64,
    pub separation_holds: bool,
}

pub fn verify_lemma_a2_conditions(
    family: &LowerBoundFamily,
    metric: SetMetric,
    n: usize,
    resolution: usize,
    seed: u64,
) -> Result<LemmaA2Report> {
    let members = match metric {
        SetMetric::DRho => family.rho_members(seed)?,
        SetMetric::DDelta => family.kappa_members(seed)?,
    };
    let grid = Grid::new(BoxDomain::cube(family.d, 0.0, 1.0)?, resolution)?;
    let vol = grid.cell_volume();
    let densities: Vec<POmegaDensity> = members.iter().map(|w| family.density(w)).collect::<Result<_>>()?;
    let tables: Vec<Vec<f64>> = densities.par_iter().map(|p| grid.map_centers(|x| p.pdf(x))).collect();
    let sets: Vec<GridRaster> = tables
        .iter()
        .map(|t| GridRaster::from_bools(grid.clone(), t.iter().map(|&v| v > 1.0)))
        .collect();
    let mask = family.rho_mask(&grid);
    let distance = |a: &GridRaster, b: &GridRaster| match metric {
        SetMetric::DDelta => a.sym_diff_count(b) as f64 * vol,
        SetMetric::DRho => a.masked_sym_diff_count(b, &mask) as f64 * vol,
    };
    let s = members.len();
    let pairs: Vec<(usize, usize)> = (0..s).flat_map(|i| (i + 1..s).map(move |j| (i, j))).collect();
    let dists: Vec<f64> = pairs.par_iter().map(|&(i, j)| distance(&sets[i], &sets[j])).collect();
    let distance_min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let distance_max = dists.iter().copied().fold(0.0, f64::max);
    let per_sample_kl = match metric {
        SetMetric::DRho => (0..s)
            .flat_map(|i| (0..s).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&(i, j)| kl_from_tables(&tables[i], &tables[j], vol))
            .reduce(|| 0.0, f64::max),
        SetMetric::DDelta => (1..s)
            .into_par_iter()
            .map(|i| kl_from_tables(&tables[i], &tables[0], vol))
            .reduce(|| 0.0, f64::max),
    };
    let max_kl = n as f64 * per_sample_kl;
    let log_card = (s as f64).ln();
    let kl_upper_bound = family.kl_upper_bound(n);
    let min_hamming = pairs
        .iter()
        .map(|&(i, j)| members[i].iter().zip(&members[j]).filter(|(a, b)| a != b).count())
        .min()
        .unwrap_or(0);
    let max_mass_error = tables
        .iter()
        .map(|t| (t.iter().sum::<f64>() * vol - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(LemmaA2Report {
        metric,
        q: family.q,
        d: family.d,
        beta: family.beta,
        gamma: family.gamma,
        kappa: family.kappa,
        n_pairs: family.n_pairs,
        m: family.m,
        c_beta: family.bump.c_beta,
        n,
        resolution,
        card: s,
        log_card,
        min_hamming,
        distance_min,
        distance_max,
        eps_admissible: distance_min / 2.0,
        max_kl,
        kl_ratio: if log_card > 0.0 { max_kl / log_card } else { f64::INFINITY },
        kl_upper_bound,
        kl_bound_holds: max_kl <= kl_upper_bound,
        d_rho_first_pair: if s >= 2 {
            sets[0].masked_sym_diff_count(&sets[1], &mask) as f64 * vol
        } else {
            0.0
        },
        max_density: tables.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max),
        min_density: tables.iter().flatten().copied().fold(f64::INFINITY, f64::min),
        max_mass_error,
        separation_holds: distance_min > 0.0,
    })
}
