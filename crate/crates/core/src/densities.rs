//! Synthetic density families with analytic pdf, exact samplers and true
//! level-set oracles.
//!
//! Models are addressed by string id:
//!
//! - `uniform` or `uniform:<d>`: the unit cube `[0, 1]^d`;
//! - `cone1d`: `p(x) = (1 − |x|)₊` on `[-1, 1]`;
//! - `plateau`: `1/2` on `[0, 1]` with linear tails to zero at `-1` and `2`;
//! - `pomega:<q>:<beta>:<gamma>:<d>:<omega>`: a bump-perturbed uniform
//!   density from [`crate::lowerbound`]; `<omega>` is `zero`, `ones`, or a
//!   comma-separated list of `-1`/`0`/`1` of length `N`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{BoxDomain, Grid};
use crate::lowerbound::{LowerBoundFamily, POmegaDensity};

/// Proposals allowed per requested point before rejection sampling gives up.
pub const MAX_PROPOSALS_PER_POINT: u64 = 10_000;

/// Regularity and margin parameters a model declares about itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderParams {
    /// Smoothness near the level.
    pub beta: f64,
    /// Smoothness away from the level.
    pub beta_prime: f64,
    #[serde(rename = "L")]
    pub l: f64,
    /// Sup-norm bound `L*`.
    #[serde(rename = "L_star")]
    pub l_star: f64,
    pub r: f64,
    /// Half-width of the level neighbourhood `{|p − λ| < η}`. Declared, not
    /// claimed maximal.
    pub eta: f64,
    pub gamma: f64,
    pub c0: f64,
    pub eps0: f64,
    pub lambda: f64,
}

impl HolderParams {
    /// `γ · min(β, 1) ≤ 1`, required by the rate results.
    pub fn rate_admissible(&self) -> bool {
        self.gamma * self.beta.min(1.0) <= 1.0 + 1e-12
    }
}

#[derive(Debug, Clone)]
enum Family {
    Uniform,
    Cone,
    Plateau,
    POmega(Arc<POmegaDensity>),
}

/// A density with analytic pdf, sampler and level-set oracles.
#[derive(Debug, Clone)]
pub struct DensityModel {
    id: String,
    params: HolderParams,
    domain: BoxDomain,
    family: Family,
}

/// I.i.d. draws stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    points: Vec<f64>,
    pub seed: u64,
    pub model_id: String,
}

impl Sample {
    pub fn new(dim: usize, points: Vec<f64>, seed: u64, model_id: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if points.len() % dim != 0 {
            return Err(invalid("points", "length is not a multiple of the dimension"));
        }
        Ok(Self {
            dim,
            points,
            seed,
            model_id: model_id.into(),
        })
    }

    /// One-dimensional sample from plain values.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            dim: 1,
            points: values,
            seed: 0,
            model_id: String::from("manual"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }
}

impl DensityModel {
    pub fn uniform_box(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Self {
            id: if d == 1 { "uniform".into() } else { format!("uniform:{d}") },
            params: HolderParams {
                beta: 2.0,
                beta_prime: 2.0,
                l: 1.0,
                l_star: 1.0,
                r: 1.0,
                eta: 0.25,
                gamma: 1.0,
                c0: 1.0,
                eps0: 0.25,
                lambda: 0.5,
            },
            domain: BoxDomain::cube(d, 0.0, 1.0)?,
            family: Family::Uniform,
        })
    }

    /// `(1 − |x|)₊`; at `λ = 1/2` the level has γ-exponent 1 with `c₀ = 4`.
    pub fn cone_1d() -> Self {
        Self {
            id: "cone1d".into(),
            params: HolderParams {
                beta: 1.0,
                beta_prime: 1.0,
                l: 1.0,
                l_star: 1.0,
                r: 0.4,
                eta: 0.25,
                gamma: 1.0,
                c0: 4.0,
                eps0: 0.25,
                lambda: 0.5,
            },
            domain: BoxDomain::cube(1, -1.0, 1.0).expect("static box"),
            family: Family::Cone,
        }
    }

    /// Flat at `1/2` on `[0, 1]`, linear tails `(1 − dist(x, [0,1]))/2`.
    pub fn plateau() -> Self {
        Self {
            id: "plateau".into(),
            params: HolderParams {
                beta: 1.0,
                beta_prime: 1.0,
                l: 0.5,
                l_star: 0.5,
                r: 0.5,
                eta: 0.25,
                gamma: 1.0,
                c0: 4.0,
                eps0: 0.25,
                lambda: 0.5,
            },
            domain: BoxDomain::cube(1, -1.0, 2.0).expect("static box"),
            family: Family::Plateau,
        }
    }

    pub(crate) fn from_pomega(id: String, params: HolderParams, density: POmegaDensity) -> Self {
        let domain = BoxDomain::cube(density.dim(), 0.0, 1.0).expect("unit cube");
        Self {
            id,
            params,
            domain,
            family: Family::POmega(Arc::new(density)),
        }
    }

    /// Parses a model id (see the module docs).
    pub fn from_id(id: &str) -> Result<Self> {
        let parts: Vec<&str> = id.split(':').collect();
        match parts.as_slice() {
            ["uniform"] => Self::uniform_box(1),
            ["uniform", d] => Self::uniform_box(parse_num(d, "d")?),
            ["cone1d"] => Ok(Self::cone_1d()),
            ["plateau"] => Ok(Self::plateau()),
            ["pomega", q, beta, gamma, d, omega] => {
                let family = LowerBoundFamily::build(
                    parse_num(q, "q")?,
                    parse_num(d, "d")?,
                    parse_num(beta, "beta")?,
                    parse_num(gamma, "gamma")?,
                    1.0,
                    0,
                )?;
                let omega = parse_omega(omega, family.n_pairs())?;
                family.model(&omega)
            }
            _ => Err(Error::UnknownModel(id.to_string())),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn params(&self) -> &HolderParams {
        &self.params
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn pomega(&self) -> Option<&POmegaDensity> {
        match &self.family {
            Family::POmega(p) => Some(p),
            _ => None,
        }
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::Uniform => {
                if self.domain.contains(x) {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Cone => (1.0 - x[0].abs()).max(0.0),
            Family::Plateau => {
                let t = x[0];
                if (0.0..=1.0).contains(&t) {
                    0.5
                } else {
                    let dist = if t < 0.0 { -t } else { t - 1.0 };
                    ((1.0 - dist) / 2.0).max(0.0)
                }
            }
            Family::POmega(p) => {
                if self.domain.contains(x) {
                    p.pdf(x)
                } else {
                    0.0
                }
            }
        }
    }

    /// `x ∈ Γ(λ) = {p > λ}`.
    pub fn true_set(&self, x: &[f64], lambda: f64) -> bool {
        self.pdf(x) > lambda
    }

    /// `x ∈ Γ̄(λ) = {p ≥ λ}`.
    pub fn true_set_closed(&self, x: &[f64], lambda: f64) -> bool {
        self.pdf(x) >= lambda
    }

    /// Analytic CDF for the one-dimensional families.
    pub fn cdf(&self, t: f64) -> Option<f64> {
        match &self.family {
            Family::Uniform if self.dim() == 1 => Some(t.clamp(0.0, 1.0)),
            Family::Cone => Some(if t <= -1.0 {
                0.0
            } else if t <= 0.0 {
                (1.0 + t).powi(2) / 2.0
            } else if t <= 1.0 {
                1.0 - (1.0 - t).powi(2) / 2.0
            } else {
                1.0
            }),
            Family::Plateau => Some(if t <= -1.0 {
                0.0
            } else if t <= 0.0 {
                (1.0 + t).powi(2) / 4.0
            } else if t <= 1.0 {
                0.25 + t / 2.0
            } else if t <= 2.0 {
                1.0 - (2.0 - t).powi(2) / 4.0
            } else {
                1.0
            }),
            _ => None,
        }
    }

    fn inverse_cdf(&self, u: f64) -> Option<f64> {
        match &self.family {
            Family::Uniform if self.dim() == 1 => Some(u),
            Family::Cone => Some(if u < 0.5 {
                (2.0 * u).sqrt() - 1.0
            } else {
                1.0 - (2.0 * (1.0 - u)).sqrt()
            }),
            Family::Plateau => Some(if u < 0.25 {
                2.0 * u.sqrt() - 1.0
            } else if u <= 0.75 {
                2.0 * (u - 0.25)
            } else {
                2.0 - 2.0 * (1.0 - u).sqrt()
            }),
            _ => None,
        }
    }

    /// Draws `n` i.i.d. points; deterministic given `seed`.
    ///
    /// One-dimensional families use the inverse CDF; the rest use rejection
    /// from the uniform distribution on the bounding box with envelope `L*`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Sample> {
        if n < 1 {
            return Err(invalid("n", "sample size must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim();
        let mut points = Vec::with_capacity(n * d);
        if self.inverse_cdf(0.5).is_some() {
            for _ in 0..n {
                let u: f64 = rng.gen();
                points.push(self.inverse_cdf(u).expect("checked above"));
            }
        } else if matches!(self.family, Family::Uniform) {
            for _ in 0..n * d {
                points.push(rng.gen::<f64>());
            }
        } else {
            let envelope = self.params.l_star;
            let cap = MAX_PROPOSALS_PER_POINT * n as u64;
            let mut proposals = 0u64;
            let mut x = vec![0.0; d];
            while points.len() < n * d {
                if proposals >= cap {
                    return Err(Error::SamplingFailure {
                        attempts: proposals,
                        requested: n,
                    });
                }
                proposals += 1;
                for (j, xj) in x.iter_mut().enumerate() {
                    *xj = rng.gen_range(self.domain.lower[j]..self.domain.upper[j]);
                }
                if rng.gen::<f64>() * envelope < self.pdf(&x) {
                    points.extend_from_slice(&x);
                }
            }
        }
        Sample::new(d, points, seed, self.id.clone())
    }

    /// Midpoint-rule integral of the pdf over the model's domain.
    pub fn total_mass(&self, resolution: usize) -> Result<f64> {
        let grid = Grid::new(self.domain.clone(), resolution)?;
        let vol = grid.cell_volume();
        Ok(grid.map_centers(|c| self.pdf(c)).iter().sum::<f64>() * vol)
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &'static str) -> Result<T> {
    s.parse().map_err(|_| invalid(name, format!("cannot parse `{s}`")))
}

/// Parses an `<omega>` spec of `n` ternary coordinates.
pub fn parse_omega(spec: &str, n: usize) -> Result<Vec<i8>> {
    match spec {
        "zero" => Ok(vec![0; n]),
        "ones" => Ok(vec![1; n]),
        list => {
            let omega: Vec<i8> = list
                .split(',')
                .map(|t| parse_num::<i8>(t.trim(), "omega"))
                .collect::<Result<_>>()?;
            if omega.len() != n {
                return Err(invalid("omega", format!("expected {n} entries, got {}", omega.len())));
            }
            if omega.iter().any(|v| !(-1..=1).contains(v)) {
                return Err(invalid("omega", "entries must be -1, 0 or 1"));
            }
            Ok(omega)
        }
    }
}

/// Measured `Leb{0 < |p − λ| ≤ ε}` per `ε` and the fitted power law.
#[derive(Debug, Clone, Serialize)]
pub struct GammaFit {
    pub gamma_hat: f64,
    pub c0_hat: f64,
    pub eps: Vec<f64>,
    pub measures: Vec<f64>,
}

impl GammaFit {
    /// Smallest `C` with `measure(ε) ≤ C ε^γ` on the measured grid.
    pub fn bound_constant(&self, gamma: f64) -> f64 {
        self.eps
            .iter()
            .zip(&self.measures)
            .map(|(e, m)| m / e.powf(gamma))
            .fold(0.0, f64::max)
    }
}

/// `Leb{0 < |p − λ| ≤ ε}` by cell-center counting, for each `ε`.
///
/// Cells whose center has `p` exactly equal to `λ` are excluded.
pub fn margin_measures(model: &DensityModel, lambda: f64, eps_grid: &[f64], resolution: usize) -> Result<Vec<f64>> {
    let grid = Grid::new(model.domain().clone(), resolution)?;
    let vol = grid.cell_volume();
    let gaps: Vec<f64> = grid
        .map_centers(|c| (model.pdf(c) - lambda).abs())
        .into_iter()
        .filter(|&g| g != 0.0)
        .collect();
    Ok(eps_grid
        .iter()
        .map(|&eps| gaps.iter().filter(|&&g| g <= eps).count() as f64 * vol)
        .collect())
}

/// Fits `log measure = log c₀ + γ log ε` over `eps_grid`.
pub fn gamma_exponent_empirical(
    model: &DensityModel,
    lambda: f64,
    eps_grid: &[f64],
    resolution: usize,
) -> Result<GammaFit> {
    if eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(invalid("eps_grid", "every ε must be positive"));
    }
    let measures = margin_measures(model, lambda, eps_grid, resolution)?;
    let pts: Vec<(f64, f64)> = eps_grid
        .iter()
        .zip(&measures)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&e, &m)| (e.ln(), m.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::UndefinedFit(format!(
            "only {} of {} margin measures are positive",
            pts.len(),
            eps_grid.len()
        )));
    }
    let (slope, intercept) = crate::harness::least_squares(&pts);
    Ok(GammaFit {
        gamma_hat: slope,
        c0_hat: intercept.exp(),
        eps: eps_grid.to_vec(),
        measures,
    })
}
