//! Error measures between sets, relative to Lebesgue measure on a grid:
//!
//! - `d_Δ(G₁, G₂) = Leb(G₁ Δ G₂)`;
//! - `d_H(G₁, G₂) = ∫_{G₁ Δ G₂} |p − λ|`, which for `G₂ = Γ(λ)` equals the
//!   excess-mass deficit `H(Γ) − H(G₁)` with `H(G) = P(G) − λ Leb(G)`.
//!
//! All integrals use the cell-center rule of a [`Grid`]. Reported error
//! bounds charge every cell on a membership boundary of either set with its
//! full volume (times `sup |p − λ|` over the cell for `d_H`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::densities::{margin_measures, DensityModel};
use crate::error::{invalid, Result};
use crate::grid::{BoxDomain, Grid};
use crate::levelset::{rasterize_on, BoxUnion, GridRaster, SetPredicate};

/// Which version of the true level set a comparison uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelDef {
    /// `Γ(λ) = {p > λ}`.
    Open,
    /// `Γ̄(λ) = {p ≥ λ}`.
    Closed,
}

/// Pdf values at the cell centers of a grid, computed once and shared by
/// every metric on that grid.
#[derive(Debug, Clone)]
pub struct PdfTable<'a> {
    model: &'a DensityModel,
    grid: Grid,
    values: Vec<f64>,
}

impl<'a> PdfTable<'a> {
    pub fn new(model: &'a DensityModel, grid: Grid) -> Self {
        let values = grid.map_centers(|c| model.pdf(c));
        Self { model, grid, values }
    }

    pub fn on_domain(model: &'a DensityModel, resolution: usize) -> Result<Self> {
        Ok(Self::new(model, Grid::new(model.domain().clone(), resolution)?))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn model(&self) -> &DensityModel {
        self.model
    }

    pub fn level_set(&self, lambda: f64, def: LevelDef) -> GridRaster {
        GridRaster::from_bools(
            self.grid.clone(),
            self.values.iter().map(|&p| match def {
                LevelDef::Open => p > lambda,
                LevelDef::Closed => p >= lambda,
            }),
        )
    }

    /// Raster of `{p = λ}` (exact equality at cell centers).
    pub fn flat_part(&self, lambda: f64) -> GridRaster {
        GridRaster::from_bools(self.grid.clone(), self.values.iter().map(|&p| p == lambda))
    }

    /// `Σ_{cells in g} (p − λ) · vol`.
    pub fn excess_mass(&self, g: &GridRaster, lambda: f64) -> f64 {
        self.weighted_sum(g, |p| p - lambda)
    }

    /// `Σ_{cells in g} |p − λ| · vol`.
    pub fn abs_excess(&self, g: &GridRaster, lambda: f64) -> f64 {
        self.weighted_sum(g, |p| (p - lambda).abs())
    }

    fn weighted_sum(&self, g: &GridRaster, f: impl Fn(f64) -> f64) -> f64 {
        assert_eq!(g.grid(), &self.grid, "raster and table grids differ");
        let total: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| g.get(*i))
            .map(|(_, &p)| f(p))
            .sum();
        total * self.grid.cell_volume()
    }

    /// `∫_{a Δ b} |p − λ|`.
    pub fn d_h_between(&self, a: &GridRaster, b: &GridRaster, lambda: f64) -> f64 {
        assert_eq!(a.grid(), &self.grid);
        assert_eq!(b.grid(), &self.grid);
        let total: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| a.get(*i) != b.get(*i))
            .map(|(_, &p)| (p - lambda).abs())
            .sum();
        total * self.grid.cell_volume()
    }

    /// Upper bound on `|p(x) − p(center)|` within a cell, from the model's
    /// declared Hölder constant.
    fn cell_oscillation(&self) -> f64 {
        let params = self.model.params();
        params.l * (self.grid.cell_diameter() / 2.0).powf(params.beta.min(1.0))
    }
}

/// Grid-resolution error bounds for a [`MetricReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBounds {
    pub d_delta: f64,
    pub d_h: f64,
}

/// `d_Δ`, `d_H` and the excess-mass deficit of an estimate against the true
/// level set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub d_delta: f64,
    pub d_h: f64,
    pub excess_mass_deficit: f64,
    pub quadrature_cells: usize,
    pub est_error: ErrorBounds,
}

/// Error bounds for quantities computed on `a Δ b`.
pub fn error_bounds(table: &PdfTable<'_>, a: &GridRaster, b: &GridRaster, lambda: f64) -> ErrorBounds {
    let mut cells = a.boundary_cells();
    cells.extend(b.boundary_cells());
    cells.sort_unstable();
    cells.dedup();
    let vol = table.grid.cell_volume();
    let osc = table.cell_oscillation();
    ErrorBounds {
        d_delta: cells.len() as f64 * vol,
        d_h: cells
            .iter()
            .map(|&i| ((table.values[i] - lambda).abs() + osc) * vol)
            .sum(),
    }
}

/// Compares a rasterized estimate with `Γ(λ)` or `Γ̄(λ)` on the same grid.
pub fn evaluate(table: &PdfTable<'_>, estimate: &GridRaster, lambda: f64, def: LevelDef) -> MetricReport {
    let truth = table.level_set(lambda, def);
    let d_delta = estimate.sym_diff_count(&truth) as f64 * table.grid.cell_volume();
    let d_h = table.d_h_between(estimate, &truth, lambda);
    let excess_mass_deficit = table.excess_mass(&truth, lambda) - table.excess_mass(estimate, lambda);
    MetricReport {
        d_delta,
        d_h,
        excess_mass_deficit,
        quadrature_cells: table.grid.len(),
        est_error: error_bounds(table, estimate, &truth, lambda),
    }
}

/// `Leb(a Δ b)` over `domain` at the given resolution.
pub fn sym_diff<A, B>(a: &A, b: &B, domain: &BoxDomain, resolution: usize) -> Result<f64>
where
    A: SetPredicate + ?Sized,
    B: SetPredicate + ?Sized,
{
    let grid = Grid::new(domain.clone(), resolution)?;
    let ra = rasterize_on(a, &grid);
    let rb = rasterize_on(b, &grid);
    Ok(ra.sym_diff_count(&rb) as f64 * grid.cell_volume())
}

/// `H(g) = ∫_g p − λ Leb(g)` over the model's domain.
pub fn excess_mass<G: SetPredicate + ?Sized>(
    g: &G,
    model: &DensityModel,
    lambda: f64,
    resolution: usize,
) -> Result<f64> {
    let table = PdfTable::on_domain(model, resolution)?;
    let r = rasterize_on(g, table.grid());
    Ok(table.excess_mass(&r, lambda))
}

/// `d_H(g, Γ(λ))` over the model's domain.
pub fn d_h<G: SetPredicate + ?Sized>(g: &G, model: &DensityModel, lambda: f64, resolution: usize) -> Result<f64> {
    d_h_against(g, model, lambda, resolution, LevelDef::Open)
}

/// `d_H(g, Γ(λ))` or `d_H(g, Γ̄(λ))`.
pub fn d_h_against<G: SetPredicate + ?Sized>(
    g: &G,
    model: &DensityModel,
    lambda: f64,
    resolution: usize,
    def: LevelDef,
) -> Result<f64> {
    let table = PdfTable::on_domain(model, resolution)?;
    let r = rasterize_on(g, table.grid());
    Ok(table.d_h_between(&r, &table.level_set(lambda, def), lambda))
}

/// `L_Q = M + 1/λ` with `M = λ^{-1} ∫|K|`, the measure cap used by the
/// `d_Δ`/`d_H` comparison inequalities.
pub fn default_l_q(kernel_abs_integral: f64, lambda: f64) -> f64 {
    kernel_abs_integral / lambda + 1.0 / lambda
}

/// Random finite unions of boxes inside `domain`, deterministic in `seed`.
pub fn random_box_unions(domain: &BoxDomain, count: usize, max_boxes: usize, seed: u64) -> Vec<BoxUnion> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_side = domain
        .lower
        .iter()
        .zip(&domain.upper)
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min)
        / 2.0;
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=max_boxes.max(1));
            BoxUnion::random(domain, k, max_side, &mut rng)
        })
        .collect()
}

/// Both sides of `d_Δ ≤ Leb(Δ ∩ {p = λ}) + C d_H^{γ/(1+γ)}` for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop21Row {
    pub d_delta: f64,
    pub flat_part: f64,
    pub d_h: f64,
    /// `d_H^{γ/(1+γ)}`.
    pub rhs_unit: f64,
    /// `flat_part + C·rhs_unit − d_delta` at the fitted `C`.
    pub slack: f64,
    /// Pair skipped because `Leb(G₁ Δ G₂) > L_Q`.
    pub excluded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop21Report {
    pub gamma: f64,
    pub l_q: f64,
    /// Smallest `C` for which every included pair satisfies the inequality.
    pub fitted_c: f64,
    pub holds: bool,
    pub rows: Vec<Prop21Row>,
}

/// The three raster terms for one pair of sets.
pub fn prop21_terms(table: &PdfTable<'_>, a: &GridRaster, b: &GridRaster, lambda: f64, gamma: f64) -> Prop21Row {
    let vol = table.grid().cell_volume();
    let flat = table.flat_part(lambda);
    let d_delta = a.sym_diff_count(b) as f64 * vol;
    let flat_part = a.masked_sym_diff_count(b, &flat) as f64 * vol;
    let d_h = table.d_h_between(a, b, lambda);
    Prop21Row {
        d_delta,
        flat_part,
        d_h,
        rhs_unit: d_h.powf(gamma / (1.0 + gamma)),
        slack: 0.0,
        excluded: false,
    }
}

/// Evaluates the `d_Δ`/`d_H` comparison on a suite of set pairs and fits the
/// smallest constant `C` that makes every pair hold.
pub fn prop21_check<A, B>(
    pairs: &[(A, B)],
    model: &DensityModel,
    lambda: f64,
    gamma: f64,
    resolution: usize,
    l_q: f64,
) -> Result<Prop21Report>
where
    A: SetPredicate,
    B: SetPredicate,
{
    if !(gamma >= 0.0) {
        return Err(invalid("gamma", "must be non-negative"));
    }
    let table = PdfTable::on_domain(model, resolution)?;
    let mut rows: Vec<Prop21Row> = pairs
        .iter()
        .map(|(a, b)| {
            let ra = rasterize_on(a, table.grid());
            let rb = rasterize_on(b, table.grid());
            let mut row = prop21_terms(&table, &ra, &rb, lambda, gamma);
            row.excluded = row.d_delta > l_q;
            row
        })
        .collect();
    let mut fitted_c: f64 = 0.0;
    for row in rows.iter().filter(|r| !r.excluded) {
        let excess = row.d_delta - row.flat_part;
        if excess <= 0.0 {
            continue;
        }
        fitted_c = fitted_c.max(if row.rhs_unit > 0.0 {
            excess / row.rhs_unit
        } else {
            f64::INFINITY
        });
    }
    for row in rows.iter_mut() {
        row.slack = row.flat_part + fitted_c * row.rhs_unit - row.d_delta;
    }
    Ok(Prop21Report {
        gamma,
        l_q,
        fitted_c,
        holds: fitted_c.is_finite(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropA1Row {
    /// `Leb(G)`.
    pub measure: f64,
    /// `∫_G |p − λ|`.
    pub weighted: f64,
    /// `Leb(G) / (∫_G |p − λ|)^{γ/(1+γ)}`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropA1Report {
    pub gamma: f64,
    pub l_q: f64,
    /// Smallest `c′` with `Leb(G) ≤ c′ (∫_G |p − λ|)^{γ/(1+γ)}` on the suite.
    pub c_prime: f64,
    /// `(c′)^{1+γ}`, the margin constant implied by `c′`.
    pub implied_c: f64,
    /// Directly measured `max_ε Leb{0 < |p − λ| ≤ ε} / ε^γ`.
    pub forward_c: f64,
    pub rows: Vec<PropA1Row>,
}

/// Fits `c′` over the given sets, each intersected with `{p ≠ λ}`.
pub fn prop_a1_on_sets<S: SetPredicate>(
    sets: &[S],
    model: &DensityModel,
    lambda: f64,
    gamma: f64,
    resolution: usize,
    eps_grid: &[f64],
    l_q: f64,
) -> Result<PropA1Report> {
    let table = PdfTable::on_domain(model, resolution)?;
    let off_level = GridRaster::from_bools(table.grid().clone(), table.values().iter().map(|&p| p != lambda));
    let rasters: Vec<GridRaster> = sets
        .iter()
        .map(|s| rasterize_on(s, table.grid()).intersection(&off_level))
        .collect();
    prop_a1_on_rasters(&table, &rasters, lambda, gamma, eps_grid, l_q)
}

fn prop_a1_on_rasters(
    table: &PdfTable<'_>,
    rasters: &[GridRaster],
    lambda: f64,
    gamma: f64,
    eps_grid: &[f64],
    l_q: f64,
) -> Result<PropA1Report> {
    let e = gamma / (1.0 + gamma);
    let rows: Vec<PropA1Row> = rasters
        .iter()
        .map(|r| {
            let measure = r.measure();
            let weighted = table.abs_excess(r, lambda);
            let ratio = if measure == 0.0 { 0.0 } else { measure / weighted.powf(e) };
            PropA1Row {
                measure,
                weighted,
                ratio,
            }
        })
        .filter(|row| row.measure <= l_q)
        .collect();
    let c_prime = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let measures = margin_measures(table.model(), lambda, eps_grid, table.grid().resolution())?;
    let forward_c = eps_grid
        .iter()
        .zip(&measures)
        .map(|(eps, m)| m / eps.powf(gamma))
        .fold(0.0, f64::max);
    Ok(PropA1Report {
        gamma,
        l_q,
        c_prime,
        implied_c: c_prime.powf(1.0 + gamma),
        forward_c,
        rows,
    })
}

/// Suite of `n_random_sets` random box unions plus the level-hugging sets
/// `{0 < |p − λ| ≤ ε}` for every `ε` in `eps_grid`.
pub fn prop_a1_check(
    model: &DensityModel,
    lambda: f64,
    gamma: f64,
    n_random_sets: usize,
    seed: u64,
    resolution: usize,
    eps_grid: &[f64],
    l_q: f64,
) -> Result<PropA1Report> {
    let table = PdfTable::on_domain(model, resolution)?;
    let off_level = GridRaster::from_bools(table.grid().clone(), table.values().iter().map(|&p| p != lambda));
    let mut rasters: Vec<GridRaster> = random_box_unions(model.domain(), n_random_sets, 4, seed)
        .iter()
        .map(|s| rasterize_on(s, table.grid()).intersection(&off_level))
        .collect();
    for &eps in eps_grid {
        rasters.push(GridRaster::from_bools(
            table.grid().clone(),
            table.values().iter().map(|&p| {
                let g = (p - lambda).abs();
                g > 0.0 && g <= eps
            }),
        ));
    }
    prop_a1_on_rasters(&table, &rasters, lambda, gamma, eps_grid, l_q)
}
