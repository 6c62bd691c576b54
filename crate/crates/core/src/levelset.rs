//! Plug-in level-set estimators with offset, and their rasterization on a
//! cell-center grid.
//!
//! The true level set uses a strict inequality, `Γ(λ) = {p > λ}`, while the
//! plug-in estimate keeps ties: `Γ̃ = {p̂ ≥ λ + ℓ}`. A positive offset aims at
//! `Γ(λ)`, a negative one at `Γ̄(λ) = {p ≥ λ}`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{BoxDomain, Grid};
use crate::kde::DensityEstimate;

/// A measurable set given by its membership predicate.
pub trait SetPredicate: Sync {
    fn contains(&self, x: &[f64]) -> bool;
}

impl<F> SetPredicate for F
where
    F: Fn(&[f64]) -> bool + Sync,
{
    fn contains(&self, x: &[f64]) -> bool {
        self(x)
    }
}

/// `{x : p̂(x) ≥ λ + ℓ}`.
#[derive(Debug, Clone, Copy)]
pub struct LevelSetEstimate<'a, E: ?Sized> {
    source: &'a E,
    pub lambda: f64,
    pub ell: f64,
}

/// Plug-in estimate with offset `ell` (which may be negative).
pub fn plugin_estimate<E: DensityEstimate + ?Sized>(est: &E, lambda: f64, ell: f64) -> LevelSetEstimate<'_, E> {
    LevelSetEstimate {
        source: est,
        lambda,
        ell,
    }
}

impl<E: DensityEstimate + ?Sized> LevelSetEstimate<'_, E> {
    pub fn threshold(&self) -> f64 {
        self.lambda + self.ell
    }

    /// Rasterizes through the estimator's bulk grid evaluation.
    pub fn rasterize(&self, grid: &Grid) -> GridRaster {
        let t = self.threshold();
        let values = self.source.eval_grid(grid);
        GridRaster::from_bools(grid.clone(), values.iter().map(|&v| v >= t))
    }
}

impl<E: DensityEstimate + ?Sized> SetPredicate for LevelSetEstimate<'_, E> {
    fn contains(&self, x: &[f64]) -> bool {
        self.source.eval(x) >= self.threshold()
    }
}

/// Membership bits at the cell centers of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridRaster {
    grid: Grid,
    words: Vec<u64>,
}

impl GridRaster {
    pub fn empty(grid: Grid) -> Self {
        let words = vec![0; grid.len().div_ceil(64)];
        Self { grid, words }
    }

    pub fn full(grid: Grid) -> Self {
        let mut r = Self::empty(grid);
        for i in 0..r.len() {
            r.set(i, true);
        }
        r
    }

    pub fn from_bools(grid: Grid, bits: impl IntoIterator<Item = bool>) -> Self {
        let mut r = Self::empty(grid);
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                r.words[i / 64] |= 1 << (i % 64);
            }
        }
        r
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid.cell_volume()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, on: bool) {
        if on {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Cell-count estimate of the Lebesgue measure of the set.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.cell_volume()
    }

    fn same_grid(&self, other: &Self) {
        assert_eq!(self.grid, other.grid, "rasters live on different grids");
    }

    pub fn sym_diff_count(&self, other: &Self) -> usize {
        self.same_grid(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Cells in `(self Δ other) ∩ mask`.
    pub fn masked_sym_diff_count(&self, other: &Self, mask: &Self) -> usize {
        self.same_grid(other);
        self.same_grid(mask);
        self.words
            .iter()
            .zip(&other.words)
            .zip(&mask.words)
            .map(|((a, b), m)| ((a ^ b) & m).count_ones() as usize)
            .sum()
    }

    pub fn union(&self, other: &Self) -> Self {
        self.same_grid(other);
        Self {
            grid: self.grid.clone(),
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.same_grid(other);
        Self {
            grid: self.grid.clone(),
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// True when `self ⊆ other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.same_grid(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Cells with at least one axis neighbour of different membership.
    pub fn boundary_cells(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                let b = self.get(i);
                self.grid.neighbours(i).any(|j| self.get(j) != b)
            })
            .collect()
    }

    /// Writes `cell,x0,…,x{d-1},bit` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.grid.dim();
        let mut header = vec![String::from("cell")];
        header.extend((0..d).map(|j| format!("x{j}")));
        header.push(String::from("bit"));
        w.write_record(&header)?;
        let mut c = vec![0.0; d];
        for i in 0..self.len() {
            self.grid.center_into(i, &mut c);
            let mut row = vec![i.to_string()];
            row.extend(c.iter().map(|v| v.to_string()));
            row.push(u8::from(self.get(i)).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates `set` at the cell centers of `grid`.
pub fn rasterize_on<S: SetPredicate + ?Sized>(set: &S, grid: &Grid) -> GridRaster {
    let bits: Vec<bool> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; grid.dim()],
            |c, i| {
                grid.center_into(i, c);
                set.contains(c)
            },
        )
        .collect();
    GridRaster::from_bools(grid.clone(), bits)
}

/// Rasterizes a predicate on a fresh `resolution^d` grid over `domain`.
pub fn rasterize<S: SetPredicate + ?Sized>(set: &S, domain: &BoxDomain, resolution: usize) -> Result<GridRaster> {
    let grid = Grid::new(domain.clone(), resolution)?;
    Ok(rasterize_on(set, &grid))
}

/// Finite union of closed axis-aligned boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxUnion {
    pub boxes: Vec<BoxDomain>,
}

impl BoxUnion {
    pub fn empty() -> Self {
        Self { boxes: Vec::new() }
    }

    /// `k` boxes with uniformly drawn corners inside `domain`, each side at
    /// most `max_side` long.
    pub fn random<R: Rng + ?Sized>(domain: &BoxDomain, k: usize, max_side: f64, rng: &mut R) -> Self {
        let boxes = (0..k)
            .map(|_| {
                let (lo, hi): (Vec<f64>, Vec<f64>) = domain
                    .lower
                    .iter()
                    .zip(&domain.upper)
                    .map(|(&a, &b)| {
                        let side = rng.gen_range(0.0..max_side.min(b - a));
                        let start = rng.gen_range(a..(b - side).max(a + f64::EPSILON));
                        (start, (start + side).min(b))
                    })
                    .unzip();
                BoxDomain {
                    lower: lo,
                    upper: hi,
                }
            })
            .collect();
        Self { boxes }
    }
}

impl SetPredicate for BoxUnion {
    fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }
}
