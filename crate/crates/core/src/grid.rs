//! Axis-aligned boxes and regular cell-center grids over them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest number of cells a [`Grid`] may hold.
pub const MAX_CELLS: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b)) {
            return Err(invalid("box", "every lower bound must be below its upper bound"));
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

/// Regular grid of `resolution^d` cells over a box, addressed by flat index
/// with the first coordinate varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    domain: BoxDomain,
    resolution: usize,
}

impl Grid {
    pub fn new(domain: BoxDomain, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(invalid("resolution", format!("must be at least 2, got {resolution}")));
        }
        let cells = (resolution as u128).checked_pow(domain.dim() as u32).unwrap_or(u128::MAX);
        if cells > MAX_CELLS as u128 {
            return Err(Error::GridTooLarge {
                requested: cells,
                cap: MAX_CELLS,
            });
        }
        Ok(Self { domain, resolution })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.domain.upper[axis] - self.domain.lower[axis]) / self.resolution as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.cell_width(a)).product()
    }

    /// Largest cell diagonal.
    pub fn cell_diameter(&self) -> f64 {
        (0..self.dim()).map(|a| self.cell_width(a).powi(2)).sum::<f64>().sqrt()
    }

    /// Per-axis cell indices of a flat index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        (0..self.dim())
            .map(|_| {
                let i = flat % self.resolution;
                flat /= self.resolution;
                i
            })
            .collect()
    }

    pub fn center_into(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for (axis, o) in out.iter_mut().enumerate() {
            let i = rem % self.resolution;
            rem /= self.resolution;
            *o = self.domain.lower[axis] + (i as f64 + 0.5) * self.cell_width(axis);
        }
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        self.center_into(flat, &mut c);
        c
    }

    /// Cell-center coordinates along one axis, increasing.
    pub fn axis_centers(&self, axis: usize) -> Vec<f64> {
        let w = self.cell_width(axis);
        (0..self.resolution)
            .map(|i| self.domain.lower[axis] + (i as f64 + 0.5) * w)
            .collect()
    }

    /// Evaluates `f` at every cell center, in flat-index order.
    pub fn map_centers<T>(&self, mut f: impl FnMut(&[f64]) -> T) -> Vec<T> {
        let mut c = vec![0.0; self.dim()];
        (0..self.len())
            .map(|flat| {
                self.center_into(flat, &mut c);
                f(&c)
            })
            .collect()
    }

    /// Flat indices of the axis neighbours of a cell.
    pub fn neighbours(&self, flat: usize) -> impl Iterator<Item = usize> + '_ {
        let idx = self.unravel(flat);
        let res = self.resolution;
        (0..self.dim()).flat_map(move |axis| {
            let stride = res.pow(axis as u32);
            let i = idx[axis];
            let down = (i > 0).then(|| flat - stride);
            let up = (i + 1 < res).then(|| flat + stride);
            down.into_iter().chain(up)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_boxes() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![], vec![]).is_err());
    }

    #[test]
    fn resolution_guards() {
        let b = BoxDomain::cube(2, 0.0, 1.0).unwrap();
        assert!(Grid::new(b.clone(), 1).is_err());
        assert!(matches!(Grid::new(b, 1 << 14), Err(Error::GridTooLarge { .. })));
    }

    #[test]
    fn centers_and_neighbours() {
        let g = Grid::new(BoxDomain::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap(), 4).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.center(0), vec![0.125, -0.75]);
        assert_eq!(g.center(5), vec![0.375, -0.25]);
        assert!((g.cell_volume() - 0.125).abs() < 1e-15);
        let mut n: Vec<_> = g.neighbours(5).collect();
        n.sort();
        assert_eq!(n, vec![1, 4, 6, 9]);
        assert_eq!(g.neighbours(0).count(), 2);
    }
}
