use serde::{Deserialize, Serialize};

use super::Domain;
use crate::error::{config, Result};
use crate::kernel::InitialDatum;

/// Uniform tensor grid `lower + i·spacing`, `i = 0..n`, on each of `dim` axes.
/// The first and last node of every axis are boundary nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub lower: f64,
    pub spacing: f64,
    pub n: usize,
}

impl Grid {
    pub fn for_domain(domain: &Domain, h: f64) -> Result<Grid> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(config(format!("grid spacing must be > 0, got {h}")));
        }
        let (dim, lower, extent) = match *domain {
            Domain::WholeSpace { dim, radius } => (dim, -radius, 2.0 * radius),
            Domain::Interval { length } => (1, 0.0, length),
        };
        let cells = (extent / h).ceil().max(2.0) as usize;
        Ok(Grid { dim, lower, spacing: extent / cells as f64, n: cells + 1 })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn upper(&self) -> f64 {
        self.lower + (self.n - 1) as f64 * self.spacing
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.spacing
    }

    /// Coordinates of flat node index `idx` (row-major in 2-d).
    pub fn point(&self, idx: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![self.coord(idx)],
            _ => vec![self.coord(idx / self.n), self.coord(idx % self.n)],
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let edge = |i: usize| i == 0 || i == self.n - 1;
        match self.dim {
            1 => edge(idx),
            _ => edge(idx / self.n) || edge(idx % self.n),
        }
    }

    /// Flat index of the node nearest to `x`, if `x` lies inside the grid box.
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        let mut idx = 0;
        for &xi in x {
            let s = ((xi - self.lower) / self.spacing).round();
            if s < 0.0 || s > (self.n - 1) as f64 {
                return None;
            }
            idx = idx * self.n + s as usize;
        }
        Some(idx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let values = (0..grid.len())
            .map(|idx| if grid.is_boundary(idx) { 0.0 } else { f(&grid.point(idx)) })
            .collect();
        ScalarField { grid, values }
    }

    /// Nodal samples of `u₀` with zero boundary values.
    pub fn from_datum(grid: Grid, u0: &InitialDatum) -> ScalarField {
        ScalarField::from_fn(grid, |x| u0.eval(x))
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| if v.abs() > m || v.is_nan() { v.abs() } else { m })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn at(&self, x: &[f64]) -> Option<f64> {
        self.grid.nearest(x).map(|i| self.values[i])
    }
}
