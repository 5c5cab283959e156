//! Uniform evaluation grids and scalar curves tabulated on them.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A uniform grid of abscissae including both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// Uniform grid of `n` points spanning `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid needs finite lo < hi and n >= 2, got [{lo}, {hi}] x {n}"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let points = (0..n).map(|i| lo + i as f64 * step).collect();
        Ok(Grid { points })
    }

    /// Default unit-interval grid: 101 equispaced points including endpoints.
    pub fn unit_default() -> Self {
        Grid::linspace(0.0, 1.0, 101).expect("static grid")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn step(&self) -> f64 {
        (self.hi() - self.lo()) / (self.len() - 1) as f64
    }

    /// Trapezoid quadrature weights for this grid.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dx = self.step();
        let n = self.len();
        (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * dx } else { dx })
            .collect()
    }
}

/// A scalar function tabulated on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOnGrid {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl CurveOnGrid {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "grid has {} points, values {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(CurveOnGrid { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![0.0; grid.len()];
        CurveOnGrid { grid, values }
    }

    /// Linear interpolation, clamped to the grid range.
    pub fn eval(&self, x: f64) -> f64 {
        let pts = self.grid.points();
        if x <= pts[0] {
            return self.values[0];
        }
        if x >= pts[pts.len() - 1] {
            return self.values[pts.len() - 1];
        }
        let t = (x - pts[0]) / self.grid.step();
        let i = (t.floor() as usize).min(pts.len() - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Trapezoid integral of the curve over its grid.
    pub fn integral(&self) -> f64 {
        crate::quad::trapezoid(&self.values, self.grid.step())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute difference against another curve on the same grid.
    pub fn sup_distance(&self, other: &CurveOnGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}
