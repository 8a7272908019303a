use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A coordinate chart `(x, y, z)` on an open box, with `N = {y = 0, z = 0}`
/// and `E = {z = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplosiveChart {
    pub dim_x: usize,
    pub dim_y: usize,
    pub dim_z: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ExplosiveChart {
    pub fn new(
        dim_x: usize,
        dim_y: usize,
        dim_z: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let c = ExplosiveChart { dim_x, dim_y, dim_z, lower, upper };
        c.validate()?;
        Ok(c)
    }

    /// The box `(-r, r)` in every coordinate.
    pub fn symmetric(dim_x: usize, dim_y: usize, dim_z: usize, r: f64) -> Result<Self> {
        let n = dim_x + dim_y + dim_z;
        Self::new(dim_x, dim_y, dim_z, vec![-r; n], vec![r; n])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::Validation("chart must have at least one coordinate".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Validation(format!(
                "chart bounds must have length {n}, got {} and {}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for i in 0..n {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Validation(format!("coordinate {i}: empty interval ({lo}, {hi})")));
            }
            if i >= self.dim_x && !(lo < 0.0 && 0.0 < hi) {
                return Err(Error::Validation(format!(
                    "coordinate {i}: normal directions must contain 0, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim_x + self.dim_y + self.dim_z
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| lo < v && v < hi)
    }

    pub fn require(&self, p: &[f64], what: &str) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { what: what.to_string(), coords: p.to_vec() })
        }
    }

    pub(crate) fn x_range(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lower[..self.dim_x].to_vec(), self.upper[..self.dim_x].to_vec())
    }

    pub(crate) fn yi(&self, b: usize) -> usize {
        self.dim_x + b
    }

    pub(crate) fn zi(&self, d: usize) -> usize {
        self.dim_x + self.dim_y + d
    }
}

/// A point `(x, y, z, hbar)` of the double explosion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplodedPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub hbar: f64,
}

impl ExplodedPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, hbar: f64) -> Self {
        ExplodedPoint { x, y, z, hbar }
    }

    /// Split flat coordinates `(x, y, z, hbar)` according to the chart.
    pub fn from_flat(chart: &ExplosiveChart, v: &[f64]) -> Result<Self> {
        if v.len() != chart.dim() + 1 {
            return Err(Error::Shape(format!(
                "exploded point needs {} coordinates, got {}",
                chart.dim() + 1,
                v.len()
            )));
        }
        let (nx, ny) = (chart.dim_x, chart.dim_y);
        Ok(ExplodedPoint {
            x: v[..nx].to_vec(),
            y: v[nx..nx + ny].to_vec(),
            z: v[nx + ny..v.len() - 1].to_vec(),
            hbar: v[v.len() - 1],
        })
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x.len() + self.y.len() + self.z.len() + 1);
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.y);
        v.extend_from_slice(&self.z);
        v.push(self.hbar);
        v
    }

    pub(crate) fn check_shape(&self, chart: &ExplosiveChart) -> Result<()> {
        if self.x.len() != chart.dim_x || self.y.len() != chart.dim_y || self.z.len() != chart.dim_z {
            return Err(Error::Shape(format!(
                "point has block sizes ({}, {}, {}), chart expects ({}, {}, {})",
                self.x.len(),
                self.y.len(),
                self.z.len(),
                chart.dim_x,
                chart.dim_y,
                chart.dim_z
            )));
        }
        if !self.hbar.is_finite() {
            return Err(Error::Argument("hbar must be finite".into()));
        }
        Ok(())
    }
}

/// The projection `(x, y, z, hbar) -> (x, hbar y, hbar^2 z)`.
pub fn project(chart: &ExplosiveChart, p: &ExplodedPoint) -> Result<Vec<f64>> {
    p.check_shape(chart)?;
    let h = p.hbar;
    let mut q = p.x.clone();
    q.extend(p.y.iter().map(|v| h * v));
    q.extend(p.z.iter().map(|v| h * h * v));
    chart.require(&q, "projection of exploded point")?;
    Ok(q)
}
