use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// A uniform grid centred at the origin with an odd number of points per
/// axis, so that `y -> -y` and differences of grid points stay on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl GridSpec {
    pub fn new(points: Vec<usize>, spacing: Vec<f64>) -> Result<Self> {
        let g = GridSpec { points, spacing };
        g.validate()?;
        Ok(g)
    }

    /// Same point count and spacing on every axis.
    pub fn cube(dim: usize, points: usize, spacing: f64) -> Result<Self> {
        Self::new(vec![points; dim], vec![spacing; dim])
    }

    /// `points` per axis spanning `[-extent, extent]`.
    pub fn with_extent(dim: usize, points: usize, extent: f64) -> Result<Self> {
        if points < 3 {
            return Err(Error::Validation("a grid with an extent needs at least 3 points".into()));
        }
        Self::cube(dim, points, 2.0 * extent / (points - 1) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() || self.points.len() != self.spacing.len() {
            return Err(Error::Validation("grid needs matching, nonempty points and spacing".into()));
        }
        for (a, (&n, &h)) in self.points.iter().zip(&self.spacing).enumerate() {
            if n == 0 || n % 2 == 0 {
                return Err(Error::Validation(format!(
                    "axis {a}: grid needs an odd number of points to be symmetric about 0, got {n}"
                )));
            }
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Validation(format!("axis {a}: spacing must be positive, got {h}")));
            }
        }
        let total = self.points.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        match total {
            Some(t) if t <= MAX_GRID_POINTS => Ok(()),
            _ => Err(Error::Validation(format!("grid exceeds {MAX_GRID_POINTS} points"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn half(&self, axis: usize) -> usize {
        (self.points[axis] - 1) / 2
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.half(axis) as f64 * self.spacing[axis]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        (i as f64 - self.half(axis) as f64) * self.spacing[axis]
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.points[a];
            flat /= self.points[a];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.points).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat).iter().enumerate().map(|(a, &i)| self.coord(a, i)).collect()
    }

    /// Flat index of the point `-y`.
    pub fn mirror(&self, flat: usize) -> usize {
        let idx: Vec<usize> = self.unflatten(flat).iter().zip(&self.points).map(|(&i, &n)| n - 1 - i).collect();
        self.flatten(&idx)
    }

    /// Grid index of a coordinate if it lies on the grid (to 1e-9 cells).
    pub fn locate(&self, y: &[f64]) -> Option<usize> {
        let mut idx = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let t = y[a] / self.spacing[a] + self.half(a) as f64;
            let r = t.round();
            if (t - r).abs() > 1e-9 || r < 0.0 || r >= self.points[a] as f64 {
                return None;
            }
            idx.push(r as usize);
        }
        Some(self.flatten(&idx))
    }

    /// Whether the flat index lies in the outermost `width` layers.
    pub fn in_boundary_layer(&self, flat: usize, width: usize) -> bool {
        self.unflatten(flat).iter().zip(&self.points).any(|(&i, &n)| i < width || i + width >= n)
    }

    /// Whether the point lies outside the inner three quarters of some axis.
    pub fn in_outer_quarter(&self, flat: usize) -> bool {
        self.unflatten(flat)
            .iter()
            .enumerate()
            .any(|(a, &i)| (i as f64 - self.half(a) as f64).abs() > 0.75 * self.half(a) as f64)
    }
}

/// Largest total grid size accepted; keeps brute-force products tractable.
pub const MAX_GRID_POINTS: usize = 1 << 22;

/// Complex samples on a [`GridSpec`], row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    pub grid: GridSpec,
    pub values: Vec<C64>,
}

impl LatticeFunction {
    pub fn new(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Shape(format!("grid has {} points but {} values were given", grid.len(), values.len())));
        }
        Ok(LatticeFunction { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> C64) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.point(k))).collect();
        LatticeFunction { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        LatticeFunction { grid, values: vec![C64::new(0.0, 0.0); n] }
    }

    /// The discrete delta at the origin, normalised to unit integral.
    pub fn delta(grid: GridSpec) -> Self {
        let mut f = Self::zeros(grid);
        let centre = f.grid.flatten(&(0..f.grid.dim()).map(|a| f.grid.half(a)).collect::<Vec<_>>());
        f.values[centre] = C64::new(1.0 / f.grid.cell_volume(), 0.0);
        f
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_diff(&self, other: &LatticeFunction) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn scale(&self, s: C64) -> LatticeFunction {
        LatticeFunction { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &LatticeFunction) -> Result<LatticeFunction> {
        self.require_same_grid(other)?;
        Ok(LatticeFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &LatticeFunction) -> Result<LatticeFunction> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn require_same_grid(&self, other: &LatticeFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape(format!("grid mismatch: {:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// `a^*(y) = conj(a(-y))`.
    pub fn involution(&self) -> LatticeFunction {
        let values = (0..self.values.len()).map(|k| self.values[self.grid.mirror(k)].conj()).collect();
        LatticeFunction { grid: self.grid.clone(), values }
    }

    fn mass(&self, pred: impl Fn(usize) -> bool) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let part: f64 = self.values.iter().enumerate().filter(|(k, _)| pred(*k)).map(|(_, v)| v.norm_sqr()).sum();
        part / total
    }

    /// Relative squared-L2 mass in the outermost layer of grid cells.
    pub fn boundary_mass(&self) -> f64 {
        self.mass(|k| self.grid.in_boundary_layer(k, 1))
    }

    /// Relative squared-L2 mass outside the inner three quarters.
    pub fn outer_quarter_mass(&self) -> f64 {
        self.mass(|k| self.grid.in_outer_quarter(k))
    }

    /// Largest modulus on the outermost layer, relative to the sup norm.
    pub fn boundary_decay(&self) -> f64 {
        let sup = self.sup_norm();
        if sup == 0.0 {
            return 0.0;
        }
        self.values
            .iter()
            .enumerate()
            .filter(|(k, _)| self.grid.in_boundary_layer(*k, 1))
            .fold(0.0f64, |m, (_, v)| m.max(v.norm()))
            / sup
    }

    /// Multilinear interpolation; points outside the grid are clamped to it.
    pub fn interpolate(&self, y: &[f64]) -> C64 {
        interpolate(&self.grid, &self.values, y)
    }

    /// Value at `y`: exact lookup on grid points, interpolation otherwise.
    pub fn eval(&self, y: &[f64]) -> C64 {
        match self.grid.locate(y) {
            Some(k) => self.values[k],
            None => self.interpolate(y),
        }
    }
}

pub(crate) fn interpolate(grid: &GridSpec, values: &[C64], y: &[f64]) -> C64 {
    interpolate_by(grid, y, |k| values[k])
}

/// Multilinear interpolation reading grid values through `at(flat index)`.
pub(crate) fn interpolate_by(grid: &GridSpec, y: &[f64], at: impl Fn(usize) -> C64) -> C64 {
    const MAX: usize = 8;
    let d = grid.dim();
    assert!(d <= MAX, "interpolation supports at most {MAX} axes");
    let mut base = [0usize; MAX];
    let mut frac = [0.0; MAX];
    for a in 0..d {
        let n = grid.points[a];
        let t = (y[a] / grid.spacing[a] + grid.half(a) as f64).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n.saturating_sub(2));
        base[a] = i;
        frac[a] = if n == 1 { 0.0 } else { t - i as f64 };
    }
    let mut acc = C64::new(0.0, 0.0);
    for corner in 0u32..(1 << d) {
        let mut w = 1.0;
        let mut flat = 0;
        for a in 0..d {
            let up = corner & (1 << a) != 0;
            if up && grid.points[a] == 1 {
                w = 0.0;
                break;
            }
            flat = flat * grid.points[a] + base[a] + up as usize;
            w *= if up { frac[a] } else { 1.0 - frac[a] };
        }
        if w != 0.0 {
            acc += at(flat) * w;
        }
    }
    acc
}
