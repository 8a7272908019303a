//! Lattice functions on disk: a little-endian binary grid format and CSV.
//!
//! Binary layout: magic `HBLG`, version byte `1`, `u32` dimension, then per
//! axis `u32` points, `f64` spacing, `f64` extent; then `f64` hbar and the
//! values as `(f32 re, f32 im)` pairs, row-major with the last axis fastest.

use std::io::{BufRead, Write};

use super::lattice::{GridSpec, LatticeFunction};
use crate::{Error, Result, C64};

pub const MAGIC: &[u8; 4] = b"HBLG";
pub const VERSION: u8 = 1;

/// Upper bound on the dimension accepted by the decoder.
pub const MAX_DIM: usize = 8;

pub fn encode_grid(f: &LatticeFunction, hbar: f64) -> Vec<u8> {
    let g = &f.grid;
    let mut out = Vec::with_capacity(9 + 20 * g.dim() + 8 + 8 * f.values.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    for a in 0..g.dim() {
        out.extend_from_slice(&(g.points[a] as u32).to_le_bytes());
        out.extend_from_slice(&g.spacing[a].to_le_bytes());
        out.extend_from_slice(&g.extent(a).to_le_bytes());
    }
    out.extend_from_slice(&hbar.to_le_bytes());
    for v in &f.values {
        out.extend_from_slice(&(v.re as f32).to_le_bytes());
        out.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Decode(format!("truncated input: {what} needs {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

/// Decodes a binary grid, returning the function and its hbar.
pub fn decode_grid(bytes: &[u8]) -> Result<(LatticeFunction, f64)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::Decode("bad magic, expected HBLG".into()));
    }
    let version = r.take(1, "version")?[0];
    if version != VERSION {
        return Err(Error::Decode(format!("unsupported version {version}")));
    }
    let dim = r.u32("dimension")? as usize;
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Decode(format!("dimension {dim} outside 1..={MAX_DIM}")));
    }
    let mut points = Vec::with_capacity(dim);
    let mut spacing = Vec::with_capacity(dim);
    for a in 0..dim {
        let n = r.u32("axis points")? as usize;
        let h = r.f64("axis spacing")?;
        let extent = r.f64("axis extent")?;
        if n % 2 == 0 {
            return Err(Error::Decode(format!("axis {a}: even point count {n}")));
        }
        let expected = (n.saturating_sub(1) / 2) as f64 * h;
        if !(h.is_finite() && h > 0.0) || !((extent - expected).abs() <= 1e-9 * expected.abs().max(1.0)) {
            return Err(Error::Decode(format!(
                "axis {a}: extent {extent} does not match {n} points at spacing {h}"
            )));
        }
        points.push(n);
        spacing.push(h);
    }
    let grid = GridSpec::new(points, spacing).map_err(|e| Error::Decode(e.to_string()))?;
    let hbar = r.f64("hbar")?;
    if !hbar.is_finite() {
        return Err(Error::Decode(format!("hbar is not finite: {hbar}")));
    }
    let expected = grid.len() * 8;
    let remaining = bytes.len() - r.pos;
    if remaining != expected {
        return Err(Error::Decode(format!("payload has {remaining} bytes, expected {expected}")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = r.f32("value")?;
        let im = r.f32("value")?;
        values.push(C64::new(re as f64, im as f64));
    }
    Ok((LatticeFunction::new(grid, values)?, hbar))
}

/// CSV with header `y1,..,yd,re,im`, one row per grid point.
pub fn write_csv(f: &LatticeFunction, mut out: impl Write) -> Result<()> {
    let d = f.dim();
    let header: Vec<String> = (1..=d).map(|a| format!("y{a}")).chain(["re".into(), "im".into()]).collect();
    writeln!(out, "{}", header.join(","))?;
    for (k, v) in f.values.iter().enumerate() {
        let row: Vec<String> =
            f.grid.point(k).iter().chain([v.re, v.im].iter()).map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a CSV written by [`write_csv`] back onto `grid`. Every grid point
/// must appear exactly once.
pub fn read_csv(grid: &GridSpec, input: impl BufRead) -> Result<LatticeFunction> {
    let d = grid.dim();
    let mut values = vec![None; grid.len()];
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Decode("empty CSV".into()))??;
    if header.split(',').count() != d + 2 {
        return Err(Error::Decode(format!("header has {} columns, expected {}", header.split(',').count(), d + 2)));
    }
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Decode(format!("line {}: {e}", ln + 2)))?;
        if nums.len() != d + 2 {
            return Err(Error::Decode(format!("line {}: expected {} columns", ln + 2, d + 2)));
        }
        let k = grid
            .locate(&nums[..d])
            .ok_or_else(|| Error::Decode(format!("line {}: point is not on the grid", ln + 2)))?;
        if values[k].replace(C64::new(nums[d], nums[d + 1])).is_some() {
            return Err(Error::Decode(format!("line {}: duplicate grid point", ln + 2)));
        }
    }
    let values: Option<Vec<C64>> = values.into_iter().collect();
    let values = values.ok_or_else(|| Error::Decode("CSV does not cover every grid point".into()))?;
    LatticeFunction::new(grid.clone(), values)
}
