use serde::Serialize;

use super::profile::AreaProfile;
use crate::{Error, Result};

/// Largest distance to an integer accepted for a Bohr-Sommerfeld level.
pub const INTEGER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Log-spaced cells used to bracket the integer levels of `A_1`.
    pub cells: usize,
    pub integer_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { cells: 2000, integer_tol: INTEGER_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanckEntry {
    pub hbar: f64,
    /// Integer value of each component; empty for the `hbar = 0` marker.
    pub integers: Vec<i64>,
}

impl PlanckEntry {
    pub fn is_classical(&self) -> bool {
        self.hbar == 0.0
    }

    /// Product of the component integers.
    pub fn size(&self) -> Option<u128> {
        if self.integers.is_empty() {
            return None;
        }
        self.integers.iter().try_fold(1u128, |acc, &n| acc.checked_mul(n.unsigned_abs() as u128))
    }
}

/// Admissible Planck constants, strictly decreasing and closed by the
/// `hbar = 0` marker.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanckSet {
    pub profile: String,
    pub min_hbar: f64,
    pub entries: Vec<PlanckEntry>,
    /// The profile is odd in `hbar`, so every entry has a mirror at `-hbar`
    /// with negated integers. Those are not listed.
    pub mirrored_negative: bool,
}

impl PlanckSet {
    /// Entries with `hbar > 0`.
    pub fn positive(&self) -> impl Iterator<Item = &PlanckEntry> {
        self.entries.iter().filter(|e| !e.is_classical())
    }

    pub fn hbars(&self) -> Vec<f64> {
        self.positive().map(|e| e.hbar).collect()
    }
}

fn log_grid(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..=cells).map(|i| (a + (b - a) * i as f64 / cells as f64).exp()).collect();
    g[0] = lo;
    g[cells] = hi;
    g
}

/// Solves `A_1(h) = n` on `[lo, hi]` with `A_1` decreasing, bisecting until
/// the bracket cannot shrink further in floating point.
fn bisect(profile: &AreaProfile, n: f64, mut lo: f64, mut hi: f64) -> f64 {
    let a = &profile.components[0];
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if a.eval(mid) >= n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (a.eval(lo) - n).abs() <= (a.eval(hi) - n).abs() { lo } else { hi }
}

pub fn bohr_sommerfeld_set(profile: &AreaProfile, min_hbar: f64) -> Result<PlanckSet> {
    bohr_sommerfeld_set_with(profile, min_hbar, ScanOptions::default())
}

pub fn bohr_sommerfeld_set_with(profile: &AreaProfile, min_hbar: f64, opts: ScanOptions) -> Result<PlanckSet> {
    profile.validate()?;
    if !(min_hbar > 0.0 && min_hbar < profile.hbar_max) {
        return Err(Error::Argument(format!(
            "min_hbar must lie in (0, {}), got {min_hbar}",
            profile.hbar_max
        )));
    }
    if opts.cells == 0 {
        return Err(Error::Argument("scan needs at least one cell".into()));
    }
    let grid = log_grid(min_hbar, profile.hbar_max, opts.cells);
    let lead = &profile.components[0];
    let values: Vec<f64> = grid.iter().map(|&h| lead.eval(h)).collect();
    for (i, w) in values.windows(2).enumerate() {
        if !(w[1] < w[0]) {
            return Err(Error::NotMonotone(format!(
                "A_1 must decrease strictly in hbar; it does not between {:.6e} and {:.6e}",
                grid[i], grid[i + 1]
            )));
        }
    }
    for (h, vals) in grid.iter().map(|&h| (h, profile.eval(h))) {
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("profile is not finite at hbar = {h:e}")));
        }
    }
    let mut roots = Vec::new();
    // Levels n with A(h_{i+1}) < n <= A(h_i), plus the top endpoint.
    for i in 0..opts.cells {
        let (hi_val, lo_val) = (values[i], values[i + 1]);
        let first = lo_val.floor() as i64 + 1;
        let last = hi_val.floor() as i64;
        for n in first..=last {
            let h = if n as f64 == hi_val { grid[i] } else { bisect(profile, n as f64, grid[i], grid[i + 1]) };
            roots.push(h);
        }
    }
    if values[opts.cells].fract() == 0.0 {
        roots.push(grid[opts.cells]);
    }
    let mut entries = Vec::new();
    for h in roots {
        let vals = profile.eval(h);
        let ints: Vec<i64> = vals.iter().map(|v| v.round() as i64).collect();
        if vals.iter().zip(&ints).all(|(v, n)| (v - *n as f64).abs() < opts.integer_tol) {
            entries.push(PlanckEntry { hbar: h, integers: ints });
        }
    }
    entries.sort_by(|a, b| b.hbar.total_cmp(&a.hbar));
    entries.dedup_by(|a, b| a.integers == b.integers);
    entries.push(PlanckEntry { hbar: 0.0, integers: Vec::new() });
    Ok(PlanckSet { profile: profile.name.clone(), min_hbar, entries, mirrored_negative: profile.is_odd() })
}

/// `(hbar, size)` for every positive entry, size being the product of the
/// component integers.
pub fn matrix_sizes(set: &PlanckSet) -> Result<Vec<(f64, u128)>> {
    let mut out = Vec::new();
    for e in set.positive() {
        let size = e.size().ok_or_else(|| Error::Argument(format!("entry at hbar = {} has no components", e.hbar)))?;
        out.push((e.hbar, size));
    }
    if out.is_empty() {
        return Err(Error::Argument("the Planck set has no positive entries".into()));
    }
    Ok(out)
}
