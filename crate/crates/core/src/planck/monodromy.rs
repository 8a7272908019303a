use serde::Serialize;

use super::profile::AreaProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioOptions {
    /// Relative spread below which a ratio counts as constant.
    pub spread_tol: f64,
    pub max_denominator: u64,
    /// Largest `|r - p/q|` accepted for a rational witness.
    pub residual_tol: f64,
    /// Largest `|r - p/q| q^2` accepted; every real has convergents with
    /// this near 1, rationals reach roundoff.
    pub quality_tol: f64,
}

impl Default for RatioOptions {
    fn default() -> Self {
        RatioOptions { spread_tol: 1e-6, max_denominator: 1_000_000, residual_tol: 1e-9, quality_tol: 1e-3 }
    }
}

/// Log-spaced scan grid `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl ScanGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.points >= 2) {
            return Err(Error::Argument(format!("scan grid needs 0 < lo < hi and >= 2 points, got {self:?}")));
        }
        let (a, b) = (self.lo.ln(), self.hi.ln());
        Ok((0..self.points).map(|i| (a + (b - a) * i as f64 / (self.points - 1) as f64).exp()).collect())
    }
}

/// Best continued-fraction convergent `p/q` of `r` with `q <= max_den`,
/// `|r - p/q| <= residual_tol` and `|r - p/q| q^2 <= quality_tol`.
pub fn rational_witness(r: f64, opts: &RatioOptions) -> Option<(i64, u64)> {
    if !r.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut x = r;
    for _ in 0..64 {
        let a = x.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > opts.max_denominator as i128 {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let approx = h1 as f64 / k1 as f64;
        let err = (r - approx).abs();
        if err <= opts.residual_tol && err * (k1 as f64).powi(2) <= opts.quality_tol {
            return Some((h1 as i64, k1 as u64));
        }
        let frac = x - a;
        if frac == 0.0 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioStats {
    pub i: usize,
    pub j: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// `(max - min) / |mean|`.
    pub spread: f64,
    /// Largest relative derivative noise among the two components.
    pub noise: f64,
    pub constant: Option<bool>,
    pub witness: Option<(i64, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignRecord {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl SignRecord {
    pub fn changes_sign(&self) -> bool {
        self.positive > 0 && self.negative > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    IntegrableCompatible,
    Nonintegrable { clause: String },
    Indeterminate { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub profile: String,
    pub scan: ScanGrid,
    pub ratios: Vec<RatioStats>,
    /// Signs of `F' = -A_1' / (A_1 - rho_1)^2` over the grid.
    pub f_prime: SignRecord,
    /// `F(hbar) = 1 / (A_1 - rho_1)` on the grid, with `rho = 0` by default.
    pub f_values: Vec<(f64, f64)>,
    pub rho: Vec<f64>,
    pub assumptions: Vec<String>,
    pub verdict: Verdict,
}

pub const ASSUMPTIONS: &[&str] = &[
    "the base manifold is simply connected (not checked)",
    "one normalized area per generator determines the periods",
    "the criterion is necessary, not sufficient, for integrability",
];

pub fn monodromy_ratio_report(profile: &AreaProfile, scan: ScanGrid) -> Result<IntegrabilityReport> {
    monodromy_ratio_report_with(profile, scan, RatioOptions::default())
}

pub fn monodromy_ratio_report_with(profile: &AreaProfile, scan: ScanGrid, opts: RatioOptions) -> Result<IntegrabilityReport> {
    profile.validate()?;
    let grid = scan.points()?;
    if scan.hi > profile.hbar_max {
        return Err(Error::Argument(format!("scan reaches {} beyond hbar_max = {}", scan.hi, profile.hbar_max)));
    }
    let n = profile.components.len();
    let derivs: Vec<Vec<(f64, f64)>> = (0..n).map(|i| grid.iter().map(|&h| profile.derivative(i, h)).collect()).collect();
    let mut ratios = Vec::new();
    let mut verdict: Option<Verdict> = None;
    let mut indeterminate: Option<String> = None;
    for i in 0..n {
        for j in i + 1..n {
            let mut noise: f64 = 0.0;
            let mut r = Vec::with_capacity(grid.len());
            for ((di, ni), (dj, nj)) in derivs[i].iter().zip(&derivs[j]) {
                if *dj == 0.0 {
                    return Err(Error::Validation(format!("A_{}' vanishes on the scan grid", j + 1)));
                }
                noise = noise.max(*ni).max(*nj);
                r.push(di / dj);
            }
            let min = r.iter().copied().fold(f64::INFINITY, f64::min);
            let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let spread = (max - min) / mean.abs();
            let constant = if spread > opts.spread_tol && spread > 10.0 * noise {
                Some(false)
            } else if spread <= opts.spread_tol && noise <= opts.spread_tol {
                Some(true)
            } else {
                None
            };
            let witness = if constant == Some(true) { rational_witness(mean, &opts) } else { None };
            let label = format!("A_{}'/A_{}'", i + 1, j + 1);
            match constant {
                Some(false) if verdict.is_none() => {
                    verdict = Some(Verdict::Nonintegrable {
                        clause: format!("monodromy ratio {label} varies (relative spread {spread:.3e})"),
                    })
                }
                Some(true) if witness.is_none() && verdict.is_none() => {
                    verdict = Some(Verdict::Nonintegrable {
                        clause: format!(
                            "monodromy ratio {label} = {mean:.16e} is constant but has no rational witness with denominator <= {}",
                            opts.max_denominator
                        ),
                    })
                }
                None if indeterminate.is_none() => {
                    indeterminate = Some(format!(
                        "derivative noise {noise:.3e} is too large to decide whether {label} (spread {spread:.3e}) is constant"
                    ))
                }
                _ => {}
            }
            ratios.push(RatioStats { i: i + 1, j: j + 1, min, max, mean, spread, noise, constant, witness });
        }
    }
    let rho = profile.rho.clone().unwrap_or_else(|| vec![0.0; n]);
    let mut f_prime = SignRecord { positive: 0, negative: 0, zero: 0 };
    let mut f_values = Vec::with_capacity(grid.len());
    for (k, &h) in grid.iter().enumerate() {
        let shifted = profile.components[0].eval(h) - rho[0];
        let fp = -derivs[0][k].0 / (shifted * shifted);
        match fp.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => f_prime.positive += 1,
            Some(std::cmp::Ordering::Less) => f_prime.negative += 1,
            _ => f_prime.zero += 1,
        }
        f_values.push((h, 1.0 / shifted));
    }
    if verdict.is_none() && f_prime.changes_sign() {
        verdict = Some(Verdict::Nonintegrable { clause: "the reconstructed F is not monotone (F' changes sign)".into() });
    }
    let verdict = match (verdict, indeterminate) {
        (Some(v), _) => v,
        (None, Some(reason)) => Verdict::Indeterminate { reason },
        (None, None) => Verdict::IntegrableCompatible,
    };
    Ok(IntegrabilityReport {
        profile: profile.name.clone(),
        scan,
        ratios,
        f_prime,
        f_values,
        rho,
        assumptions: ASSUMPTIONS.iter().map(|s| s.to_string()).collect(),
        verdict,
    })
}
