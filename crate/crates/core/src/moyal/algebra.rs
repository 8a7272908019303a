use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{interpolate, interpolate_by, GridSpec, LatticeFunction};
use crate::groupoid::ConstantPoissonData;
use crate::numerics::extrapolate_to_zero;
use crate::{Error, Result, C64};

/// Boundary mass above which a product is flagged as truncated.
pub const TRUNCATION_MASS: f64 = 1e-6;

/// Points per axis used when a grid has to be chosen automatically.
pub const DEFAULT_POINTS: usize = 65;

/// Largest dimension of `V` for which the full `(x, y)` representation is
/// allowed.
pub const MAX_FULL_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolarizationCase {
    /// `Pi = 0`: untwisted, commutative.
    Abelian,
    /// Polarization along `V`; phase `exp(+(i/2) hbar Pi(y, y'))`.
    FlatV,
    /// Kähler polarization; phase `exp(-(i/2) hbar Pi(y, y'))`.
    Kahler,
}

impl PolarizationCase {
    fn phase_sign(self) -> f64 {
        match self {
            PolarizationCase::Abelian => 0.0,
            PolarizationCase::FlatV => 1.0,
            PolarizationCase::Kahler => -1.0,
        }
    }
}

pub fn cocycle_sigma(y: &[f64], y2: &[f64], hbar: f64, case: PolarizationCase, data: &ConstantPoissonData) -> C64 {
    let s = case.phase_sign();
    if s == 0.0 || hbar == 0.0 {
        return C64::new(1.0, 0.0);
    }
    C64::from_polar(1.0, 0.5 * s * hbar * data.pair(y, y2))
}

/// `m = rk P0 - rk D0` and the magnitude `eps` of the epsilon factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonFactor {
    pub m: usize,
    pub eps: f64,
}

impl EpsilonFactor {
    pub fn trivial() -> Self {
        EpsilonFactor { m: 0, eps: 1.0 }
    }

    /// For the Kähler case `m = n/2` and `eps = |Pf(Pi)| / (2 pi)^m`, with
    /// Lebesgue measure on `V*` as reference volume.
    pub fn for_case(case: PolarizationCase, data: &ConstantPoissonData) -> Result<Self> {
        match case {
            PolarizationCase::Abelian | PolarizationCase::FlatV => Ok(Self::trivial()),
            PolarizationCase::Kahler => {
                require_kahler(data)?;
                let m = data.n / 2;
                let pf = data.pi_matrix().determinant().abs().sqrt();
                Ok(EpsilonFactor { m, eps: pf / (2.0 * std::f64::consts::PI).powi(m as i32) })
            }
        }
    }

    /// `hbar^{m/2} eps^{1/2}`; only defined for `hbar >= 0`.
    pub fn prefactor(&self, hbar: f64) -> Result<f64> {
        require_nonnegative(hbar)?;
        Ok(hbar.powf(self.m as f64 / 2.0) * self.eps.sqrt())
    }
}

fn require_nonnegative(hbar: f64) -> Result<()> {
    if hbar < 0.0 {
        return Err(Error::Positivity(format!(
            "hbar = {hbar}: the Kähler polarization is not positive for hbar < 0, and hbar^(m/2) has no real value"
        )));
    }
    if !hbar.is_finite() {
        return Err(Error::Argument(format!("hbar must be finite, got {hbar}")));
    }
    Ok(())
}

/// Kähler data must be present, nondegenerate and compatible with unit
/// constant, `(g^-1 Pi)^2 = -1`.
fn require_kahler(data: &ConstantPoissonData) -> Result<()> {
    match data.validate()? {
        Some(c) if (c - 1.0).abs() <= 1e-9 => Ok(()),
        Some(c) => Err(Error::Validation(format!(
            "metric is compatible with pi only up to the constant c = {c}; rescale it so that (g^-1 Pi)^2 = -1"
        ))),
        None if data.metric.is_none() => Err(Error::Validation("the Kähler case needs a metric".into())),
        None => Err(Error::Validation("the Kähler case needs a nondegenerate pi".into())),
    }
}

/// A product together with its truncation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Convolution {
    pub value: LatticeFunction,
    pub boundary_mass: f64,
    pub warning: Option<String>,
}

impl Convolution {
    fn new(value: LatticeFunction) -> Self {
        let boundary_mass = value.boundary_mass();
        let warning = (boundary_mass > TRUNCATION_MASS)
            .then(|| format!("boundary mass {boundary_mass:.3e} exceeds {TRUNCATION_MASS:.0e}; the grid truncates the product"));
        Convolution { value, boundary_mass, warning }
    }
}

/// Twisted convolution of the flat-V polarization,
/// `(a*b)(y) = sum_{y'} a(y') b(y-y') sigma(y', y-y') vol`.
pub fn twisted_convolution(
    a: &LatticeFunction,
    b: &LatticeFunction,
    hbar: f64,
    data: &ConstantPoissonData,
) -> Result<Convolution> {
    let case = if data.pi.iter().flatten().all(|&v| v == 0.0) { PolarizationCase::Abelian } else { PolarizationCase::FlatV };
    convolve(a, b, hbar, data, case).map(Convolution::new)
}

/// Lattice convolution with the cocycle of `case` and no prefactor.
pub fn convolve(
    a: &LatticeFunction,
    b: &LatticeFunction,
    hbar: f64,
    data: &ConstantPoissonData,
    case: PolarizationCase,
) -> Result<LatticeFunction> {
    a.require_same_grid(b)?;
    let grid = &a.grid;
    let d = grid.dim();
    if data.n != d {
        return Err(Error::Shape(format!("pi acts on dimension {} but the grid has dimension {d}", data.n)));
    }
    let s = 0.5 * case.phase_sign() * hbar;
    let vol = grid.cell_volume();
    let mut strides = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * grid.points[k + 1];
    }
    // Pi(y', y - y') = Pi(y', y), so for each output point the phase is a
    // product of one plane wave per axis.
    let values = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let idx = grid.unflatten(k);
            let y = grid.point(k);
            let mut tables = Vec::with_capacity(d);
            let mut ranges = Vec::with_capacity(d);
            for ax in 0..d {
                let n = grid.points[ax];
                let c = grid.half(ax);
                let lo = (idx[ax] + c).saturating_sub(n - 1);
                let hi = (idx[ax] + c).min(n - 1);
                let w: f64 = (0..d).map(|j| data.pi[ax][j] * y[j]).sum();
                let table: Vec<C64> =
                    (lo..=hi).map(|j| if s == 0.0 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, s * grid.coord(ax, j) * w) }).collect();
                tables.push(table);
                ranges.push((lo, hi));
            }
            let ctx = Ctx { a: &a.values, b: &b.values, strides: &strides, ranges: &ranges, tables: &tables, idx: &idx, half: grid };
            ctx.sum(0, 0, 0) * vol
        })
        .collect();
    Ok(LatticeFunction { grid: grid.clone(), values })
}

struct Ctx<'a> {
    a: &'a [C64],
    b: &'a [C64],
    strides: &'a [usize],
    ranges: &'a [(usize, usize)],
    tables: &'a [Vec<C64>],
    idx: &'a [usize],
    half: &'a GridSpec,
}

impl Ctx<'_> {
    fn sum(&self, ax: usize, a_off: usize, b_off: usize) -> C64 {
        let (lo, hi) = self.ranges[ax];
        let st = self.strides[ax];
        let shift = self.idx[ax] + self.half.half(ax);
        let mut acc = C64::new(0.0, 0.0);
        if ax + 1 == self.strides.len() {
            for j in lo..=hi {
                acc += self.a[a_off + j * st] * self.b[b_off + (shift - j) * st] * self.tables[ax][j - lo];
            }
        } else {
            for j in lo..=hi {
                acc += self.sum(ax + 1, a_off + j * st, b_off + (shift - j) * st) * self.tables[ax][j - lo];
            }
        }
        acc
    }
}

/// Values over `V x V*`, indexed `x_flat * y_grid.len() + y_flat`.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    TranslationInvariant(LatticeFunction),
    Full { x_grid: GridSpec, y_grid: GridSpec, values: Vec<C64> },
}

/// Diagnostics attached to computed elements.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub boundary_mass: f64,
    pub warning: Option<String>,
    /// Estimated multilinear-interpolation error of the x-shifts, relative
    /// to the sup norm of the inputs.
    pub interpolation_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoyalElement {
    pub hbar: f64,
    pub eps: EpsilonFactor,
    pub rep: Representation,
    pub diagnostics: Diagnostics,
}

impl MoyalElement {
    pub fn translation_invariant(hbar: f64, eps: EpsilonFactor, f: LatticeFunction) -> Self {
        MoyalElement { hbar, eps, rep: Representation::TranslationInvariant(f), diagnostics: Diagnostics::default() }
    }

    pub fn full(
        hbar: f64,
        eps: EpsilonFactor,
        x_grid: GridSpec,
        y_grid: GridSpec,
        f: impl Fn(&[f64], &[f64]) -> C64,
    ) -> Result<Self> {
        x_grid.validate()?;
        y_grid.validate()?;
        if x_grid.dim() != y_grid.dim() {
            return Err(Error::Shape("x and y grids must have the same dimension".into()));
        }
        if x_grid.dim() > MAX_FULL_DIM {
            return Err(Error::Argument(format!(
                "the full (x, y) representation is limited to dim V <= {MAX_FULL_DIM}; use a translation-invariant element"
            )));
        }
        let ys: Vec<Vec<f64>> = (0..y_grid.len()).map(|k| y_grid.point(k)).collect();
        let mut values = Vec::with_capacity(x_grid.len() * y_grid.len());
        for i in 0..x_grid.len() {
            let x = x_grid.point(i);
            values.extend(ys.iter().map(|y| f(&x, y)));
        }
        Ok(MoyalElement {
            hbar,
            eps,
            rep: Representation::Full { x_grid, y_grid, values },
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn is_translation_invariant(&self) -> bool {
        matches!(self.rep, Representation::TranslationInvariant(_))
    }

    pub fn y_grid(&self) -> &GridSpec {
        match &self.rep {
            Representation::TranslationInvariant(f) => &f.grid,
            Representation::Full { y_grid, .. } => y_grid,
        }
    }

    pub fn dim(&self) -> usize {
        self.y_grid().dim()
    }

    /// `a(x, y)`: exact on grid points, multilinear (clamped) elsewhere.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> C64 {
        match &self.rep {
            Representation::TranslationInvariant(f) => f.eval(y),
            Representation::Full { x_grid, y_grid, values } => {
                if let (Some(i), Some(j)) = (x_grid.locate(x), y_grid.locate(y)) {
                    return values[i * y_grid.len() + j];
                }
                let joint = joint_grid(x_grid, y_grid);
                let p: Vec<f64> = x.iter().chain(y).copied().collect();
                interpolate(&joint, values, &p)
            }
        }
    }

    pub fn scale(&self, s: C64) -> MoyalElement {
        let rep = match &self.rep {
            Representation::TranslationInvariant(f) => Representation::TranslationInvariant(f.scale(s)),
            Representation::Full { x_grid, y_grid, values } => Representation::Full {
                x_grid: x_grid.clone(),
                y_grid: y_grid.clone(),
                values: values.iter().map(|v| v * s).collect(),
            },
        };
        MoyalElement { hbar: self.hbar, eps: self.eps, rep, diagnostics: Diagnostics::default() }
    }

    /// Expands a translation-invariant element over the given x grid.
    pub fn to_full(&self, x_grid: &GridSpec) -> Result<MoyalElement> {
        match &self.rep {
            Representation::Full { .. } => Ok(self.clone()),
            Representation::TranslationInvariant(f) => {
                MoyalElement::full(self.hbar, self.eps, x_grid.clone(), f.grid.clone(), |_, y| f.eval(y))
            }
        }
    }

    /// Largest difference at the grid points of `self`.
    pub fn max_diff(&self, other: &MoyalElement) -> Result<f64> {
        match (&self.rep, &other.rep) {
            (Representation::TranslationInvariant(a), Representation::TranslationInvariant(b)) => {
                a.require_same_grid(b)?;
                Ok(a.max_diff(b))
            }
            (Representation::Full { x_grid, y_grid, values }, _) => {
                let mut m: f64 = 0.0;
                for i in 0..x_grid.len() {
                    let x = x_grid.point(i);
                    for j in 0..y_grid.len() {
                        m = m.max((values[i * y_grid.len() + j] - other.eval(&x, &y_grid.point(j))).norm());
                    }
                }
                Ok(m)
            }
            (Representation::TranslationInvariant(_), Representation::Full { x_grid, .. }) => {
                other.max_diff(&self.to_full(x_grid)?)
            }
        }
    }
}

fn joint_grid(x: &GridSpec, y: &GridSpec) -> GridSpec {
    GridSpec {
        points: x.points.iter().chain(&y.points).copied().collect(),
        spacing: x.spacing.iter().chain(&y.spacing).copied().collect(),
    }
}

/// Kähler product
/// `(a*b)(x,y) = hbar^{m/2} eps^{1/2} sum_{y'+y''=y} a(x + hbar #y''/2, y') b(x - hbar #y'/2, y'') e^{-(i/2) hbar Pi(y',y'')} vol`.
pub fn kahler_product(a: &MoyalElement, b: &MoyalElement, data: &ConstantPoissonData) -> Result<MoyalElement> {
    require_nonnegative(a.hbar)?;
    if a.hbar != b.hbar {
        return Err(Error::Argument(format!("factors live at different hbar: {} and {}", a.hbar, b.hbar)));
    }
    require_kahler(data)?;
    let eps = EpsilonFactor::for_case(PolarizationCase::Kahler, data)?;
    let hbar = a.hbar;
    let pref = eps.prefactor(hbar)?;
    match (&a.rep, &b.rep) {
        (Representation::TranslationInvariant(fa), Representation::TranslationInvariant(fb)) => {
            let prod = convolve(fa, fb, hbar, data, PolarizationCase::Kahler)?.scale(C64::new(pref, 0.0));
            let conv = Convolution::new(prod);
            let mut out = MoyalElement::translation_invariant(hbar, eps, conv.value);
            out.diagnostics.boundary_mass = conv.boundary_mass;
            out.diagnostics.warning = conv.warning;
            Ok(out)
        }
        (Representation::Full { x_grid, .. }, _) | (_, Representation::Full { x_grid, .. }) => {
            let a = a.to_full(x_grid)?;
            let b = b.to_full(x_grid)?;
            full_product(&a, &b, data, pref, eps)
        }
    }
}

fn full_product(
    a: &MoyalElement,
    b: &MoyalElement,
    data: &ConstantPoissonData,
    pref: f64,
    eps: EpsilonFactor,
) -> Result<MoyalElement> {
    let (Representation::Full { x_grid, y_grid, values: va }, Representation::Full { x_grid: xb, y_grid: yb, values: vb }) =
        (&a.rep, &b.rep)
    else {
        unreachable!("both factors were expanded");
    };
    if x_grid != xb || y_grid != yb {
        return Err(Error::Shape("factors are sampled on different grids".into()));
    }
    if data.n != y_grid.dim() {
        return Err(Error::Shape(format!("pi acts on dimension {} but the grid has dimension {}", data.n, y_grid.dim())));
    }
    let hbar = a.hbar;
    let d = y_grid.dim();
    let ny = y_grid.len();
    let vol = y_grid.cell_volume();
    let ys: Vec<Vec<f64>> = (0..ny).map(|k| y_grid.point(k)).collect();
    let shifts: Vec<Vec<f64>> = ys.iter().map(|y| data.sharp(y).iter().map(|v| 0.5 * hbar * v).collect()).collect();
    // The splittings y = y' + y'' and their phases do not depend on x.
    let splits: Vec<Vec<(usize, usize, C64)>> = (0..ny)
        .map(|k| {
            (0..ny)
                .filter_map(|j1| {
                    let y2: Vec<f64> = ys[k].iter().zip(&ys[j1]).map(|(p, q)| p - q).collect();
                    let j2 = y_grid.locate(&y2)?;
                    Some((j1, j2, C64::from_polar(1.0, -0.5 * hbar * data.pair(&ys[j1], &ys[j2]))))
                })
                .collect()
        })
        .collect();
    let mut values = vec![C64::new(0.0, 0.0); x_grid.len() * ny];
    values.par_chunks_mut(ny).enumerate().for_each(|(i, row)| {
        let x = x_grid.point(i);
        let mut xa = [0.0; MAX_FULL_DIM];
        let mut xb = [0.0; MAX_FULL_DIM];
        for (out, split) in row.iter_mut().zip(&splits) {
            let mut acc = C64::new(0.0, 0.0);
            for &(j1, j2, phase) in split {
                for t in 0..d {
                    xa[t] = x[t] + shifts[j2][t];
                    xb[t] = x[t] - shifts[j1][t];
                }
                acc += interp_slice(x_grid, va, ny, j1, &xa[..d]) * interp_slice(x_grid, vb, ny, j2, &xb[..d]) * phase;
            }
            *out = acc * vol * pref;
        }
    });
    let interpolation_error = interpolation_estimate(x_grid, ny, &[va, vb], &shifts);
    let mut out = MoyalElement {
        hbar,
        eps,
        rep: Representation::Full { x_grid: x_grid.clone(), y_grid: y_grid.clone(), values },
        diagnostics: Diagnostics::default(),
    };
    out.diagnostics.interpolation_error = interpolation_error;
    Ok(out)
}

fn interp_slice(x_grid: &GridSpec, vals: &[C64], ny: usize, j: usize, x: &[f64]) -> C64 {
    interpolate_by(x_grid, x, |k| vals[k * ny + j])
}

/// Compares interpolation on the x grid with interpolation on the grid of
/// every other point at all shifted positions used by the product. The
/// multilinear error scales with the square of the spacing, so the fine
/// error is about a third of the difference. Needs `n = 1 mod 4` per axis.
fn interpolation_estimate(x_grid: &GridSpec, ny: usize, inputs: &[&Vec<C64>], shifts: &[Vec<f64>]) -> Option<f64> {
    if x_grid.points.iter().any(|&n| n % 4 != 1 || n < 5) {
        return None;
    }
    let coarse = GridSpec {
        points: x_grid.points.iter().map(|&n| n.div_ceil(2)).collect(),
        spacing: x_grid.spacing.iter().map(|h| 2.0 * h).collect(),
    };
    let mut worst: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for vals in inputs {
        sup = vals.iter().fold(sup, |m, v| m.max(v.norm()));
        let coarse_vals: Vec<C64> = (0..coarse.len())
            .flat_map(|c| {
                let idx: Vec<usize> = coarse.unflatten(c).iter().map(|i| 2 * i).collect();
                let f = x_grid.flatten(&idx);
                (0..ny).map(move |j| vals[f * ny + j])
            })
            .collect();
        for i in 0..x_grid.len() {
            let x = x_grid.point(i);
            for (j, s) in shifts.iter().enumerate() {
                for sign in [1.0, -1.0] {
                    let p: Vec<f64> = x.iter().zip(s).map(|(a, b)| a + sign * b).collect();
                    let fine = interp_slice(x_grid, vals, ny, j, &p);
                    let rough = interp_slice(&coarse, &coarse_vals, ny, j, &p);
                    worst = worst.max((fine - rough).norm() / 3.0);
                }
            }
        }
    }
    Some(if sup > 0.0 { worst / sup } else { 0.0 })
}

/// Grid on which the unit multiplier has decayed below 1e-12 at the edge.
pub fn unit_multiplier_grid(hbar: f64, data: &ConstantPoissonData, points: usize) -> Result<GridSpec> {
    require_nonnegative(hbar)?;
    if hbar == 0.0 {
        return Err(Error::Argument("the unit multiplier vanishes at hbar = 0".into()));
    }
    require_kahler(data)?;
    let g = data.metric_matrix().expect("checked by require_kahler");
    let lmin = g.symmetric_eigen().eigenvalues.min();
    let extent = (4.0 * 1e12f64.ln() / (hbar * lmin)).sqrt();
    GridSpec::with_extent(data.n, points, extent)
}

/// `K(y) = exp(-hbar |y|^2 / 4) hbar^{m/2} eps^{1/2}` on the default grid.
pub fn unit_multiplier(hbar: f64, data: &ConstantPoissonData) -> Result<MoyalElement> {
    let grid = unit_multiplier_grid(hbar, data, DEFAULT_POINTS)?;
    unit_multiplier_on(hbar, data, grid)
}

pub fn unit_multiplier_on(hbar: f64, data: &ConstantPoissonData, grid: GridSpec) -> Result<MoyalElement> {
    require_nonnegative(hbar)?;
    let eps = EpsilonFactor::for_case(PolarizationCase::Kahler, data)?;
    if grid.dim() != data.n {
        return Err(Error::Shape(format!("grid dimension {} does not match n = {}", grid.dim(), data.n)));
    }
    let pref = eps.prefactor(hbar)?;
    let g = data.metric.clone().expect("checked by for_case");
    let f = LatticeFunction::from_fn(grid, |y| {
        let mut q = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                q += g[i][j] * y[i] * y[j];
            }
        }
        C64::new((-0.25 * hbar * q).exp() * pref, 0.0)
    });
    Ok(MoyalElement::translation_invariant(hbar, eps, f))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ev0 {
    pub value: C64,
    pub residual: f64,
}

/// Classical limit `lim_{hbar->0} hbar^{-m/2} eps^{-1/2} a(x, y, hbar)` by
/// Neville extrapolation over the family.
pub fn ev0(family: &[MoyalElement], x: &[f64], y: &[f64]) -> Result<Ev0> {
    if family.len() < 3 {
        return Err(Error::InsufficientData(format!("ev0 needs at least 3 family members, got {}", family.len())));
    }
    for w in family.windows(2) {
        if !(w[1].hbar < w[0].hbar) {
            return Err(Error::Argument("family must be ordered by strictly decreasing hbar".into()));
        }
    }
    let mut steps = Vec::with_capacity(family.len());
    let mut re = Vec::with_capacity(family.len());
    let mut im = Vec::with_capacity(family.len());
    for a in family {
        if !(a.hbar > 0.0) {
            return Err(Error::Positivity(format!("family members need hbar > 0, got {}", a.hbar)));
        }
        let v = a.eval(x, y) / a.eps.prefactor(a.hbar)?;
        steps.push(a.hbar);
        re.push(v.re);
        im.push(v.im);
    }
    let diffs: Vec<f64> =
        (1..re.len()).map(|k| C64::new(re[k] - re[k - 1], im[k] - im[k - 1]).norm()).collect();
    let scale = re.iter().zip(&im).fold(1.0f64, |m, (a, b)| m.max(a.hypot(*b)));
    for k in 1..diffs.len() {
        if diffs[k] > diffs[k - 1] * (1.0 + 1e-9) + 1e-12 * scale {
            return Err(Error::LimitDoesNotExist(format!(
                "successive differences grow as hbar decreases ({:.3e} -> {:.3e}); the section is not smooth at hbar = 0",
                diffs[k - 1], diffs[k]
            )));
        }
    }
    let (vr, er) = extrapolate_to_zero(&steps, &re)?;
    let (vi, ei) = extrapolate_to_zero(&steps, &im)?;
    Ok(Ev0 { value: C64::new(vr, vi), residual: er.hypot(ei) })
}
