//! Sampled continuous fields: the per-hbar algebras of one backend over a
//! finite index set, with symbol sections and deformation-defect reports.

use serde::Serialize;

use crate::fuzzy::{evaluation_points, FuzzyElement, FuzzySphere, SphereSymbol};
use crate::groupoid::ConstantPoissonData;
use crate::moyal::{poisson_bracket, symbol_of, twisted_convolution, weyl_quantize, GridSpec, LatticeFunction};
use crate::numerics::loglog_slope;
use crate::planck::PlanckSet;
use crate::{Error, Result, C64};

/// How far `1/hbar` may sit from an integer for the fuzzy backend.
pub const RECIPROCAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Fuzzy,
    /// Flat-V (or, with `Pi = 0`, abelian) twisted algebras on the Fourier
    /// side of `V`.
    Moyal { data: ConstantPoissonData, x_grid: GridSpec, y_grid: GridSpec },
}

impl Backend {
    /// Moyal backend on `R^2` with the standard Pi and the default grids.
    pub fn moyal_standard() -> Result<Self> {
        Ok(Backend::Moyal {
            data: ConstantPoissonData::standard(2)?,
            x_grid: GridSpec::with_extent(2, 81, 10.0)?,
            y_grid: GridSpec::with_extent(2, 65, 8.0)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Fuzzy => "fuzzy",
            Backend::Moyal { .. } => "moyal",
        }
    }

    pub fn norm_proxy(&self) -> &'static str {
        match self {
            Backend::Fuzzy => "operator norm (largest singular value)",
            Backend::Moyal { .. } => "sup over the x grid of the Weyl symbol (proxy)",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fiber {
    pub hbar: f64,
    /// `k = 1/hbar` for the fuzzy backend.
    pub k: Option<usize>,
    /// Dimension of the carrier: `k^2` matrix entries or lattice points.
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldModel {
    pub backend: Backend,
    /// Positive index points, strictly decreasing; the classical fiber at
    /// `hbar = 0` is implicit and always present.
    pub fibers: Vec<Fiber>,
}

pub fn assemble_field(backend: Backend, index: &[f64]) -> Result<FieldModel> {
    if index.is_empty() {
        return Err(Error::Argument("the field index is empty".into()));
    }
    let mut hs: Vec<f64> = index.iter().copied().filter(|&h| h != 0.0).collect();
    if let Some(h) = hs.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(Error::Validation(format!("index points must be positive and finite, got {h}")));
    }
    hs.sort_by(|a, b| b.total_cmp(a));
    hs.dedup();
    if hs.is_empty() {
        return Err(Error::Argument("the field index has no positive points".into()));
    }
    let mut fibers = Vec::with_capacity(hs.len());
    for h in hs {
        let fiber = match &backend {
            Backend::Fuzzy => {
                let k = fuzzy_level(h)?;
                Fiber { hbar: h, k: Some(k), dim: k * k }
            }
            Backend::Moyal { data, y_grid, x_grid } => {
                data.validate()?;
                if data.n != y_grid.dim() || data.n != x_grid.dim() {
                    return Err(Error::Shape(format!("Pi has dimension {} but the grids do not", data.n)));
                }
                Fiber { hbar: h, k: None, dim: y_grid.len() }
            }
        };
        fibers.push(fiber);
    }
    Ok(FieldModel { backend, fibers })
}

/// `k` with `hbar = 1/k`, or the Bohr-Sommerfeld refusal.
pub fn fuzzy_level(hbar: f64) -> Result<usize> {
    let inv = 1.0 / hbar;
    let k = inv.round();
    if !(k >= 1.0) || (inv - k).abs() > RECIPROCAL_TOL * k.max(1.0) {
        return Err(Error::Validation(format!(
            "hbar = {hbar} is not admissible for the sphere: by the Bohr-Sommerfeld condition the prequantum bundle is trivial on the leaves only if 1/hbar is an integer"
        )));
    }
    Ok(k as usize)
}

/// Fuzzy field over the positive entries of a Planck set with `k <= k_max`.
pub fn fuzzy_field_from_planck(set: &PlanckSet, k_max: usize) -> Result<FieldModel> {
    let hs: Vec<f64> = set.hbars().into_iter().filter(|h| 1.0 / h <= k_max as f64 + 0.5).collect();
    assemble_field(Backend::Fuzzy, &hs)
}

/// A symbol on the backend's classical phase space.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSymbol {
    Sphere(SphereSymbol),
    Lattice { name: String, values: LatticeFunction },
}

impl FieldSymbol {
    pub fn name(&self) -> &str {
        match self {
            FieldSymbol::Sphere(s) => &s.name,
            FieldSymbol::Lattice { name, .. } => name,
        }
    }

    /// Builtin symbol for the backend: sphere symbols by name, or one of
    /// [`LATTICE_SYMBOLS`] on the Moyal x grid.
    pub fn builtin(backend: &Backend, name: &str) -> Result<Self> {
        match backend {
            Backend::Fuzzy => Ok(FieldSymbol::Sphere(SphereSymbol::builtin(name)?)),
            Backend::Moyal { x_grid, .. } => lattice_symbol(name, x_grid),
        }
    }
}

/// Decaying symbols on `R^2` available for the Moyal backend.
pub const LATTICE_SYMBOLS: &[&str] = &["gaussian", "shifted-gaussian", "x-window", "y-window"];

fn lattice_symbol(name: &str, x_grid: &GridSpec) -> Result<FieldSymbol> {
    if x_grid.dim() != 2 {
        return Err(Error::Argument("builtin lattice symbols live on R^2".into()));
    }
    let g = |x: &[f64], c: [f64; 2]| (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / 2.0).exp();
    let f: Box<dyn Fn(&[f64]) -> f64> = match name {
        "gaussian" => Box::new(move |x| g(x, [0.0, 0.0])),
        "shifted-gaussian" => Box::new(move |x| g(x, [1.0, -0.5])),
        "x-window" => Box::new(move |x| x[0] * g(x, [0.0, 0.0])),
        "y-window" => Box::new(move |x| x[1] * g(x, [0.0, 0.0])),
        _ => {
            return Err(Error::Argument(format!(
                "unknown lattice symbol '{name}'; expected one of {}",
                LATTICE_SYMBOLS.join(", ")
            )))
        }
    };
    Ok(FieldSymbol::Lattice {
        name: name.to_string(),
        values: LatticeFunction::from_fn(x_grid.clone(), |x| C64::new(f(x), 0.0)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum FiberElement {
    Matrix(FuzzyElement),
    Lattice(LatticeFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSection {
    pub symbol: FieldSymbol,
    /// `Q_hbar(f)` for each fiber, in fiber order.
    pub values: Vec<FiberElement>,
}

struct FuzzyCtx {
    spheres: Vec<FuzzySphere>,
}

fn fuzzy_ctx(field: &FieldModel, bandwidth: usize) -> Result<FuzzyCtx> {
    let spheres = field.fibers.iter().map(|f| FuzzySphere::new(f.k.expect("fuzzy fiber"), bandwidth)).collect::<Result<_>>()?;
    Ok(FuzzyCtx { spheres })
}

fn sphere_symbol(s: &FieldSymbol) -> Result<&SphereSymbol> {
    match s {
        FieldSymbol::Sphere(s) => Ok(s),
        FieldSymbol::Lattice { .. } => Err(Error::Argument("the fuzzy backend needs a sphere symbol".into())),
    }
}

fn lattice_values<'a>(s: &'a FieldSymbol, x_grid: &GridSpec) -> Result<&'a LatticeFunction> {
    match s {
        FieldSymbol::Lattice { values, .. } if &values.grid == x_grid => Ok(values),
        FieldSymbol::Lattice { .. } => Err(Error::Shape("lattice symbol is not sampled on the backend x grid".into())),
        FieldSymbol::Sphere(_) => Err(Error::Argument("the Moyal backend needs a lattice symbol".into())),
    }
}

pub fn symbol_section(field: &FieldModel, f: &FieldSymbol) -> Result<SymbolSection> {
    let values = match &field.backend {
        Backend::Fuzzy => {
            let s = sphere_symbol(f)?;
            let ctx = fuzzy_ctx(field, s.degree())?;
            ctx.spheres.iter().map(|fs| fs.quantize(s).map(FiberElement::Matrix)).collect::<Result<_>>()?
        }
        Backend::Moyal { x_grid, y_grid, .. } => {
            let q = weyl_quantize(lattice_values(f, x_grid)?, y_grid)?;
            // The Fourier identification does not depend on hbar; only the
            // product of each fiber does.
            field.fibers.iter().map(|_| FiberElement::Lattice(q.clone())).collect()
        }
    };
    Ok(SymbolSection { symbol: f.clone(), values })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldRow {
    pub hbar: f64,
    pub k: Option<usize>,
    pub norm: f64,
    /// `| ||ev_hbar(a)|| - ||ev_0(a)|| |`.
    pub deviation: f64,
    pub product_defect: Option<f64>,
    pub dirac_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedOrders {
    pub deviation: Option<f64>,
    pub product_defect: Option<f64>,
    pub dirac_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub backend: String,
    pub symbol: String,
    pub partner: Option<String>,
    pub norm_proxy: String,
    /// Positive fibers followed by the classical `hbar = 0` row.
    pub rows: Vec<FieldRow>,
    pub orders: FittedOrders,
}

/// Values below this count as exact zeros and get no fitted order.
pub const ZERO_DEFECT: f64 = 1e-13;

fn fit(hs: &[f64], ys: &[f64]) -> Result<Option<f64>> {
    if ys.iter().any(|&y| y <= ZERO_DEFECT) {
        return Ok(None);
    }
    loglog_slope(hs, ys).map(Some)
}

/// Norm and deviation rows for `f`, and product and Dirac defects against
/// `g` when given. Orders are log-log slopes against hbar.
pub fn continuity_report(field: &FieldModel, f: &FieldSymbol, g: Option<&FieldSymbol>) -> Result<ContinuityReport> {
    if field.fibers.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "fitting decay orders needs at least 3 fibers, got {}",
            field.fibers.len()
        )));
    }
    let mut rows = match &field.backend {
        Backend::Fuzzy => fuzzy_rows(field, sphere_symbol(f)?, g.map(sphere_symbol).transpose()?)?,
        Backend::Moyal { data, x_grid, y_grid } => {
            let fv = lattice_values(f, x_grid)?;
            let gv = g.map(|g| lattice_values(g, x_grid)).transpose()?;
            moyal_rows(field, data, x_grid, y_grid, fv, gv)?
        }
    };
    let hs: Vec<f64> = rows.iter().map(|r| r.hbar).collect();
    let dev: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    let orders = FittedOrders {
        deviation: fit(&hs, &dev)?,
        product_defect: match g {
            Some(_) => fit(&hs, &rows.iter().map(|r| r.product_defect.unwrap_or(0.0)).collect::<Vec<_>>())?,
            None => None,
        },
        dirac_defect: match g {
            Some(_) => fit(&hs, &rows.iter().map(|r| r.dirac_defect.unwrap_or(0.0)).collect::<Vec<_>>())?,
            None => None,
        },
    };
    let classical = classical_norm(field, f)?;
    rows.push(FieldRow {
        hbar: 0.0,
        k: None,
        norm: classical,
        deviation: 0.0,
        product_defect: g.map(|_| 0.0),
        dirac_defect: g.map(|_| 0.0),
    });
    Ok(ContinuityReport {
        backend: field.backend.name().into(),
        symbol: f.name().into(),
        partner: g.map(|g| g.name().to_string()),
        norm_proxy: field.backend.norm_proxy().into(),
        rows,
        orders,
    })
}

/// `||ev_0(f)|| = sup |f|`, over the fixed sphere evaluation points or the
/// x grid.
pub fn classical_norm(field: &FieldModel, f: &FieldSymbol) -> Result<f64> {
    match &field.backend {
        Backend::Fuzzy => {
            let s = sphere_symbol(f)?;
            Ok(evaluation_points().iter().fold(0.0f64, |m, p| m.max(s.eval(p).abs())))
        }
        Backend::Moyal { x_grid, .. } => Ok(lattice_values(f, x_grid)?.sup_norm()),
    }
}

fn fuzzy_rows(field: &FieldModel, f: &SphereSymbol, g: Option<&SphereSymbol>) -> Result<Vec<FieldRow>> {
    let mut bw = f.degree();
    if let Some(g) = g {
        bw = bw.max(g.degree()).max(f.product(g).degree()).max(f.bracket(g).degree());
    }
    let ctx = fuzzy_ctx(field, bw)?;
    let sup = evaluation_points().iter().fold(0.0f64, |m, p| m.max(f.eval(p).abs()));
    let mut rows = Vec::with_capacity(field.fibers.len());
    for (fiber, fs) in field.fibers.iter().zip(&ctx.spheres) {
        let qf = fs.quantize(f)?;
        let norm = qf.op_norm();
        let (mut product_defect, mut dirac_defect) = (None, None);
        if let Some(g) = g {
            let qg = fs.quantize(g)?;
            product_defect = Some(qf.mul(&qg)?.sub(&fs.quantize(&f.product(g))?)?.op_norm());
            let k = fs.k() as f64;
            let d = qf.commutator(&qg)?.mat * C64::new(0.0, k) + fs.quantize(&f.bracket(g))?.mat;
            dirac_defect = Some(d.singular_values().max());
        }
        rows.push(FieldRow { hbar: fiber.hbar, k: fiber.k, norm, deviation: (norm - sup).abs(), product_defect, dirac_defect });
    }
    Ok(rows)
}

fn moyal_rows(
    field: &FieldModel,
    data: &ConstantPoissonData,
    x_grid: &GridSpec,
    y_grid: &GridSpec,
    f: &LatticeFunction,
    g: Option<&LatticeFunction>,
) -> Result<Vec<FieldRow>> {
    let qf = weyl_quantize(f, y_grid)?;
    let sup = f.sup_norm();
    let norm = symbol_of(&qf, x_grid)?.sup_norm();
    let pointwise = |a: &LatticeFunction, b: &LatticeFunction| {
        LatticeFunction::new(a.grid.clone(), a.values.iter().zip(&b.values).map(|(p, q)| p * q).collect())
    };
    let mut pre = None;
    if let Some(g) = g {
        let qg = weyl_quantize(g, y_grid)?;
        let qfg = weyl_quantize(&pointwise(f, g)?, y_grid)?;
        let qb = weyl_quantize(&poisson_bracket(f, g, data)?, y_grid)?;
        pre = Some((qg, qfg, qb));
    }
    let mut rows = Vec::with_capacity(field.fibers.len());
    for fiber in &field.fibers {
        let h = fiber.hbar;
        let (mut product_defect, mut dirac_defect) = (None, None);
        if let Some((qg, qfg, qb)) = &pre {
            let fg = twisted_convolution(&qf, qg, h, data)?.value;
            let gf = twisted_convolution(qg, &qf, h, data)?.value;
            product_defect = Some(symbol_of(&fg.sub(qfg)?, x_grid)?.sup_norm());
            let dirac = fg.sub(&gf)?.add(&qb.scale(C64::new(0.0, h)))?;
            dirac_defect = Some(symbol_of(&dirac, x_grid)?.sup_norm() / h);
        }
        rows.push(FieldRow { hbar: h, k: None, norm, deviation: (norm - sup).abs(), product_defect, dirac_defect });
    }
    Ok(rows)
}
