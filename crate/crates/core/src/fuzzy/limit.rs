use serde::Serialize;

use super::coherent::FuzzySphere;
use super::quadrature::SphereQuadrature;
use super::symbols::{SphereSymbol, BRACKET_CONSTANT};
use crate::numerics::loglog_slope;
use crate::{Error, Result, C64};

/// Points at which `I_k(Q_k f) - f` is measured: a fixed 16 x 32 product
/// rule plus both poles, independent of `k`.
pub fn evaluation_points() -> Vec<[f64; 3]> {
    let mut pts = SphereQuadrature::new(16, 32).expect("fixed rule").nodes;
    pts.push([0.0, 0.0, 1.0]);
    pts.push([0.0, 0.0, -1.0]);
    pts
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub k: usize,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitCurve {
    pub symbol: String,
    pub rows: Vec<LimitRow>,
    /// Log-log slope of error against `1/k`; absent when some error is 0.
    pub order: Option<f64>,
    /// False when the error does not decrease along the k list.
    pub monotone: bool,
}

/// Errors below this are treated as exact zeros when fitting orders.
pub const EXACT_ZERO: f64 = 1e-13;

/// `e_k = sup_x |I_k(Q_k f)(x) - f(x)|` for each `k`.
pub fn classical_limit_curve(f: &SphereSymbol, k_list: &[usize]) -> Result<LimitCurve> {
    if k_list.is_empty() {
        return Err(Error::InsufficientData("empty k list".into()));
    }
    let pts = evaluation_points();
    let exact: Vec<f64> = pts.iter().map(|p| f.eval(p)).collect();
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let fs = FuzzySphere::new(k, f.degree())?;
        let q = fs.quantize(f)?;
        let sym = fs.symbol_at(&q, &pts)?;
        let error = sym.iter().zip(&exact).fold(0.0f64, |m, (s, e)| m.max((s - C64::new(*e, 0.0)).norm()));
        rows.push(LimitRow { k, error });
    }
    Ok(curve(f.name.clone(), rows))
}

fn curve(symbol: String, rows: Vec<LimitRow>) -> LimitCurve {
    let monotone = rows.windows(2).all(|w| w[1].error <= w[0].error * (1.0 + 1e-12) + EXACT_ZERO);
    let order = if rows.len() >= 2 && rows.iter().all(|r| r.error > EXACT_ZERO) {
        let inv_k: Vec<f64> = rows.iter().map(|r| 1.0 / r.k as f64).collect();
        let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
        loglog_slope(&inv_k, &errs).ok()
    } else {
        None
    };
    LimitCurve { symbol, rows, order, monotone }
}

/// `|| i k [Q_k f, Q_k g] + Q_k({f, g}) ||_op` with the bracket inverting
/// half the area form.
pub fn dirac_defect_sphere(f: &SphereSymbol, g: &SphereSymbol, k: usize) -> Result<f64> {
    let b = f.bracket(g);
    let bw = f.degree().max(g.degree()).max(b.degree());
    let fs = FuzzySphere::new(k, bw)?;
    let comm = fs.quantize(f)?.commutator(&fs.quantize(g)?)?;
    let qb = fs.quantize(&b)?;
    let defect = &comm.mat * C64::new(0.0, k as f64) + &qb.mat;
    Ok(defect.singular_values().max())
}

/// Dirac defects over a k list with the fitted decay order.
pub fn dirac_defect_curve(f: &SphereSymbol, g: &SphereSymbol, k_list: &[usize]) -> Result<LimitCurve> {
    let rows = k_list.iter().map(|&k| Ok(LimitRow { k, error: dirac_defect_sphere(f, g, k)? })).collect::<Result<Vec<_>>>()?;
    Ok(curve(format!("dirac({},{})", f.name, g.name), rows))
}

/// The bracket constant recorded in reports.
pub fn bracket_constant() -> f64 {
    BRACKET_CONSTANT
}
