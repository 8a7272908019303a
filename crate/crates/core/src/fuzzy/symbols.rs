use std::io::BufRead;

use nalgebra::{DMatrix, DVector};

use crate::poly::Poly;
use crate::{Error, Result};

/// Names accepted by [`SphereSymbol::builtin`].
pub const BUILTIN_SYMBOLS: &[&str] = &["constant", "p2", "p3", "p4", "x", "xy", "y", "z", "zz"];

/// Highest degree fitted to node-value tables.
pub const MAX_FIT_DEGREE: u32 = 4;

/// Residual above which a node table is rejected as not polynomial.
pub const FIT_TOLERANCE: f64 = 1e-8;

/// Proportionality constant of the bracket `{f, g} = C x.(grad f x grad g)`
/// inverting `eps`, half the area form.
pub const BRACKET_CONSTANT: f64 = 2.0;

/// A function on the sphere given by a polynomial in `(x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSymbol {
    pub name: String,
    pub poly: Poly,
}

fn coord(i: usize) -> Poly {
    Poly::var(3, i)
}

impl SphereSymbol {
    pub fn new(name: impl Into<String>, poly: Poly) -> Result<Self> {
        if poly.nvars() != 3 {
            return Err(Error::Argument(format!("sphere symbols are polynomials in 3 variables, got {}", poly.nvars())));
        }
        Ok(SphereSymbol { name: name.into(), poly })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let (x, y, z) = (coord(0), coord(1), coord(2));
        let c = |v: f64| Poly::constant(3, v);
        let poly = match name {
            "constant" | "one" => c(1.0),
            "x" => x,
            "y" => y,
            "z" => z,
            "zz" => z.pow(2),
            "xy" => x.mul(&y),
            // Legendre polynomials in z: zonal harmonics of degree 2..4.
            "p2" => z.pow(2).scale(1.5).sub(&c(0.5)),
            "p3" => z.pow(3).scale(2.5).sub(&z.scale(1.5)),
            "p4" => z.pow(4).scale(35.0 / 8.0).sub(&z.pow(2).scale(30.0 / 8.0)).add(&c(3.0 / 8.0)),
            _ => {
                return Err(Error::Argument(format!(
                    "unknown symbol '{name}'; expected one of {}",
                    BUILTIN_SYMBOLS.join(", ")
                )))
            }
        };
        Ok(SphereSymbol { name: name.to_string(), poly })
    }

    pub fn eval(&self, p: &[f64; 3]) -> f64 {
        self.poly.eval(p)
    }

    pub fn degree(&self) -> usize {
        self.poly.degree() as usize
    }

    pub fn product(&self, other: &SphereSymbol) -> SphereSymbol {
        SphereSymbol { name: format!("{}*{}", self.name, other.name), poly: self.poly.mul(&other.poly) }
    }

    /// `{f, g} = 2 x.(grad f x grad g)`.
    pub fn bracket(&self, other: &SphereSymbol) -> SphereSymbol {
        let df: Vec<Poly> = (0..3).map(|i| self.poly.derivative(i)).collect();
        let dg: Vec<Poly> = (0..3).map(|i| other.poly.derivative(i)).collect();
        let mut acc = Poly::zero(3);
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let cross = df[j].mul(&dg[k]).sub(&df[k].mul(&dg[j]));
            acc = acc.add(&coord(i).mul(&cross));
        }
        SphereSymbol { name: format!("{{{},{}}}", self.name, other.name), poly: acc.scale(BRACKET_CONSTANT) }
    }

    /// Least-squares polynomial of degree at most 4 through node values.
    pub fn fit_nodes(name: impl Into<String>, rows: &[([f64; 3], f64)]) -> Result<Self> {
        let exps = exponents(MAX_FIT_DEGREE);
        if rows.len() < 25 {
            return Err(Error::InsufficientData(format!(
                "fitting a degree-{MAX_FIT_DEGREE} symbol needs at least 25 nodes, got {}",
                rows.len()
            )));
        }
        for (i, (p, v)) in rows.iter().enumerate() {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if !((r - 1.0).abs() <= 1e-9) || !v.is_finite() {
                return Err(Error::Validation(format!("row {}: node must be a unit vector with a finite value", i + 1)));
            }
        }
        let a = DMatrix::from_fn(rows.len(), exps.len(), |r, c| monomial(&rows[r].0, &exps[c]));
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|(_, v)| *v));
        let coeffs = a.clone().svd(true, true).solve(&b, 1e-12).map_err(|e| Error::Validation(e.to_string()))?;
        let resid = (&a * &coeffs - &b).amax();
        if resid > FIT_TOLERANCE {
            return Err(Error::Validation(format!(
                "node values are not a polynomial of degree <= {MAX_FIT_DEGREE} (fit residual {resid:.3e})"
            )));
        }
        let mut poly = Poly::zero(3);
        for (e, c) in exps.iter().zip(coeffs.iter()) {
            if c.abs() > 1e-14 {
                poly = poly.add(&Poly::monomial(*c, e.clone()));
            }
        }
        Ok(SphereSymbol { name: name.into(), poly })
    }

    /// Reads `x,y,z,value` rows (with that header) and fits them.
    pub fn from_node_csv(name: impl Into<String>, input: impl BufRead) -> Result<Self> {
        let rows = read_node_csv(input)?;
        Self::fit_nodes(name, &rows)
    }
}

pub fn read_node_csv(input: impl BufRead) -> Result<Vec<([f64; 3], f64)>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Decode("empty node CSV".into()))??;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["x", "y", "z", "value"] {
        return Err(Error::Decode(format!("node CSV header must be x,y,z,value, got '{header}'")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Decode(format!("line {}: {e}", i + 2)))?;
        let [x, y, z, v] = nums[..] else {
            return Err(Error::Decode(format!("line {}: expected 4 columns, got {}", i + 2, nums.len())));
        };
        rows.push(([x, y, z], v));
    }
    Ok(rows)
}

fn exponents(max: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for d in 0..=max {
        for a in (0..=d).rev() {
            for b in (0..=d - a).rev() {
                out.push(vec![a, b, d - a - b]);
            }
        }
    }
    out
}

fn monomial(p: &[f64; 3], e: &[u32]) -> f64 {
    p[0].powi(e[0] as i32) * p[1].powi(e[1] as i32) * p[2].powi(e[2] as i32)
}
