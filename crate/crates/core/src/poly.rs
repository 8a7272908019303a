//! Sparse multivariate polynomials with real coefficients.
//!
//! Polynomials are the carrier for user-supplied maps and symbols: they
//! give exact partial derivatives of every order and exact composition,
//! which the explosion and sphere modules lean on for their closed-form
//! oracles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

/// One `coeff * prod x_i^powers[i]` entry of a serialized polynomial.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolyTable {
    pub vars: usize,
    pub terms: Vec<Term>,
}

/// Highest total degree accepted from tables; keeps composition bounded.
pub const MAX_TABLE_DEGREE: u32 = 12;

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range for {nvars} variables");
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.add_term(e, 1.0);
        p
    }

    pub fn monomial(coeff: f64, powers: Vec<u32>) -> Self {
        let mut p = Poly::zero(powers.len());
        p.add_term(powers, coeff);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    fn add_term(&mut self, powers: Vec<u32>, c: f64) {
        debug_assert_eq!(powers.len(), self.nvars);
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(powers).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        assert_eq!(p.len(), self.nvars, "polynomial evaluated at wrong dimension");
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(p)
                    .fold(*c, |acc, (&k, &x)| if k == 0 { acc } else { acc * x.powi(k as i32) })
            })
            .sum()
    }

    pub fn derivative(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, &c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * e[i] as f64);
            }
        }
        out
    }

    /// Mixed partial along the listed variable indices.
    pub fn partial(&self, idx: &[usize]) -> Poly {
        idx.iter().fold(self.clone(), |p, &i| p.derivative(i))
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), c * s);
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::constant(self.nvars, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Substitute `x_i -> args[i]`. All arguments share one variable set,
    /// which becomes the variable set of the result.
    pub fn compose(&self, args: &[Poly]) -> Poly {
        assert_eq!(args.len(), self.nvars, "composition arity mismatch");
        let m = args.first().map(|a| a.nvars).unwrap_or(0);
        let mut out = Poly::zero(m);
        let mut cache: Vec<Vec<Poly>> = args.iter().map(|a| vec![Poly::constant(m, 1.0), a.clone()]).collect();
        for (e, &c) in &self.terms {
            let mut term = Poly::constant(m, c);
            for (i, &k) in e.iter().enumerate() {
                while cache[i].len() <= k as usize {
                    let next = cache[i].last().unwrap().mul(&args[i]);
                    cache[i].push(next);
                }
                if k > 0 {
                    term = term.mul(&cache[i][k as usize]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    pub fn to_table(&self) -> PolyTable {
        PolyTable {
            vars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, &c)| Term { coeff: c, powers: e.clone() })
                .collect(),
        }
    }

    pub fn from_table(t: &PolyTable) -> Result<Poly> {
        let mut p = Poly::zero(t.vars);
        for (i, term) in t.terms.iter().enumerate() {
            if term.powers.len() != t.vars {
                return Err(Error::Validation(format!(
                    "term {i} has {} powers, expected {}",
                    term.powers.len(),
                    t.vars
                )));
            }
            if !term.coeff.is_finite() {
                return Err(Error::Validation(format!("term {i} has a non-finite coefficient")));
            }
            let deg: u32 = term.powers.iter().fold(0u32, |a, b| a.saturating_add(*b));
            if deg > MAX_TABLE_DEGREE {
                return Err(Error::Validation(format!(
                    "term {i} has degree {deg}, above the limit {MAX_TABLE_DEGREE}"
                )));
            }
            p.add_term(term.powers.clone(), term.coeff);
        }
        Ok(p)
    }
}

/// A polynomial map `R^n -> R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap {
    pub nvars: usize,
    pub components: Vec<Poly>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolyMapTable {
    pub vars: usize,
    pub components: Vec<Vec<Term>>,
}

impl PolyMap {
    pub fn new(nvars: usize, components: Vec<Poly>) -> Result<Self> {
        if let Some(bad) = components.iter().position(|c| c.nvars != nvars) {
            return Err(Error::Shape(format!(
                "component {bad} has {} variables, expected {nvars}",
                components[bad].nvars
            )));
        }
        Ok(PolyMap { nvars, components })
    }

    pub fn identity(n: usize) -> Self {
        PolyMap { nvars: n, components: (0..n).map(|i| Poly::var(n, i)).collect() }
    }

    pub fn dim_out(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(p)).collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PolyMap) -> Result<PolyMap> {
        if inner.dim_out() != self.nvars {
            return Err(Error::Shape(format!(
                "cannot compose: inner map has {} outputs, outer expects {}",
                inner.dim_out(),
                self.nvars
            )));
        }
        Ok(PolyMap {
            nvars: inner.nvars,
            components: self.components.iter().map(|c| c.compose(&inner.components)).collect(),
        })
    }

    pub fn from_table(t: &PolyMapTable) -> Result<PolyMap> {
        let components = t
            .components
            .iter()
            .map(|terms| Poly::from_table(&PolyTable { vars: t.vars, terms: terms.clone() }))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::new(t.vars, components)
    }

    pub fn to_table(&self) -> PolyMapTable {
        PolyMapTable {
            vars: self.nvars,
            components: self.components.iter().map(|c| c.to_table().terms).collect(),
        }
    }

    /// Parse a JSON polynomial-map table.
    pub fn from_json(text: &str) -> Result<PolyMap> {
        let table: PolyMapTable = serde_json::from_str(text)?;
        PolyMap::from_table(&table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::var(2, 0)
    }
    fn y() -> Poly {
        Poly::var(2, 1)
    }

    #[test]
    fn arithmetic_and_eval() {
        let p = x().mul(&y()).add(&x().pow(3).scale(2.0));
        assert_eq!(p.eval(&[2.0, 5.0]), 10.0 + 16.0);
        assert_eq!(p.degree(), 3);
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn derivatives_are_exact() {
        let p = x().pow(3).mul(&y().pow(2));
        let d = p.partial(&[0, 0, 1]);
        // d^3/dx^2 dy of x^3 y^2 = 6x * 2y
        assert_eq!(d.eval(&[1.5, -2.0]), 12.0 * 1.5 * -2.0);
    }

    #[test]
    fn composition_matches_pointwise() {
        let outer = PolyMap::new(2, vec![x().mul(&y()), x().add(&y().pow(2))]).unwrap();
        let inner = PolyMap::new(2, vec![x().add(&Poly::constant(2, 1.0)), y().scale(3.0)]).unwrap();
        let c = outer.compose(&inner).unwrap();
        let p = [0.3, -0.7];
        for (a, b) in c.eval(&p).iter().zip(outer.eval(&inner.eval(&p))) {
            assert!((a - b).abs() < 1e-14 * b.abs().max(1.0));
        }
    }

    #[test]
    fn table_roundtrip_and_validation() {
        let m = PolyMap::new(2, vec![x().mul(&y()).scale(-0.5), y()]).unwrap();
        let json = serde_json::to_string(&m.to_table()).unwrap();
        assert_eq!(PolyMap::from_json(&json).unwrap(), m);
        assert!(PolyMap::from_json(r#"{"vars":2,"components":[[{"coeff":1,"powers":[1]}]]}"#).is_err());
        assert!(PolyMap::from_json(r#"{"vars":1,"components":[[{"coeff":1,"powers":[99]}]]}"#).is_err());
    }
}
