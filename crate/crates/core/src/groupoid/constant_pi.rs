//! The exploded symplectic groupoid of a constant Poisson structure on a
//! vector space `V`, and the pair groupoid of the line.
//!
//! Arrow coordinates are `(x, y, z, hbar)` with `x` in `V`, `y` in `V*`;
//! pairs are `(x, y, y', z, z', hbar)` and triples
//! `(x, y, y', y'', z, z', z'', hbar)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::{GroupoidChartModel, Map, Sampler};
use crate::sampling::{self, SampleRng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantPoissonData {
    pub n: usize,
    /// Row-major `Pi[i][j] = Pi^{ij}`.
    pub pi: Vec<Vec<f64>>,
    /// Optional metric on `V*` for the Kähler polarization.
    #[serde(default)]
    pub metric: Option<Vec<Vec<f64>>>,
}

impl ConstantPoissonData {
    /// The standard symplectic bivector on `R^n`, `n` even.
    pub fn standard(n: usize) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::Argument(format!("standard Pi needs an even dimension, got {n}")));
        }
        let mut pi = vec![vec![0.0; n]; n];
        for k in 0..n / 2 {
            pi[2 * k][2 * k + 1] = 1.0;
            pi[2 * k + 1][2 * k] = -1.0;
        }
        Ok(ConstantPoissonData { n, pi, metric: None })
    }

    pub fn standard_kahler(n: usize) -> Result<Self> {
        let mut d = Self::standard(n)?;
        d.metric = Some((0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect());
        Ok(d)
    }

    pub fn zero(n: usize) -> Self {
        ConstantPoissonData { n, pi: vec![vec![0.0; n]; n], metric: None }
    }

    pub fn pi_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.pi[i][j])
    }

    pub fn metric_matrix(&self) -> Option<DMatrix<f64>> {
        self.metric.as_ref().map(|g| DMatrix::from_fn(self.n, self.n, |i, j| g[i][j]))
    }

    /// Shape, antisymmetry and (when a metric is present) compatibility
    /// checks. Returns the compatibility constant `c` when it applies.
    pub fn validate(&self) -> Result<Option<f64>> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Validation("dimension n must be positive".into()));
        }
        if self.pi.len() != n || self.pi.iter().any(|r| r.len() != n) {
            return Err(Error::Validation(format!("pi must be a {n}x{n} matrix")));
        }
        if self.pi.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("pi has non-finite entries".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if self.pi[i][j] != -self.pi[j][i] {
                    return Err(Error::Validation(format!("pi is not antisymmetric at ({i}, {j})")));
                }
            }
        }
        let Some(g) = &self.metric else { return Ok(None) };
        if g.len() != n || g.iter().any(|r| r.len() != n) {
            return Err(Error::Validation(format!("metric must be a {n}x{n} matrix")));
        }
        let gm = self.metric_matrix().unwrap();
        if (&gm - gm.transpose()).amax() > 1e-12 * gm.amax().max(1.0) {
            return Err(Error::Validation("metric is not symmetric".into()));
        }
        let eig = gm.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Validation("metric is not positive definite".into()));
        }
        let pi = self.pi_matrix();
        if pi.determinant().abs() < 1e-12 {
            return Ok(None);
        }
        let j = gm.try_inverse().ok_or_else(|| Error::Validation("metric is singular".into()))? * pi;
        let j2 = &j * &j;
        let c2 = -j2.trace() / n as f64;
        let dev = (&j2 + DMatrix::identity(n, n) * c2).amax();
        if !(c2 > 0.0) || dev > 1e-9 * c2.max(1.0) {
            return Err(Error::Validation(
                "metric is not compatible with pi: (g^-1 Pi)^2 must be a negative multiple of the identity".into(),
            ));
        }
        Ok(Some(c2.sqrt()))
    }

    /// `(#y)^i = Pi^{ji} y_j`.
    pub fn sharp(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.pi[j][i] * y[j]).sum()).collect()
    }

    /// `Pi(y, y') = Pi^{ij} y_i y'_j`.
    pub fn pair(&self, y: &[f64], y2: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.pi[i][j] * y[i] * y2[j];
            }
        }
        s
    }
}

/// Sampling box for the built-in models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub half_width: f64,
    pub hbar_max: f64,
    /// Probability that a sample is placed on the `hbar = 0` fiber.
    pub zero_fraction: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox { half_width: 1.0, hbar_max: 1.0, zero_fraction: 0.1 }
    }
}

fn draw_hbar(rng: &mut SampleRng, b: SampleBox) -> f64 {
    if sampling::bernoulli(rng, b.zero_fraction) {
        0.0
    } else {
        sampling::uniform(rng, -b.hbar_max, b.hbar_max)
    }
}

fn draw(rng: &mut SampleRng, k: usize, b: SampleBox) -> Vec<f64> {
    (0..k).map(|_| sampling::uniform(rng, -b.half_width, b.half_width)).collect()
}

fn axpy(x: &[f64], a: f64, v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(p, q)| p + a * q).collect()
}

fn cat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|a| -a).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + q).collect()
}

/// The exploded groupoid over `V x R` of a constant Poisson structure.
pub fn constant_pi_model(data: &ConstantPoissonData) -> Result<GroupoidChartModel> {
    constant_pi_model_with(data, SampleBox::default(), 1.0)
}

/// Same maps, but the product's `z'` enters with the wrong sign: a fault
/// injection for the axiom checker.
pub fn broken_constant_pi_model(data: &ConstantPoissonData) -> Result<GroupoidChartModel> {
    let mut m = constant_pi_model_with(data, SampleBox::default(), -1.0)?;
    m.name = "broken-constant-pi".into();
    Ok(m)
}

pub fn constant_pi_model_with(
    data: &ConstantPoissonData,
    sbox: SampleBox,
    z_sign: f64,
) -> Result<GroupoidChartModel> {
    data.validate()?;
    let n = data.n;
    let d = Arc::new(data.clone());
    // Arrow g = (x, y, z, h).
    let split_arrow = move |g: &[f64]| -> (Vec<f64>, Vec<f64>, f64, f64) {
        (g[..n].to_vec(), g[n..2 * n].to_vec(), g[2 * n], g[2 * n + 1])
    };
    // Pair (x, y, y', z, z', h).
    let split_pair = move |p: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64, f64) {
        (p[..n].to_vec(), p[n..2 * n].to_vec(), p[2 * n..3 * n].to_vec(), p[3 * n], p[3 * n + 1], p[3 * n + 2])
    };
    // Triple (x, y, y', y'', z, z', z'', h).
    type Triple = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64, f64, f64, f64);
    let split_triple = move |t: &[f64]| -> Triple {
        (
            t[..n].to_vec(),
            t[n..2 * n].to_vec(),
            t[2 * n..3 * n].to_vec(),
            t[3 * n..4 * n].to_vec(),
            t[4 * n],
            t[4 * n + 1],
            t[4 * n + 2],
            t[4 * n + 3],
        )
    };
    let product_z = {
        let d = d.clone();
        move |y: &[f64], y2: &[f64], z: f64, z2: f64| z + z_sign * z2 - 0.5 * d.pair(y, y2)
    };

    let unit: Map = Arc::new(move |b: &[f64]| {
        let mut g = b[..n].to_vec();
        g.extend(std::iter::repeat_n(0.0, n + 1));
        g.push(b[n]);
        g
    });
    let inv: Map = Arc::new(move |g: &[f64]| {
        let (x, y, z, h) = split_arrow(g);
        cat(&[&x, &neg(&y), &[-z, h]])
    });
    let src: Map = {
        let d = d.clone();
        Arc::new(move |g: &[f64]| {
            let (x, y, _, h) = split_arrow(g);
            cat(&[&axpy(&x, -0.5 * h, &d.sharp(&y)), &[h]])
        })
    };
    let tgt: Map = {
        let d = d.clone();
        Arc::new(move |g: &[f64]| {
            let (x, y, _, h) = split_arrow(g);
            cat(&[&axpy(&x, 0.5 * h, &d.sharp(&y)), &[h]])
        })
    };
    let pr1: Map = {
        let d = d.clone();
        Arc::new(move |p: &[f64]| {
            let (x, y, y2, z, _, h) = split_pair(p);
            cat(&[&axpy(&x, 0.5 * h, &d.sharp(&y2)), &y, &[z, h]])
        })
    };
    let pr2: Map = {
        let d = d.clone();
        Arc::new(move |p: &[f64]| {
            let (x, y, y2, _, z2, h) = split_pair(p);
            cat(&[&axpy(&x, -0.5 * h, &d.sharp(&y)), &y2, &[z2, h]])
        })
    };
    let mul: Map = {
        let pz = product_z.clone();
        Arc::new(move |p: &[f64]| {
            let (x, y, y2, z, z2, h) = split_pair(p);
            cat(&[&x, &add(&y, &y2), &[pz(&y, &y2, z, z2), h]])
        })
    };
    let zeros = vec![0.0; n];
    let right_unit: Map = {
        let zeros = zeros.clone();
        Arc::new(move |g: &[f64]| {
            let (x, y, z, h) = split_arrow(g);
            cat(&[&x, &y, &zeros, &[z, 0.0, h]])
        })
    };
    let left_unit: Map = {
        let zeros = zeros.clone();
        Arc::new(move |g: &[f64]| {
            let (x, y, z, h) = split_arrow(g);
            cat(&[&x, &zeros, &y, &[0.0, z, h]])
        })
    };
    let left_inverse: Map = {
        let d = d.clone();
        Arc::new(move |g: &[f64]| {
            let (x, y, z, h) = split_arrow(g);
            cat(&[&axpy(&x, -0.5 * h, &d.sharp(&y)), &neg(&y), &y, &[-z, z, h]])
        })
    };
    let right_inverse: Map = {
        let d = d.clone();
        Arc::new(move |g: &[f64]| {
            let (x, y, z, h) = split_arrow(g);
            cat(&[&axpy(&x, 0.5 * h, &d.sharp(&y)), &y, &neg(&y), &[z, -z, h]])
        })
    };
    let drop_first: Map = {
        let d = d.clone();
        Arc::new(move |t: &[f64]| {
            let (x, y, y2, y3, _, z2, z3, h) = split_triple(t);
            cat(&[&axpy(&x, -0.5 * h, &d.sharp(&y)), &y2, &y3, &[z2, z3, h]])
        })
    };
    let drop_last: Map = {
        let d = d.clone();
        Arc::new(move |t: &[f64]| {
            let (x, y, y2, y3, z, z2, _, h) = split_triple(t);
            cat(&[&axpy(&x, 0.5 * h, &d.sharp(&y3)), &y, &y2, &[z, z2, h]])
        })
    };
    let mul_left: Map = {
        let pz = product_z.clone();
        Arc::new(move |t: &[f64]| {
            let (x, y, y2, y3, z, z2, z3, h) = split_triple(t);
            cat(&[&x, &add(&y, &y2), &y3, &[pz(&y, &y2, z, z2), z3, h]])
        })
    };
    let mul_right: Map = {
        let pz = product_z.clone();
        Arc::new(move |t: &[f64]| {
            let (x, y, y2, y3, z, z2, z3, h) = split_triple(t);
            cat(&[&x, &y, &add(&y2, &y3), &[z, pz(&y2, &y3, z2, z3), h]])
        })
    };
    let sample_base: Sampler = Arc::new(move |rng: &mut SampleRng| {
        let mut v = draw(rng, n, sbox);
        v.push(draw_hbar(rng, sbox));
        Ok(v)
    });
    let sampler = |k: usize| -> Sampler {
        Arc::new(move |rng: &mut SampleRng| {
            let mut v = draw(rng, k, sbox);
            v.push(draw_hbar(rng, sbox));
            Ok(v)
        })
    };
    Ok(GroupoidChartModel {
        name: "constant-pi".into(),
        dim_base: n + 1,
        dim_arrow: 2 * n + 2,
        dim_pairs: 3 * n + 3,
        dim_triples: 4 * n + 4,
        hbar_base_index: Some(n),
        unit,
        inv,
        src,
        tgt,
        pr1,
        pr2,
        mul,
        right_unit,
        left_unit,
        left_inverse,
        right_inverse,
        drop_first,
        mul_left,
        mul_right,
        drop_last,
        sample_base,
        sample_arrow: sampler(2 * n + 1),
        sample_pair: sampler(3 * n + 2),
        sample_triple: sampler(4 * n + 3),
    })
}

/// The pair groupoid of the real line: arrows `(a, b)` from `b` to `a`.
pub fn pair_groupoid_line() -> GroupoidChartModel {
    let map = |f: fn(&[f64]) -> Vec<f64>| -> Map { Arc::new(f) };
    let sampler = |k: usize| -> Sampler {
        Arc::new(move |rng: &mut SampleRng| Ok(draw(rng, k, SampleBox::default())))
    };
    GroupoidChartModel {
        name: "pair-line".into(),
        dim_base: 1,
        dim_arrow: 2,
        dim_pairs: 3,
        dim_triples: 4,
        hbar_base_index: None,
        unit: map(|b| vec![b[0], b[0]]),
        inv: map(|g| vec![g[1], g[0]]),
        src: map(|g| vec![g[1]]),
        tgt: map(|g| vec![g[0]]),
        pr1: map(|p| vec![p[0], p[1]]),
        pr2: map(|p| vec![p[1], p[2]]),
        mul: map(|p| vec![p[0], p[2]]),
        right_unit: map(|g| vec![g[0], g[1], g[1]]),
        left_unit: map(|g| vec![g[0], g[0], g[1]]),
        left_inverse: map(|g| vec![g[1], g[0], g[1]]),
        right_inverse: map(|g| vec![g[0], g[1], g[0]]),
        drop_first: map(|t| vec![t[1], t[2], t[3]]),
        mul_left: map(|t| vec![t[0], t[2], t[3]]),
        mul_right: map(|t| vec![t[0], t[1], t[3]]),
        drop_last: map(|t| vec![t[0], t[1], t[2]]),
        sample_base: sampler(1),
        sample_arrow: sampler(2),
        sample_pair: sampler(3),
        sample_triple: sampler(4),
    }
}

/// Apply the grading `(x, y, z, hbar) -> (x, l y, l^2 z, hbar / l)` to
/// coordinates with `n_y` covector blocks and `n_z` scalar `z` slots.
pub fn grade(v: &[f64], n: usize, n_y: usize, n_z: usize, l: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    for c in &mut out[n..n + n_y * n] {
        *c *= l;
    }
    for c in &mut out[n + n_y * n..n + n_y * n + n_z] {
        *c *= l * l;
    }
    let last = out.len() - 1;
    out[last] /= l;
    out
}

/// Largest deviation from commuting with the grading over random samples,
/// across all structure maps of the constant-Pi model.
pub fn grading_residual(
    model: &GroupoidChartModel,
    n: usize,
    lambda: f64,
    samples: usize,
    rng: &mut SampleRng,
) -> Result<f64> {
    let base = |v: &[f64]| grade(v, n, 0, 0, lambda);
    let arrow = |v: &[f64]| grade(v, n, 1, 1, lambda);
    let pair = |v: &[f64]| grade(v, n, 2, 2, lambda);
    let triple = |v: &[f64]| grade(v, n, 3, 3, lambda);
    let mut worst = 0.0f64;
    let mut track = |a: Vec<f64>, b: Vec<f64>| {
        let d = super::model::dist(&a, &b);
        worst = if d.is_nan() { f64::NAN } else { worst.max(d) };
    };
    for _ in 0..samples {
        let err = |r: String| Error::Sampler { diagram: "grading".into(), reason: r };
        let b = (model.sample_base)(rng).map_err(err)?;
        let g = (model.sample_arrow)(rng).map_err(err)?;
        let p = (model.sample_pair)(rng).map_err(err)?;
        let t = (model.sample_triple)(rng).map_err(err)?;
        track((model.unit)(&base(&b)), arrow(&(model.unit)(&b)));
        for f in [&model.src, &model.tgt] {
            track(f(&arrow(&g)), base(&f(&g)));
        }
        track((model.inv)(&arrow(&g)), arrow(&(model.inv)(&g)));
        for f in [&model.pr1, &model.pr2, &model.mul] {
            track(f(&pair(&p)), arrow(&f(&p)));
        }
        for f in [&model.right_unit, &model.left_unit, &model.left_inverse, &model.right_inverse] {
            track(f(&arrow(&g)), pair(&f(&g)));
        }
        for f in [&model.drop_first, &model.drop_last, &model.mul_left, &model.mul_right] {
            track(f(&triple(&t)), pair(&f(&t)));
        }
    }
    Ok(worst)
}
