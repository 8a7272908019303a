use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chart::{project, ExplodedPoint, ExplosiveChart};
use super::smooth::{fd_partial, SmoothMap};
use crate::poly::PolyMap;
use crate::report::{CheckReport, Residual};
use crate::sampling::{self, SampleRng};
use crate::{Error, Result};

/// Finite-difference steps per derivative order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdSteps {
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps { first: 1e-4, second: 1e-3, third: 5e-3 }
    }
}

/// A smooth map of explosive charts sending `N` into `N'` and `E` into `E'`.
#[derive(Clone)]
pub struct CompatibleMap {
    pub map: Arc<dyn SmoothMap>,
    pub source: ExplosiveChart,
    pub target: ExplosiveChart,
    pub steps: FdSteps,
}

impl std::fmt::Debug for CompatibleMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompatibleMap")
            .field("source", &self.source)
            .field("target", &self.target)
            .field("closed_form", &self.map.as_poly().is_some())
            .finish()
    }
}

impl CompatibleMap {
    pub fn new(
        map: Arc<dyn SmoothMap>,
        source: ExplosiveChart,
        target: ExplosiveChart,
    ) -> Result<Self> {
        if map.dim_in() != source.dim() || map.dim_out() != target.dim() {
            return Err(Error::Shape(format!(
                "map is {} -> {}, charts are {} -> {}",
                map.dim_in(),
                map.dim_out(),
                source.dim(),
                target.dim()
            )));
        }
        Ok(CompatibleMap { map, source, target, steps: FdSteps::default() })
    }

    pub fn from_poly(poly: PolyMap, source: ExplosiveChart, target: ExplosiveChart) -> Result<Self> {
        Self::new(Arc::new(poly), source, target)
    }

    pub fn with_steps(mut self, steps: FdSteps) -> Self {
        self.steps = steps;
        self
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        self.map.eval(p)
    }

    /// Partial derivative of output `out` along `idx` at `p`, closed form
    /// when available.
    pub fn partial(&self, out: usize, idx: &[usize], p: &[f64]) -> Result<f64> {
        if let Some(v) = self.map.partial(out, idx, p) {
            return Ok(v);
        }
        let name = || format!("output {out} along {idx:?}");
        let v = match idx.len() {
            0 => self.map.eval(p)[out],
            1 => fd_partial(&*self.map, out, idx, p, self.steps.first),
            2 => fd_partial(&*self.map, out, idx, p, self.steps.second),
            3 => {
                let h = self.steps.third;
                let coarse = fd_partial(&*self.map, out, idx, p, h);
                let fine = fd_partial(&*self.map, out, idx, p, h / 2.0);
                if !(coarse - fine).abs().le(&(1e-3 * coarse.abs().max(fine.abs()).max(1.0))) {
                    return Err(Error::Derivative {
                        partial: name(),
                        reason: format!(
                            "third-order finite differences at steps {h:e} and {:e} disagree \
                             ({coarse:e} vs {fine:e}); supply a closed form or a smaller third-order step",
                            h / 2.0
                        ),
                    });
                }
                (4.0 * fine - coarse) / 3.0
            }
            k => {
                return Err(Error::Derivative {
                    partial: name(),
                    reason: format!("order {k} partials are not supported"),
                })
            }
        };
        if !v.is_finite() {
            return Err(Error::Derivative { partial: name(), reason: "non-finite value".into() });
        }
        Ok(v)
    }

    fn n_point(&self, x: &[f64]) -> Vec<f64> {
        let mut p = x.to_vec();
        p.resize(self.source.dim(), 0.0);
        p
    }

    /// Exact composition `self ∘ inner` for polynomial maps.
    pub fn compose(&self, inner: &CompatibleMap) -> Result<CompatibleMap> {
        if inner.target != self.source {
            return Err(Error::Shape("composition requires matching charts".into()));
        }
        match (self.map.as_poly(), inner.map.as_poly()) {
            (Some(outer), Some(inn)) => {
                CompatibleMap::from_poly(outer.compose(inn)?, inner.source.clone(), self.target.clone())
            }
            _ => {
                let (a, b) = (self.map.clone(), inner.map.clone());
                let (n, m) = (inner.source.dim(), self.target.dim());
                let f = super::smooth::FnMap::new(n, m, move |p| a.eval(&b.eval(p)));
                Ok(CompatibleMap::new(Arc::new(f), inner.source.clone(), self.target.clone())?
                    .with_steps(self.steps))
            }
        }
    }
}

/// The exploded map. For `hbar != 0` this is conjugation of the map by the
/// projection; at `hbar = 0` it is the graded linearisation along `N`.
pub fn explode_map(map: &CompatibleMap, p: &ExplodedPoint) -> Result<ExplodedPoint> {
    let q = project(&map.source, p)?;
    let (s, t) = (&map.source, &map.target);
    let h = p.hbar;
    if h != 0.0 {
        let r = map.eval(&q);
        t.require(&r, "image of exploded point")?;
        return ExplodedPoint::from_flat(
            t,
            &r.iter()
                .enumerate()
                .map(|(i, v)| {
                    if i < t.dim_x {
                        *v
                    } else if i < t.dim_x + t.dim_y {
                        v / h
                    } else {
                        v / (h * h)
                    }
                })
                .chain(std::iter::once(h))
                .collect::<Vec<_>>(),
        );
    }
    let n = map.n_point(&p.x);
    let fx = map.eval(&n);
    let x_out = fx[..t.dim_x].to_vec();
    let mut base = x_out.clone();
    base.resize(t.dim(), 0.0);
    t.require(&base, "image of N point")?;
    let mut y_out = vec![0.0; t.dim_y];
    for (a, ya) in y_out.iter_mut().enumerate() {
        for b in 0..s.dim_y {
            *ya += map.partial(t.yi(a), &[s.yi(b)], &n)? * p.y[b];
        }
    }
    let mut z_out = vec![0.0; t.dim_z];
    for (c, zc) in z_out.iter_mut().enumerate() {
        let out = t.zi(c);
        for b in 0..s.dim_y {
            for b2 in 0..s.dim_y {
                *zc += 0.5 * map.partial(out, &[s.yi(b), s.yi(b2)], &n)? * p.y[b] * p.y[b2];
            }
        }
        for d in 0..s.dim_z {
            *zc += map.partial(out, &[s.zi(d)], &n)? * p.z[d];
        }
    }
    Ok(ExplodedPoint::new(x_out, y_out, z_out, 0.0))
}

/// Jacobian of the exploded map at an `hbar = 0` point, columns ordered
/// `(x, y, z, hbar)` of the source and rows `(x', y', z', hbar)`.
pub fn explode_jacobian(map: &CompatibleMap, p: &ExplodedPoint) -> Result<DMatrix<f64>> {
    if p.hbar != 0.0 {
        return Err(Error::Argument("explode_jacobian is evaluated on the hbar = 0 fiber".into()));
    }
    project(&map.source, p)?;
    let (s, t) = (&map.source, &map.target);
    let n = map.n_point(&p.x);
    let d = |out: usize, idx: &[usize]| map.partial(out, idx, &n);
    let (rows, cols) = (t.dim() + 1, s.dim() + 1);
    let hb = cols - 1;
    let mut j = DMatrix::zeros(rows, cols);
    for a in 0..t.dim_x {
        for i in 0..s.dim_x {
            j[(a, i)] = d(a, &[i])?;
        }
        for b in 0..s.dim_y {
            j[(a, hb)] += d(a, &[s.yi(b)])? * p.y[b];
        }
    }
    for a in 0..t.dim_y {
        let r = t.yi(a);
        for i in 0..s.dim_x {
            for b in 0..s.dim_y {
                j[(r, i)] += d(r, &[i, s.yi(b)])? * p.y[b];
            }
        }
        for b in 0..s.dim_y {
            j[(r, s.yi(b))] = d(r, &[s.yi(b)])?;
            for b2 in 0..s.dim_y {
                j[(r, hb)] += 0.5 * d(r, &[s.yi(b), s.yi(b2)])? * p.y[b] * p.y[b2];
            }
        }
        for e in 0..s.dim_z {
            j[(r, hb)] += d(r, &[s.zi(e)])? * p.z[e];
        }
    }
    for c in 0..t.dim_z {
        let r = t.zi(c);
        for i in 0..s.dim_x {
            let mut v = 0.0;
            for e in 0..s.dim_z {
                v += d(r, &[i, s.zi(e)])? * p.z[e];
            }
            for b in 0..s.dim_y {
                for b2 in 0..s.dim_y {
                    v += 0.5 * d(r, &[i, s.yi(b), s.yi(b2)])? * p.y[b] * p.y[b2];
                }
            }
            j[(r, i)] = v;
        }
        for b in 0..s.dim_y {
            let mut v = 0.0;
            for b2 in 0..s.dim_y {
                v += d(r, &[s.yi(b), s.yi(b2)])? * p.y[b2];
            }
            j[(r, s.yi(b))] = v;
        }
        for e in 0..s.dim_z {
            j[(r, s.zi(e))] = d(r, &[s.zi(e)])?;
        }
        let mut v = 0.0;
        for b in 0..s.dim_y {
            for b2 in 0..s.dim_y {
                for b3 in 0..s.dim_y {
                    v += d(r, &[s.yi(b), s.yi(b2), s.yi(b3)])? * p.y[b] * p.y[b2] * p.y[b3] / 6.0;
                }
            }
            for e in 0..s.dim_z {
                v += d(r, &[s.yi(b), s.zi(e)])? * p.y[b] * p.z[e];
            }
        }
        j[(r, hb)] = v;
    }
    j[(rows - 1, hb)] = 1.0;
    Ok(j)
}

/// Central-difference Jacobian of the exploded map, used as an oracle.
pub fn explode_jacobian_fd(map: &CompatibleMap, p: &ExplodedPoint, h: f64) -> Result<DMatrix<f64>> {
    let s = &map.source;
    let base = p.flat();
    let cols = base.len();
    let rows = map.target.dim() + 1;
    let mut j = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[c] += h;
        minus[c] -= h;
        let fp = explode_map(map, &ExplodedPoint::from_flat(s, &plus)?)?.flat();
        let fm = explode_map(map, &ExplodedPoint::from_flat(s, &minus)?)?.flat();
        for r in 0..rows {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(j)
}

/// Random points of `N` well inside the chart.
pub(crate) fn sample_n(chart: &ExplosiveChart, rng: &mut SampleRng) -> Vec<f64> {
    let (lo, hi) = chart.x_range();
    let (lo, hi): (Vec<f64>, Vec<f64>) = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| {
            let pad = 0.1 * (b - a);
            (a + pad, b - pad)
        })
        .unzip();
    sampling::uniform_box(rng, &lo, &hi)
}

/// Sample the compatibility conditions on `N`: the map must send `N` to
/// `N'`, and the first-order part in `y` of the `z'` components must vanish
/// there. The derivative blocks below the diagonal are reported too.
pub fn check_compatible(
    map: &CompatibleMap,
    samples: usize,
    tol: f64,
    rng: &mut SampleRng,
) -> Result<CheckReport> {
    let (s, t) = (&map.source, &map.target);
    let mut n_y = Residual::new("phi_y(x,0,0)");
    let mut n_z = Residual::new("phi_z(x,0,0)");
    let mut z_y = Residual::new("phi_z_y(x,0,0)");
    let mut y_x = Residual::new("phi_y_x(x,0,0)");
    let mut z_x = Residual::new("phi_z_x(x,0,0)");
    for _ in 0..samples {
        let x = sample_n(s, rng);
        let p = map.n_point(&x);
        let v = map.eval(&p);
        let (vy, vz) = (&v[t.dim_x..t.dim_x + t.dim_y], &v[t.dim_x + t.dim_y..]);
        n_y.observe(vy.iter().fold(0.0, |m, a| m.max(a.abs())), &x);
        n_z.observe(vz.iter().fold(0.0, |m, a| m.max(a.abs())), &x);
        let mut worst = [0.0f64; 3];
        for c in 0..t.dim_z {
            for b in 0..s.dim_y {
                worst[0] = worst[0].max(map.partial(t.zi(c), &[s.yi(b)], &p)?.abs());
            }
            for i in 0..s.dim_x {
                worst[2] = worst[2].max(map.partial(t.zi(c), &[i], &p)?.abs());
            }
        }
        for a in 0..t.dim_y {
            for i in 0..s.dim_x {
                worst[1] = worst[1].max(map.partial(t.yi(a), &[i], &p)?.abs());
            }
        }
        z_y.observe(worst[0], &x);
        y_x.observe(worst[1], &x);
        z_x.observe(worst[2], &x);
    }
    Ok(CheckReport::new(vec![n_y, n_z, z_y, y_x, z_x], samples, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Indeterminate,
}

impl Verdict {
    fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::No, _) | (_, Verdict::No) => Verdict::No,
            (Verdict::Indeterminate, _) | (_, Verdict::Indeterminate) => Verdict::Indeterminate,
            _ => Verdict::Yes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub submersion: Verdict,
    pub immersion: Verdict,
    pub injective_immersion: Verdict,
    /// Smallest singular value seen per block `(x, y, z)`.
    pub min_singular_values: [f64; 3],
}

fn full_rank(m: &DMatrix<f64>, want: usize, tol: f64, smin: &mut f64) -> Verdict {
    if want == 0 {
        return Verdict::Yes;
    }
    if m.nrows().min(m.ncols()) < want {
        return Verdict::No;
    }
    let sv = m.singular_values();
    let s = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    *smin = smin.min(s);
    if s <= tol {
        Verdict::No
    } else if s <= 10.0 * tol {
        Verdict::Indeterminate
    } else {
        Verdict::Yes
    }
}

/// Rank tests of the diagonal blocks of the derivative along `N`.
pub fn classify_map(
    map: &CompatibleMap,
    samples: usize,
    tol: f64,
    rng: &mut SampleRng,
) -> Result<Classification> {
    let (s, t) = (&map.source, &map.target);
    let mut sub = Verdict::Yes;
    let mut imm = Verdict::Yes;
    let mut smin = [f64::INFINITY; 3];
    let mut points = Vec::with_capacity(samples);
    for _ in 0..samples.max(1) {
        let x = sample_n(s, rng);
        let p = map.n_point(&x);
        let blocks = [
            (0..t.dim_x, 0..s.dim_x),
            (t.dim_x..t.dim_x + t.dim_y, s.dim_x..s.dim_x + s.dim_y),
            (t.dim_x + t.dim_y..t.dim(), s.dim_x + s.dim_y..s.dim()),
        ];
        for (k, (rows, cols)) in blocks.into_iter().enumerate() {
            let (nr, nc) = (rows.len(), cols.len());
            let mut m = DMatrix::zeros(nr, nc);
            for (i, r) in rows.clone().enumerate() {
                for (j, c) in cols.clone().enumerate() {
                    m[(i, j)] = map.partial(r, &[c], &p)?;
                }
            }
            sub = sub.and(full_rank(&m, nr, tol, &mut smin[k]));
            imm = imm.and(full_rank(&m, nc, tol, &mut smin[k]));
        }
        points.push(p);
    }
    // Injectivity on N: no two sampled points may be sent (nearly) together.
    let mut inj = imm;
    if inj != Verdict::No {
        'outer: for i in 0..points.len() {
            let fi = map.eval(&points[i]);
            for j in 0..i {
                let fj = map.eval(&points[j]);
                let d = dist(&points[i], &points[j]);
                if d == 0.0 {
                    continue;
                }
                let ratio = dist(&fi, &fj) / d;
                if ratio <= tol {
                    inj = Verdict::No;
                    break 'outer;
                } else if ratio <= 10.0 * tol {
                    inj = inj.and(Verdict::Indeterminate);
                }
            }
        }
    }
    Ok(Classification { submersion: sub, immersion: imm, injective_immersion: inj, min_singular_values: smin })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}
