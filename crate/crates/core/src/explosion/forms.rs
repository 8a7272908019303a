use std::sync::Arc;

use nalgebra::DMatrix;

use super::chart::{project, ExplodedPoint, ExplosiveChart};
use super::smooth::SmoothMap;
use crate::report::{CheckReport, Residual};
use crate::sampling::SampleRng;
use crate::{Error, Result};

/// A 1-form `theta_x dx + theta_y dy + theta_z dz` on a chart whose `dx` and
/// `dy` coefficients vanish along `N`.
#[derive(Clone)]
pub struct NormalOneForm {
    pub chart: ExplosiveChart,
    /// Coefficients in chart order, a map `R^n -> R^n`.
    pub coeffs: Arc<dyn SmoothMap>,
}

impl NormalOneForm {
    pub fn new(chart: ExplosiveChart, coeffs: Arc<dyn SmoothMap>) -> Result<Self> {
        let n = chart.dim();
        if coeffs.dim_in() != n || coeffs.dim_out() != n {
            return Err(Error::Shape(format!(
                "form coefficients must map R^{n} -> R^{n}, got {} -> {}",
                coeffs.dim_in(),
                coeffs.dim_out()
            )));
        }
        Ok(NormalOneForm { chart, coeffs })
    }

    /// Sampled check that the `dx` and `dy` coefficients vanish on `N`.
    pub fn check_normal(&self, samples: usize, tol: f64, rng: &mut SampleRng) -> CheckReport {
        let c = &self.chart;
        let mut rx = Residual::new("theta_x(x,0,0)");
        let mut ry = Residual::new("theta_y(x,0,0)");
        for _ in 0..samples {
            let x = super::map::sample_n(c, rng);
            let mut p = x.clone();
            p.resize(c.dim(), 0.0);
            let v = self.coeffs.eval(&p);
            rx.observe(v[..c.dim_x].iter().fold(0.0, |m, a| m.max(a.abs())), &x);
            ry.observe(v[c.dim_x..c.dim_x + c.dim_y].iter().fold(0.0, |m, a| m.max(a.abs())), &x);
        }
        CheckReport::new(vec![rx, ry], samples, tol)
    }
}

/// Pullback of `theta` along the projection, components `(dx, dy, dz, dhbar)`.
pub fn pullback_projection(theta: &NormalOneForm, p: &ExplodedPoint) -> Result<Vec<f64>> {
    Ok(scaled_pullback(theta, p, 1.0)?.0)
}

/// `(Pr^* theta)(p)` and the exploded form `(Pr^* theta) / hbar` for
/// `hbar != 0`, with the coefficients multiplied by `scale(Pr p)`.
fn scaled_pullback(theta: &NormalOneForm, p: &ExplodedPoint, hbar_scale: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = &theta.chart;
    let q = project(c, p)?;
    let th: Vec<f64> = theta.coeffs.eval(&q).iter().map(|v| v * hbar_scale).collect();
    let h = p.hbar;
    let (nx, ny) = (c.dim_x, c.dim_y);
    let mut pull = Vec::with_capacity(c.dim() + 1);
    let mut exploded = Vec::with_capacity(c.dim() + 1);
    let mut dh_y = 0.0;
    let mut dh_z = 0.0;
    for (i, t) in th.iter().enumerate() {
        if i < nx {
            pull.push(*t);
            exploded.push(t / h);
        } else if i < nx + ny {
            pull.push(h * t);
            exploded.push(*t);
            dh_y += t * p.y[i - nx];
        } else {
            pull.push(h * h * t);
            exploded.push(h * t);
            dh_z += 2.0 * t * p.z[i - nx - ny];
        }
    }
    pull.push(dh_y + h * dh_z);
    exploded.push(dh_y / h + dh_z);
    Ok((pull, exploded))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormOptions {
    /// Outer extrapolation step around `hbar = 0`.
    pub step: f64,
    /// Allowed disagreement between the two extrapolation levels, relative
    /// to `max(1, |value|)`.
    pub tol: f64,
}

impl Default for FormOptions {
    fn default() -> Self {
        FormOptions { step: 1e-3, tol: 1e-5 }
    }
}

/// The exploded 1-form at `p`, components `(dx, dy, dz, dhbar)`.
///
/// At `hbar = 0` the removable singularity is evaluated by Richardson
/// extrapolation of symmetric averages at `±h` and `±h/2`.
pub fn explode_form(theta: &NormalOneForm, p: &ExplodedPoint, opts: FormOptions) -> Result<Vec<f64>> {
    explode_form_scaled(theta, p, opts, |_| 1.0)
}

pub(crate) fn explode_form_scaled(
    theta: &NormalOneForm,
    p: &ExplodedPoint,
    opts: FormOptions,
    scale: impl Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    let at = |h: f64| -> Result<Vec<f64>> {
        let mut q = p.clone();
        q.hbar = h;
        let pr = project(&theta.chart, &q)?;
        Ok(scaled_pullback(theta, &q, scale(&pr))?.1)
    };
    if p.hbar != 0.0 {
        return at(p.hbar);
    }
    project(&theta.chart, p)?;
    let h = opts.step;
    let (fp, fm, hp, hm) = (at(h)?, at(-h)?, at(h / 2.0)?, at(-h / 2.0)?);
    let mut out = Vec::with_capacity(fp.len());
    for i in 0..fp.len() {
        let even_coarse = 0.5 * (fp[i] + fm[i]);
        let even_fine = 0.5 * (hp[i] + hm[i]);
        let odd_coarse = 0.5 * (fp[i] - fm[i]);
        let odd_fine = 0.5 * (hp[i] - hm[i]);
        let value = (4.0 * even_fine - even_coarse) / 3.0;
        let scale = value.abs().max(1.0);
        // A smooth family has an odd part that halves with the step; a
        // 1/hbar pole doubles it.
        if (even_coarse - even_fine).abs() > opts.tol * scale
            || odd_fine.abs() > 0.75 * odd_coarse.abs() + opts.tol * scale
        {
            return Err(Error::Convergence(format!(
                "exploded form component {i} does not extrapolate to hbar = 0 \
                 (levels {even_coarse:e}, {even_fine:e}; odd parts {odd_coarse:e}, {odd_fine:e}); \
                 the form is probably not normal to N and E"
            )));
        }
        out.push(value);
    }
    Ok(out)
}

/// A smooth function `r` on the chart driving the rescaling `Res_r`.
#[derive(Clone)]
pub struct RescaleFunction {
    pub r: Arc<dyn SmoothMap>,
}

impl RescaleFunction {
    pub fn new(r: Arc<dyn SmoothMap>) -> Result<Self> {
        if r.dim_out() != 1 {
            return Err(Error::Shape("rescale function must be scalar".into()));
        }
        Ok(RescaleFunction { r })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        RescaleFunction { r: Arc::new(crate::poly::PolyMap { nvars: n, components: vec![crate::poly::Poly::constant(n, c)] }) }
    }
}

/// `Res_r(x, y, z, hbar) = (x, e^r y, e^{2r} z, e^{-r} hbar)` with `r`
/// evaluated at the projected point.
pub fn rescale(chart: &ExplosiveChart, r: &RescaleFunction, p: &ExplodedPoint) -> Result<ExplodedPoint> {
    let q = project(chart, p)?;
    let rho = r.r.eval(&q)[0];
    if !rho.is_finite() {
        return Err(Error::OutOfDomain { what: "rescale function value".into(), coords: q });
    }
    let e = rho.exp();
    Ok(ExplodedPoint::new(
        p.x.clone(),
        p.y.iter().map(|v| e * v).collect(),
        p.z.iter().map(|v| e * e * v).collect(),
        p.hbar / e,
    ))
}

/// Central-difference Jacobian of `Res_r` at `p`.
pub fn rescale_jacobian_fd(
    chart: &ExplosiveChart,
    r: &RescaleFunction,
    p: &ExplodedPoint,
    h: f64,
) -> Result<DMatrix<f64>> {
    let base = p.flat();
    let n = base.len();
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[c] += h;
        minus[c] -= h;
        let fp = rescale(chart, r, &ExplodedPoint::from_flat(chart, &plus)?)?.flat();
        let fm = rescale(chart, r, &ExplodedPoint::from_flat(chart, &minus)?)?.flat();
        for row in 0..n {
            j[(row, c)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    Ok(j)
}

/// Both sides of `Res_r^*(E theta) = E(e^r theta)` at `p`, the left side
/// through a finite-difference Jacobian with step `h`.
pub fn rescale_pullback_sides(
    theta: &NormalOneForm,
    r: &RescaleFunction,
    p: &ExplodedPoint,
    h: f64,
    opts: FormOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let chart = &theta.chart;
    let image = rescale(chart, r, p)?;
    let form_at_image = explode_form(theta, &image, opts)?;
    let j = rescale_jacobian_fd(chart, r, p, h)?;
    let n = form_at_image.len();
    let lhs: Vec<f64> = (0..n).map(|c| (0..n).map(|row| j[(row, c)] * form_at_image[row]).sum()).collect();
    let rhs = explode_form_scaled(theta, p, opts, |q| r.r.eval(q)[0].exp())?;
    Ok((lhs, rhs))
}
