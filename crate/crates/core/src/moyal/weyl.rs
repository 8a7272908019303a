use std::f64::consts::PI;

use super::algebra::twisted_convolution;
use super::lattice::{GridSpec, LatticeFunction};
use crate::groupoid::ConstantPoissonData;
use crate::numerics::D1_ORDER8;
use crate::{Error, Result, C64};

/// Outer-quarter spectral mass above which a transform counts as aliased.
pub const ALIASING_MASS: f64 = 1e-6;

/// Separable discrete-time Fourier transform
/// `out(q) = sum_p v(p) exp(sign i p.q) vol_p`, one axis at a time.
fn transform(values: &[C64], from: &GridSpec, to: &GridSpec, sign: f64) -> Vec<C64> {
    let d = from.dim();
    let mut cur = values.to_vec();
    let mut shape = from.points.clone();
    for ax in 0..d {
        let n_in = from.points[ax];
        let n_out = to.points[ax];
        let outer: usize = shape[..ax].iter().product();
        let inner: usize = shape[ax + 1..].iter().product();
        let h = from.spacing[ax];
        let kernel: Vec<C64> = (0..n_out)
            .flat_map(|q| {
                let yq = to.coord(ax, q);
                (0..n_in).map(move |p| C64::from_polar(h, sign * from.coord(ax, p) * yq))
            })
            .collect();
        let mut next = vec![C64::new(0.0, 0.0); outer * n_out * inner];
        for o in 0..outer {
            for q in 0..n_out {
                let row = &kernel[q * n_in..(q + 1) * n_in];
                let dst = &mut next[(o * n_out + q) * inner..(o * n_out + q + 1) * inner];
                for (p, k) in row.iter().enumerate() {
                    let src = &cur[(o * n_in + p) * inner..(o * n_in + p + 1) * inner];
                    for (t, s) in dst.iter_mut().zip(src) {
                        *t += s * k;
                    }
                }
            }
        }
        cur = next;
        shape[ax] = n_out;
    }
    cur
}

/// Symbol to twisted-algebra element:
/// `a(y) = (2 pi)^{-n} sum_x f(x) exp(-i x.y) vol_x` on `y_grid`.
///
/// The quantization parameter enters only through the product of the
/// algebra the result is multiplied in.
pub fn weyl_quantize(f: &LatticeFunction, y_grid: &GridSpec) -> Result<LatticeFunction> {
    let d = f.dim();
    if y_grid.dim() != d {
        return Err(Error::Shape(format!("symbol has dimension {d} but the y grid has {}", y_grid.dim())));
    }
    y_grid.validate()?;
    if let Some(v) = f.values.iter().find(|v| v.im != 0.0) {
        return Err(Error::Argument(format!("symbol must be real-valued, found imaginary part {}", v.im)));
    }
    let norm = (2.0 * PI).powi(-(d as i32));
    let mut values = transform(&f.values, &f.grid, y_grid, -1.0);
    for v in values.iter_mut() {
        *v *= norm;
    }
    let mut a = LatticeFunction { grid: y_grid.clone(), values };
    // A real symbol has a(-y) = conj(a(y)); enforce it against roundoff.
    let star = a.involution();
    for (v, s) in a.values.iter_mut().zip(&star.values) {
        *v = 0.5 * (*v + s);
    }
    let outer = a.outer_quarter_mass();
    if outer > ALIASING_MASS {
        return Err(Error::Resolution(format!(
            "spectral mass {outer:.3e} outside the inner three quarters of the y grid exceeds {ALIASING_MASS:.0e}; widen the y grid or smooth the symbol"
        )));
    }
    Ok(a)
}

/// Inverse of [`weyl_quantize`]: `f(x) = sum_y a(y) exp(i x.y) vol_y`.
pub fn symbol_of(a: &LatticeFunction, x_grid: &GridSpec) -> Result<LatticeFunction> {
    if x_grid.dim() != a.dim() {
        return Err(Error::Shape(format!("element has dimension {} but the x grid has {}", a.dim(), x_grid.dim())));
    }
    let values = transform(&a.values, &a.grid, x_grid, 1.0);
    LatticeFunction::new(x_grid.clone(), values)
}

/// `{f, g} = Pi^{ij} d_i f d_j g` by eighth-order central differences;
/// points within four cells of the edge are set to zero.
pub fn poisson_bracket(f: &LatticeFunction, g: &LatticeFunction, data: &ConstantPoissonData) -> Result<LatticeFunction> {
    f.require_same_grid(g)?;
    let grid = &f.grid;
    let d = grid.dim();
    if data.n != d {
        return Err(Error::Shape(format!("pi acts on dimension {} but the grid has dimension {d}", data.n)));
    }
    let r = D1_ORDER8.len();
    let mut strides = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * grid.points[k + 1];
    }
    let deriv = |v: &[C64], k: usize, ax: usize| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (m, c) in D1_ORDER8.iter().enumerate() {
            let s = (m + 1) * strides[ax];
            acc += (v[k + s] - v[k - s]) * *c;
        }
        acc / grid.spacing[ax]
    };
    let values = (0..grid.len())
        .map(|k| {
            if grid.in_boundary_layer(k, r) {
                return C64::new(0.0, 0.0);
            }
            let df: Vec<C64> = (0..d).map(|ax| deriv(&f.values, k, ax)).collect();
            let dg: Vec<C64> = (0..d).map(|ax| deriv(&g.values, k, ax)).collect();
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d {
                for j in 0..d {
                    acc += df[i] * dg[j] * data.pi[i][j];
                }
            }
            acc
        })
        .collect();
    LatticeFunction::new(grid.clone(), values)
}

/// `sup_y |([Qf, Qg] + i hbar Q{f, g})(y)|` in the flat-V algebra, with `Q`
/// the Weyl quantization onto `y_grid`.
///
/// The sup norm of the Fourier-side function stands in for the C*-norm,
/// which is not computed.
pub fn dirac_defect(
    f: &LatticeFunction,
    g: &LatticeFunction,
    hbar: f64,
    data: &ConstantPoissonData,
    y_grid: &GridSpec,
) -> Result<f64> {
    let qf = weyl_quantize(f, y_grid)?;
    let qg = weyl_quantize(g, y_grid)?;
    let fg = twisted_convolution(&qf, &qg, hbar, data)?.value;
    let gf = twisted_convolution(&qg, &qf, hbar, data)?.value;
    let qb = weyl_quantize(&poisson_bracket(f, g, data)?, y_grid)?;
    let defect = fg.sub(&gf)?.add(&qb.scale(C64::new(0.0, hbar)))?;
    Ok(defect.sup_norm())
}
