use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::model::{GroupoidChartModel, Map};
use crate::poly::Poly;
use crate::report::Residual;
use crate::sampling::SampleRng;
use crate::{Error, Result};

pub type FormEval = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
pub type TwoFormEval = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A 1- or 2-form on the arrow model, coefficients in arrow coordinates.
#[derive(Clone)]
pub enum DifferentialFormModel {
    One { eval: FormEval },
    /// `omega = sum_{i<j} A_ij dx^i ^ dx^j`, `A` antisymmetric. `d` is an
    /// optional closed-form exterior derivative returning the totally
    /// antisymmetric coefficient tensor flattened row-major.
    Two { eval: TwoFormEval, d: Option<Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>> },
}

impl DifferentialFormModel {
    pub fn degree(&self) -> usize {
        match self {
            DifferentialFormModel::One { .. } => 1,
            DifferentialFormModel::Two { .. } => 2,
        }
    }
}

/// Step used for finite-difference pullbacks. The built-in structure maps
/// are at most quadratic, where central differences are exact up to
/// rounding.
pub const PULLBACK_STEP: f64 = 1e-4;

/// Central-difference Jacobian of `f` at `p`.
pub fn jacobian_fd(f: &Map, p: &[f64], h: f64) -> DMatrix<f64> {
    let base = f(p);
    let mut j = DMatrix::zeros(base.len(), p.len());
    let mut q = p.to_vec();
    for c in 0..p.len() {
        q[c] = p[c] + h;
        let fp = f(&q);
        q[c] = p[c] - h;
        let fm = f(&q);
        q[c] = p[c];
        for r in 0..base.len() {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    j
}

fn check_jacobian(j: &DMatrix<f64>, which: &str) -> Result<()> {
    if j.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Derivative {
            partial: format!("Jacobian of {which}"),
            reason: "finite-difference Jacobian has non-finite entries".into(),
        })
    }
}

/// Value of the coboundary `pr1^* - m^* + pr2^*` applied to a form.
#[derive(Debug, Clone, PartialEq)]
pub enum Coboundary {
    Scalar(f64),
    One(DVector<f64>),
    Two(DMatrix<f64>),
}

impl Coboundary {
    pub fn norm(&self) -> f64 {
        match self {
            Coboundary::Scalar(v) => v.abs(),
            Coboundary::One(v) => v.norm(),
            Coboundary::Two(m) => m.norm(),
        }
    }
}

pub fn coboundary_function(f: &(dyn Fn(&[f64]) -> f64 + Sync), model: &GroupoidChartModel, pair: &[f64]) -> f64 {
    f(&(model.pr1)(pair)) - f(&(model.mul)(pair)) + f(&(model.pr2)(pair))
}

pub fn coboundary_form(form: &DifferentialFormModel, model: &GroupoidChartModel, pair: &[f64]) -> Result<Coboundary> {
    let maps = [(&model.pr1, 1.0, "pr1"), (&model.mul, -1.0, "m"), (&model.pr2, 1.0, "pr2")];
    match form {
        DifferentialFormModel::One { eval } => {
            let mut acc = DVector::zeros(pair.len());
            for (f, sign, name) in maps {
                let j = jacobian_fd(f, pair, PULLBACK_STEP);
                check_jacobian(&j, name)?;
                acc += j.transpose() * eval(&f(pair)) * sign;
            }
            Ok(Coboundary::One(acc))
        }
        DifferentialFormModel::Two { eval, .. } => {
            let mut acc = DMatrix::zeros(pair.len(), pair.len());
            for (f, sign, name) in maps {
                let j = jacobian_fd(f, pair, PULLBACK_STEP);
                check_jacobian(&j, name)?;
                acc += j.transpose() * eval(&f(pair)) * &j * sign;
            }
            Ok(Coboundary::Two(acc))
        }
    }
}

/// Coboundary of the coboundary of `f` along the triples model; vanishes
/// identically for a genuine groupoid.
pub fn double_coboundary(f: &(dyn Fn(&[f64]) -> f64 + Sync), model: &GroupoidChartModel, triple: &[f64]) -> f64 {
    let df = |p: &[f64]| coboundary_function(f, model, p);
    df(&(model.drop_first)(triple)) - df(&(model.mul_left)(triple)) + df(&(model.mul_right)(triple))
        - df(&(model.drop_last)(triple))
}

#[derive(Debug, Clone, Serialize)]
pub struct FormsReport {
    pub closedness: Residual,
    pub multiplicativity: Residual,
    /// Smallest `|det omega|` seen and where.
    pub min_abs_det: Residual,
    pub degenerate: bool,
    pub tolerance: f64,
    pub samples: usize,
}

impl FormsReport {
    pub fn passed(&self) -> bool {
        !self.degenerate && self.closedness.max < self.tolerance && self.multiplicativity.max < self.tolerance
    }
}

fn exterior_derivative_fd(eval: &TwoFormEval, p: &[f64], h: f64) -> f64 {
    let n = p.len();
    let mut grads = Vec::with_capacity(n);
    let mut q = p.to_vec();
    for k in 0..n {
        q[k] = p[k] + h;
        let a = eval(&q);
        q[k] = p[k] - h;
        let b = eval(&q);
        q[k] = p[k];
        grads.push((a - b) / (2.0 * h));
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let v = grads[i][(j, k)] + grads[j][(k, i)] + grads[k][(i, j)];
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

/// Closedness, multiplicativity and nondegeneracy of a 2-form.
pub fn check_forms(
    model: &GroupoidChartModel,
    omega: &DifferentialFormModel,
    samples: usize,
    tol: f64,
    rng: &mut SampleRng,
) -> Result<FormsReport> {
    let DifferentialFormModel::Two { eval, d } = omega else {
        return Err(Error::Argument("check_forms expects a 2-form".into()));
    };
    let mut closed = Residual::new("d_omega");
    let mut mult = Residual::new("coboundary_omega");
    let mut det = Residual::new("min_abs_det");
    det.max = f64::INFINITY;
    for _ in 0..samples {
        let err = |r: String| Error::Sampler { diagram: "forms".into(), reason: r };
        let g = (model.sample_arrow)(rng).map_err(err)?;
        let p = (model.sample_pair)(rng).map_err(err)?;
        let a = eval(&g);
        if (&a + a.transpose()).amax() > 0.0 {
            return Err(Error::Validation("2-form coefficient matrix is not antisymmetric".into()));
        }
        let dv = match d {
            Some(d) => d(&g).iter().fold(0.0f64, |m, v| m.max(v.abs())),
            None => exterior_derivative_fd(eval, &g, 1e-4),
        };
        closed.observe(dv, &g);
        mult.observe(coboundary_form(omega, model, &p)?.norm(), &p);
        let ad = a.determinant().abs();
        if ad.is_nan() || ad < det.max {
            det.max = ad;
            det.witness = Some(g.clone());
        }
    }
    let degenerate = !(det.max >= 10.0 * tol);
    Ok(FormsReport { closedness: closed, multiplicativity: mult, min_abs_det: det, degenerate, tolerance: tol, samples })
}

/// Compare `{f o t, g o t}` computed from `omega^{-1}` against the rescaled
/// base bracket `hbar Pi(df, dg)` at `t(sample)`. `f` and `g` are
/// polynomials in base coordinates `(x, hbar)`.
pub fn check_target_poisson(
    model: &GroupoidChartModel,
    omega: &DifferentialFormModel,
    base_bracket: &(dyn Fn(&[f64], &[f64], &[f64]) -> f64 + Sync),
    f: &Poly,
    g: &Poly,
    samples: usize,
    rng: &mut SampleRng,
) -> Result<Residual> {
    let DifferentialFormModel::Two { eval, .. } = omega else {
        return Err(Error::Argument("target Poisson check expects a 2-form".into()));
    };
    let grad = |p: &Poly, b: &[f64]| -> DVector<f64> {
        DVector::from_iterator(p.nvars(), (0..p.nvars()).map(|i| p.derivative(i).eval(b)))
    };
    let mut res = Residual::new("target_poisson");
    for _ in 0..samples {
        let a = (model.sample_arrow)(rng).map_err(|r| Error::Sampler { diagram: "target_poisson".into(), reason: r })?;
        let w = eval(&a);
        let inv = w.clone().try_inverse().ok_or_else(|| Error::Validation(format!("omega is degenerate at {a:?}")))?;
        let poisson = -inv;
        let jt = jacobian_fd(&model.tgt, &a, PULLBACK_STEP);
        let b = (model.tgt)(&a);
        let (df, dg) = (grad(f, &b), grad(g, &b));
        let (dft, dgt) = (jt.transpose() * &df, jt.transpose() * &dg);
        let lhs = (dft.transpose() * &poisson * dgt)[(0, 0)];
        let rhs = base_bracket(&b, df.as_slice(), dg.as_slice());
        res.observe((lhs - rhs).abs(), &a);
    }
    Ok(res)
}
