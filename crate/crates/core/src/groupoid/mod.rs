//! Lie groupoids as explicit structure maps on coordinate models, with
//! numerical checks of the groupoid axioms, multiplicative forms and the
//! Poisson property of the target map.

mod constant_pi;
mod forms;
mod model;
mod su2;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub use constant_pi::{
    broken_constant_pi_model, constant_pi_model, constant_pi_model_with, grade, grading_residual,
    pair_groupoid_line, ConstantPoissonData, SampleBox,
};
pub use forms::{
    check_forms, check_target_poisson, coboundary_form, coboundary_function, double_coboundary, jacobian_fd,
    Coboundary, DifferentialFormModel, FormsReport, PULLBACK_STEP,
};
pub use model::{check_axioms, GroupoidChartModel, Map, Sampler, DIAGRAMS};
pub use su2::{jacobi_residual, su2_bracket_family};

/// `theta = y dx + hbar dz + 2 z dhbar` on arrows `(x, y, z, hbar)` of the
/// constant-Pi model.
pub fn exploded_contact_form(n: usize) -> DifferentialFormModel {
    DifferentialFormModel::One {
        eval: Arc::new(move |g: &[f64]| {
            let mut c = DVector::zeros(2 * n + 2);
            for i in 0..n {
                c[i] = g[n + i];
            }
            c[2 * n] = g[2 * n + 1];
            c[2 * n + 1] = 2.0 * g[2 * n];
            c
        }),
    }
}

/// `omega = dx ^ dy + dhbar ^ dz` on arrows `(x, y, z, hbar)`.
pub fn exploded_symplectic_form(n: usize) -> DifferentialFormModel {
    let mut a = DMatrix::zeros(2 * n + 2, 2 * n + 2);
    for i in 0..n {
        a[(i, n + i)] = 1.0;
        a[(n + i, i)] = -1.0;
    }
    a[(2 * n + 1, 2 * n)] = 1.0;
    a[(2 * n, 2 * n + 1)] = -1.0;
    let dim = 2 * n + 2;
    DifferentialFormModel::Two {
        eval: Arc::new(move |_| a.clone()),
        d: Some(Arc::new(move |_| vec![0.0; dim * dim * dim])),
    }
}

/// The bracket `hbar Pi(df, dg)` on the base `(x, hbar)`.
pub fn heisenberg_poisson_bracket(data: &ConstantPoissonData) -> impl Fn(&[f64], &[f64], &[f64]) -> f64 + Sync {
    let d = data.clone();
    move |b: &[f64], df: &[f64], dg: &[f64]| b[d.n] * d.pair(&df[..d.n], &dg[..d.n])
}
