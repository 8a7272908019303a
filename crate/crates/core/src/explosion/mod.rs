//! Double explosions of explosive charts: the projection, exploded maps and
//! their Jacobians along the `hbar = 0` fiber, exploded 1-forms, and the
//! fiberwise rescalings `Res_r`.

mod builtins;
mod chart;
mod forms;
mod map;
mod smooth;

pub use builtins::{builtin_map, BUILTIN_MAPS};
pub use chart::{project, ExplodedPoint, ExplosiveChart};
pub use forms::{
    explode_form, pullback_projection, rescale, rescale_jacobian_fd, rescale_pullback_sides, FormOptions,
    NormalOneForm, RescaleFunction,
};
pub use map::{
    check_compatible, classify_map, explode_jacobian, explode_jacobian_fd, explode_map, Classification,
    CompatibleMap, FdSteps, Verdict,
};
pub use smooth::{fd_partial, FnMap, SmoothMap};

use crate::numerics::extrapolate_to_zero;
use crate::Result;

/// Extrapolate the `hbar != 0` branch of the exploded map to `hbar = 0`
/// along the given steps. Returns the limit and an error estimate.
pub fn explode_map_limit(map: &CompatibleMap, p: &ExplodedPoint, steps: &[f64]) -> Result<(Vec<f64>, f64)> {
    let samples = steps
        .iter()
        .map(|&h| {
            let mut q = p.clone();
            q.hbar = h;
            explode_map(map, &q).map(|e| e.flat())
        })
        .collect::<Result<Vec<_>>>()?;
    let dim = samples[0].len();
    let mut limit = Vec::with_capacity(dim);
    let mut err = 0.0f64;
    for i in 0..dim {
        let vals: Vec<f64> = samples.iter().map(|s| s[i]).collect();
        let (v, e) = extrapolate_to_zero(steps, &vals)?;
        limit.push(v);
        err = err.max(e);
    }
    Ok((limit, err))
}
