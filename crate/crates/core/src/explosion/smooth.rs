//! Smooth maps between coordinate spaces with optional closed-form partials.

use std::fmt;
use std::sync::Arc;

use crate::poly::PolyMap;

pub trait SmoothMap: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn eval(&self, p: &[f64]) -> Vec<f64>;

    /// Closed-form partial derivative of output `out` along the variables
    /// `idx` (in order), or `None` when only finite differences are possible.
    fn partial(&self, _out: usize, _idx: &[usize], _p: &[f64]) -> Option<f64> {
        None
    }

    fn as_poly(&self) -> Option<&PolyMap> {
        None
    }
}

impl SmoothMap for PolyMap {
    fn dim_in(&self) -> usize {
        self.nvars
    }
    fn dim_out(&self) -> usize {
        self.components.len()
    }
    fn eval(&self, p: &[f64]) -> Vec<f64> {
        PolyMap::eval(self, p)
    }
    fn partial(&self, out: usize, idx: &[usize], p: &[f64]) -> Option<f64> {
        Some(self.components[out].partial(idx).eval(p))
    }
    fn as_poly(&self) -> Option<&PolyMap> {
        Some(self)
    }
}

type EvalFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A map given only by an evaluation closure.
#[derive(Clone)]
pub struct FnMap {
    dim_in: usize,
    dim_out: usize,
    f: Arc<EvalFn>,
}

impl FnMap {
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        FnMap { dim_in, dim_out, f: Arc::new(f) }
    }
}

impl fmt::Debug for FnMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnMap({} -> {})", self.dim_in, self.dim_out)
    }
}

impl SmoothMap for FnMap {
    fn dim_in(&self) -> usize {
        self.dim_in
    }
    fn dim_out(&self) -> usize {
        self.dim_out
    }
    fn eval(&self, p: &[f64]) -> Vec<f64> {
        (self.f)(p)
    }
}

/// Central-difference approximation of a mixed partial of order `idx.len()`:
/// the tensor product of one-dimensional central differences, O(h^2).
pub fn fd_partial(map: &dyn SmoothMap, out: usize, idx: &[usize], p: &[f64], h: f64) -> f64 {
    let k = idx.len();
    if k == 0 {
        return map.eval(p)[out];
    }
    let mut acc = 0.0;
    let mut q = vec![0.0; p.len()];
    for signs in 0u32..(1 << k) {
        q.copy_from_slice(p);
        let mut sign = 1.0;
        for (bit, &i) in idx.iter().enumerate() {
            if signs & (1 << bit) != 0 {
                q[i] -= h;
                sign = -sign;
            } else {
                q[i] += h;
            }
        }
        acc += sign * map.eval(&q)[out];
    }
    acc / (2.0 * h).powi(k as i32)
}
