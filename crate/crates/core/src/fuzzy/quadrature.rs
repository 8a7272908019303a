use std::f64::consts::PI;

use super::spin::angles;
use crate::numerics::gauss_legendre;
use crate::{Error, Result};

/// Product rule on the sphere: Gauss-Legendre in `cos theta`, uniform in
/// `phi`. Weights integrate `eps`, half the area form, so they sum to 2 pi.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub n_theta: usize,
    pub n_phi: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Smallest theta count ever used.
pub const MIN_THETA: usize = 8;

impl SphereQuadrature {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::Argument("quadrature needs at least one node per direction".into()));
        }
        let (t, w) = gauss_legendre(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (ct, wt) in t.iter().zip(&w) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for p in 0..n_phi {
                let phi = 2.0 * PI * p as f64 / n_phi as f64;
                nodes.push([st * phi.cos(), st * phi.sin(), *ct]);
                weights.push(0.5 * wt * 2.0 * PI / n_phi as f64);
            }
        }
        Ok(SphereQuadrature { n_theta, n_phi, nodes, weights })
    }

    /// Rule exact for the integrands of a `k`-dimensional frame applied to
    /// symbols of degree up to `bandwidth`.
    pub fn for_k(k: usize, bandwidth: usize) -> Result<Self> {
        let n = (k + bandwidth).max(MIN_THETA);
        Self::new(n, 2 * n)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree on the sphere integrated exactly.
    pub fn exact_degree(&self) -> usize {
        (2 * self.n_theta - 1).min(self.n_phi - 1)
    }

    /// Refuses rules too coarse for a frame of dimension `k` with symbols of
    /// degree `bandwidth`.
    pub fn require(&self, k: usize, bandwidth: usize) -> Result<()> {
        let needed_theta = k + bandwidth.div_ceil(2);
        let needed_phi = 2 * k + bandwidth;
        if self.n_theta < needed_theta || self.n_phi < needed_phi {
            return Err(Error::Quadrature(format!(
                "k = {k} with symbol degree {bandwidth} needs at least {needed_theta} x {needed_phi} nodes, got {} x {}",
                self.n_theta, self.n_phi
            )));
        }
        Ok(())
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn node_angles(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().map(angles).collect()
    }
}
