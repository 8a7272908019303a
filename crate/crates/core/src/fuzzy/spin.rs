use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Largest representation dimension accepted.
pub const MAX_K: usize = 256;

/// The `k`-dimensional irreducible representation of su(2), spin
/// `j = (k-1)/2`, in the basis `|j, m>` with `m = j, j-1, .., -j`.
#[derive(Debug, Clone)]
pub struct SpinRep {
    pub k: usize,
    pub jx: DMatrix<C64>,
    pub jy: DMatrix<C64>,
    pub jz: DMatrix<C64>,
    /// Eigenvectors (columns) and eigenvalues of `Jy`, used to exponentiate.
    jy_vecs: DMatrix<C64>,
    jy_vals: Vec<f64>,
}

impl SpinRep {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Argument("spin representation needs k >= 1".into()));
        }
        if k > MAX_K {
            return Err(Error::Argument(format!("k = {k} exceeds the cap {MAX_K}")));
        }
        let j = (k as f64 - 1.0) / 2.0;
        let m = |i: usize| j - i as f64;
        // J+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>; index i-1 has m+1.
        let mut jp = DMatrix::<C64>::zeros(k, k);
        for i in 1..k {
            let mi = m(i);
            jp[(i - 1, i)] = C64::new((j * (j + 1.0) - mi * (mi + 1.0)).sqrt(), 0.0);
        }
        let jm = jp.adjoint();
        let jx = (&jp + &jm) * C64::new(0.5, 0.0);
        let jy = (&jp - &jm) * C64::new(0.0, -0.5);
        let jz = DMatrix::from_fn(k, k, |r, c| if r == c { C64::new(m(r), 0.0) } else { C64::new(0.0, 0.0) });
        let eig = jy.clone().symmetric_eigen();
        Ok(SpinRep { k, jx, jy, jz, jy_vecs: eig.eigenvectors, jy_vals: eig.eigenvalues.iter().copied().collect() })
    }

    pub fn spin(&self) -> f64 {
        (self.k as f64 - 1.0) / 2.0
    }

    /// `max |[Jx,Jy] - iJz|` over the three cyclic relations.
    pub fn commutator_residual(&self) -> f64 {
        let i = C64::new(0.0, 1.0);
        let c = |a: &DMatrix<C64>, b: &DMatrix<C64>, e: &DMatrix<C64>| (a * b - b * a - e * i).camax();
        c(&self.jx, &self.jy, &self.jz).max(c(&self.jy, &self.jz, &self.jx)).max(c(&self.jz, &self.jx, &self.jy))
    }

    pub fn casimir(&self) -> DMatrix<C64> {
        &self.jx * &self.jx + &self.jy * &self.jy + &self.jz * &self.jz
    }

    /// `exp(-i theta Jy) v`.
    pub fn rotate_y(&self, theta: f64, v: &DVector<C64>) -> DVector<C64> {
        let mut c = self.jy_vecs.adjoint() * v;
        for (ci, l) in c.iter_mut().zip(&self.jy_vals) {
            *ci *= C64::from_polar(1.0, -theta * l);
        }
        &self.jy_vecs * c
    }

    /// `exp(-i theta Jy)` as a matrix.
    pub fn exp_jy(&self, theta: f64) -> DMatrix<C64> {
        let d = DMatrix::from_fn(self.k, self.k, |r, c| {
            if r == c { C64::from_polar(1.0, -theta * self.jy_vals[r]) } else { C64::new(0.0, 0.0) }
        });
        &self.jy_vecs * d * self.jy_vecs.adjoint()
    }

    /// `exp(-i phi Jz)` is diagonal with entries `exp(-i phi m)`.
    pub fn exp_jz_diag(&self, phi: f64) -> Vec<C64> {
        (0..self.k).map(|i| C64::from_polar(1.0, -phi * (self.spin() - i as f64))).collect()
    }

    /// Wigner matrix `exp(-i alpha Jz) exp(-i beta Jy) exp(-i gamma Jz)` of
    /// the rotation `Rz(alpha) Ry(beta) Rz(gamma)`.
    pub fn wigner(&self, alpha: f64, beta: f64, gamma: f64) -> DMatrix<C64> {
        let a = self.exp_jz_diag(alpha);
        let g = self.exp_jz_diag(gamma);
        let mut d = self.exp_jy(beta);
        for r in 0..self.k {
            for c in 0..self.k {
                d[(r, c)] *= a[r] * g[c];
            }
        }
        d
    }

    /// Coherent state `exp(-i phi Jz) exp(-i theta Jy) |j, j>`.
    pub fn coherent_state(&self, theta: f64, phi: f64) -> DVector<C64> {
        let mut top = DVector::zeros(self.k);
        top[0] = C64::new(1.0, 0.0);
        let mut v = self.rotate_y(theta, &top);
        for (vi, p) in v.iter_mut().zip(self.exp_jz_diag(phi)) {
            *vi *= p;
        }
        v
    }
}

/// Polar and azimuthal angle of a unit vector.
pub fn angles(p: &[f64; 3]) -> (f64, f64) {
    (p[2].clamp(-1.0, 1.0).acos(), p[1].atan2(p[0]))
}

/// Rotation matrix `Rz(alpha) Ry(beta) Rz(gamma)`.
pub fn rotation(alpha: f64, beta: f64, gamma: f64) -> [[f64; 3]; 3] {
    let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = |t: f64| [[t.cos(), 0.0, t.sin()], [0.0, 1.0, 0.0], [-t.sin(), 0.0, t.cos()]];
    let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
            }
        }
        c
    };
    mul(mul(rz(alpha), ry(beta)), rz(gamma))
}

pub fn apply(r: &[[f64; 3]; 3], p: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| (0..3).map(|j| r[i][j] * p[j]).sum())
}
