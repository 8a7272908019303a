use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::quadrature::SphereQuadrature;
use super::spin::{angles, SpinRep};
use super::symbols::SphereSymbol;
use crate::{Error, Result, C64};

/// An element of the matrix algebra `A_k = End(C^k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyElement {
    pub k: usize,
    pub mat: DMatrix<C64>,
}

impl FuzzyElement {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(Error::Shape(format!("fuzzy elements are square matrices, got {}x{}", mat.nrows(), mat.ncols())));
        }
        Ok(FuzzyElement { k: mat.nrows(), mat })
    }

    pub fn identity(k: usize) -> Self {
        FuzzyElement { k, mat: DMatrix::identity(k, k) }
    }

    /// `|phi><chi|`.
    pub fn rank_one(phi: &DVector<C64>, chi: &DVector<C64>) -> Self {
        FuzzyElement { k: phi.len(), mat: phi * chi.adjoint() }
    }

    pub fn mul(&self, other: &FuzzyElement) -> Result<FuzzyElement> {
        require_k(self.k, other.k)?;
        Ok(FuzzyElement { k: self.k, mat: &self.mat * &other.mat })
    }

    pub fn sub(&self, other: &FuzzyElement) -> Result<FuzzyElement> {
        require_k(self.k, other.k)?;
        Ok(FuzzyElement { k: self.k, mat: &self.mat - &other.mat })
    }

    pub fn commutator(&self, other: &FuzzyElement) -> Result<FuzzyElement> {
        require_k(self.k, other.k)?;
        Ok(FuzzyElement { k: self.k, mat: &self.mat * &other.mat - &other.mat * &self.mat })
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        self.mat.clone().singular_values().max()
    }

    pub fn hermitian_defect(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).camax()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        let mut v: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

fn require_k(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("dimension mismatch: k = {a} vs k = {b}")));
    }
    Ok(())
}

/// Coherent states `|psi_x>` at a list of points, stored as the columns of
/// a `k x N` matrix.
#[derive(Debug, Clone)]
pub struct CoherentFrame {
    pub k: usize,
    pub points: Vec<[f64; 3]>,
    pub states: DMatrix<C64>,
}

impl CoherentFrame {
    pub fn new(rep: &SpinRep, points: &[[f64; 3]]) -> Self {
        let mut states = DMatrix::zeros(rep.k, points.len());
        for (c, p) in points.iter().enumerate() {
            let (theta, phi) = angles(p);
            states.set_column(c, &rep.coherent_state(theta, phi));
        }
        CoherentFrame { k: rep.k, points: points.to_vec(), states }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn state(&self, i: usize) -> DVector<C64> {
        self.states.column(i).into_owned()
    }
}

/// `I_k(a)(x) = <psi_x| a |psi_x>` at every frame point.
pub fn covariant_symbol(a: &FuzzyElement, frame: &CoherentFrame) -> Result<Vec<C64>> {
    require_k(a.k, frame.k)?;
    let ap = &a.mat * &frame.states;
    Ok((0..frame.len()).map(|i| frame.states.column(i).dotc(&ap.column(i))).collect())
}

fn require_frame(frame: &CoherentFrame, quad: &SphereQuadrature, bandwidth: usize) -> Result<()> {
    quad.require(frame.k, bandwidth)?;
    if frame.len() != quad.len() {
        return Err(Error::Shape(format!("frame has {} points but the quadrature has {} nodes", frame.len(), quad.len())));
    }
    Ok(())
}

/// `(k / 2 pi) sum_i w_i v_i |psi_i><psi_i|`, symmetrized so that real
/// weights give an exactly Hermitian matrix.
fn weighted_projector_sum(frame: &CoherentFrame, quad: &SphereQuadrature, values: &[f64]) -> DMatrix<C64> {
    let scale = frame.k as f64 / (2.0 * PI);
    let mut weighted = frame.states.clone();
    for (i, mut col) in weighted.column_iter_mut().enumerate() {
        col *= C64::new(scale * quad.weights[i] * values[i], 0.0);
    }
    let m = weighted * frame.states.adjoint();
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// `|| (k / 2 pi) sum_i w_i |psi_i><psi_i| - Id ||_F`.
pub fn resolution_of_identity(frame: &CoherentFrame, quad: &SphereQuadrature) -> Result<f64> {
    require_frame(frame, quad, 0)?;
    let m = weighted_projector_sum(frame, quad, &vec![1.0; quad.len()]);
    Ok((m - DMatrix::<C64>::identity(frame.k, frame.k)).norm())
}

/// Toeplitz quantization `Q_k(f) = (k / 2 pi) sum_i w_i f(x_i) |psi_i><psi_i|`
/// of node values. `bandwidth` is the polynomial degree of `f`.
pub fn toeplitz_quantize(values: &[f64], frame: &CoherentFrame, quad: &SphereQuadrature, bandwidth: usize) -> Result<FuzzyElement> {
    require_frame(frame, quad, bandwidth)?;
    if values.len() != quad.len() {
        return Err(Error::Shape(format!("{} node values for {} nodes", values.len(), quad.len())));
    }
    Ok(FuzzyElement { k: frame.k, mat: weighted_projector_sum(frame, quad, values) })
}

/// Largest deviation over node pairs between `<psi_x| ab |psi_y>` and
/// `(k / 2 pi) sum_z w_z <psi_x|a|psi_z><psi_z|b|psi_y>`.
pub fn kernel_convolution_check(a: &FuzzyElement, b: &FuzzyElement, frame: &CoherentFrame, quad: &SphereQuadrature) -> Result<f64> {
    require_k(a.k, b.k)?;
    require_k(a.k, frame.k)?;
    require_frame(frame, quad, 0)?;
    let psi = &frame.states;
    let psi_h = psi.adjoint();
    let direct = &psi_h * (&a.mat * &b.mat) * psi;
    let ka = &psi_h * &a.mat * psi;
    let mut kb = &psi_h * &b.mat * psi;
    let scale = frame.k as f64 / (2.0 * PI);
    for (z, mut row) in kb.row_iter_mut().enumerate() {
        row *= C64::new(scale * quad.weights[z], 0.0);
    }
    Ok((direct - ka * kb).camax())
}

/// For each `phi`, compares `(k / 2 pi) sum_i w_i |<psi_i|phi>|^2` with
/// `<phi|phi>` and returns the largest deviation.
pub fn symbol_theorem_check(phis: &[DVector<C64>], frame: &CoherentFrame, quad: &SphereQuadrature) -> Result<f64> {
    require_frame(frame, quad, 0)?;
    let scale = frame.k as f64 / (2.0 * PI);
    let mut worst: f64 = 0.0;
    for phi in phis {
        require_k(phi.len(), frame.k)?;
        let overlaps = frame.states.adjoint() * phi;
        let integral: f64 = overlaps.iter().zip(&quad.weights).map(|(o, w)| w * o.norm_sqr()).sum::<f64>() * scale;
        worst = worst.max((integral - phi.norm_squared()).abs());
    }
    Ok(worst)
}

/// Everything needed to quantize symbols at one `k`.
#[derive(Debug, Clone)]
pub struct FuzzySphere {
    pub rep: SpinRep,
    pub quad: SphereQuadrature,
    pub frame: CoherentFrame,
    pub bandwidth: usize,
}

impl FuzzySphere {
    /// Quadrature sized for symbols of degree up to `bandwidth`.
    pub fn new(k: usize, bandwidth: usize) -> Result<Self> {
        let rep = SpinRep::new(k)?;
        let quad = SphereQuadrature::for_k(k, bandwidth)?;
        let frame = CoherentFrame::new(&rep, &quad.nodes);
        Ok(FuzzySphere { rep, quad, frame, bandwidth })
    }

    pub fn k(&self) -> usize {
        self.rep.k
    }

    pub fn quantize(&self, f: &SphereSymbol) -> Result<FuzzyElement> {
        if f.degree() > self.bandwidth {
            return Err(Error::Quadrature(format!(
                "symbol '{}' has degree {} but the quadrature was built for degree {}",
                f.name,
                f.degree(),
                self.bandwidth
            )));
        }
        let values: Vec<f64> = self.quad.nodes.iter().map(|p| f.eval(p)).collect();
        toeplitz_quantize(&values, &self.frame, &self.quad, self.bandwidth)
    }

    /// `I_k(a)` at arbitrary points.
    pub fn symbol_at(&self, a: &FuzzyElement, points: &[[f64; 3]]) -> Result<Vec<C64>> {
        covariant_symbol(a, &CoherentFrame::new(&self.rep, points))
    }
}
