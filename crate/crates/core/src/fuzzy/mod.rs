//! Berezin-Toeplitz quantization of the two-sphere with `eps` half the
//! area form: spin representations, coherent states, covariant symbols and
//! the classical limit `k -> infinity`.

mod coherent;
mod limit;
mod quadrature;
mod spin;
mod symbols;

pub use coherent::{
    covariant_symbol, kernel_convolution_check, resolution_of_identity, symbol_theorem_check, toeplitz_quantize,
    CoherentFrame, FuzzyElement, FuzzySphere,
};
pub use limit::{
    bracket_constant, classical_limit_curve, dirac_defect_curve, dirac_defect_sphere, evaluation_points, LimitCurve,
    LimitRow, EXACT_ZERO,
};
pub use quadrature::{SphereQuadrature, MIN_THETA};
pub use spin::{angles, apply, rotation, SpinRep, MAX_K};
pub use symbols::{read_node_csv, SphereSymbol, BRACKET_CONSTANT, BUILTIN_SYMBOLS, FIT_TOLERANCE, MAX_FIT_DEGREE};

/// `spin_rep(k)`: the `k`-dimensional irreducible representation.
pub fn spin_rep(k: usize) -> crate::Result<SpinRep> {
    SpinRep::new(k)
}
