//! Twisted convolution algebras of a constant Poisson structure on `V`,
//! stored on the Fourier side as lattice functions on `V*`.

mod algebra;
pub mod io;
mod lattice;
mod weyl;

pub use algebra::{
    cocycle_sigma, convolve, ev0, kahler_product, twisted_convolution, unit_multiplier, unit_multiplier_grid,
    unit_multiplier_on, Convolution, Diagnostics, EpsilonFactor, Ev0, MoyalElement, PolarizationCase, Representation,
    DEFAULT_POINTS, MAX_FULL_DIM, TRUNCATION_MASS,
};
pub use lattice::{GridSpec, LatticeFunction, MAX_GRID_POINTS};
pub use weyl::{dirac_defect, poisson_bracket, symbol_of, weyl_quantize, ALIASING_MASS};
