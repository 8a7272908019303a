//! Numerical workbench for quantizing Heisenberg-Poisson manifolds through
//! exploded symplectic groupoids.
//!
//! - [`explosion`]: double explosions of charts, exploded maps and forms.
//! - [`groupoid`]: structure-map models of Lie groupoids and axiom checks.
//! - [`moyal`]: twisted convolution algebras of constant Poisson structures.
//! - [`fuzzy`]: Berezin-Toeplitz quantization of the two-sphere.
//! - [`planck`]: Bohr-Sommerfeld selection of admissible Planck constants.
//! - [`field`]: sampled continuous fields of the per-hbar algebras.

pub mod error;
pub mod explosion;
pub mod field;
pub mod fuzzy;
pub mod groupoid;
pub mod moyal;
pub mod numerics;
pub mod planck;
pub mod poly;
pub mod report;
pub mod sampling;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
