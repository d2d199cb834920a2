//! Symplectic linear algebra at an explicit tolerance: validated matrices,
//! the diamond product, unit-circle spectral data, elliptic height, and
//! basic normal-form decompositions.

mod matrix;
mod normal_form;
mod spectrum;

pub use matrix::{
    diamond, diamond_all, standard_j, symplectic_residual, symplectify, MatrixJson,
    SymplecticMatrix,
};
pub use normal_form::{normal_form_decompose, NormalFormDecomposition, NormalFormFactor};
pub use spectrum::{elliptic_height, nullity, unit_circle_spectrum, UnitEigenvalue, UnitSpectrum};

use thiserror::Error;

/// Failures of the symplectic-algebra layer.
#[derive(Debug, Error)]
pub enum SymplError {
    /// The candidate matrix is not symplectic at the requested tolerance.
    #[error("symplectic identity violated: residual {residual:.3e} > tol {tol:.3e}")]
    SymplecticViolation { residual: f64, tol: f64 },
    /// Input matrix is not square with even dimension.
    #[error("matrix must be square of even dimension, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    /// An eigenvalue sits on the circle-membership decision boundary but its
    /// reciprocal partner was grouped differently.
    #[error("spectral ambiguity: eigenvalue modulus {modulus:.12} within band of |z|=1 but its reciprocal partner was grouped differently")]
    SpectralAmbiguity { modulus: f64 },
    /// A Jordan-structure decision could not be made at the rank tolerance.
    #[error("normal-form decomposition ambiguous: {reason}")]
    DecompositionAmbiguity { reason: String },
}
