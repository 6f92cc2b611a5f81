//! Spectral analysis of the distorted Rayleigh operator: the regular
//! solution, the dispersion relation of the delta-potential limit problem,
//! and smallest eigenvalues of the perturbed operator.

mod dispersion;
mod eigen;
mod phi1;

pub use dispersion::{dispersion_derivative, dispersion_lambda, limit_eigenvalue, DispersionPoint};
pub use eigen::{
    apply_operator, polish_strong, potential_values, smallest_eigenvalue,
    smallest_eigenvalue_tagged, strong_matrix, HModes,
};
pub use phi1::{solve_phi1, Phi1Solution};

use crate::grid::GridFunction;
use crate::profiles::ModificationParams;

/// Smallest eigenvalue with its eigenfunction, normalized by
/// ∫ ψ²/θ dy = 1 and sign-fixed by ψ(0) > 0.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub lambda_min: f64,
    pub eigenfunction: GridFunction,
    pub params: Option<ModificationParams>,
    /// |Rayleigh quotient of the eigenfunction - lambda_min|.
    pub rq_deviation: f64,
}
