//! Error types for the computational modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("modified velocity lost monotonicity: u' = {value} < {floor} at y = {y}")]
    MonotonicityLost { y: f64, value: f64, floor: f64 },
    #[error("perturbed density lost positivity: theta = {value} < {floor} at y = {y}")]
    PositivityLost { y: f64, value: f64, floor: f64 },
    #[error("Sobolev order {0} exceeds the supported maximum 3")]
    OrderTooHigh(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("bump normalization certificate failed: {0}")]
    BumpCertificate(String),
    #[error("profile table rejected: {0}")]
    BadTable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum RayleighError {
    #[error("real phase speed {0} lies outside the range of u")]
    NoCriticalPoint(f64),
    #[error("regular-solution solve did not converge: {0}")]
    NonConvergence(String),
    #[error("potential term exceeds bound: |V| = {0}; profile not properly modified")]
    PotentialSingular(f64),
    #[error("eigenvalue solver failed: {0}")]
    EigSolverFailure(String),
    #[error("no negative eigenvalue: delta strength {lambda_cap} below the curve limit {limit}")]
    NoNegativeEigenvalue { lambda_cap: f64, limit: f64 },
    #[error("dispersion root-find could not bracket target {0}")]
    BracketEmpty(f64),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Error)]
pub enum LongError {
    #[error("background stream function is not monotone on a half-interval near y = {0}")]
    InversionFailure(f64),
    #[error("stream value {z} left the extended table range [{lo}, inf)")]
    DomainExceeded { z: f64, lo: f64 },
    #[error("Newton diverged at alpha = {alpha} after {halvings} step halvings")]
    NewtonDiverged { alpha: f64, halvings: usize },
    #[error("no sign change of k - 1 over the m-bracket [{0}, {1}]")]
    BracketEmpty(f64, f64),
    #[error("amplitude target {0} not reachable within alpha_max")]
    AmplitudeTarget(f64),
    #[error(transparent)]
    Rayleigh(#[from] RayleighError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Error)]
pub enum ResolventError {
    #[error("forcing must be nonzero to define a resolvent ratio")]
    ZeroForcing,
    #[error("grid mismatch between query fields")]
    GridMismatch,
    #[error(transparent)]
    Profile(#[from] ProfileError),
}
