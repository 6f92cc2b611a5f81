//! Numerical construction of cat's-eye steady states of the 2D inhomogeneous
//! incompressible Euler equations near monotone shear flows with variable
//! density, together with the spectral and resolvent machinery that certifies
//! when such states can and cannot exist nearby.
//!
//! The crate is organized around four stages:
//! - [`profiles`]: base, modified, and bump-perturbed shear/density pairs;
//! - [`rayleigh`]: the regular solution, the dispersion relation Λ(λ), and
//!   smallest eigenvalues of the distorted Rayleigh operator;
//! - [`longeq`]: the semilinear steady-state equation for the stream
//!   function, its bifurcation branch, and the wavenumber tuner;
//! - [`resolvent`]: inhomogeneous solves across complex phase speeds with
//!   ratio sweeps and the nonexistence certificate.

pub mod bumps;
pub mod cheb;
pub mod error;
pub mod field2d;
pub mod fourier;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod longeq;
pub mod norms;
pub mod ode;
pub mod par;
pub mod profiles;
pub mod quad;
pub mod rayleigh;

pub use bumps::{default_bumps, BumpPair};
pub use error::{LongError, ProfileError, RayleighError, ResolventError};
pub use field2d::Field2D;
pub use fourier::FourierGrid;
pub use grid::{Grid, GridFunction, GridMap};
pub use longeq::{
    build_gl, certify_state, continue_branch, extract_fields, kernel_mode, long_residual,
    tune_wavenumber, BranchPoint, GlTables, StreamState,
};
pub use norms::{
    fractional_distance_bound, fractional_distance_bound_2d, sobolev_norm, sobolev_norm_2d,
};
pub use par::ParMap;
pub use profiles::{
    modify_profiles, perturb_profiles, Curve, CurveFns, ModificationParams, Provenance, ShearPair,
};
pub use rayleigh::{
    dispersion_derivative, dispersion_lambda, limit_eigenvalue, smallest_eigenvalue,
    solve_phi1, DispersionPoint, Phi1Solution, SpectrumResult,
};
