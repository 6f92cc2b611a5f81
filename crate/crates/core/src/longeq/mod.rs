//! The steady-state (Long-type) equation for the stream function: piecewise
//! G/L tables, residual and Fréchet derivative, Crandall–Rabinowitz branch
//! continuation, and the wavenumber tuner.

pub(crate) mod branch;
pub(crate) mod newton;
mod tables;

pub use branch::{
    certify_state, continue_branch, extract_fields, kernel_certificate, kernel_mode,
    solution_size, tune_wavenumber, BranchOptions, BranchPoint, StateCertificates, TuneOptions,
    TuneResult,
};
pub use newton::{apply_linearized, long_residual, NewtonOptions, StreamState};
pub use tables::{build_gl, GlTables, Side, TableCertificates, TableValues};

/// Development hook: verbose single-point solve. Temporary.
pub fn debug_solve(
    tables: std::sync::Arc<GlTables>,
    fgrid: &std::sync::Arc<crate::fourier::FourierGrid>,
    k0: f64,
    phi0: &crate::grid::GridFunction,
    alpha: f64,
    opts: &NewtonOptions,
) {
    let ctx = branch::make_context(tables, fgrid, phi0).unwrap();
    let psi = ctx.psi0_field.add(&ctx.kernel_field.scale(alpha));
    match newton::solve_at_alpha_verbose(&ctx, alpha, psi, k0, opts) {
        Ok((st, it)) => println!("converged: k={} res={} iters={}", st.k, st.residual_norm, it),
        Err(e) => println!("failed: {e}"),
    }
}
