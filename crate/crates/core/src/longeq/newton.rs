//! Residual and linearization of the steady-state functional
//! F(k, Ψ) = Δ_ζ Ψ - G'(Ψ)/(2G(Ψ)) |∇_ζ Ψ|² - L(Ψ),  Δ_ζ = k²∂_ζ² + ∂_y²,
//! and the bordered Newton–Krylov solve for one branch point: unknowns
//! (Ψ, k) with the amplitude constraint ⟨Ψ - Ψ₀, ψ₀⟩ = α ‖ψ₀‖².

use super::tables::{GlTables, Side};
use crate::error::LongError;
use crate::field2d::Field2D;
use crate::fourier::FourierGrid;
use crate::grid::Grid;
use crate::linalg::gmres;
use crate::rayleigh::HModes;
use nalgebra::DVector;
use std::sync::Arc;

/// A 2D stream state: wavenumber, amplitude, and Ψ on the ζ × y grid.
#[derive(Debug, Clone)]
pub struct StreamState {
    pub k: f64,
    pub alpha: f64,
    pub psi: Field2D,
    /// L² norm of the interior residual of F at (k, Ψ).
    pub residual_norm: f64,
}

/// Table lookups for a whole field, sides selected by the sign of y.
fn lookup(
    tables: &GlTables,
    psi: &Field2D,
    mut f: impl FnMut(usize, usize, super::tables::TableValues),
) -> Result<(), LongError> {
    let ny = psi.ygrid.len();
    let nz = psi.fgrid.n;
    for j in 0..ny {
        let side = Side::of_y(psi.ygrid.y[j]);
        for i in 0..nz {
            let v = tables.eval(psi.data[(i, j)], side)?;
            f(i, j, v);
        }
    }
    Ok(())
}

/// Pointwise residual field of F(k, Ψ).
pub fn long_residual(tables: &GlTables, k: f64, psi: &Field2D) -> Result<Field2D, LongError> {
    let dz = psi.d_zeta(1);
    let dzz = psi.d_zeta(2);
    let dy = psi.d_y(1);
    let dyy = psi.d_y(2);
    let mut out = Field2D::zeros(&psi.fgrid, &psi.ygrid);
    let k2 = k * k;
    lookup(tables, psi, |i, j, v| {
        let grad2 = k2 * dz.data[(i, j)] * dz.data[(i, j)] + dy.data[(i, j)] * dy.data[(i, j)];
        out.data[(i, j)] = k2 * dzz.data[(i, j)] + dyy.data[(i, j)]
            - v.g1 / (2.0 * v.g) * grad2
            - v.l;
    })?;
    Ok(out)
}

/// Coefficient fields of the Fréchet derivative at a state (Ψ, k-free parts).
struct LinCoeffs {
    /// (G'/G)(Ψ) ∂_ζΨ — multiplies k² ∂_ζψ
    az: Field2D,
    /// (G'/G)(Ψ) ∂_yΨ — multiplies ∂_yψ
    ay: Field2D,
    /// (G'/2G)'(Ψ) (∂_ζΨ)² — k²-weighted zeroth-order part
    qzz: Field2D,
    /// (G'/2G)'(Ψ) (∂_yΨ)² + L'(Ψ)
    qyy: Field2D,
}

fn lin_coeffs(tables: &GlTables, psi: &Field2D) -> Result<LinCoeffs, LongError> {
    let dz = psi.d_zeta(1);
    let dy = psi.d_y(1);
    let mut az = Field2D::zeros(&psi.fgrid, &psi.ygrid);
    let mut ay = az.clone();
    let mut qzz = az.clone();
    let mut qyy = az.clone();
    lookup(tables, psi, |i, j, v| {
        let gp_over_g = v.g1 / v.g;
        let half_prime = (v.g2 * v.g - v.g1 * v.g1) / (2.0 * v.g * v.g);
        az.data[(i, j)] = gp_over_g * dz.data[(i, j)];
        ay.data[(i, j)] = gp_over_g * dy.data[(i, j)];
        qzz.data[(i, j)] = half_prime * dz.data[(i, j)] * dz.data[(i, j)];
        qyy.data[(i, j)] = half_prime * dy.data[(i, j)] * dy.data[(i, j)] + v.l1;
    })?;
    Ok(LinCoeffs { az, ay, qzz, qyy })
}

fn apply_lin(co: &LinCoeffs, k: f64, psi: &Field2D) -> Field2D {
    let k2 = k * k;
    let dz = psi.d_zeta(1);
    let dzz = psi.d_zeta(2);
    let dy = psi.d_y(1);
    let dyy = psi.d_y(2);
    let mut out = Field2D::zeros(&psi.fgrid, &psi.ygrid);
    for j in 0..psi.ygrid.len() {
        for i in 0..psi.fgrid.n {
            out.data[(i, j)] = k2 * dzz.data[(i, j)] + dyy.data[(i, j)]
                - k2 * co.az.data[(i, j)] * dz.data[(i, j)]
                - co.ay.data[(i, j)] * dy.data[(i, j)]
                - (k2 * co.qzz.data[(i, j)] + co.qyy.data[(i, j)]) * psi.data[(i, j)];
        }
    }
    out
}

/// Fréchet derivative of F at the background shear: 𝓛 = k²∂_ζ² - H applied
/// through the G/L tables.
pub fn apply_linearized(tables: &GlTables, k: f64, psi: &Field2D) -> Result<Field2D, LongError> {
    let psi0 = Field2D::from_profile(&psi.fgrid, &psi.ygrid, &tables.psi0.values);
    let co = lin_coeffs(tables, &psi0)?;
    Ok(apply_lin(&co, k, psi))
}

/// ∂F/∂k at a state.
fn k_derivative(tables: &GlTables, k: f64, psi: &Field2D) -> Result<Field2D, LongError> {
    let dz = psi.d_zeta(1);
    let dzz = psi.d_zeta(2);
    let mut out = Field2D::zeros(&psi.fgrid, &psi.ygrid);
    lookup(tables, psi, |i, j, v| {
        out.data[(i, j)] = 2.0
            * k
            * (dzz.data[(i, j)] - v.g1 / (2.0 * v.g) * dz.data[(i, j)] * dz.data[(i, j)]);
    })?;
    Ok(out)
}

/// Cosine-mode packing of even interior fields plus the wavenumber slot.
pub(crate) struct ModeSpace {
    pub fgrid: Arc<FourierGrid>,
    pub ygrid: Arc<Grid>,
    pub mmax: usize,
    pub n_int: usize,
}

impl ModeSpace {
    pub fn new(fgrid: &Arc<FourierGrid>, ygrid: &Arc<Grid>) -> Self {
        ModeSpace {
            fgrid: fgrid.clone(),
            ygrid: ygrid.clone(),
            mmax: fgrid.max_mode(),
            n_int: ygrid.len() - 2,
        }
    }

    pub fn dim(&self) -> usize {
        (self.mmax + 1) * self.n_int + 1
    }

    /// Interior cosine coefficients of a field (sines discarded: the even
    /// symmetry of the state space).
    pub fn pack(&self, f: &Field2D, last: f64) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        let n = self.fgrid.n;
        let mut col = vec![0.0; n];
        for j in 1..=self.n_int {
            for i in 0..n {
                col[i] = f.data[(i, j)];
            }
            let (a, _b) = self.fgrid.analyze(&col);
            for m in 0..=self.mmax {
                v[m * self.n_int + (j - 1)] = a[m];
            }
        }
        v[self.dim() - 1] = last;
        v
    }

    pub fn unpack(&self, v: &DVector<f64>) -> (Field2D, f64) {
        let mut f = Field2D::zeros(&self.fgrid, &self.ygrid);
        let half = self.mmax;
        let mut a = vec![0.0; half + 1];
        let b = vec![0.0; half + 1];
        for j in 1..=self.n_int {
            for m in 0..=half {
                a[m] = v[m * self.n_int + (j - 1)];
            }
            let col = self.fgrid.synthesize(&a, &b);
            for i in 0..self.fgrid.n {
                f.data[(i, j)] = col[i];
            }
        }
        (f, v[self.dim() - 1])
    }
}

pub(crate) struct BorderedSolver<'a> {
    pub space: &'a ModeSpace,
    pub modes: &'a HModes,
    pub k: f64,
    /// modal (1,0)-coefficient of the bordered column ∂F/∂k
    pub g10: f64,
    /// ⟨mode-(1,0) basis field, ψ₀⟩ under the constraint metric
    pub s0: f64,
}

impl BorderedSolver<'_> {
    /// Approximate inverse of the background bordered operator, exact on the
    /// modal diagonal and on the (1,0)-bordering.
    pub fn precondition(&self, r: &DVector<f64>) -> DVector<f64> {
        let space = self.space;
        let modes = self.modes;
        let n_int = space.n_int;
        let rho = r[space.dim() - 1];
        let mut out = DVector::zeros(space.dim());

        // modal coefficients of every Fourier mode
        let mut coef: Vec<DVector<f64>> = Vec::with_capacity(space.mmax + 1);
        for m in 0..=space.mmax {
            let rm = DVector::from_fn(n_int, |i, _| r[m * n_int + i]);
            coef.push(modes.to_modes(&rm));
        }
        let d10 = -self.k * self.k - modes.eigenvalues[0];
        let w10 = rho / self.s0;
        let kappa = if self.g10.abs() > 1e-13 {
            (coef[1][0] - d10 * w10) / self.g10
        } else {
            0.0
        };
        for m in 0..=space.mmax {
            let mut c = coef[m].clone();
            for e in 0..n_int {
                if m == 1 && e == 0 {
                    c[e] = w10;
                } else {
                    let mut d = -self.k * self.k * (m * m) as f64 - modes.eigenvalues[e];
                    if d.abs() < 1e-8 {
                        d = d.signum() * 1e-8;
                    }
                    c[e] /= d;
                }
            }
            let wm = modes.from_modes(&c);
            for i in 0..n_int {
                out[m * n_int + i] = wm[i];
            }
        }
        out[space.dim() - 1] = kappa;
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    /// residual level still accepted when the iteration stalls at the
    /// roundoff floor of the collocation residual
    pub stall_accept: f64,
    pub max_iters: usize,
    pub gmres_tol: f64,
    pub gmres_max: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            stall_accept: 5e-9,
            max_iters: 18,
            gmres_tol: 1e-13,
            gmres_max: 120,
        }
    }
}

pub(crate) struct BranchContext {
    pub tables: Arc<GlTables>,
    pub modes: HModes,
    pub psi0_field: Field2D,
    pub kernel_field: Field2D,
    pub kernel_norm2: f64,
    pub s0: f64,
}

impl BranchContext {
    pub fn new(
        tables: Arc<GlTables>,
        modes: HModes,
        fgrid: &Arc<FourierGrid>,
        phi0: &[f64],
    ) -> Self {
        let ygrid = tables.pair.grid.clone();
        let psi0_field = Field2D::from_profile(fgrid, &ygrid, &tables.psi0.values);
        let kernel_field = Field2D::from_fn(fgrid, &ygrid, |z, _| z.cos()).zip(
            &Field2D::from_profile(fgrid, &ygrid, phi0),
            |c, p| c * p,
        );
        let kernel_norm2 = kernel_field.inner(&kernel_field, 1.0);
        // constraint response of the modal (1,0) basis field
        let space = ModeSpace::new(fgrid, &ygrid);
        let m = HModes::build(&tables.pair).expect("modes for constraint scale");
        let mut unit = DVector::zeros(m.len());
        unit[0] = 1.0;
        let e0 = m.from_modes(&unit);
        let mut basis = Field2D::zeros(fgrid, &ygrid);
        for j in 1..=space.n_int {
            for i in 0..fgrid.n {
                basis.data[(i, j)] = fgrid.zeta[i].cos() * e0[j - 1];
            }
        }
        let s0 = basis.inner(&kernel_field, 1.0);
        BranchContext {
            tables,
            modes,
            psi0_field,
            kernel_field,
            kernel_norm2,
            s0,
        }
    }

}

pub(crate) fn solve_at_alpha_verbose(
    ctx: &BranchContext,
    alpha: f64,
    psi: Field2D,
    k: f64,
    opts: &NewtonOptions,
) -> Result<(StreamState, usize), LongError> {
    std::env::set_var("CATSEYE_NEWTON_DEBUG", "1");
    let r = solve_at_alpha(ctx, alpha, psi, k, opts);
    std::env::remove_var("CATSEYE_NEWTON_DEBUG");
    r
}

/// Solve F(k, Ψ) = 0 with ⟨Ψ - Ψ₀, ψ₀⟩ = α ‖ψ₀‖² from the given predictor.
pub(crate) fn solve_at_alpha(
    ctx: &BranchContext,
    alpha: f64,
    mut psi: Field2D,
    mut k: f64,
    opts: &NewtonOptions,
) -> Result<(StreamState, usize), LongError> {
    let space = ModeSpace::new(&psi.fgrid, &psi.ygrid);
    let scale = 1.0f64.max(psi.l2_norm(1.0));
    let mut best = f64::INFINITY;
    let mut stall = 0usize;

    for iter in 0..opts.max_iters {
        let res_field = long_residual(&ctx.tables, k, &psi)?;
        let c_amp = psi.sub(&ctx.psi0_field).inner(&ctx.kernel_field, 1.0)
            - alpha * ctx.kernel_norm2;
        let mut rhs = space.pack(&res_field, c_amp);
        // interior residual norm in the packed metric for the stop test
        let res_l2 = interior_l2(&res_field);
        let total = res_l2 / scale + c_amp.abs() / ctx.kernel_norm2.max(1e-30);
        if std::env::var_os("CATSEYE_NEWTON_DEBUG").is_some() {
            println!("  newton iter {iter}: res_l2={res_l2:.3e} c_amp={c_amp:.3e} total={total:.3e} k={k:.8}");
        }
        if total <= opts.tol {
            return Ok((
                StreamState {
                    k,
                    alpha,
                    psi,
                    residual_norm: res_l2,
                },
                iter,
            ));
        }
        if total > 4.0 * best {
            return Err(LongError::NewtonDiverged {
                alpha,
                halvings: 0,
            });
        }
        if total < 0.5 * best {
            best = total;
            stall = 0;
        } else {
            best = best.min(total);
            stall += 1;
            if stall > 2 {
                // stalled at the evaluation floor: accept if certified
                if total <= opts.stall_accept {
                    return Ok((
                        StreamState {
                            k,
                            alpha,
                            psi,
                            residual_norm: res_l2,
                        },
                        iter,
                    ));
                }
                return Err(LongError::NewtonDiverged { alpha, halvings: 0 });
            }
        }

        let co = lin_coeffs(&ctx.tables, &psi)?;
        let fk = k_derivative(&ctx.tables, k, &psi)?;
        let g_packed = space.pack(&fk, 0.0);
        let g10 = {
            let gm = DVector::from_fn(space.n_int, |i, _| g_packed[space.n_int + i]);
            ctx.modes.to_modes(&gm)[0]
        };
        let solver = BorderedSolver {
            space: &space,
            modes: &ctx.modes,
            k,
            g10,
            s0: ctx.s0,
        };
        rhs.neg_mut();
        let apply = |v: &DVector<f64>| -> DVector<f64> {
            let (df, dk) = space.unpack(v);
            let lin = apply_lin(&co, k, &df);
            let mut out = space.pack(&lin, 0.0);
            out.axpy(dk, &g_packed, 1.0);
            let c = df.inner(&ctx.kernel_field, 1.0);
            out[space.dim() - 1] = c;
            out
        };
        let (step, outcome) = gmres(
            apply,
            |r| solver.precondition(r),
            &rhs,
            opts.gmres_tol,
            opts.gmres_max,
        );
        if std::env::var_os("CATSEYE_NEWTON_DEBUG").is_some() {
            println!("    gmres: iters={} rel={:.3e} g10={:.3e}", outcome.iterations, outcome.rel_residual, g10);
        }
        if !outcome.converged && outcome.rel_residual > 1e-8 {
            return Err(LongError::NewtonDiverged { alpha, halvings: 0 });
        }
        let (dpsi, dk) = space.unpack(&step);
        // backtracking damping: accept the largest fraction of the Newton
        // step that does not grow the combined residual
        let mut damp = 1.0;
        let mut accepted = false;
        for _ in 0..5 {
            let cand_psi = psi.add(&dpsi.scale(damp));
            let cand_k = k + damp * dk;
            if cand_k.is_finite() && cand_k > 0.0 {
                if let Ok(rf) = long_residual(&ctx.tables, cand_k, &cand_psi) {
                    let c = cand_psi.sub(&ctx.psi0_field).inner(&ctx.kernel_field, 1.0)
                        - alpha * ctx.kernel_norm2;
                    let t = interior_l2(&rf) / scale + c.abs() / ctx.kernel_norm2.max(1e-30);
                    if t < total || damp < 0.2 {
                        psi = cand_psi;
                        k = cand_k;
                        accepted = true;
                        break;
                    }
                }
            }
            damp *= 0.5;
        }
        if !accepted {
            return Err(LongError::NewtonDiverged { alpha, halvings: 0 });
        }
    }
    Err(LongError::NewtonDiverged {
        alpha,
        halvings: 0,
    })
}

/// L² norm over the interior collocation rows (the equations the Newton
/// solve actually enforces).
pub(crate) fn interior_l2(f: &Field2D) -> f64 {
    let dz = 2.0 * std::f64::consts::PI / f.fgrid.n as f64;
    let mut acc = 0.0;
    for j in 1..f.ygrid.len() - 1 {
        let wj = f.ygrid.w[j];
        for i in 0..f.fgrid.n {
            acc += wj * f.data[(i, j)] * f.data[(i, j)];
        }
    }
    (acc * dz).sqrt()
}
