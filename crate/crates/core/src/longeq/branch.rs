//! Branch continuation of the bifurcating steady states and the outer
//! tuning loop that selects the perturbation strength m so the branch point
//! at prescribed solution size has wavenumber exactly 1.

use super::newton::{
    interior_l2, solve_at_alpha, BranchContext, NewtonOptions, StreamState,
};
use super::tables::{build_gl, GlTables, Side};
use crate::error::{LongError, RayleighError};
use crate::field2d::Field2D;
use crate::fourier::FourierGrid;
use crate::grid::GridFunction;
use crate::norms::sobolev_norm_2d;
use crate::profiles::{modify_profiles, perturb_profiles, ModificationParams, ShearPair};
use crate::rayleigh::{smallest_eigenvalue, HModes};
use crate::bumps::BumpPair;
use std::sync::Arc;

/// One accepted point on the bifurcation branch.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub alpha: f64,
    pub k: f64,
    pub m: f64,
    pub state: StreamState,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct BranchOptions {
    pub newton: NewtonOptions,
    pub max_halvings: usize,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions {
            newton: NewtonOptions::default(),
            max_halvings: 6,
        }
    }
}

/// Wavenumber and eigenfunction spanning the kernel of the linearized
/// operator: k₀ = sqrt(-λ_min), sign fixed by φ₀(0) > 0.
pub fn kernel_mode(pair: &ShearPair) -> Result<(f64, GridFunction), LongError> {
    let spec = smallest_eigenvalue(pair)?;
    if spec.lambda_min >= -1e-10 {
        return Err(RayleighError::NoNegativeEigenvalue {
            lambda_cap: spec.lambda_min,
            limit: 0.0,
        }
        .into());
    }
    Ok(((-spec.lambda_min).sqrt(), spec.eigenfunction))
}

/// L² size of 𝓛(cos ζ · φ₀) at k = k₀ through the table-based Fréchet
/// derivative; the discrete kernel certificate.
pub fn kernel_certificate(
    tables: &GlTables,
    fgrid: &Arc<FourierGrid>,
    k0: f64,
    phi0: &GridFunction,
) -> Result<f64, LongError> {
    let ygrid = tables.pair.grid.clone();
    let mode = Field2D::from_fn(fgrid, &ygrid, |z, _| z.cos()).zip(
        &Field2D::from_profile(fgrid, &ygrid, &phi0.values),
        |c, p| c * p,
    );
    let out = super::newton::apply_linearized(tables, k0, &mode)?;
    Ok(out.l2_norm(1.0))
}

fn background_state(ctx: &BranchContext, k0: f64) -> Result<StreamState, LongError> {
    let psi = ctx.psi0_field.clone();
    let res = super::newton::long_residual(&ctx.tables, k0, &psi)?;
    Ok(StreamState {
        k: k0,
        alpha: 0.0,
        psi,
        residual_norm: interior_l2(&res),
    })
}

pub(crate) fn make_context(
    tables: Arc<GlTables>,
    fgrid: &Arc<FourierGrid>,
    phi0: &GridFunction,
) -> Result<BranchContext, LongError> {
    let modes = HModes::build(&tables.pair)?;
    Ok(BranchContext::new(tables, modes, fgrid, &phi0.values))
}

/// Continue the branch from α = 0 to `alpha_max` on a uniform α-grid of
/// `steps` points, halving the step (up to `max_halvings`) when Newton
/// rejects a point. Every accepted point is certified by its residual.
pub fn continue_branch(
    tables: Arc<GlTables>,
    fgrid: &Arc<FourierGrid>,
    k0: f64,
    phi0: &GridFunction,
    m_label: f64,
    alpha_max: f64,
    steps: usize,
    opts: &BranchOptions,
) -> Result<Vec<BranchPoint>, LongError> {
    let ctx = make_context(tables, fgrid, phi0)?;
    let mut points = vec![BranchPoint {
        alpha: 0.0,
        k: k0,
        m: m_label,
        state: background_state(&ctx, k0)?,
        newton_iters: 0,
    }];

    let base_step = alpha_max / steps as f64;
    let mut alpha = 0.0;
    let mut step = base_step;
    let mut halvings = 0usize;
    while alpha < alpha_max - 1e-14 {
        let target = (alpha + step).min(alpha_max);
        let (psi_pred, k_pred) = predictor(&ctx, &points, target);
        match solve_at_alpha(&ctx, target, psi_pred, k_pred, &opts.newton) {
            Ok((state, iters)) => {
                points.push(BranchPoint {
                    alpha: target,
                    k: state.k,
                    m: m_label,
                    state,
                    newton_iters: iters,
                });
                alpha = target;
                step = (step * 1.5).min(base_step);
                halvings = 0;
            }
            Err(LongError::NewtonDiverged { .. }) | Err(LongError::DomainExceeded { .. }) => {
                halvings += 1;
                step *= 0.5;
                if halvings > opts.max_halvings {
                    return Err(LongError::NewtonDiverged {
                        alpha: target,
                        halvings,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(points)
}

fn predictor(ctx: &BranchContext, points: &[BranchPoint], target: f64) -> (Field2D, f64) {
    match points.len() {
        0 => unreachable!("branch starts at the background"),
        1 => {
            let p = &points[0];
            let da = target - p.alpha;
            let psi = p.state.psi.add(&ctx.kernel_field.scale(da));
            (psi, p.k)
        }
        _ => {
            let p1 = &points[points.len() - 2];
            let p2 = &points[points.len() - 1];
            let denom = p2.alpha - p1.alpha;
            let t = if denom.abs() < 1e-300 {
                0.0
            } else {
                (target - p2.alpha) / denom
            };
            let dpsi = p2.state.psi.sub(&p1.state.psi);
            (
                p2.state.psi.add(&dpsi.scale(t)),
                p2.k + (p2.k - p1.k) * t,
            )
        }
    }
}

/// Velocity and density fields of a state: u = -∂_yΨ, v = k∂_ζΨ, θ = G(Ψ).
pub fn extract_fields(
    state: &StreamState,
    tables: &GlTables,
) -> Result<(Field2D, Field2D, Field2D), LongError> {
    let u = state.psi.d_y(1).scale(-1.0);
    let v = state.psi.d_zeta(1).scale(state.k);
    let mut theta = Field2D::zeros(&state.psi.fgrid, &state.psi.ygrid);
    for j in 0..state.psi.ygrid.len() {
        let side = Side::of_y(state.psi.ygrid.y[j]);
        for i in 0..state.psi.fgrid.n {
            theta.data[(i, j)] = tables.eval(state.psi.data[(i, j)], side)?.g;
        }
    }
    Ok((u, v, theta))
}

/// Pointwise steady-state certificates of an extracted state.
#[derive(Debug, Clone, Copy)]
pub struct StateCertificates {
    /// relative L² of (u-c)∇·(θ⁻¹∇v) - v∇·(θ⁻¹∇u)
    pub euler_rel: f64,
    /// relative L² of u ∂_x θ + v ∂_y θ
    pub transport_rel: f64,
    /// relative L² of ∂_x u + ∂_y v
    pub divergence_rel: f64,
    /// interior residual of the steady-state functional over the state scale
    pub long_rel: f64,
}

pub fn certify_state(
    state: &StreamState,
    tables: &GlTables,
    phase_speed: f64,
) -> Result<StateCertificates, LongError> {
    let k = state.k;
    let (u, v, theta) = extract_fields(state, tables)?;
    let inv_theta = theta.map(|t| 1.0 / t);

    let div_weighted = |f: &Field2D| -> Field2D {
        let fx = f.d_zeta(1).scale(k).zip(&inv_theta, |a, b| a * b);
        let fy = f.d_y(1).zip(&inv_theta, |a, b| a * b);
        fx.d_zeta(1).scale(k).add(&fy.d_y(1))
    };
    let dv = div_weighted(&v);
    let du = div_weighted(&u);
    let um_c = u.map(|x| x - phase_speed);
    let t1 = um_c.zip(&dv, |a, b| a * b);
    let t2 = v.zip(&du, |a, b| a * b);
    let euler = t1.sub(&t2);
    let euler_scale = t1.l2_norm(1.0) + t2.l2_norm(1.0);
    let euler_rel = euler.l2_norm(1.0) / euler_scale.max(1e-14);

    let tx = u.zip(&theta.d_zeta(1).scale(k), |a, b| a * b);
    let ty = v.zip(&theta.d_y(1), |a, b| a * b);
    let transport = tx.add(&ty);
    let t_scale = tx.l2_norm(1.0) + ty.l2_norm(1.0);
    let transport_rel = transport.l2_norm(1.0) / t_scale.max(1e-14);

    let div = u.d_zeta(1).scale(k).add(&v.d_y(1));
    let d_scale = u.d_y(1).l2_norm(1.0) + v.d_y(1).l2_norm(1.0) + 1e-14;
    let divergence_rel = div.l2_norm(1.0) / d_scale;

    let res = super::newton::long_residual(tables, k, &state.psi)?;
    let long_rel = interior_l2(&res) / state.psi.l2_norm(1.0).max(1.0);

    Ok(StateCertificates {
        euler_rel,
        transport_rel,
        divergence_rel,
        long_rel,
    })
}

/// Solution-size functional of the outer tuning loop:
/// ‖(u_α, v_α) - (u_bg, 0)‖_{H³} + ‖θ_α - θ_bg‖_{H²}.
///
/// The deviations are formed before any differentiation (u_α - u_bg =
/// -∂_y(Ψ - Ψ₀) and so on), so the collocation noise of the two O(1)
/// backgrounds cancels instead of being amplified by the third derivatives.
pub fn solution_size(state: &StreamState, tables: &GlTables) -> Result<f64, LongError> {
    let psi0 = Field2D::from_profile(&state.psi.fgrid, &state.psi.ygrid, &tables.psi0.values);
    let dpsi = state.psi.sub(&psi0);
    let du = dpsi.d_y(1).scale(-1.0);
    let v = dpsi.d_zeta(1).scale(state.k);
    let mut dtheta = Field2D::zeros(&state.psi.fgrid, &state.psi.ygrid);
    for j in 0..state.psi.ygrid.len() {
        let side = Side::of_y(state.psi.ygrid.y[j]);
        let base = tables.eval(psi0.data[(0, j)], side)?.g;
        for i in 0..state.psi.fgrid.n {
            dtheta.data[(i, j)] = tables.eval(state.psi.data[(i, j)], side)?.g - base;
        }
    }
    let k = state.k;
    let h3 = (sobolev_norm_2d(&du, k, 3)?.powi(2) + sobolev_norm_2d(&v, k, 3)?.powi(2)).sqrt();
    let h2 = sobolev_norm_2d(&dtheta, k, 2)?;
    Ok(h3 + h2)
}

#[derive(Debug, Clone, Copy)]
pub struct TuneOptions {
    pub k_tol: f64,
    pub r_tol_rel: f64,
    pub alpha_cap: f64,
    pub newton: NewtonOptions,
    pub max_outer: usize,
    pub n_zeta: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            k_tol: 1e-6,
            r_tol_rel: 1e-8,
            alpha_cap: 0.2,
            newton: NewtonOptions::default(),
            max_outer: 40,
            n_zeta: 64,
        }
    }
}

/// Everything produced by a successful wavenumber tuning.
pub struct TuneResult {
    pub m0: f64,
    pub point: BranchPoint,
    pub pair: ShearPair,
    pub tables: Arc<GlTables>,
    pub lambda_min: f64,
    pub k0: f64,
    pub phi0: GridFunction,
}

struct TrialOutcome {
    k_at_r: f64,
    point: BranchPoint,
    pair: ShearPair,
    tables: Arc<GlTables>,
    lambda_min: f64,
    k0: f64,
    phi0: GridFunction,
}

fn run_trial(
    base: &ShearPair,
    params: &ModificationParams,
    bumps: &BumpPair,
    m: f64,
    r_target: f64,
    opts: &TuneOptions,
) -> Result<TrialOutcome, LongError> {
    let mut p = *params;
    p.m = m;
    let modified = modify_profiles(base, p.delta)?;
    let pair = perturb_profiles(&modified, &p, bumps)?;
    let spec = smallest_eigenvalue(&pair)?;
    if spec.lambda_min >= -1e-10 {
        return Err(RayleighError::NoNegativeEigenvalue {
            lambda_cap: spec.lambda_min,
            limit: 0.0,
        }
        .into());
    }
    let k0 = (-spec.lambda_min).sqrt();
    let phi0 = spec.eigenfunction.clone();
    let tables = Arc::new(build_gl(&pair)?);
    let fgrid = Arc::new(FourierGrid::new(opts.n_zeta));
    let ctx = make_context(tables.clone(), &fgrid, &phi0)?;

    // secant in α targeting r(α) = r_target; r is linear to leading order
    let mut alpha = (r_target / (10.0 * r_target.max(1e-6))).min(0.5 * opts.alpha_cap);
    // initial probe from the kernel-mode slope estimate
    let probe = solve_from_background(&ctx, alpha, k0, &opts.newton)?;
    let mut r_prev = solution_size(&probe.0, &ctx.tables)?;
    let mut a_prev = alpha;
    alpha = (alpha * r_target / r_prev).min(opts.alpha_cap);
    let mut best = probe;
    for _ in 0..18 {
        let sol = solve_from_background(&ctx, alpha, k0, &opts.newton)?;
        let r = solution_size(&sol.0, &ctx.tables)?;
        best = sol;
        if (r - r_target).abs() <= opts.r_tol_rel * r_target {
            break;
        }
        let slope = (r - r_prev) / (alpha - a_prev);
        a_prev = alpha;
        r_prev = r;
        let next = if slope.abs() > 1e-300 {
            alpha + (r_target - r) / slope
        } else {
            alpha * r_target / r
        };
        if !(next.is_finite() && next > 0.0) {
            return Err(LongError::AmplitudeTarget(r_target));
        }
        if next > opts.alpha_cap {
            return Err(LongError::AmplitudeTarget(r_target));
        }
        alpha = next;
    }
    let (state, iters) = best;
    let point = BranchPoint {
        alpha: state.alpha,
        k: state.k,
        m,
        state,
        newton_iters: iters,
    };
    Ok(TrialOutcome {
        k_at_r: point.k,
        point,
        pair,
        tables,
        lambda_min: spec.lambda_min,
        k0,
        phi0,
    })
}

fn solve_from_background(
    ctx: &BranchContext,
    alpha: f64,
    k0: f64,
    newton: &NewtonOptions,
) -> Result<(StreamState, usize), LongError> {
    // walk in a few predictor steps so Newton stays in its basin
    let n_steps = 1 + (alpha / 0.02) as usize;
    let mut prev: Option<StreamState> = None;
    let mut result = None;
    for s in 1..=n_steps {
        let a = alpha * s as f64 / n_steps as f64;
        let (psi, k) = match &prev {
            None => (ctx.psi0_field.add(&ctx.kernel_field.scale(a)), k0),
            Some(st) => {
                let scalef = a / st.alpha;
                (
                    ctx.psi0_field
                        .add(&st.psi.sub(&ctx.psi0_field).scale(scalef)),
                    st.k,
                )
            }
        };
        let (state, iters) = solve_at_alpha(ctx, a, psi, k, newton)?;
        prev = Some(state.clone());
        result = Some((state, iters));
    }
    Ok(result.expect("at least one continuation step"))
}

/// Find m in the bracket with k(α(m, r)) = 1 by bisection/secant, returning
/// the tuned branch point. The bracket must put k - 1 at opposite signs.
pub fn tune_wavenumber(
    base: &ShearPair,
    params: &ModificationParams,
    bumps: &BumpPair,
    m_bracket: (f64, f64),
    r_target: f64,
    opts: &TuneOptions,
) -> Result<TuneResult, LongError> {
    let (m2, m1) = m_bracket;
    let trial = |m: f64| run_trial(base, params, bumps, m, r_target, opts);
    let lo = trial(m2)?;
    let hi = trial(m1)?;
    let (mut a, mut fa) = (m2, lo.k_at_r - 1.0);
    let (mut b, mut fb) = (m1, hi.k_at_r - 1.0);
    if fa * fb > 0.0 {
        return Err(LongError::BracketEmpty(m2, m1));
    }
    let mut best = if fa.abs() < fb.abs() { lo } else { hi };
    if best.k_at_r - 1.0 == 0.0 {
        return Ok(finish(best));
    }
    for _ in 0..opts.max_outer {
        if best.k_at_r - 1.0 != 0.0 && (best.k_at_r - 1.0).abs() <= opts.k_tol {
            return Ok(finish(best));
        }
        // secant candidate, safeguarded into the bracket
        let mut c = b - fb * (b - a) / (fb - fa);
        let (blo, bhi) = (a.min(b), a.max(b));
        if !(c.is_finite() && c > blo && c < bhi) {
            c = 0.5 * (a + b);
        }
        let t = trial(c)?;
        let fc = t.k_at_r - 1.0;
        if fc.abs() < (best.k_at_r - 1.0).abs() {
            best = t;
        }
        if fa * fc <= 0.0 {
            b = c;
            fb = fc;
        } else {
            a = c;
            fa = fc;
        }
        if fc.abs() <= opts.k_tol {
            return Ok(finish(best));
        }
    }
    if (best.k_at_r - 1.0).abs() <= opts.k_tol {
        return Ok(finish(best));
    }
    Err(LongError::BracketEmpty(m2, m1))
}

fn finish(t: TrialOutcome) -> TuneResult {
    TuneResult {
        m0: t.point.m,
        point: t.point,
        pair: t.pair,
        tables: t.tables,
        lambda_min: t.lambda_min,
        k0: t.k0,
        phi0: t.phi0,
    }
}
