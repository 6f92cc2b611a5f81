//! Dispersion relation Λ(λ) of the delta-potential Rayleigh problem: the
//! unique jump strength for which the two-sided problem admits a nontrivial
//! solution, its λ-derivative through the K-function, and the inverse map
//! (smallest eigenvalue of the limit operator) by bracketed root-finding.
//!
//! The curve is computed for any λ below the first Dirichlet eigenvalue of
//! the plain operator; for λ ≤ 0 this is the classical strictly decreasing
//! branch, and the continuation to small positive λ (regular solution still
//! positive) is what lets the inverse map serve as a reference for weak
//! delta strengths.

use super::eigen::potential_closure;
use super::phi1::H0;
use super::SpectrumResult;
use crate::error::{ProfileError, RayleighError};
use crate::grid::GridFunction;
use crate::ode::{integrate_with_output, OdeOptions};
use crate::profiles::ShearPair;

#[derive(Debug, Clone, Copy)]
pub struct DispersionPoint {
    pub lambda: f64,
    pub big_lambda: f64,
    pub d_big_lambda: f64,
    pub b_plus: f64,
    pub b_minus: f64,
}

const PHI_FLOOR: f64 = 0.02;

/// Profile data shared by every scan at a fixed pair.
struct Setup {
    u1: f64,
    th0: f64,
    r0: f64,
    th2: f64,
    u30: f64,
    u_wall_plus: f64,
    u_wall_minus: f64,
}

impl Setup {
    fn new(pair: &ShearPair) -> Result<Setup, RayleighError> {
        let u1 = pair.u.eval_d1(0.0);
        let th0 = pair.theta.eval(0.0);
        let u2 = pair.u.eval_d2(0.0);
        let th1 = pair.theta.eval_d1(0.0);
        if u2.abs() > 1e-6 * u1.max(1.0) || th1.abs() > 1e-6 * th0.max(1.0) {
            return Err(ProfileError::InvalidParams(format!(
                "dispersion requires the symmetric modification near y = 0 \
                 (u''(0) = {u2}, theta'(0) = {th1}); apply modify_profiles first"
            ))
            .into());
        }
        Ok(Setup {
            u1,
            th0,
            r0: th0 / u1,
            th2: pair.theta.eval_d2(0.0),
            u30: pair.u.eval_d3(0.0),
            u_wall_plus: pair.u.values[pair.grid.n],
            u_wall_minus: pair.u.values[0],
        })
    }

    fn u_wall(&self, side: f64) -> f64 {
        if side > 0.0 {
            self.u_wall_plus
        } else {
            self.u_wall_minus
        }
    }
}

/// State layout for the side scans.
const PHI: usize = 0;
const P: usize = 1;
const B1: usize = 2;
const JJ: usize = 3;
const KK: usize = 4;
const IDL: usize = 5;
const B2: usize = 6;
const B3: usize = 7;
const QM: usize = 8;
const QK: usize = 9;
const QV: usize = 10;

struct SideScan {
    node_idx: Vec<usize>,
    states: Vec<Vec<f64>>,
    wall: Vec<f64>,
    f1_start: f64,
    g_start: f64,
}

/// Wall data from the first pass needed to build the eigenfunction and its
/// weighted quadratures in the second pass.
struct Pass2 {
    b1e: f64,
    b2e: f64,
    b3e: f64,
    psi0: f64,
    dpsi0: f64,
}

fn scan_side(
    pair: &ShearPair,
    lambda: f64,
    side: f64,
    setup: &Setup,
    pass2: Option<&Pass2>,
) -> Result<SideScan, RayleighError> {
    let grid = &pair.grid;
    let start = side * H0;
    let node_idx: Vec<usize> = if side > 0.0 {
        (0..grid.len()).filter(|&j| grid.y[j] > start).collect()
    } else {
        (0..grid.len()).filter(|&j| grid.y[j] < start).rev().collect()
    };
    let outs: Vec<f64> = node_idx.iter().map(|&j| grid.y[j]).collect();

    let u = pair.u.clone();
    let th = pair.theta.clone();
    let vpot = potential_closure(pair);
    let (r0, u1, th0) = (setup.r0, setup.u1, setup.th0);
    let u_wall = setup.u_wall(side);
    let p2 = pass2.map(|p| (p.b1e, p.b2e, p.b3e));

    let rhs = move |y: f64, s: &[f64], ds: &mut [f64]| {
        let uv = u.eval(y);
        let up = u.eval_d1(y);
        let tv = th.eval(y);
        let t = uv * uv / tv;
        let phi = s[PHI];
        let inv_phi2 = 1.0 / (phi * phi);
        ds[PHI] = s[P] / t;
        ds[P] = -lambda * t * phi;
        ds[B1] = (tv / (uv * uv)) * (inv_phi2 - 1.0);
        ds[JJ] = t * phi * phi;
        ds[KK] = -s[JJ] / (t * phi * phi);
        ds[IDL] = s[KK] / (t * phi * phi);
        ds[B2] = (tv - th0) / (uv * uv);
        ds[B3] = (u1 - up) / (uv * uv);
        if let Some((b1e, b2e, b3e)) = p2 {
            let scomb = (s[B1] - b1e) + (s[B2] - b2e) + r0 * (s[B3] - b3e);
            let psi = uv * phi * scomb + phi * r0 * (uv / u_wall - 1.0);
            let tfull = scomb + r0 * (1.0 / u_wall - 1.0 / uv);
            let dpsi = (up * phi + uv * ds[PHI]) * tfull + tv / (uv * phi);
            ds[QM] = psi * psi / tv;
            ds[QK] = dpsi * dpsi / tv;
            ds[QV] = vpot(y) / tv * psi * psi;
        }
    };

    // Taylor data at the start point
    let a = u1 * u1 / th0;
    let u_start = pair.u.eval(start);
    let th_start = pair.theta.eval(start);
    let t_start = u_start * u_start / th_start;
    let phi_init = 1.0 - lambda * H0 * H0 / 6.0;
    let dim = if pass2.is_some() { 11 } else { 8 };
    let mut y0 = vec![0.0; dim];
    y0[PHI] = phi_init;
    y0[P] = t_start * (-lambda * side * H0 / 3.0);
    y0[JJ] = side * a * H0 * H0 * H0 / 3.0;
    y0[KK] = -H0 * H0 / 6.0;
    if let Some(p) = pass2 {
        y0[QM] = side * H0 * p.psi0 * p.psi0 / th0;
        y0[QK] = side * H0 * p.dpsi0 * p.dpsi0 / th0;
        let vp = potential_closure(pair);
        y0[QV] = side * H0 * vp(0.0) * p.psi0 * p.psi0 / th0;
    }

    let f1_start = (th_start / (u_start * u_start)) * (1.0 / (phi_init * phi_init) - 1.0);
    let g_start = (th_start / (u_start * u_start * phi_init * phi_init)) * y0[KK];

    let opts = OdeOptions::default();
    let states = integrate_with_output(rhs, start, &y0, &outs, &opts)
        .map_err(|e| RayleighError::NonConvergence(e.to_string()))?;
    for st in &states {
        if st[PHI] < PHI_FLOOR {
            return Err(RayleighError::NonConvergence(format!(
                "regular solution lost positivity at lambda = {lambda}"
            )));
        }
    }
    let wall = states.last().cloned().expect("every side has wall nodes");
    Ok(SideScan {
        node_idx,
        states,
        wall,
        f1_start,
        g_start,
    })
}

struct Curve {
    point: DispersionPoint,
    plus: SideScan,
    minus: SideScan,
    setup: Setup,
}

fn evaluate_curve(pair: &ShearPair, lambda: f64) -> Result<Curve, RayleighError> {
    let setup = Setup::new(pair)?;
    let plus = scan_side(pair, lambda, 1.0, &setup, None)?;
    let minus = scan_side(pair, lambda, -1.0, &setup, None)?;
    let (u1, th0) = (setup.u1, setup.th0);

    // center contributions across the Taylor patch: Simpson with the limits
    let f0 = lambda * th0 / (3.0 * u1 * u1);
    let center_i = H0 / 3.0 * (minus.f1_start + 4.0 * f0 + plus.f1_start);
    let i_total = plus.wall[B1] - minus.wall[B1] + center_i;

    let g0 = -th0 / (6.0 * u1 * u1);
    let center_g = H0 / 3.0 * (minus.g_start + 4.0 * g0 + plus.g_start);
    let idl_total = plus.wall[IDL] - minus.wall[IDL] + center_g;

    let b_side = |scan: &SideScan, side: f64| -> f64 {
        let f2_0 = setup.th2 / (2.0 * u1 * u1);
        let f3_0 = -setup.u30 / (2.0 * u1 * u1);
        let f2_h = (pair.theta.eval(side * H0) - th0) / pair.u.eval(side * H0).powi(2);
        let f3_h = (u1 - pair.u.eval_d1(side * H0)) / pair.u.eval(side * H0).powi(2);
        let chalf2 = side * H0 * 0.5 * (f2_0 + f2_h);
        let chalf3 = side * H0 * 0.5 * (f3_0 + f3_h);
        let a2 = -(chalf2 + scan.wall[B2]);
        let a3 = -(chalf3 + scan.wall[B3]);
        u1 * a2 + th0 * a3 + th0 / setup.u_wall(side)
    };
    let b_plus = b_side(&plus, 1.0);
    let b_minus = b_side(&minus, -1.0);

    let big_lambda = (u1 / th0) * (-u1 * i_total + b_plus - b_minus);
    let d_big_lambda = 2.0 * u1 * u1 / th0 * idl_total;

    Ok(Curve {
        point: DispersionPoint {
            lambda,
            big_lambda,
            d_big_lambda,
            b_plus,
            b_minus,
        },
        plus,
        minus,
        setup,
    })
}

/// The jump strength Λ(λ) with its derivative and boundary terms.
pub fn dispersion_lambda(pair: &ShearPair, lambda: f64) -> Result<DispersionPoint, RayleighError> {
    let curve = evaluate_curve(pair, lambda)?;
    debug_assert!(curve.point.d_big_lambda < 0.0);
    Ok(curve.point)
}

/// ∂Λ/∂λ via the K-function formula.
pub fn dispersion_derivative(pair: &ShearPair, lambda: f64) -> Result<f64, RayleighError> {
    Ok(dispersion_lambda(pair, lambda)?.d_big_lambda)
}

/// Smallest eigenvalue of the delta-potential limit operator at strength
/// `big_lambda`: root-find λ with Λ(λ) = Λ, then assemble the two-sided
/// eigenfunction and certify it by side-wise weighted quadrature.
pub fn limit_eigenvalue(pair: &ShearPair, big_lambda: f64) -> Result<SpectrumResult, RayleighError> {
    let lam = solve_curve_for(pair, big_lambda)?;
    let curve = evaluate_curve(pair, lam)?;
    build_limit_result(pair, &curve, big_lambda)
}

fn solve_curve_for(pair: &ShearPair, target: f64) -> Result<f64, RayleighError> {
    let tol = 1e-9 * target.abs().max(1.0);
    let eval = |lam: f64| -> Result<f64, RayleighError> {
        Ok(dispersion_lambda(pair, lam)?.big_lambda)
    };
    let l_at_zero = eval(-1e-8)?;

    let (mut lo, mut hi); // Λ(lo) >= target >= Λ(hi), lo < hi
    if target >= l_at_zero {
        // classical branch: λ ≤ 0
        hi = -1e-8;
        lo = -1.0;
        let mut v = eval(lo)?;
        let mut guard = 0;
        while v < target {
            lo *= 2.0;
            if lo < -1e7 {
                return Err(RayleighError::BracketEmpty(target));
            }
            v = eval(lo)?;
            guard += 1;
            if guard > 60 {
                return Err(RayleighError::BracketEmpty(target));
            }
        }
    } else {
        // continuation to positive λ while the regular solution stays positive
        let mut good = 1e-8;
        let mut step = 0.4;
        let mut tries = 0;
        loop {
            tries += 1;
            if tries > 300 {
                return Err(RayleighError::NoNegativeEigenvalue {
                    lambda_cap: target,
                    limit: eval(good)?,
                });
            }
            let cand = good + step;
            match eval(cand) {
                Ok(v) => {
                    if v <= target {
                        lo = good;
                        hi = cand;
                        break;
                    }
                    good = cand;
                    step *= 1.5;
                }
                Err(RayleighError::NonConvergence(_)) => {
                    step *= 0.5;
                    if step < 1e-10 {
                        return Err(RayleighError::NoNegativeEigenvalue {
                            lambda_cap: target,
                            limit: eval(good)?,
                        });
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }

    // bisection, then secant polish on the bracket
    let mut flo = eval(lo)? - target;
    let mut fhi = eval(hi)? - target;
    if flo < 0.0 || fhi > 0.0 {
        return Err(RayleighError::BracketEmpty(target));
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let fm = eval(mid)? - target;
        if fm.abs() <= tol {
            return Ok(mid);
        }
        if fm >= 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let mut a = lo;
    let mut fa = flo;
    let mut b = hi;
    let mut fb = fhi;
    for _ in 0..12 {
        if (fb - fa).abs() < 1e-300 {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        let c = c.clamp(lo.min(hi), lo.max(hi));
        let fc = eval(c)? - target;
        if fc.abs() <= tol {
            return Ok(c);
        }
        a = b;
        fa = fb;
        b = c;
        fb = fc;
    }
    Ok(0.5 * (a + b))
}

fn build_limit_result(
    pair: &ShearPair,
    curve: &Curve,
    big_lambda: f64,
) -> Result<SpectrumResult, RayleighError> {
    let setup = &curve.setup;
    let grid = &pair.grid;
    let lam = curve.point.lambda;
    let (u1, th0, r0) = (setup.u1, setup.th0, setup.r0);

    // ψ'(0±) = u'(0) ∫_{±1}^0 f1 + b±, with the f1 integral split as in Λ
    let dpsi0 = |scan: &SideScan, side: f64, b_side: f64| -> f64 {
        let f0 = lam * th0 / (3.0 * u1 * u1);
        let chalf = side * H0 * 0.5 * (f0 + scan.f1_start);
        u1 * (-(chalf + scan.wall[B1])) + b_side
    };
    let psi0 = -r0; // φ₁(0) = 1
    let p2_plus = Pass2 {
        b1e: curve.plus.wall[B1],
        b2e: curve.plus.wall[B2],
        b3e: curve.plus.wall[B3],
        psi0,
        dpsi0: dpsi0(&curve.plus, 1.0, curve.point.b_plus),
    };
    let p2_minus = Pass2 {
        b1e: curve.minus.wall[B1],
        b2e: curve.minus.wall[B2],
        b3e: curve.minus.wall[B3],
        psi0,
        dpsi0: dpsi0(&curve.minus, -1.0, curve.point.b_minus),
    };
    let plus = scan_side(pair, lam, 1.0, setup, Some(&p2_plus))?;
    let minus = scan_side(pair, lam, -1.0, setup, Some(&p2_minus))?;

    // assemble nodal ψ from the recorded states
    let mut psi = vec![0.0; grid.len()];
    let assemble = |scan: &SideScan, pass: &Pass2, side: f64, psi: &mut Vec<f64>| {
        for (pos, &j) in scan.node_idx.iter().enumerate() {
            let s = &scan.states[pos];
            let y = grid.y[j];
            let uv = pair.u.eval(y);
            let scomb = (s[B1] - pass.b1e) + (s[B2] - pass.b2e) + r0 * (s[B3] - pass.b3e);
            psi[j] = uv * s[PHI] * scomb + s[PHI] * r0 * (uv / setup.u_wall(side) - 1.0);
        }
    };
    assemble(&plus, &p2_plus, 1.0, &mut psi);
    assemble(&minus, &p2_minus, -1.0, &mut psi);
    for (j, &y) in grid.y.iter().enumerate() {
        if y.abs() <= H0 {
            psi[j] = psi0; // within O(h0) of the center value
        }
    }
    psi[0] = 0.0;
    psi[grid.n] = 0.0;

    // weighted norm and Rayleigh quotient from the side-wise quadratures
    let qm = plus.wall[QM] - minus.wall[QM];
    let qk = plus.wall[QK] - minus.wall[QK];
    let qv = plus.wall[QV] - minus.wall[QV];
    let rq = (qk + qv - big_lambda / th0 * psi0 * psi0) / qm;
    let rq_deviation = (rq - lam).abs();

    let scale = 1.0 / qm.sqrt();
    let sign = if psi0 * scale > 0.0 { 1.0 } else { -1.0 };
    for v in psi.iter_mut() {
        *v *= scale * sign;
    }

    Ok(SpectrumResult {
        lambda_min: lam,
        eigenfunction: GridFunction::new(grid.clone(), psi),
        params: None,
        rq_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_relative_eq;

    fn couette() -> ShearPair {
        ShearPair::preset("couette", &Grid::cgl(128)).unwrap()
    }

    fn couette_oracle(k: f64) -> f64 {
        2.0 * k / k.tanh()
    }

    #[test]
    fn couette_dispersion_matches_coth_oracle() {
        let pair = couette();
        for &k in &[0.5f64, 1.0, 2.0] {
            let pt = dispersion_lambda(&pair, -k * k).unwrap();
            assert_relative_eq!(pt.big_lambda, couette_oracle(k), max_relative = 1e-8);
        }
        // boundary terms are ±1 exactly for u = y, θ = 1
        let pt = dispersion_lambda(&pair, -1.0).unwrap();
        assert_relative_eq!(pt.b_plus, 1.0, epsilon = 1e-9);
        assert_relative_eq!(pt.b_minus, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn couette_limit_to_two_as_lambda_vanishes() {
        let pair = couette();
        let pt = dispersion_lambda(&pair, -1e-6).unwrap();
        assert_relative_eq!(pt.big_lambda, 2.0, epsilon = 1e-5);
    }

    #[test]
    fn couette_derivative_matches_differentiated_oracle() {
        // d/dλ [2 k coth k], k = sqrt(-λ): at λ = -1 equals -(coth 1 + 1 - coth² 1)
        let pair = couette();
        let pt = dispersion_lambda(&pair, -1.0).unwrap();
        let coth = 1.0f64 / 1.0f64.tanh();
        let oracle = -(coth + (1.0 - coth * coth));
        assert_relative_eq!(pt.d_big_lambda, oracle, max_relative = 1e-7);
    }

    #[test]
    fn derivative_agrees_with_finite_differences() {
        let pair = couette();
        let lam = -2.3;
        let h = 1e-5;
        let lp = dispersion_lambda(&pair, lam + h).unwrap().big_lambda;
        let lm = dispersion_lambda(&pair, lam - h).unwrap().big_lambda;
        let fd = (lp - lm) / (2.0 * h);
        let pt = dispersion_lambda(&pair, lam).unwrap();
        assert_relative_eq!(pt.d_big_lambda, fd, max_relative = 1e-5);
    }

    #[test]
    fn limit_eigenvalue_inverts_couette_oracle() {
        let pair = couette();
        let target = couette_oracle(1.0); // 2 coth 1
        let res = limit_eigenvalue(&pair, target).unwrap();
        assert_relative_eq!(res.lambda_min, -1.0, epsilon = 1e-7);
        assert_eq!(res.eigenfunction.values[0], 0.0);
        assert!(res.rq_deviation < 1e-7, "rq dev {}", res.rq_deviation);
        assert!(res.eigenfunction.eval(0.0) > 0.0);
        // closed form: ψ ∝ sinh(1 - |y|), ∫ψ² = sinh(1)cosh(1) - 1
        let amp = 1.0 / (1f64.sinh() * 1f64.cosh() - 1.0).sqrt();
        for (j, &y) in pair.grid.y.iter().enumerate() {
            let expect = amp * (1.0 - y.abs()).sinh();
            assert_relative_eq!(
                res.eigenfunction.values[j],
                expect,
                max_relative = 1e-6,
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn limit_eigenvalue_weak_strength_approaches_zero() {
        let pair = couette();
        let res = limit_eigenvalue(&pair, 2.0 + 1e-3).unwrap();
        assert!(res.lambda_min < 0.0 && res.lambda_min > -2e-3);
    }

    #[test]
    fn positive_branch_reaches_dirichlet_ground_state() {
        // Λ = 0 turns off the delta term: λ = π²/4 for Couette
        let pair = couette();
        let res = limit_eigenvalue(&pair, 0.0).unwrap();
        assert_relative_eq!(
            res.lambda_min,
            std::f64::consts::PI * std::f64::consts::PI / 4.0,
            max_relative = 1e-7
        );
    }

    #[test]
    fn curve_is_strictly_decreasing() {
        let pair = couette();
        let mut prev = f64::INFINITY;
        for i in 0..8 {
            let lam = -8.0 + i as f64;
            let pt = dispersion_lambda(&pair, lam - 1e-8).unwrap();
            assert!(pt.big_lambda < prev);
            assert!(pt.d_big_lambda < 0.0);
            prev = pt.big_lambda;
        }
    }
}
