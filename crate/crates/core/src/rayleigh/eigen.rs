//! Smallest eigenvalue of the distorted Rayleigh operator
//! H ψ = -θ (ψ'/θ)' + V ψ,   V = (u'' θ - u' θ')/(u θ),
//! in the 1/θ-weighted metric with Dirichlet walls: symmetric weak-form
//! pencil, shift-invert iteration from a certified lower bound, and the
//! strong-form collocation operator shared with the kernel certificates.

use super::SpectrumResult;
use crate::error::RayleighError;
use crate::grid::GridFunction;
use crate::profiles::{ModificationParams, ShearPair};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Pointwise potential with the removable singularity at u = 0 filled by its
/// limit u'''(0)/u'(0) - θ''(0)/θ(0).
pub(crate) fn potential_closure(pair: &ShearPair) -> impl Fn(f64) -> f64 {
    let u = pair.u.clone();
    let th = pair.theta.clone();
    let center = u.eval_d3(0.0) / u.eval_d1(0.0) - th.eval_d2(0.0) / th.eval(0.0);
    move |y: f64| {
        let uv = u.eval(y);
        if uv.abs() < 1e-12 {
            center
        } else {
            (u.eval_d2(y) * th.eval(y) - u.eval_d1(y) * th.eval_d1(y)) / (uv * th.eval(y))
        }
    }
}

/// Nodal potential, guarding against profiles that were not symmetrized
/// (those produce a genuine 1/y singularity at the center).
pub fn potential_values(pair: &ShearPair) -> Result<Vec<f64>, RayleighError> {
    let u1 = pair.u.eval_d1(0.0);
    let th0 = pair.theta.eval(0.0);
    let singular = pair.u.eval_d2(0.0).abs() / u1 + pair.theta.eval_d1(0.0).abs() / th0;
    if singular > 1e-5 {
        return Err(RayleighError::PotentialSingular(singular));
    }
    let v = potential_closure(pair);
    let vals: Vec<f64> = pair.grid.y.iter().map(|&y| v(y)).collect();
    let vmax = vals.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if !vmax.is_finite() || vmax > 1e9 {
        return Err(RayleighError::PotentialSingular(vmax));
    }
    Ok(vals)
}

/// Weak-form pencil (K, M) on the interior nodes.
fn weak_pencil(pair: &ShearPair, pot: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let g = &pair.grid;
    let n = g.n;
    let d1 = g.dmat(1);
    // B_{q i} = sqrt(w_q / θ_q) D1[q, i] over interior columns
    let mut b = DMatrix::zeros(n + 1, n - 1);
    for q in 0..=n {
        let s = (g.w[q] / pair.theta.values[q]).max(0.0).sqrt();
        for i in 1..n {
            b[(q, i - 1)] = s * d1[(q, i)];
        }
    }
    let mut k = b.transpose() * b;
    let mut m = DVector::zeros(n - 1);
    for i in 1..n {
        let wi = g.w[i] / pair.theta.values[i];
        k[(i - 1, i - 1)] += wi * pot[i];
        m[i - 1] = wi;
    }
    // enforce exact symmetry against accumulation order
    let kt = k.transpose();
    k = (k + kt) * 0.5;
    (k, m)
}

fn rayleigh_quotient(k: &DMatrix<f64>, m: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let kv = k * v;
    let num = v.dot(&kv);
    let den = v
        .iter()
        .zip(m.iter())
        .map(|(&vi, &mi)| mi * vi * vi)
        .sum::<f64>();
    num / den
}

fn is_sign_definite(v: &DVector<f64>) -> bool {
    let max = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let tol = 1e-7 * max;
    let pos = v.iter().any(|&x| x > tol);
    let neg = v.iter().any(|&x| x < -tol);
    !(pos && neg)
}

/// Smallest eigenpair of the pencil by shift-invert power iteration from a
/// strict lower bound, Rayleigh-shift polish, and a full decomposition
/// fallback when the ground-state certificate (sign-definiteness) fails.
fn smallest_pair(
    k: &DMatrix<f64>,
    m: &DVector<f64>,
    lower: f64,
) -> Result<(f64, DVector<f64>), RayleighError> {
    let n = k.nrows();
    let factor = |sigma: f64| -> Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
        let mut a = k.clone();
        for i in 0..n {
            a[(i, i)] -= sigma * m[i];
        }
        Some(a.lu())
    };
    let apply_m = |v: &DVector<f64>| -> DVector<f64> {
        DVector::from_fn(n, |i, _| m[i] * v[i])
    };

    let mut v = DVector::from_fn(n, |i, _| {
        let t = (i + 1) as f64 / (n + 1) as f64;
        (std::f64::consts::PI * t).sin()
    });
    v /= v.norm();

    let mut sigma = lower;
    let mut lu = factor(sigma).unwrap();
    let mut rho = rayleigh_quotient(k, m, &v);
    for it in 0..40 {
        let rhs = apply_m(&v);
        let w = match lu.solve(&rhs) {
            Some(w) => w,
            None => {
                sigma -= 1e-10 * (1.0 + sigma.abs());
                lu = factor(sigma).unwrap();
                continue;
            }
        };
        v = &w / w.norm();
        let rho_new = rayleigh_quotient(k, m, &v);
        let drift = (rho_new - rho).abs();
        rho = rho_new;
        // switch to Rayleigh shifts once the iterate has settled
        if it >= 6 && drift < 1e-6 * (1.0 + rho.abs()) {
            sigma = rho;
            lu = factor(sigma).unwrap();
        }
        if drift < 1e-14 * (1.0 + rho.abs()) && it > 8 {
            break;
        }
    }

    let residual = {
        let kv = k * &v;
        let mv = apply_m(&v);
        (kv - rho * mv).norm()
    };
    if residual <= 1e-9 * (1.0 + rho.abs()) && is_sign_definite(&v) {
        return Ok((rho, v));
    }

    // fallback: full symmetric decomposition of M^{-1/2} K M^{-1/2}
    let mut s = k.clone();
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] /= (m[i] * m[j]).sqrt();
        }
    }
    let eig = SymmetricEigen::new(s);
    let mut best = 0usize;
    for i in 0..n {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let lam = eig.eigenvalues[best];
    let q = eig.eigenvectors.column(best);
    let v = DVector::from_fn(n, |i, _| q[i] / m[i].sqrt());
    if !is_sign_definite(&v) {
        return Err(RayleighError::EigSolverFailure(
            "ground state is not sign-definite".into(),
        ));
    }
    Ok((lam, v))
}

/// Smallest eigenvalue of the operator for a (perturbed) pair, with the
/// normalized, sign-fixed eigenfunction.
pub fn smallest_eigenvalue(pair: &ShearPair) -> Result<SpectrumResult, RayleighError> {
    smallest_eigenvalue_tagged(pair, None)
}

pub fn smallest_eigenvalue_tagged(
    pair: &ShearPair,
    params: Option<ModificationParams>,
) -> Result<SpectrumResult, RayleighError> {
    let pot = potential_values(pair)?;
    let (k, m) = weak_pencil(pair, &pot);
    let lower = pot.iter().fold(0.0f64, |a, &v| a.min(v)) - 1.0;
    let (lam_weak, v_weak) = smallest_pair(&k, &m, lower)?;
    // the weak eigenvector is only loosely constrained at the near-wall
    // nodes (tiny quadrature weights); polishing on the strong collocation
    // matrix removes that pollution without moving the eigenvalue
    let (lam, v) = polish_strong(pair, lam_weak, &v_weak)?;
    if (lam - lam_weak).abs() > 1e-6 * (1.0 + lam_weak.abs()) {
        return Err(RayleighError::EigSolverFailure(format!(
            "weak/strong eigenvalue mismatch: {lam_weak} vs {lam}"
        )));
    }

    let g = &pair.grid;
    let mut psi = vec![0.0; g.len()];
    for i in 1..g.n {
        psi[i] = v[i - 1];
    }
    // normalize ∫ ψ²/θ = 1 and fix the sign at the center
    let sq: Vec<f64> = psi
        .iter()
        .zip(pair.theta.values.iter())
        .map(|(&p, &t)| p * p / t)
        .collect();
    let nrm = g.integrate(&sq).sqrt();
    let mid = g.eval(&psi, 0.0);
    let sign = if mid != 0.0 { mid.signum() } else { 1.0 };
    for p in psi.iter_mut() {
        *p *= sign / nrm;
    }

    // Rayleigh quotient certificate on the returned eigenfunction
    let dpsi = g.deriv(&psi, 1);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..g.len() {
        let wi = g.w[i] / pair.theta.values[i];
        num += wi * (dpsi[i] * dpsi[i] + pot[i] * psi[i] * psi[i]);
        den += wi * psi[i] * psi[i];
    }
    let rq_deviation = (num / den - lam).abs();

    Ok(SpectrumResult {
        lambda_min: lam,
        eigenfunction: GridFunction::new(g.clone(), psi),
        params,
        rq_deviation,
    })
}

/// Strong-form application H ψ on a full-length nodal vector.
pub fn apply_operator(pair: &ShearPair, psi: &[f64]) -> Vec<f64> {
    let g = &pair.grid;
    let vfun = potential_closure(pair);
    let d = g.deriv(psi, 1);
    let w: Vec<f64> = d
        .iter()
        .zip(pair.theta.values.iter())
        .map(|(&a, &t)| a / t)
        .collect();
    let dw = g.deriv(&w, 1);
    (0..g.len())
        .map(|i| -pair.theta.values[i] * dw[i] + vfun(g.y[i]) * psi[i])
        .collect()
}

/// Strong collocation matrix on the interior (Dirichlet walls eliminated).
pub fn strong_matrix(pair: &ShearPair) -> DMatrix<f64> {
    let g = &pair.grid;
    let n = g.n;
    let d1 = g.dmat(1);
    let vfun = potential_closure(pair);
    // A = -diag(θ) D1 diag(1/θ) D1 + diag(V), interior block
    let mut t = DMatrix::zeros(n + 1, n + 1);
    for q in 0..=n {
        let inv = 1.0 / pair.theta.values[q];
        for j in 0..=n {
            t[(q, j)] = inv * d1[(q, j)];
        }
    }
    let full = d1 * t;
    let mut h = DMatrix::zeros(n - 1, n - 1);
    for i in 1..n {
        for j in 1..n {
            h[(i - 1, j - 1)] = -pair.theta.values[i] * full[(i, j)];
        }
        h[(i - 1, i - 1)] += vfun(g.y[i]);
    }
    h
}

/// Refine a weak eigenpair against the strong-form matrix by one round of
/// shifted inverse iteration; returns the polished pair (interior vector).
pub fn polish_strong(
    pair: &ShearPair,
    lambda: f64,
    psi_interior: &DVector<f64>,
) -> Result<(f64, DVector<f64>), RayleighError> {
    let g = &pair.grid;
    let n = g.n;
    let h = strong_matrix(pair);
    let mut v = psi_interior.clone();
    let mut lam = lambda;
    for _ in 0..3 {
        let mut a = h.clone();
        for i in 0..n - 1 {
            a[(i, i)] -= lam;
        }
        let lu = a.lu();
        match lu.solve(&v) {
            Some(w) => {
                v = &w / w.norm();
                // weighted Rayleigh quotient of the strong operator
                let hv = &h * &v;
                let mut num = 0.0;
                let mut den = 0.0;
                for i in 1..n {
                    let wi = g.w[i] / pair.theta.values[i];
                    num += wi * v[i - 1] * hv[i - 1];
                    den += wi * v[i - 1] * v[i - 1];
                }
                lam = num / den;
            }
            None => {
                lam -= 1e-12 * (1.0 + lam.abs());
            }
        }
    }
    Ok((lam, v))
}

/// Generalized eigendecomposition of the pencil, M-orthonormal columns,
/// eigenvalues ascending. Backs the mode-wise preconditioner of the
/// linearized steady-state solves.
pub struct HModes {
    pub eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
    m_sqrt: Vec<f64>,
}

impl HModes {
    pub fn build(pair: &ShearPair) -> Result<HModes, RayleighError> {
        let pot = potential_values(pair)?;
        let (k, m) = weak_pencil(pair, &pot);
        let n = k.nrows();
        let mut s = k;
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] /= (m[i] * m[j]).sqrt();
            }
        }
        let eig = SymmetricEigen::new(s);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(i));
        }
        let m_sqrt: Vec<f64> = m.iter().map(|&x| x.sqrt()).collect();
        Ok(HModes {
            eigenvalues,
            vectors,
            m_sqrt,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Coefficients of an interior vector in the M-orthonormal eigenbasis.
    pub fn to_modes(&self, r: &DVector<f64>) -> DVector<f64> {
        let scaled = DVector::from_fn(r.len(), |i, _| r[i] * self.m_sqrt[i]);
        self.vectors.transpose() * scaled
    }

    /// Inverse transform back to nodal interior values.
    pub fn from_modes(&self, c: &DVector<f64>) -> DVector<f64> {
        let mixed = &self.vectors * c;
        DVector::from_fn(mixed.len(), |i, _| mixed[i] / self.m_sqrt[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bumps::default_bumps;
    use crate::grid::Grid;
    use crate::profiles::{modify_profiles, perturb_profiles};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn couette_ground_state_is_quarter_pi_squared() {
        let pair = ShearPair::preset("couette", &Grid::cgl(128)).unwrap();
        let res = smallest_eigenvalue(&pair).unwrap();
        assert_relative_eq!(res.lambda_min, PI * PI / 4.0, max_relative = 1e-10);
        assert!(res.rq_deviation < 1e-8);
        assert!(res.eigenfunction.eval(0.0) > 0.0);
        // normalization in the weighted metric
        let sq: Vec<f64> = res
            .eigenfunction
            .values
            .iter()
            .map(|&p| p * p)
            .collect();
        assert_relative_eq!(pair.grid.integrate(&sq), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn raw_asymmetric_profile_is_rejected() {
        let pair = ShearPair::preset("tanh", &Grid::cgl(64)).unwrap();
        assert!(matches!(
            potential_values(&pair),
            Err(RayleighError::PotentialSingular(_))
        ));
    }

    #[test]
    fn perturbation_direction_lowers_the_eigenvalue() {
        let g = Grid::mapped(256, 3.0);
        let base = ShearPair::preset("couette", &g).unwrap();
        let modified = modify_profiles(&base, 0.2).unwrap();
        let bumps = default_bumps();
        let mk = |m: f64| {
            let params = ModificationParams {
                delta: 0.2,
                m,
                l: 0.0,
                gamma: 0.08,
                eta: 0.08,
            };
            let p = perturb_profiles(&modified, &params, &bumps).unwrap();
            smallest_eigenvalue(&p).unwrap().lambda_min
        };
        let l0 = mk(0.0);
        let l1 = mk(2.0);
        let l2 = mk(4.0);
        assert_relative_eq!(l0, PI * PI / 4.0, max_relative = 1e-8);
        assert!(l1 < l0 && l2 < l1, "{l0} {l1} {l2}");
    }

    #[test]
    fn strong_and_weak_forms_agree_on_smooth_modes() {
        let pair = ShearPair::preset("poly", &Grid::cgl(96)).unwrap();
        let res = smallest_eigenvalue(&pair).unwrap();
        // the returned eigenfunction is strong-polished, so the collocation
        // residual is at solver precision everywhere in the interior
        let h_psi = apply_operator(&pair, &res.eigenfunction.values);
        let mut worst = 0.0f64;
        for i in 1..pair.grid.len() - 1 {
            worst = worst.max((h_psi[i] - res.lambda_min * res.eigenfunction.values[i]).abs());
        }
        assert!(worst < 1e-8, "strong residual {worst}");
        let interior = DVector::from_fn(pair.grid.n - 1, |i, _| res.eigenfunction.values[i + 1]);
        let (lam, v) = polish_strong(&pair, res.lambda_min, &interior).unwrap();
        let h = strong_matrix(&pair);
        let r = (&h * &v - lam * &v).norm();
        assert!(r < 1e-10, "polished residual {r}");
        assert_relative_eq!(lam, res.lambda_min, max_relative = 1e-9);
    }

    #[test]
    fn modes_transform_round_trip() {
        let pair = ShearPair::preset("couette", &Grid::cgl(64)).unwrap();
        let modes = HModes::build(&pair).unwrap();
        let r = DVector::from_fn(modes.len(), |i, _| ((i * 7 % 11) as f64 - 5.0) * 0.3);
        let c = modes.to_modes(&r);
        let back = modes.from_modes(&c);
        assert!((back - &r).norm() < 1e-10);
        // first eigenvalue matches the ground state
        assert_relative_eq!(modes.eigenvalues[0], PI * PI / 4.0, max_relative = 1e-9);
    }
}
