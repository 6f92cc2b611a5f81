//! Dense iterative pieces shared by the Newton and resolvent paths: a
//! right-preconditioned GMRES without restarts (Krylov dimensions here stay
//! small) over real or complex vectors.

use nalgebra::{ComplexField, DVector};

#[derive(Debug, Clone, Copy)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Solve A x = b with right preconditioning: GMRES on A M⁻¹, x = M⁻¹ u.
///
/// `apply` computes A v; `precond` applies M⁻¹. Convergence is on the
/// relative residual against ‖b‖.
pub fn gmres<T, A, P>(
    apply: A,
    precond: P,
    b: &DVector<T>,
    tol: f64,
    max_iter: usize,
) -> (DVector<T>, GmresOutcome)
where
    T: ComplexField<RealField = f64> + Copy,
    A: Fn(&DVector<T>) -> DVector<T>,
    P: Fn(&DVector<T>) -> DVector<T>,
{
    let n = b.len();
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return (
            DVector::zeros(n),
            GmresOutcome {
                iterations: 0,
                rel_residual: 0.0,
                converged: true,
            },
        );
    }
    let m = max_iter.min(n);
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(m + 1);
    basis.push(b / T::from_real(bnorm));
    // Hessenberg columns after Givens, plus rotation parameters
    let mut h_cols: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut cs: Vec<T> = Vec::with_capacity(m);
    let mut sn: Vec<T> = Vec::with_capacity(m);
    let mut g: Vec<T> = vec![T::zero(); m + 1];
    g[0] = T::from_real(bnorm);

    let mut rel = 1.0;
    let mut iters = 0;
    for j in 0..m {
        iters = j + 1;
        let mut w = apply(&precond(&basis[j]));
        let mut col = vec![T::zero(); j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = v.dotc(&w);
            col[i] = hij;
            w.axpy(-hij, v, T::one());
        }
        let wnorm = w.norm();
        col[j + 1] = T::from_real(wnorm);

        // apply accumulated rotations to the new column
        for i in 0..j {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i].conjugate() * col[i] + cs[i].conjugate() * col[i + 1];
            col[i] = t;
        }
        // new rotation zeroing col[j+1]
        let (c, s) = givens(col[j], col[j + 1]);
        let t = c * col[j] + s * col[j + 1];
        col[j] = t;
        col[j + 1] = T::zero();
        cs.push(c);
        sn.push(s);
        let gj = g[j];
        g[j] = c * gj;
        g[j + 1] = -s.conjugate() * gj;
        h_cols.push(col);

        rel = g[j + 1].abs() / bnorm;
        if rel <= tol || wnorm <= 1e-300 {
            break;
        }
        basis.push(w / T::from_real(wnorm));
    }

    // back substitution of the triangular system
    let k = iters;
    let mut y = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for l in i + 1..k {
            acc -= h_cols[l][i] * y[l];
        }
        y[i] = acc / h_cols[i][i];
    }
    let mut u = DVector::zeros(n);
    for (i, yi) in y.iter().enumerate() {
        u.axpy(*yi, &basis[i], T::one());
    }
    let x = precond(&u);
    (
        x,
        GmresOutcome {
            iterations: iters,
            rel_residual: rel,
            converged: rel <= tol,
        },
    )
}

fn givens<T: ComplexField<RealField = f64> + Copy>(a: T, b: T) -> (T, T) {
    let bn = b.abs();
    if bn == 0.0 {
        return (T::one(), T::zero());
    }
    let an = a.abs();
    let r = (an * an + bn * bn).sqrt();
    if an == 0.0 {
        return (T::zero(), b.conjugate() / T::from_real(bn));
    }
    let c = T::from_real(an / r);
    let s = (a / T::from_real(an)) * b.conjugate() / T::from_real(r);
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    #[test]
    fn solves_real_dense_system() {
        let n = 40;
        let a = DMatrix::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                4.0 + i as f64 * 0.1
            } else {
                1.0 / (1.0 + (i as f64 - j as f64).abs().powi(2))
            }
        });
        let xtrue = DVector::<f64>::from_fn(n, |i, _| (i as f64 * 0.3).sin());
        let b = &a * &xtrue;
        let (x, out) = gmres(|v| &a * v, |v| v.clone(), &b, 1e-12, 100);
        assert!(out.converged);
        assert!((x - xtrue).norm() < 1e-9);
    }

    #[test]
    fn solves_complex_system_with_jacobi_preconditioner() {
        let n = 30;
        let a = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(3.0, 1.0 + 0.05 * i as f64)
            } else {
                Complex64::new(0.3 / (1.0 + (i + j) as f64), -0.1 / (1.0 + i as f64))
            }
        });
        let diag_inv: Vec<Complex64> = (0..n).map(|i| 1.0 / a[(i, i)]).collect();
        let xtrue = DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(1.0, i as f64 * 0.1));
        let b = &a * &xtrue;
        let (x, out) = gmres(
            |v| &a * v,
            |v| DVector::from_fn(n, |i, _| v[i] * diag_inv[i]),
            &b,
            1e-12,
            60,
        );
        assert!(out.converged);
        assert!((x - xtrue).norm() < 1e-9);
    }
}
