//! Chebyshev–Gauss–Lobatto collocation primitives: nodes, differentiation
//! matrices, Clenshaw–Curtis quadrature, coefficient transforms, and
//! barycentric interpolation.

use nalgebra::DMatrix;
use std::f64::consts::PI;

/// CGL nodes of order `n` (so `n + 1` points), strictly increasing on [-1, 1].
///
/// Uses the sine form so the endpoints are exactly ±1 and, for even `n`,
/// the midpoint is exactly 0.
pub fn nodes(n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least order 2");
    let nf = n as f64;
    (0..=n)
        .map(|j| (PI * (2.0 * j as f64 - nf) / (2.0 * nf)).sin())
        .collect()
}

/// Barycentric weights for CGL nodes in increasing order.
pub fn bary_weights(n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..=n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
    w[0] *= 0.5;
    w[n] *= 0.5;
    w
}

/// First-derivative collocation matrix on arbitrary distinct nodes with
/// barycentric weights `w`. Diagonal by the negative-sum trick.
pub fn diff_matrix(x: &[f64], w: &[f64]) -> DMatrix<f64> {
    let m = x.len();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        let mut row_sum = 0.0;
        for j in 0..m {
            if i != j {
                let v = (w[j] / w[i]) / (x[i] - x[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    d
}

/// Clenshaw–Curtis quadrature weights for CGL nodes of order `n`,
/// returned in increasing-node order.
pub fn cc_weights(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let end = if n % 2 == 0 {
        1.0 / (nf * nf - 1.0)
    } else {
        1.0 / (nf * nf)
    };
    w[0] = end;
    w[n] = end;
    for i in 1..n {
        let theta = PI * i as f64 / nf;
        let mut v = 1.0;
        let kmax = n / 2;
        for k in 1..=kmax {
            let term = (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
            if 2 * k == n {
                v -= term;
            } else {
                v -= 2.0 * term;
            }
        }
        w[i] = 2.0 * v / nf;
    }
    // standard order is decreasing in cos(theta); our nodes increase, so flip
    w.reverse();
    w
}

/// Chebyshev coefficients of the interpolant through values on increasing CGL nodes.
pub fn vals_to_coeffs(vals: &[f64]) -> Vec<f64> {
    let n = vals.len() - 1;
    let nf = n as f64;
    let mut a = vec![0.0; n + 1];
    for (k, ak) in a.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..=n {
            // g_i = f(cos(i pi / N)) = vals[n - i]
            let g = vals[n - i];
            let c = (PI * (i * k) as f64 / nf).cos();
            let scale = if i == 0 || i == n { 0.5 } else { 1.0 };
            s += scale * g * c;
        }
        let ck = if k == 0 || k == n { 2.0 } else { 1.0 };
        *ak = 2.0 * s / (nf * ck);
    }
    a
}

/// Evaluate a Chebyshev series at `x` by Clenshaw recurrence.
pub fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + x * b1 - b2
}

/// Coefficients of an antiderivative of the series `a` (constant term zero;
/// the caller anchors it). The degree-(N+1) tail is dropped.
pub fn antiderivative_coeffs(a: &[f64]) -> Vec<f64> {
    let n = a.len() - 1;
    let get = |k: usize| -> f64 {
        if k > n {
            0.0
        } else if k == 0 {
            2.0 * a[0]
        } else {
            a[k]
        }
    };
    let mut b = vec![0.0; n + 1];
    for m in 1..=n {
        b[m] = (get(m - 1) - get(m + 1)) / (2.0 * m as f64);
    }
    b
}

/// Barycentric interpolation at `x` from nodes/values/weights.
/// Returns the nodal value exactly when `x` coincides with a node.
pub fn bary_eval(x_nodes: &[f64], vals: &[f64], w: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..x_nodes.len() {
        let dx = x - x_nodes[j];
        if dx == 0.0 {
            return vals[j];
        }
        let t = w[j] / dx;
        num += t * vals[j];
        den += t;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn nodes_are_increasing_with_exact_endpoints() {
        for n in [2, 5, 16, 33] {
            let x = nodes(n);
            assert_eq!(x[0], -1.0);
            assert_eq!(x[n], 1.0);
            if n % 2 == 0 {
                assert_eq!(x[n / 2], 0.0);
            }
            for j in 1..=n {
                assert!(x[j] > x[j - 1]);
            }
        }
    }

    #[test]
    fn diff_matrix_differentiates_polynomials_exactly() {
        let n = 12;
        let x = nodes(n);
        let w = bary_weights(n);
        let d = diff_matrix(&x, &w);
        let f: Vec<f64> = x.iter().map(|&t| t.powi(5) - 2.0 * t.powi(3) + t).collect();
        let fp: Vec<f64> = x.iter().map(|&t| 5.0 * t.powi(4) - 6.0 * t * t + 1.0).collect();
        for i in 0..=n {
            let mut s = 0.0;
            for j in 0..=n {
                s += d[(i, j)] * f[j];
            }
            assert_relative_eq!(s, fp[i], max_relative = 1e-10, epsilon = 1e-10);
        }
    }

    #[test]
    fn cc_weights_integrate_polynomials() {
        for n in [8, 9, 16] {
            let x = nodes(n);
            let w = cc_weights(n);
            let int1: f64 = w.iter().sum();
            assert_relative_eq!(int1, 2.0, max_relative = 1e-13);
            let int_x2: f64 = x.iter().zip(&w).map(|(&t, &wi)| t * t * wi).sum();
            assert_relative_eq!(int_x2, 2.0 / 3.0, max_relative = 1e-12);
            let int_x6: f64 = x.iter().zip(&w).map(|(&t, &wi)| t.powi(6) * wi).sum();
            assert_relative_eq!(int_x6, 2.0 / 7.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn transform_round_trip_and_clenshaw() {
        let n = 16;
        let x = nodes(n);
        let f: Vec<f64> = x.iter().map(|&t| (2.0 * t).sin() + t * t).collect();
        let a = vals_to_coeffs(&f);
        for (j, &xj) in x.iter().enumerate() {
            assert_relative_eq!(clenshaw(&a, xj), f[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn antiderivative_matches_closed_form() {
        let n = 20;
        let x = nodes(n);
        let f: Vec<f64> = x.iter().map(|&t| (3.0 * t).cos()).collect();
        let a = vals_to_coeffs(&f);
        let b = antiderivative_coeffs(&a);
        // F(x) - F(0) should equal sin(3x)/3
        let f0 = clenshaw(&b, 0.0);
        for &t in &[-0.9, -0.3, 0.2, 0.8] {
            assert_relative_eq!(
                clenshaw(&b, t) - f0,
                (3.0 * t).sin() / 3.0,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn bary_eval_reproduces_nodes_and_interpolates() {
        let n = 14;
        let x = nodes(n);
        let w = bary_weights(n);
        let f: Vec<f64> = x.iter().map(|&t| (1.5 * t).exp()).collect();
        for (j, &xj) in x.iter().enumerate() {
            assert_eq!(bary_eval(&x, &f, &w, xj), f[j]);
        }
        assert_relative_eq!(bary_eval(&x, &f, &w, 0.3), (0.45f64).exp(), epsilon = 1e-9);
    }
}
