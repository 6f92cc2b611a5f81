//! Monotone piecewise-cubic interpolation (Fritsch–Carlson) and a small
//! Chebyshev proxy for tabulating smooth functions of one variable.

use crate::cheb;

/// Monotone cubic Hermite interpolant on strictly monotone abscissae.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    increasing: bool,
}

impl MonotoneCubic {
    /// Build from data with strictly monotone `x`. Slopes follow
    /// Fritsch–Carlson, so the interpolant preserves the monotonicity of `y`.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len());
        let increasing = x[1] > x[0];
        let n = x.len();
        let mut h = vec![0.0; n - 1];
        let mut slope = vec![0.0; n - 1];
        for i in 0..n - 1 {
            h[i] = x[i + 1] - x[i];
            assert!(
                if increasing { h[i] > 0.0 } else { h[i] < 0.0 },
                "abscissae must be strictly monotone"
            );
            slope[i] = (y[i + 1] - y[i]) / h[i];
        }
        let mut d = vec![0.0; n];
        d[0] = slope[0];
        d[n - 1] = slope[n - 2];
        for i in 1..n - 1 {
            if slope[i - 1] * slope[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                // weighted harmonic mean keeps the interpolant monotone
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
            }
        }
        MonotoneCubic {
            x,
            y,
            d,
            increasing,
        }
    }

    fn segment(&self, xq: f64) -> usize {
        let n = self.x.len();
        let (mut lo, mut hi) = (0usize, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let below = if self.increasing {
                self.x[mid] <= xq
            } else {
                self.x[mid] >= xq
            };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Hermite evaluation; clamps outside the data range.
    pub fn eval(&self, xq: f64) -> f64 {
        let i = self.segment(xq);
        let h = self.x[i + 1] - self.x[i];
        let t = ((xq - self.x[i]) / h).clamp(0.0, 1.0);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

/// Chebyshev interpolant of a smooth function on [a, b].
#[derive(Debug, Clone)]
pub struct ChebProxy {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl ChebProxy {
    pub fn build(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        let s = cheb::nodes(n);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let vals: Vec<f64> = s.iter().map(|&t| f(mid + half * t)).collect();
        ChebProxy {
            a,
            b,
            coeffs: cheb::vals_to_coeffs(&vals),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        cheb::clenshaw(&self.coeffs, t.clamp(-1.0, 1.0))
    }

    pub fn range(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn exact_on_linear_data() {
        let x = vec![0.0, 0.5, 1.2, 3.0];
        let y: Vec<f64> = x.iter().map(|&t| 2.0 * t - 1.0).collect();
        let m = MonotoneCubic::new(x, y);
        assert_relative_eq!(m.eval(0.9), 0.8, epsilon = 1e-14);
    }

    #[test]
    fn decreasing_abscissae_supported() {
        let x = vec![1.0, 0.4, -0.2, -1.0];
        let y = vec![0.0, 1.0, 3.0, 4.0];
        let m = MonotoneCubic::new(x, y);
        assert_relative_eq!(m.eval(0.4), 1.0, epsilon = 1e-14);
        assert!(m.eval(0.0) > 1.0 && m.eval(0.0) < 4.0);
    }

    #[test]
    fn cheb_proxy_hits_tight_tolerance() {
        let p = ChebProxy::build(|x| (x * 3.0).tanh(), -0.5, 0.5, 48);
        for &x in &[-0.49, -0.2, 0.0, 0.13, 0.5] {
            assert_relative_eq!(p.eval(x), (x * 3.0).tanh(), epsilon = 1e-13);
        }
    }

    proptest! {
        #[test]
        fn monotone_data_stays_monotone(seed in 0u64..500) {
            // deterministic pseudo-random monotone data from the seed
            let mut v = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut next = || {
                v ^= v >> 33;
                v = v.wrapping_mul(0xff51afd7ed558ccd);
                (v >> 11) as f64 / (1u64 << 53) as f64
            };
            let n = 8;
            let mut x = vec![0.0];
            let mut y = vec![0.0];
            for _ in 0..n {
                x.push(x.last().unwrap() + 0.05 + next());
                y.push(y.last().unwrap() + next());
            }
            let m = MonotoneCubic::new(x.clone(), y);
            let mut prev = m.eval(x[0]);
            let steps = 200;
            for i in 1..=steps {
                let xq = x[0] + (x[n] - x[0]) * i as f64 / steps as f64;
                let val = m.eval(xq);
                prop_assert!(val >= prev - 1e-12);
                prev = val;
            }
        }
    }
}
