//! Direct trigonometric transforms on a small uniform periodic grid. Sizes
//! are a few dozen points, so O(n^2) sums with precomputed tables beat the
//! bookkeeping of an FFT here.

use std::f64::consts::PI;

/// Uniform grid of `n` points on [0, 2π) with spectral differentiation and
/// cosine-mode analysis for even fields.
#[derive(Debug, Clone)]
pub struct FourierGrid {
    pub n: usize,
    pub zeta: Vec<f64>,
    cos_tab: Vec<f64>,
    sin_tab: Vec<f64>,
}

impl FourierGrid {
    pub fn new(n: usize) -> Self {
        assert!(n >= 4 && n % 2 == 0, "periodic grid size must be even, >= 4");
        let zeta: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        let mut cos_tab = vec![0.0; n * n];
        let mut sin_tab = vec![0.0; n * n];
        for m in 0..n {
            for i in 0..n {
                let arg = 2.0 * PI * (m * i % n) as f64 / n as f64;
                cos_tab[m * n + i] = arg.cos();
                sin_tab[m * n + i] = arg.sin();
            }
        }
        FourierGrid {
            n,
            zeta,
            cos_tab,
            sin_tab,
        }
    }

    /// Highest resolved cosine mode (Nyquist).
    pub fn max_mode(&self) -> usize {
        self.n / 2
    }

    /// Real Fourier coefficients (a_m, b_m), m = 0..=n/2, of samples `f`:
    /// f_i = Σ a_m cos(m ζ_i) + b_m sin(m ζ_i).
    pub fn analyze(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let half = n / 2;
        let mut a = vec![0.0; half + 1];
        let mut b = vec![0.0; half + 1];
        for m in 0..=half {
            let mut ca = 0.0;
            let mut sb = 0.0;
            for i in 0..n {
                ca += f[i] * self.cos_tab[m * n + i];
                sb += f[i] * self.sin_tab[m * n + i];
            }
            let scale = if m == 0 || m == half { 1.0 } else { 2.0 };
            a[m] = scale * ca / n as f64;
            b[m] = scale * sb / n as f64;
        }
        b[0] = 0.0;
        b[half] = 0.0;
        (a, b)
    }

    pub fn synthesize(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let half = n / 2;
        let mut f = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for m in 0..=half {
                s += a[m] * self.cos_tab[m * n + i] + b[m] * self.sin_tab[m * n + i];
            }
            f[i] = s;
        }
        f
    }

    /// Spectral derivative of order 1 or 2 in ζ.
    pub fn deriv(&self, f: &[f64], order: usize) -> Vec<f64> {
        let (a, b) = self.analyze(f);
        let half = self.n / 2;
        let mut da = vec![0.0; half + 1];
        let mut db = vec![0.0; half + 1];
        for m in 0..=half {
            let mf = m as f64;
            match order {
                1 => {
                    // d/dζ: cos -> -m sin, sin -> m cos. The Nyquist cosine
                    // mode has no representable sine partner; drop it, as its
                    // derivative is odd and aliases to zero on this grid.
                    if m < half {
                        da[m] = mf * b[m];
                        db[m] = -mf * a[m];
                    }
                }
                2 => {
                    da[m] = -mf * mf * a[m];
                    db[m] = -mf * mf * b[m];
                }
                _ => panic!("fourier derivative order must be 1 or 2"),
            }
        }
        self.synthesize(&da, &db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn analyze_synthesize_round_trip() {
        let g = FourierGrid::new(16);
        let f: Vec<f64> = g
            .zeta
            .iter()
            .map(|&z| 1.0 + 0.7 * (3.0 * z).cos() - 0.2 * (5.0 * z).sin())
            .collect();
        let (a, b) = g.analyze(&f);
        let back = g.synthesize(&a, &b);
        for i in 0..g.n {
            assert_relative_eq!(back[i], f[i], epsilon = 1e-12);
        }
        assert_relative_eq!(a[3], 0.7, epsilon = 1e-12);
        assert_relative_eq!(b[5], -0.2, epsilon = 1e-12);
    }

    #[test]
    fn derivatives_of_trig_modes() {
        let g = FourierGrid::new(32);
        let f: Vec<f64> = g.zeta.iter().map(|&z| (4.0 * z).cos()).collect();
        let d1 = g.deriv(&f, 1);
        let d2 = g.deriv(&f, 2);
        for i in 0..g.n {
            assert_relative_eq!(d1[i], -4.0 * (4.0 * g.zeta[i]).sin(), epsilon = 1e-11);
            assert_relative_eq!(d2[i], -16.0 * (4.0 * g.zeta[i]).cos(), epsilon = 1e-10);
        }
    }
}
