//! Real scalar fields on the Fourier(ζ) × Chebyshev(y) grid.

use crate::fourier::FourierGrid;
use crate::grid::Grid;
use nalgebra::DMatrix;
use std::sync::Arc;

/// f(ζ_i, y_j) stored row-major in ζ.
#[derive(Debug, Clone)]
pub struct Field2D {
    pub fgrid: Arc<FourierGrid>,
    pub ygrid: Arc<Grid>,
    pub data: DMatrix<f64>,
}

impl Field2D {
    pub fn zeros(fgrid: &Arc<FourierGrid>, ygrid: &Arc<Grid>) -> Self {
        Field2D {
            fgrid: fgrid.clone(),
            ygrid: ygrid.clone(),
            data: DMatrix::zeros(fgrid.n, ygrid.len()),
        }
    }

    pub fn from_fn(
        fgrid: &Arc<FourierGrid>,
        ygrid: &Arc<Grid>,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let data = DMatrix::from_fn(fgrid.n, ygrid.len(), |i, j| f(fgrid.zeta[i], ygrid.y[j]));
        Field2D {
            fgrid: fgrid.clone(),
            ygrid: ygrid.clone(),
            data,
        }
    }

    /// Broadcast of a y-profile across ζ.
    pub fn from_profile(fgrid: &Arc<FourierGrid>, ygrid: &Arc<Grid>, vals: &[f64]) -> Self {
        let data = DMatrix::from_fn(fgrid.n, ygrid.len(), |_, j| vals[j]);
        Field2D {
            fgrid: fgrid.clone(),
            ygrid: ygrid.clone(),
            data,
        }
    }

    pub fn same_shape(&self, other: &Field2D) -> bool {
        self.fgrid.n == other.fgrid.n && self.ygrid.len() == other.ygrid.len()
    }

    /// ∂/∂ζ of the given order (1 or 2).
    pub fn d_zeta(&self, order: usize) -> Field2D {
        let mut out = self.clone();
        let ny = self.ygrid.len();
        let n = self.fgrid.n;
        let mut col = vec![0.0; n];
        for j in 0..ny {
            for i in 0..n {
                col[i] = self.data[(i, j)];
            }
            let d = self.fgrid.deriv(&col, order);
            for i in 0..n {
                out.data[(i, j)] = d[i];
            }
        }
        out
    }

    /// ∂/∂y of the given order (1..=3).
    pub fn d_y(&self, order: usize) -> Field2D {
        let d = self.ygrid.dmat(order);
        Field2D {
            fgrid: self.fgrid.clone(),
            ygrid: self.ygrid.clone(),
            data: &self.data * d.transpose(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field2D {
        let mut out = self.clone();
        out.data.apply(|v| *v = f(*v));
        out
    }

    pub fn zip(&self, other: &Field2D, f: impl Fn(f64, f64) -> f64) -> Field2D {
        assert!(self.same_shape(other));
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(other.data.iter()) {
            *o = f(*o, *b);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Field2D {
        let mut out = self.clone();
        out.data *= s;
        out
    }

    pub fn add(&self, other: &Field2D) -> Field2D {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field2D) -> Field2D {
        self.zip(other, |a, b| a - b)
    }

    /// Physical inner product on T_{2π/k} × (-1, 1): dx = dζ / k.
    pub fn inner(&self, other: &Field2D, k: f64) -> f64 {
        assert!(self.same_shape(other));
        let dz = 2.0 * std::f64::consts::PI / self.fgrid.n as f64 / k;
        let mut acc = 0.0;
        for j in 0..self.ygrid.len() {
            let wj = self.ygrid.w[j];
            let mut col = 0.0;
            for i in 0..self.fgrid.n {
                col += self.data[(i, j)] * other.data[(i, j)];
            }
            acc += wj * col;
        }
        acc * dz
    }

    pub fn l2_norm(&self, k: f64) -> f64 {
        self.inner(self, k).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn derivatives_and_norms() {
        let fg = Arc::new(FourierGrid::new(32));
        let yg = Grid::cgl(48);
        let f = Field2D::from_fn(&fg, &yg, |z, y| (2.0 * z).cos() * (1.0 - y * y));
        let fz = f.d_zeta(1);
        let fy = f.d_y(1);
        for i in [0usize, 5, 17] {
            for j in [3usize, 20, 40] {
                let (z, y) = (fg.zeta[i], yg.y[j]);
                assert_relative_eq!(
                    fz.data[(i, j)],
                    -2.0 * (2.0 * z).sin() * (1.0 - y * y),
                    epsilon = 1e-10
                );
                assert_relative_eq!(
                    fy.data[(i, j)],
                    (2.0 * z).cos() * (-2.0 * y),
                    epsilon = 1e-10
                );
            }
        }
        // ||cos(2ζ)||^2 over the period is π; ∫(1-y²)² dy = 16/15
        let n2 = f.inner(&f, 1.0);
        assert_relative_eq!(n2, PI * 16.0 / 15.0, max_relative = 1e-12);
    }

    #[test]
    fn mixed_partials_commute() {
        let fg = Arc::new(FourierGrid::new(16));
        let yg = Grid::cgl(32);
        let f = Field2D::from_fn(&fg, &yg, |z, y| z.cos() * (0.5 * y).sin() + 0.3 * (2.0 * z).cos());
        let a = f.d_zeta(1).d_y(1);
        let b = f.d_y(1).d_zeta(1);
        let diff = a.sub(&b).max_abs();
        assert!(diff < 1e-10, "commutator {diff}");
    }
}
