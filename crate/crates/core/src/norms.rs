//! Integer-order Sobolev norms by collocation differentiation and
//! Clenshaw–Curtis quadrature, and the interpolation product standing in for
//! fractional orders.

use crate::error::ProfileError;
use crate::field2d::Field2D;
use crate::grid::GridFunction;

pub const MAX_ORDER: usize = 3;

/// L²-based Sobolev norm of integer order 0..=3 of a profile on [-1, 1].
pub fn sobolev_norm(f: &GridFunction, order: usize) -> Result<f64, ProfileError> {
    if order > MAX_ORDER {
        return Err(ProfileError::OrderTooHigh(order));
    }
    let mut acc = 0.0;
    let mut current = f.values.clone();
    for k in 0..=order {
        if k > 0 {
            current = f.grid.deriv(&current, 1);
        }
        let sq: Vec<f64> = current.iter().map(|&v| v * v).collect();
        acc += f.grid.integrate(&sq);
    }
    Ok(acc.max(0.0).sqrt())
}

/// 2D Sobolev norm on T_{2π/k} × (-1, 1); x-derivatives act as k ∂_ζ.
pub fn sobolev_norm_2d(f: &Field2D, k: f64, order: usize) -> Result<f64, ProfileError> {
    if order > MAX_ORDER {
        return Err(ProfileError::OrderTooHigh(order));
    }
    let mut acc = f.inner(f, k);
    // all mixed derivatives up to total order
    for total in 1..=order {
        for ax in 0..=total {
            let ay = total - ax;
            let mut g = f.clone();
            let mut kx = 1.0;
            if ax > 0 {
                // ∂_x = k ∂_ζ applied ax times
                for _ in 0..ax {
                    g = g.d_zeta(1);
                }
                kx = k.powi(ax as i32);
            }
            if ay > 0 {
                g = g.d_y(ay);
            }
            acc += kx * kx * g.inner(&g, k);
        }
    }
    Ok(acc.max(0.0).sqrt())
}

/// Interpolation bound ‖f‖_{s_lo}^{1-σ} ‖f‖_{s_hi}^{σ}, the artifact's
/// stand-in for the fractional norm of order s_lo + σ (s_hi - s_lo).
pub fn fractional_distance_bound(
    f: &GridFunction,
    s_lo: usize,
    s_hi: usize,
    sigma: f64,
) -> Result<f64, ProfileError> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(ProfileError::InvalidParams(format!(
            "sigma must lie in [0, 1], got {sigma}"
        )));
    }
    if s_lo >= s_hi {
        return Err(ProfileError::InvalidParams(
            "need s_lo < s_hi for the interpolation bound".into(),
        ));
    }
    let lo = sobolev_norm(f, s_lo)?;
    let hi = sobolev_norm(f, s_hi)?;
    if lo == 0.0 || hi == 0.0 {
        return Ok(0.0);
    }
    Ok(lo.powf(1.0 - sigma) * hi.powf(sigma))
}

/// Same interpolation product for 2D fields.
pub fn fractional_distance_bound_2d(
    f: &Field2D,
    k: f64,
    s_lo: usize,
    s_hi: usize,
    sigma: f64,
) -> Result<f64, ProfileError> {
    if !(0.0..=1.0).contains(&sigma) || s_lo >= s_hi {
        return Err(ProfileError::InvalidParams(
            "invalid interpolation exponents".into(),
        ));
    }
    let lo = sobolev_norm_2d(f, k, s_lo)?;
    let hi = sobolev_norm_2d(f, k, s_hi)?;
    if lo == 0.0 || hi == 0.0 {
        return Ok(0.0);
    }
    Ok(lo.powf(1.0 - sigma) * hi.powf(sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::FourierGrid;
    use crate::grid::Grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn constants_and_zero() {
        let g = Grid::cgl(64);
        let one = GridFunction::from_fn(&g, |_| 1.0);
        assert_relative_eq!(sobolev_norm(&one, 0).unwrap(), 2f64.sqrt(), epsilon = 1e-13);
        let zero = GridFunction::zeros(&g);
        assert_eq!(sobolev_norm(&zero, 3).unwrap(), 0.0);
        assert!(matches!(
            sobolev_norm(&one, 4),
            Err(ProfileError::OrderTooHigh(4))
        ));
    }

    #[test]
    fn sin_pi_y_h1() {
        // ∫ sin² + ∫ π² cos² = 1 + π²
        let g = Grid::cgl(96);
        let f = GridFunction::from_fn(&g, |y| (PI * y).sin());
        let h1 = sobolev_norm(&f, 1).unwrap();
        assert_relative_eq!(h1, (1.0 + PI * PI).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn interpolation_endpoints() {
        let g = Grid::cgl(64);
        let f = GridFunction::from_fn(&g, |y| (2.0 * y).cos());
        let h2 = sobolev_norm(&f, 2).unwrap();
        let b0 = fractional_distance_bound(&f, 2, 3, 0.0).unwrap();
        assert_relative_eq!(b0, h2, max_relative = 1e-12);
        let h3 = sobolev_norm(&f, 3).unwrap();
        let b1 = fractional_distance_bound(&f, 2, 3, 1.0).unwrap();
        assert_relative_eq!(b1, h3, max_relative = 1e-12);
    }

    #[test]
    fn norm_homogeneity() {
        let g = Grid::cgl(48);
        let f = GridFunction::from_fn(&g, |y| y * y - 0.3 * y);
        let f3 = GridFunction::from_fn(&g, |y| 3.0 * (y * y - 0.3 * y));
        for order in 0..=3 {
            assert_relative_eq!(
                sobolev_norm(&f3, order).unwrap(),
                3.0 * sobolev_norm(&f, order).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn two_dimensional_norm_against_closed_form() {
        let fg = Arc::new(FourierGrid::new(16));
        let yg = Grid::cgl(48);
        let f = Field2D::from_fn(&fg, &yg, |z, y| z.cos() * (PI * y).sin());
        // ||f||² = π·1, ||f_x||² = π·1, ||f_y||² = π·π²  (k = 1)
        let h1 = sobolev_norm_2d(&f, 1.0, 1).unwrap();
        assert_relative_eq!(
            h1,
            (PI * (2.0 + PI * PI)).sqrt(),
            max_relative = 1e-12
        );
    }
}
