//! Piecewise tables for the scalar functions G and L of the steady-state
//! equation ΔΨ - G'(Ψ)/(2G(Ψ)) |∇Ψ|² = L(Ψ).
//!
//! On each half-channel the background stream function Ψ₀ = -∫₀^y u is
//! strictly monotone, so G and L are defined by composing the profiles with
//! its inverse. Evaluation inverts Ψ₀ exactly (monotone-cubic initial guess,
//! Newton polish on the spectral interpolant); beyond the attained stream
//! values (the recirculation interior, z > 0) both functions continue by
//! their quadratic Taylor models at the critical streamline.

use crate::error::LongError;
use crate::grid::GridFunction;
use crate::interp::MonotoneCubic;
use crate::profiles::{Provenance, ShearPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn of_y(y: f64) -> Side {
        if y < 0.0 {
            Side::Minus
        } else {
            Side::Plus
        }
    }
}

/// Pointwise table data at one stream value.
#[derive(Debug, Clone, Copy)]
pub struct TableValues {
    pub g: f64,
    pub g1: f64,
    pub g2: f64,
    pub l: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TableCertificates {
    /// max |G(Ψ₀(y_j)) - θ_j| over the nodes of each side
    pub composition_g: f64,
    /// max |L(Ψ₀(y_j)) - (-u' + θ'u/2θ)_j|
    pub composition_l: f64,
    /// largest misfit of the quadratic models over their fit window
    pub fit_residual_g: f64,
    pub fit_residual_l: f64,
    /// value/derivative gaps of G and L across the extension point
    pub c2_gap_g: f64,
    pub c1_gap_l: f64,
}

struct SideTable {
    inverse_guess: MonotoneCubic,
    z_min: f64,
}

/// G and L with their derivatives, plus the background stream function.
pub struct GlTables {
    pub pair: ShearPair,
    pub psi0: GridFunction,
    pub certificates: TableCertificates,
    minus: SideTable,
    plus: SideTable,
    /// |z| below which the Taylor models replace the inverse composition.
    z_switch: f64,
    // Taylor data at z = 0: G0 + G1 z + G2 z²/... (quadratic extension)
    g0: f64,
    g1: f64,
    g2: f64,
    l0: f64,
    l1: f64,
    l2: f64,
    parab_z: f64,
    u1: f64,
}

impl std::fmt::Debug for GlTables {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GlTables")
            .field("z_range", &(self.minus.z_min, self.plus.z_min))
            .field("certificates", &self.certificates)
            .finish()
    }
}

fn l_of_y(pair: &ShearPair, y: f64) -> f64 {
    let u = pair.u.eval(y);
    let up = pair.u.eval_d1(y);
    let th = pair.theta.eval(y);
    let t1 = pair.theta.eval_d1(y);
    -up + t1 / (2.0 * th) * u
}

fn g1_of_y(pair: &ShearPair, y: f64) -> f64 {
    -pair.theta.eval_d1(y) / pair.u.eval(y)
}

fn g2_of_y(pair: &ShearPair, y: f64) -> f64 {
    let u = pair.u.eval(y);
    let up = pair.u.eval_d1(y);
    let t1 = pair.theta.eval_d1(y);
    let t2 = pair.theta.eval_d2(y);
    (t2 * u - t1 * up) / (u * u * u)
}

fn l1_of_y(pair: &ShearPair, y: f64) -> f64 {
    let u = pair.u.eval(y);
    let up = pair.u.eval_d1(y);
    let u2 = pair.u.eval_d2(y);
    let th = pair.theta.eval(y);
    let t1 = pair.theta.eval_d1(y);
    let t2 = pair.theta.eval_d2(y);
    -(-u2 + (t2 * u + t1 * up) / (2.0 * th) - t1 * t1 * u / (2.0 * th * th)) / u
}

/// Build the tables for a (typically perturbed) pair.
pub fn build_gl(pair: &ShearPair) -> Result<GlTables, LongError> {
    let grid = &pair.grid;
    let n = grid.n;
    assert!(n % 2 == 0, "tables need an even collocation order");
    let mid = n / 2;

    // Ψ₀ = -∫₀^y u, spectrally integrated, exact zero at the center node
    let minus_u: Vec<f64> = pair.u.values.iter().map(|&v| -v).collect();
    let mut psi_vals = grid.antiderivative_from_zero(&minus_u);
    psi_vals[mid] = 0.0;
    for (j, w) in psi_vals.iter().enumerate() {
        if j != mid && *w >= 0.0 {
            return Err(LongError::InversionFailure(grid.y[j]));
        }
    }
    let psi0 = GridFunction::new(grid.clone(), psi_vals.clone());

    let side_table = |range: Vec<usize>| -> SideTable {
        let z: Vec<f64> = range.iter().map(|&j| psi_vals[j]).collect();
        let yv: Vec<f64> = range.iter().map(|&j| grid.y[j]).collect();
        let z_min = z.iter().cloned().fold(f64::INFINITY, f64::min);
        SideTable {
            inverse_guess: MonotoneCubic::new(z, yv),
            z_min,
        }
    };
    let plus = side_table((mid..=n).collect());
    let minus = side_table((0..=mid).rev().collect());

    // analytic Taylor data at the critical streamline
    let u1 = pair.u.eval_d1(0.0);
    let th0 = pair.theta.eval(0.0);
    let th2 = pair.theta.eval_d2(0.0);
    let u3 = pair.u.eval_d3(0.0);
    let g0 = th0;
    let g1 = -th2 / u1;
    let l0 = -u1;
    let l1 = u3 / u1 - th2 / th0;

    // curvature of G and L at z = 0 by an anchored least-squares fit over a
    // window on the plus side where the composition is still analytic
    let w_scale = match pair.provenance {
        Provenance::Perturbed { delta, gamma, eta } => delta.min(gamma).min(eta),
        Provenance::Modified { delta } => delta,
        Provenance::Raw => 0.25,
    };
    let (fit_lo, fit_hi) = (w_scale / 40.0, w_scale / 4.0);
    let npts = 48;
    let mut zs = Vec::with_capacity(npts);
    let mut gres = Vec::with_capacity(npts);
    let mut lres = Vec::with_capacity(npts);
    for i in 0..npts {
        let y = fit_lo + (fit_hi - fit_lo) * i as f64 / (npts - 1) as f64;
        let z = psi0.eval(y);
        zs.push(z);
        gres.push(pair.theta.eval(y) - g0 - g1 * z);
        lres.push(l_of_y(pair, y) - l0 - l1 * z);
    }
    let zmax = zs.iter().fold(0.0f64, |a, &z| a.max(z.abs()));
    let fit_quad = |res: &[f64]| -> (f64, f64, f64) {
        // res ≈ c z² + d z³ in the scaled variable t = z / zmax
        let (mut s22, mut s23, mut s33, mut r2, mut r3) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&z, &r) in zs.iter().zip(res.iter()) {
            let t = z / zmax;
            let t2 = t * t;
            let t3 = t2 * t;
            s22 += t2 * t2;
            s23 += t2 * t3;
            s33 += t3 * t3;
            r2 += t2 * r;
            r3 += t3 * r;
        }
        let det = s22 * s33 - s23 * s23;
        let c_scaled = (r2 * s33 - r3 * s23) / det;
        let d_scaled = (s22 * r3 - s23 * r2) / det;
        let c = c_scaled / (zmax * zmax);
        let d = d_scaled / (zmax * zmax * zmax);
        let mut worst = 0.0f64;
        for (&z, &r) in zs.iter().zip(res.iter()) {
            worst = worst.max((r - c * z * z - d * z * z * z).abs());
        }
        (c, d, worst)
    };
    let (gc, _gd, fit_residual_g) = fit_quad(&gres);
    let (lc, _ld, fit_residual_l) = fit_quad(&lres);
    let g2 = 2.0 * gc; // G''(0)
    let l2 = 2.0 * lc;

    let z_switch = psi0.eval(1e-4).abs().max(psi0.eval(-1e-4).abs());
    let parab_z = psi0.eval(fit_hi).abs().min(psi0.eval(-fit_hi).abs());

    let mut tables = GlTables {
        pair: pair.clone(),
        psi0,
        certificates: TableCertificates {
            composition_g: 0.0,
            composition_l: 0.0,
            fit_residual_g,
            fit_residual_l,
            c2_gap_g: 0.0,
            c1_gap_l: 0.0,
        },
        minus,
        plus,
        z_switch,
        g0,
        g1,
        g2,
        l0,
        l1,
        l2,
        parab_z,
        u1,
    };

    // composition certificates on the nodes
    let mut worst_g = 0.0f64;
    let mut worst_l = 0.0f64;
    for j in 0..=n {
        let y = grid.y[j];
        let side = if j < mid { Side::Minus } else { Side::Plus };
        let v = tables
            .eval(tables.psi0.values[j], side)
            .map_err(|_| LongError::InversionFailure(y))?;
        worst_g = worst_g.max((v.g - pair.theta.values[j]).abs());
        worst_l = worst_l.max((v.l - l_of_y(pair, y)).abs());
    }
    tables.certificates.composition_g = worst_g;
    tables.certificates.composition_l = worst_l;

    // continuity across the extension point: compare the models against the
    // exact composition just outside the model region
    let zc = -8.0 * z_switch;
    let mut gap_g = 0.0f64;
    let mut gap_l = 0.0f64;
    for side in [Side::Minus, Side::Plus] {
        let v = tables.eval(zc, side).map_err(|_| LongError::InversionFailure(0.0))?;
        gap_g = gap_g.max((v.g - (g0 + g1 * zc + 0.5 * g2 * zc * zc)).abs());
        gap_g = gap_g.max((v.g1 - (g1 + g2 * zc)).abs() * zc.abs());
        gap_l = gap_l.max((v.l - (l0 + l1 * zc + 0.5 * l2 * zc * zc)).abs());
    }
    tables.certificates.c2_gap_g = gap_g;
    tables.certificates.c1_gap_l = gap_l;

    Ok(tables)
}

impl GlTables {
    pub fn z_min(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.minus.z_min,
            Side::Plus => self.plus.z_min,
        }
    }

    /// Invert Ψ₀ on the given side: monotone-cubic guess (or the parabolic
    /// asymptote near the vertex), then safeguarded Newton on the spectral
    /// interpolant.
    fn invert(&self, z: f64, side: Side) -> Result<f64, LongError> {
        let (table, sgn, wall) = match side {
            Side::Minus => (&self.minus, -1.0, -1.0f64),
            Side::Plus => (&self.plus, 1.0, 1.0),
        };
        let mut guess = if z.abs() < self.parab_z {
            sgn * (2.0 * z.abs() / self.u1).sqrt()
        } else {
            table.inverse_guess.eval(z)
        };
        let (mut lo, mut hi) = if sgn > 0.0 { (0.0, wall) } else { (wall, 0.0) };
        guess = guess.clamp(lo, hi);
        let scale = self.z_min(side).abs().max(1e-30);
        let mut y = guess;
        for _ in 0..80 {
            let f = self.psi0.eval(y) - z;
            if f.abs() <= 1e-13 * scale {
                return Ok(y);
            }
            // Ψ₀ decreases in y on the plus side and increases on the minus
            // side; y lies below the root iff f carries the matching sign
            let below = if sgn > 0.0 { f > 0.0 } else { f < 0.0 };
            if below {
                lo = y;
            } else {
                hi = y;
            }
            let du = -self.pair.u.eval(y);
            let newton = if du != 0.0 { y - f / du } else { f64::NAN };
            y = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let f = self.psi0.eval(y) - z;
        if f.abs() <= 1e-10 * scale {
            Ok(y)
        } else {
            Err(LongError::InversionFailure(y))
        }
    }

    /// G, G', G'', L, L' at stream value `z` on the given side.
    pub fn eval(&self, z: f64, side: Side) -> Result<TableValues, LongError> {
        let z_min = self.z_min(side);
        let range = z_min.abs();
        if z < z_min - 1e-9 * range {
            return Err(LongError::DomainExceeded { z, lo: z_min });
        }
        let z = z.max(z_min);
        if z >= -self.z_switch {
            // quadratic Taylor models: the extension region and the sliver
            // around the critical streamline share them
            return Ok(TableValues {
                g: self.g0 + self.g1 * z + 0.5 * self.g2 * z * z,
                g1: self.g1 + self.g2 * z,
                g2: self.g2,
                l: self.l0 + self.l1 * z + 0.5 * self.l2 * z * z,
                l1: self.l1 + self.l2 * z,
            });
        }
        let y = self.invert(z, side)?;
        Ok(TableValues {
            g: self.pair.theta.eval(y),
            g1: g1_of_y(&self.pair, y),
            g2: g2_of_y(&self.pair, y),
            l: l_of_y(&self.pair, y),
            l1: l1_of_y(&self.pair, y),
        })
    }

    /// Largest admissible stream value shift before leaving the table range
    /// (used to pre-check candidate states).
    pub fn headroom(&self) -> f64 {
        self.minus.z_min.abs().min(self.plus.z_min.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::profiles::ShearPair;
    use approx::assert_relative_eq;

    #[test]
    fn couette_tables_are_constants() {
        let pair = ShearPair::preset("couette", &Grid::cgl(128)).unwrap();
        let t = build_gl(&pair).unwrap();
        // Ψ₀ = -y²/2, G ≡ 1, L ≡ -1
        assert_relative_eq!(t.psi0.eval(0.6), -0.18, epsilon = 1e-12);
        for side in [Side::Minus, Side::Plus] {
            for &z in &[-0.45, -0.2, -0.01, 0.0, 0.05] {
                let v = t.eval(z, side).unwrap();
                assert_relative_eq!(v.g, 1.0, epsilon = 1e-10);
                assert_relative_eq!(v.l, -1.0, epsilon = 1e-10);
                assert!(v.g1.abs() < 1e-9 && v.l1.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn composition_certificates_hold() {
        let g = Grid::cgl(256);
        let pair = ShearPair::preset("poly", &g).unwrap();
        let t = build_gl(&pair).unwrap();
        assert!(t.certificates.composition_g < 1e-9, "{:?}", t.certificates);
        assert!(t.certificates.composition_l < 1e-9, "{:?}", t.certificates);
        // random off-node checks of the defining identity
        for i in 0..20 {
            let y = -0.95 + 1.9 * (i as f64 * 0.618) % 1.9_f64.min(1.9);
            let y = y.clamp(-0.95, 0.95);
            let z = t.psi0.eval(y);
            let v = t.eval(z, Side::of_y(y)).unwrap();
            assert_relative_eq!(v.g, pair.theta.eval(y), epsilon = 1e-9);
        }
    }

    #[test]
    fn flat_density_near_critical_streamline() {
        // the modification forces θ' = 0 near 0, so G(z) ≈ θ(0) near z = 0
        let g = Grid::cgl(256);
        let base = ShearPair::preset("tanh", &g).unwrap();
        let pair = crate::profiles::modify_profiles(&base, 0.15).unwrap();
        let t = build_gl(&pair).unwrap();
        let th0 = pair.theta.eval(0.0);
        for &z in &[-1e-5, 0.0, 1e-5] {
            let v = t.eval(z, Side::Plus).unwrap();
            assert_relative_eq!(v.g, th0, epsilon = 1e-8);
        }
        assert!(t.certificates.c2_gap_g < 1e-10);
        assert!(t.certificates.c1_gap_l < 1e-8);
    }

    #[test]
    fn domain_exceeded_below_the_attained_range() {
        let pair = ShearPair::preset("couette", &Grid::cgl(64)).unwrap();
        let t = build_gl(&pair).unwrap();
        let z_min = t.z_min(Side::Plus);
        assert_relative_eq!(z_min, -0.5, epsilon = 1e-10);
        assert!(matches!(
            t.eval(z_min - 1e-3, Side::Plus),
            Err(LongError::DomainExceeded { .. })
        ));
        // large positive values stay in the extension
        assert!(t.eval(0.3, Side::Plus).is_ok());
    }
}
