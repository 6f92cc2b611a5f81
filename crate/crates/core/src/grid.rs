//! Collocation grid on [-1, 1]: plain Chebyshev–Gauss–Lobatto nodes or a
//! sinh-stretched variant that concentrates resolution near y = 0, where the
//! modified profiles carry their small-scale structure.

use crate::cheb;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Node mapping from the CGL parameter `s` to the physical coordinate `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridMap {
    /// y = s
    Identity,
    /// y = sinh(a s) / sinh(a); clusters nodes near y = 0 for a > 0.
    Sinh { a: f64 },
}

impl GridMap {
    fn forward(&self, s: f64) -> f64 {
        match self {
            GridMap::Identity => s,
            GridMap::Sinh { a } => (a * s).sinh() / a.sinh(),
        }
    }

    fn inverse(&self, y: f64) -> f64 {
        match self {
            GridMap::Identity => y,
            GridMap::Sinh { a } => (y * a.sinh()).asinh() / a,
        }
    }

    fn deriv(&self, s: f64) -> f64 {
        match self {
            GridMap::Identity => 1.0,
            GridMap::Sinh { a } => a * (a * s).cosh() / a.sinh(),
        }
    }
}

/// Collocation grid of order `n` (`n + 1` nodes) with differentiation up to
/// order 3 and Clenshaw–Curtis quadrature in the physical coordinate.
#[derive(Debug)]
pub struct Grid {
    pub n: usize,
    pub map: GridMap,
    /// CGL parameter nodes, increasing.
    pub s: Vec<f64>,
    /// Physical nodes, increasing, endpoints exactly ±1.
    pub y: Vec<f64>,
    /// Physical quadrature weights.
    pub w: Vec<f64>,
    /// Barycentric weights in the parameter.
    pub bw: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    d3: DMatrix<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.map == other.map
    }
}

impl Grid {
    /// Plain Chebyshev–Gauss–Lobatto grid of order `n`.
    pub fn cgl(n: usize) -> Arc<Grid> {
        Self::build(n, GridMap::Identity)
    }

    /// Sinh-mapped grid; `a = 0` falls back to the identity map.
    pub fn mapped(n: usize, a: f64) -> Arc<Grid> {
        if a == 0.0 {
            Self::build(n, GridMap::Identity)
        } else {
            Self::build(n, GridMap::Sinh { a })
        }
    }

    /// Smallest map strength whose center spacing resolves `width` with
    /// roughly `pts` nodes, capped at a = 6. Returns 0 when no map is needed.
    pub fn auto_map_strength(n: usize, width: f64, pts: f64) -> f64 {
        let target = (n as f64) * width / (pts * std::f64::consts::PI);
        if target >= 1.0 {
            return 0.0;
        }
        // a / sinh(a) is decreasing; bisect
        let f = |a: f64| a / a.sinh() - target;
        let (mut lo, mut hi) = (1e-8, 6.0);
        if f(hi) > 0.0 {
            return 6.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn build(n: usize, map: GridMap) -> Arc<Grid> {
        assert!(n >= 16, "collocation order must be at least 16");
        let s = cheb::nodes(n);
        let bw = cheb::bary_weights(n);
        let ds = cheb::diff_matrix(&s, &bw);
        let ws = cheb::cc_weights(n);

        let mut y: Vec<f64> = s.iter().map(|&si| map.forward(si)).collect();
        y[0] = -1.0;
        y[n] = 1.0;
        if n % 2 == 0 {
            y[n / 2] = 0.0;
        }
        let gp: Vec<f64> = s.iter().map(|&si| map.deriv(si)).collect();
        let w: Vec<f64> = ws.iter().zip(&gp).map(|(&wi, &g)| wi * g).collect();

        // d/dy = diag(1/g') d/ds; higher orders by composition
        let mut d1 = ds;
        for i in 0..=n {
            let inv = 1.0 / gp[i];
            for j in 0..=n {
                d1[(i, j)] *= inv;
            }
        }
        let d2 = &d1 * &d1;
        let d3 = &d1 * &d2;

        Arc::new(Grid {
            n,
            map,
            s,
            y,
            w,
            bw,
            d1,
            d2,
            d3,
        })
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dmat(&self, order: usize) -> &DMatrix<f64> {
        match order {
            1 => &self.d1,
            2 => &self.d2,
            3 => &self.d3,
            _ => panic!("differentiation order must be 1..=3"),
        }
    }

    /// Apply the derivative matrix of the given order to nodal values.
    pub fn deriv(&self, vals: &[f64], order: usize) -> Vec<f64> {
        let d = self.dmat(order);
        let m = self.len();
        let mut out = vec![0.0; m];
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                acc += d[(i, j)] * vals[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Quadrature of nodal values over [-1, 1].
    pub fn integrate(&self, vals: &[f64]) -> f64 {
        vals.iter().zip(&self.w).map(|(&v, &wi)| v * wi).sum()
    }

    /// Barycentric evaluation of nodal values at an arbitrary y in [-1, 1].
    pub fn eval(&self, vals: &[f64], y: f64) -> f64 {
        let sq = self.map.inverse(y.clamp(-1.0, 1.0));
        cheb::bary_eval(&self.s, vals, &self.bw, sq)
    }

    /// Antiderivative anchored so that the result vanishes at y = 0.
    pub fn antiderivative_from_zero(&self, vals: &[f64]) -> Vec<f64> {
        // integrate (f ∘ g) g' in the parameter
        let integrand: Vec<f64> = vals
            .iter()
            .zip(self.s.iter())
            .map(|(&v, &si)| v * self.map.deriv(si))
            .collect();
        let a = cheb::vals_to_coeffs(&integrand);
        let b = cheb::antiderivative_coeffs(&a);
        let at_zero = cheb::clenshaw(&b, 0.0);
        self.s
            .iter()
            .map(|&si| cheb::clenshaw(&b, si) - at_zero)
            .collect()
    }
}

/// Real-valued function sampled on a collocation grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.y.iter().map(|&y| f(y)).collect();
        GridFunction {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        GridFunction {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.grid.eval(&self.values, y)
    }

    pub fn derivative(&self, order: usize) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.grid.deriv(&self.values, order),
        }
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mapped_grid_differentiates_through_the_map() {
        let g = Grid::mapped(64, 4.0);
        let f: Vec<f64> = g.y.iter().map(|&y| (2.0 * y).sin()).collect();
        let fp = g.deriv(&f, 1);
        for (j, &y) in g.y.iter().enumerate() {
            assert_relative_eq!(fp[j], 2.0 * (2.0 * y).cos(), epsilon = 1e-8);
        }
    }

    #[test]
    fn mapped_weights_integrate() {
        let g = Grid::mapped(96, 5.0);
        let f: Vec<f64> = g.y.iter().map(|&y| y * y).collect();
        assert_relative_eq!(g.integrate(&f), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn antiderivative_vanishes_at_zero_and_matches() {
        for a in [0.0, 3.0] {
            let g = Grid::mapped(80, a);
            let f: Vec<f64> = g.y.iter().map(|&y| y.cos()).collect();
            let ff = g.antiderivative_from_zero(&f);
            let gf = GridFunction::new(g.clone(), ff);
            assert_relative_eq!(gf.eval(0.0), 0.0, epsilon = 1e-12);
            assert_relative_eq!(gf.eval(0.7), (0.7f64).sin(), epsilon = 1e-10);
            assert_relative_eq!(gf.eval(-0.4), (-0.4f64).sin(), epsilon = 1e-10);
        }
    }

    #[test]
    fn center_spacing_shrinks_under_map() {
        let n = 128;
        let plain = Grid::cgl(n);
        let mapped = Grid::mapped(n, 5.0);
        let mid = n / 2;
        let dp = plain.y[mid + 1] - plain.y[mid];
        let dm = mapped.y[mid + 1] - mapped.y[mid];
        assert!(dm < 0.1 * dp);
    }

    #[test]
    fn auto_map_strength_resolves_width() {
        let n = 512;
        let a = Grid::auto_map_strength(n, 0.01, 8.0);
        assert!(a > 0.0);
        let g = Grid::mapped(n, a);
        let mid = n / 2;
        let spacing = g.y[mid + 1] - g.y[mid];
        assert!(spacing <= 0.01 / 7.0);
    }
}
