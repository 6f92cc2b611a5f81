//! Shear/density profile construction: base pairs (presets or tabulated),
//! the cutoff modification that linearizes the velocity and flattens the
//! density near y = 0, and the bump perturbations that shift the smallest
//! eigenvalue of the associated operator.

use crate::bumps::BumpPair;
use crate::error::ProfileError;
use crate::grid::{Grid, GridFunction};
use crate::interp::{ChebProxy, MonotoneCubic};
use std::path::Path;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closure bundle for a profile and its first three derivatives.
#[derive(Clone)]
pub struct CurveFns {
    pub f: ScalarFn,
    pub d1: ScalarFn,
    pub d2: ScalarFn,
    pub d3: ScalarFn,
}

/// One profile on a grid: nodal values of the function and derivatives, plus
/// (when available) the analytic closures they were sampled from.
#[derive(Clone)]
pub struct Curve {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
    fns: Option<CurveFns>,
}

impl std::fmt::Debug for Curve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Curve")
            .field("n", &self.grid.n)
            .field("analytic", &self.fns.is_some())
            .finish()
    }
}

impl Curve {
    pub fn from_fns(grid: &Arc<Grid>, fns: CurveFns) -> Curve {
        let values = grid.y.iter().map(|&y| (fns.f)(y)).collect();
        let d1 = grid.y.iter().map(|&y| (fns.d1)(y)).collect();
        let d2 = grid.y.iter().map(|&y| (fns.d2)(y)).collect();
        let d3 = grid.y.iter().map(|&y| (fns.d3)(y)).collect();
        Curve {
            grid: grid.clone(),
            values,
            d1,
            d2,
            d3,
            fns: Some(fns),
        }
    }

    /// Sampled curve; derivatives come from the collocation matrices.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Curve {
        let d1 = grid.deriv(&values, 1);
        let d2 = grid.deriv(&values, 2);
        let d3 = grid.deriv(&values, 3);
        Curve {
            grid: grid.clone(),
            values,
            d1,
            d2,
            d3,
            fns: None,
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match &self.fns {
            Some(fns) => (fns.f)(y),
            None => self.grid.eval(&self.values, y),
        }
    }

    pub fn eval_d1(&self, y: f64) -> f64 {
        match &self.fns {
            Some(fns) => (fns.d1)(y),
            None => self.grid.eval(&self.d1, y),
        }
    }

    pub fn eval_d2(&self, y: f64) -> f64 {
        match &self.fns {
            Some(fns) => (fns.d2)(y),
            None => self.grid.eval(&self.d2, y),
        }
    }

    pub fn eval_d3(&self, y: f64) -> f64 {
        match &self.fns {
            Some(fns) => (fns.d3)(y),
            None => self.grid.eval(&self.d3, y),
        }
    }

    pub fn as_grid_function(&self) -> GridFunction {
        GridFunction::new(self.grid.clone(), self.values.clone())
    }
}

/// How a pair was produced; the perturbation step requires a modified pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Raw,
    Modified { delta: f64 },
    Perturbed { delta: f64, gamma: f64, eta: f64 },
}

/// A (velocity, inverse-density) pair with positivity margin `c0`.
#[derive(Clone, Debug)]
pub struct ShearPair {
    pub grid: Arc<Grid>,
    pub u: Curve,
    pub theta: Curve,
    /// min over nodes of min(u', theta); both stay above this margin.
    pub c0: f64,
    pub provenance: Provenance,
}

/// Cutoff half-width and bump strengths/widths for the two-stage
/// modification of a base pair.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModificationParams {
    pub delta: f64,
    pub m: f64,
    pub l: f64,
    pub gamma: f64,
    pub eta: f64,
}

pub const MAX_STRENGTH: f64 = 16.0;

impl ModificationParams {
    pub fn validate(&self) -> Result<(), ProfileError> {
        if !(self.delta > 0.0 && self.delta < 0.25) {
            return Err(ProfileError::InvalidParams(format!(
                "delta must lie in (0, 1/4), got {}",
                self.delta
            )));
        }
        for (name, w) in [("gamma", self.gamma), ("eta", self.eta)] {
            if !(w > 0.0 && w <= self.delta) {
                return Err(ProfileError::InvalidParams(format!(
                    "{name} must lie in (0, delta], got {w}"
                )));
            }
        }
        for (name, s) in [("m", self.m), ("l", self.l)] {
            if s.abs() > MAX_STRENGTH {
                return Err(ProfileError::InvalidParams(format!(
                    "|{name}| exceeds the configured bound {MAX_STRENGTH}"
                )));
            }
        }
        Ok(())
    }
}

impl ShearPair {
    pub fn from_fns(
        grid: &Arc<Grid>,
        u: CurveFns,
        theta: CurveFns,
        provenance: Provenance,
    ) -> Result<ShearPair, ProfileError> {
        let u = Curve::from_fns(grid, u);
        let theta = Curve::from_fns(grid, theta);
        Self::assemble(grid.clone(), u, theta, provenance)
    }

    fn assemble(
        grid: Arc<Grid>,
        u: Curve,
        theta: Curve,
        provenance: Provenance,
    ) -> Result<ShearPair, ProfileError> {
        let mut c0 = f64::INFINITY;
        for i in 0..grid.len() {
            if u.d1[i] <= 0.0 {
                return Err(ProfileError::MonotonicityLost {
                    y: grid.y[i],
                    value: u.d1[i],
                    floor: 0.0,
                });
            }
            if theta.values[i] <= 0.0 {
                return Err(ProfileError::PositivityLost {
                    y: grid.y[i],
                    value: theta.values[i],
                    floor: 0.0,
                });
            }
            c0 = c0.min(u.d1[i]).min(theta.values[i]);
        }
        let u0 = u.eval(0.0);
        if u0.abs() > 1e-8 {
            return Err(ProfileError::InvalidParams(format!(
                "u(0) = {u0} is not zero within tolerance"
            )));
        }
        Ok(ShearPair {
            grid,
            u,
            theta,
            c0,
            provenance,
        })
    }

    /// Named presets used throughout the test suites: "couette", "tanh"
    /// (shifted so the velocity has curvature at the center), "poly".
    pub fn preset(name: &str, grid: &Arc<Grid>) -> Result<ShearPair, ProfileError> {
        let (u, theta) = match name {
            "couette" => (
                CurveFns {
                    f: Arc::new(|y| y),
                    d1: Arc::new(|_| 1.0),
                    d2: Arc::new(|_| 0.0),
                    d3: Arc::new(|_| 0.0),
                },
                CurveFns {
                    f: Arc::new(|_| 1.0),
                    d1: Arc::new(|_| 0.0),
                    d2: Arc::new(|_| 0.0),
                    d3: Arc::new(|_| 0.0),
                },
            ),
            "tanh" => {
                let a = 1.2;
                let b = 0.4;
                let t0 = (b as f64).tanh();
                (
                    CurveFns {
                        f: Arc::new(move |y| (a * y + b).tanh() - t0),
                        d1: Arc::new(move |y| {
                            let t = (a * y + b).tanh();
                            a * (1.0 - t * t)
                        }),
                        d2: Arc::new(move |y| {
                            let t = (a * y + b).tanh();
                            -2.0 * a * a * t * (1.0 - t * t)
                        }),
                        d3: Arc::new(move |y| {
                            let t = (a * y + b).tanh();
                            -2.0 * a * a * a * (1.0 - t * t) * (1.0 - 3.0 * t * t)
                        }),
                    },
                    CurveFns {
                        f: Arc::new(|y| 1.4 + 0.4 * y + 0.3 * y * y),
                        d1: Arc::new(|y| 0.4 + 0.6 * y),
                        d2: Arc::new(|_| 0.6),
                        d3: Arc::new(|_| 0.0),
                    },
                )
            }
            "poly" => (
                CurveFns {
                    f: Arc::new(|y| y + 0.3 * y * y * y),
                    d1: Arc::new(|y| 1.0 + 0.9 * y * y),
                    d2: Arc::new(|y| 1.8 * y),
                    d3: Arc::new(|_| 1.8),
                },
                CurveFns {
                    f: Arc::new(|y| 2.0 + 0.5 * y * y),
                    d1: Arc::new(|y| y),
                    d2: Arc::new(|_| 1.0),
                    d3: Arc::new(|_| 0.0),
                },
            ),
            "sinwell" => return Self::sinwell(0.55, 0.3, grid),
            other => {
                return Err(ProfileError::InvalidParams(format!(
                    "unknown preset '{other}'"
                )))
            }
        };
        Self::from_fns(grid, u, theta, Provenance::Raw)
    }

    /// Monotone shear with a smooth O(1)-width potential well:
    /// u = y + a sin(πy)/π, θ = 1 + b(1 - cos(πy)). For a < 1 the velocity
    /// stays monotone while both terms deepen the operator's potential near
    /// the center, so the smallest eigenvalue is tunable through zero by the
    /// coefficient `a`.
    pub fn sinwell(a: f64, b: f64, grid: &Arc<Grid>) -> Result<ShearPair, ProfileError> {
        use std::f64::consts::PI;
        if !(0.0..1.0).contains(&a) || !(0.0..1.0).contains(&b.abs()) {
            return Err(ProfileError::InvalidParams(format!(
                "sinwell needs 0 <= a < 1, |b| < 1, got a = {a}, b = {b}"
            )));
        }
        let u = CurveFns {
            f: Arc::new(move |y| y + a * (PI * y).sin() / PI),
            d1: Arc::new(move |y| 1.0 + a * (PI * y).cos()),
            d2: Arc::new(move |y| -a * PI * (PI * y).sin()),
            d3: Arc::new(move |y| -a * PI * PI * (PI * y).cos()),
        };
        let theta = CurveFns {
            f: Arc::new(move |y| 1.0 + b * (1.0 - (PI * y).cos())),
            d1: Arc::new(move |y| b * PI * (PI * y).sin()),
            d2: Arc::new(move |y| b * PI * PI * (PI * y).cos()),
            d3: Arc::new(move |y| -b * PI * PI * PI * (PI * y).sin()),
        };
        Self::from_fns(grid, u, theta, Provenance::Raw)
    }

    /// Load a tabulated pair from CSV with header `y,u,theta`, resampling
    /// onto the grid by monotone cubic interpolation.
    pub fn from_csv(path: &Path, grid: &Arc<Grid>) -> Result<ShearPair, ProfileError> {
        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| ProfileError::BadTable(format!("{path:?}: {e}")))?;
        {
            let headers = rdr
                .headers()
                .map_err(|e| ProfileError::BadTable(e.to_string()))?;
            let cols: Vec<&str> = headers.iter().map(|h| h.trim()).collect();
            if cols != ["y", "u", "theta"] {
                return Err(ProfileError::BadTable(format!(
                    "expected header y,u,theta, got {cols:?}"
                )));
            }
        }
        let mut ys = Vec::new();
        let mut us = Vec::new();
        let mut ts = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| ProfileError::BadTable(e.to_string()))?;
            let parse = |i: usize| -> Result<f64, ProfileError> {
                rec.get(i)
                    .ok_or_else(|| ProfileError::BadTable("short row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| ProfileError::BadTable(e.to_string()))
            };
            ys.push(parse(0)?);
            us.push(parse(1)?);
            ts.push(parse(2)?);
        }
        if ys.len() < 8 {
            return Err(ProfileError::BadTable("need at least 8 rows".into()));
        }
        if ys[0] > -1.0 + 1e-12 || ys[ys.len() - 1] < 1.0 - 1e-12 {
            return Err(ProfileError::BadTable(
                "table must cover [-1, 1] inclusively".into(),
            ));
        }
        let ui = MonotoneCubic::new(ys.clone(), us);
        let ti = MonotoneCubic::new(ys, ts);
        let uv: Vec<f64> = grid.y.iter().map(|&y| ui.eval(y)).collect();
        let tv: Vec<f64> = grid.y.iter().map(|&y| ti.eval(y)).collect();
        let u = Curve::from_values(grid, uv);
        let theta = Curve::from_values(grid, tv);
        Self::assemble(grid.clone(), u, theta, Provenance::Raw)
    }

    pub fn u_at_zero_slope(&self) -> f64 {
        self.u.eval_d1(0.0)
    }

    pub fn theta_at_zero(&self) -> f64 {
        self.theta.eval(0.0)
    }
}

// --- C^infty plateau cutoff -------------------------------------------------

/// e^{-1/x} and its first three derivatives, zero for x <= 0.
fn mollifier(x: f64) -> (f64, f64, f64, f64) {
    if x < 2e-3 {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let s = (-1.0 / x).exp();
    let x2 = x * x;
    let x3 = x2 * x;
    let x4 = x2 * x2;
    let s1 = s / x2;
    let s2 = s * (1.0 / x4 - 2.0 / x3);
    let s3 = s * (1.0 / (x4 * x2) - 6.0 / (x4 * x) + 6.0 / x4);
    (s, s1, s2, s3)
}

/// Plateau ψ with ψ ≡ 1 on [0, 1] and ψ ≡ 0 on [2, ∞), with derivatives.
pub fn plateau(t: f64) -> (f64, f64, f64, f64) {
    if t <= 1.0 {
        return (1.0, 0.0, 0.0, 0.0);
    }
    if t >= 2.0 {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let (a, a1, a2, a3) = mollifier(t - 1.0);
    let (b, mb1, b2, mb3) = mollifier(2.0 - t);
    let (b1, b3) = (-mb1, -mb3);
    let d = a + b;
    let d1 = a1 + b1;
    let d2 = a2 + b2;
    let d3 = a3 + b3;
    let p = b / d;
    let p1 = b1 / d - b * d1 / (d * d);
    let p2 = b2 / d - 2.0 * b1 * d1 / (d * d) - b * d2 / (d * d)
        + 2.0 * b * d1 * d1 / (d * d * d);
    let p3 = b3 / d - 3.0 * b2 * d1 / (d * d) - 3.0 * b1 * d2 / (d * d)
        + 6.0 * b1 * d1 * d1 / (d * d * d)
        - b * d3 / (d * d)
        + 6.0 * b * d1 * d2 / (d * d * d)
        - 6.0 * b * d1 * d1 * d1 / (d * d * d * d);
    (p, p1, p2, p3)
}

/// χ_δ(y) = ψ(|y|/δ) and its y-derivatives.
fn cutoff(y: f64, delta: f64) -> (f64, f64, f64, f64) {
    let t = y.abs() / delta;
    let (p, p1, p2, p3) = plateau(t);
    let sgn = if y < 0.0 { -1.0 } else { 1.0 };
    (
        p,
        sgn * p1 / delta,
        p2 / (delta * delta),
        sgn * p3 / (delta * delta * delta),
    )
}

/// Replace (u, θ) by (u^δ, θ^δ): exactly linear velocity and constant inverse
/// density on (-δ, δ), unchanged outside (-2δ, 2δ).
pub fn modify_profiles(pair: &ShearPair, delta: f64) -> Result<ShearPair, ProfileError> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(ProfileError::InvalidParams(format!(
            "delta must lie in (0, 1/4), got {delta}"
        )));
    }
    let up0 = pair.u.eval_d1(0.0);
    let th0 = pair.theta.eval(0.0);
    let (uf, u1, u2, u3) = curve_closures(&pair.u);
    let (tf, t1, t2, t3) = curve_closures(&pair.theta);

    let ud = {
        let f = {
            let uf = uf.clone();
            Arc::new(move |y: f64| {
                let (c, _, _, _) = cutoff(y, delta);
                c * up0 * y + (1.0 - c) * uf(y)
            }) as ScalarFn
        };
        let d1 = {
            let (uf, u1) = (uf.clone(), u1.clone());
            Arc::new(move |y: f64| {
                let (c, c1, _, _) = cutoff(y, delta);
                c1 * (up0 * y - uf(y)) + c * up0 + (1.0 - c) * u1(y)
            }) as ScalarFn
        };
        let d2 = {
            let (uf, u1, u2) = (uf.clone(), u1.clone(), u2.clone());
            Arc::new(move |y: f64| {
                let (c, c1, c2, _) = cutoff(y, delta);
                c2 * (up0 * y - uf(y)) + 2.0 * c1 * (up0 - u1(y)) + (1.0 - c) * u2(y)
            }) as ScalarFn
        };
        let d3 = {
            let (uf, u1, u2, u3) = (uf.clone(), u1.clone(), u2.clone(), u3.clone());
            Arc::new(move |y: f64| {
                let (c, c1, c2, c3) = cutoff(y, delta);
                c3 * (up0 * y - uf(y)) + 3.0 * c2 * (up0 - u1(y)) - 3.0 * c1 * u2(y)
                    + (1.0 - c) * u3(y)
            }) as ScalarFn
        };
        CurveFns { f, d1, d2, d3 }
    };
    let td = {
        let f = {
            let tf = tf.clone();
            Arc::new(move |y: f64| {
                let (c, _, _, _) = cutoff(y, delta);
                c * th0 + (1.0 - c) * tf(y)
            }) as ScalarFn
        };
        let d1 = {
            let (tf, t1) = (tf.clone(), t1.clone());
            Arc::new(move |y: f64| {
                let (c, c1, _, _) = cutoff(y, delta);
                c1 * (th0 - tf(y)) + (1.0 - c) * t1(y)
            }) as ScalarFn
        };
        let d2 = {
            let (tf, t1, t2) = (tf.clone(), t1.clone(), t2.clone());
            Arc::new(move |y: f64| {
                let (c, c1, c2, _) = cutoff(y, delta);
                c2 * (th0 - tf(y)) - 2.0 * c1 * t1(y) + (1.0 - c) * t2(y)
            }) as ScalarFn
        };
        let d3 = {
            let (tf, t1, t2, t3) = (tf.clone(), t1.clone(), t2.clone(), t3.clone());
            Arc::new(move |y: f64| {
                let (c, c1, c2, c3) = cutoff(y, delta);
                c3 * (th0 - tf(y)) - 3.0 * c2 * t1(y) - 3.0 * c1 * t2(y) + (1.0 - c) * t3(y)
            }) as ScalarFn
        };
        CurveFns { f, d1, d2, d3 }
    };

    let out = ShearPair::from_fns(
        &pair.grid,
        ud,
        td,
        Provenance::Modified { delta },
    )?;
    verify_floors(&out, pair.c0)?;
    Ok(out)
}

/// Add the eigenvalue-designing bumps on top of a modified pair. With
/// `m = l = 0` the nodal data is returned bit-for-bit unchanged.
pub fn perturb_profiles(
    pair: &ShearPair,
    params: &ModificationParams,
    bumps: &BumpPair,
) -> Result<ShearPair, ProfileError> {
    params.validate()?;
    let delta = match pair.provenance {
        Provenance::Modified { delta } => delta,
        _ => {
            return Err(ProfileError::InvalidParams(
                "perturb_profiles expects the output of modify_profiles".into(),
            ))
        }
    };
    if (delta - params.delta).abs() > 1e-14 {
        return Err(ProfileError::InvalidParams(format!(
            "params.delta = {} does not match the pair's cutoff {delta}",
            params.delta
        )));
    }
    let (m, l, gamma, eta) = (params.m, params.l, params.gamma, params.eta);

    let (uf, u1, u2, u3) = curve_closures(&pair.u);
    let (tf, t1, t2, _t3) = curve_closures(&pair.theta);
    let gam = bumps.gamma_fn.clone();
    let gam1 = bumps.gamma_d1.clone();
    let gam2 = bumps.gamma_d2.clone();
    let dig = bumps.digamma_fn.clone();
    let dig1 = bumps.digamma_d1.clone();
    let dig2 = bumps.digamma_d2.clone();

    // cumulative bump integral, tabulated once on the support of Γ(./γ)
    let w = (10.0 * gamma).min(1.0);
    let proxy = {
        let tf = tf.clone();
        let gam = gam.clone();
        let inner = move |y: f64| {
            crate::quad::integrate(|t| tf(t) * gam(t / gamma), 0.0, y, 1e-13)
        };
        ChebProxy::build(inner, -w, w, 160)
    };
    let p_lo = proxy.eval(-w);
    let p_hi = proxy.eval(w);
    let cum = Arc::new(move |y: f64| -> f64 {
        if y < -w {
            p_lo
        } else if y > w {
            p_hi
        } else {
            proxy.eval(y)
        }
    });

    let upert = {
        let f = {
            let (uf, cum) = (uf.clone(), cum.clone());
            Arc::new(move |y: f64| uf(y) + m * gamma * cum(y)) as ScalarFn
        };
        let d1 = {
            let (u1, tf, gam) = (u1.clone(), tf.clone(), gam.clone());
            Arc::new(move |y: f64| u1(y) + m * gamma * tf(y) * gam(y / gamma)) as ScalarFn
        };
        let d2 = {
            let (u2, t1, tf) = (u2.clone(), t1.clone(), tf.clone());
            let (gam, gam1) = (gam.clone(), gam1.clone());
            Arc::new(move |y: f64| {
                u2(y) + m * gamma * t1(y) * gam(y / gamma) + m * tf(y) * gam1(y / gamma)
            }) as ScalarFn
        };
        let d3 = {
            let (u3, t2, t1, tf) = (u3.clone(), t2.clone(), t1.clone(), tf.clone());
            let (gam, gam1, gam2) = (gam.clone(), gam1.clone(), gam2.clone());
            Arc::new(move |y: f64| {
                u3(y)
                    + m * gamma * t2(y) * gam(y / gamma)
                    + 2.0 * m * t1(y) * gam1(y / gamma)
                    + m / gamma * tf(y) * gam2(y / gamma)
            }) as ScalarFn
        };
        CurveFns { f, d1, d2, d3 }
    };
    let tpert_d2: ScalarFn = {
        let (t2, u1, u2, u3) = (t2.clone(), u1.clone(), u2.clone(), u3.clone());
        let (dig, dig1, dig2) = (dig.clone(), dig1.clone(), dig2.clone());
        Arc::new(move |y: f64| {
            t2(y)
                + l * eta * u3(y) * dig(y / eta)
                + 2.0 * l * u2(y) * dig1(y / eta)
                + l / eta * u1(y) * dig2(y / eta)
        })
    };
    // third derivative of the density bump needs u'''', which the pair does
    // not carry; differentiate the analytic second derivative spectrally
    let t3_vals = {
        let vals: Vec<f64> = pair.grid.y.iter().map(|&y| tpert_d2(y)).collect();
        pair.grid.deriv(&vals, 1)
    };
    let tpert = {
        let f = {
            let (tf, u1, dig) = (tf.clone(), u1.clone(), dig.clone());
            Arc::new(move |y: f64| tf(y) + l * eta * u1(y) * dig(y / eta)) as ScalarFn
        };
        let d1 = {
            let (t1, u2, u1) = (t1.clone(), u2.clone(), u1.clone());
            let (dig, dig1) = (dig.clone(), dig1.clone());
            Arc::new(move |y: f64| {
                t1(y) + l * eta * u2(y) * dig(y / eta) + l * u1(y) * dig1(y / eta)
            }) as ScalarFn
        };
        let d3 = {
            let grid = pair.grid.clone();
            let bw = t3_vals.clone();
            Arc::new(move |y: f64| grid.eval(&bw, y)) as ScalarFn
        };
        CurveFns {
            f,
            d1,
            d2: tpert_d2,
            d3,
        }
    };

    let mut out = ShearPair::from_fns(
        &pair.grid,
        upert,
        tpert,
        Provenance::Perturbed { delta, gamma, eta },
    )?;
    if m == 0.0 && l == 0.0 {
        out.u.values = pair.u.values.clone();
        out.u.d1 = pair.u.d1.clone();
        out.u.d2 = pair.u.d2.clone();
        out.u.d3 = pair.u.d3.clone();
        out.theta.values = pair.theta.values.clone();
        out.theta.d1 = pair.theta.d1.clone();
        out.theta.d2 = pair.theta.d2.clone();
        out.theta.d3 = pair.theta.d3.clone();
    }
    verify_floors(&out, pair.c0)?;
    Ok(out)
}

fn curve_closures(c: &Curve) -> (ScalarFn, ScalarFn, ScalarFn, ScalarFn) {
    match &c.fns {
        Some(fns) => (fns.f.clone(), fns.d1.clone(), fns.d2.clone(), fns.d3.clone()),
        None => {
            let (g, v, d1, d2, d3) = (
                c.grid.clone(),
                c.values.clone(),
                c.d1.clone(),
                c.d2.clone(),
                c.d3.clone(),
            );
            let g2 = g.clone();
            let g3 = g.clone();
            let g4 = g.clone();
            (
                Arc::new(move |y| g.eval(&v, y)),
                Arc::new(move |y| g2.eval(&d1, y)),
                Arc::new(move |y| g3.eval(&d2, y)),
                Arc::new(move |y| g4.eval(&d3, y)),
            )
        }
    }
}

/// Monotonicity and positivity floors at c0/2, checked on the nodes and on a
/// fine uniform sample (the bump scale can fall between collocation nodes).
fn verify_floors(pair: &ShearPair, base_c0: f64) -> Result<(), ProfileError> {
    let floor = 0.5 * base_c0;
    let check = |y: f64, up: f64, th: f64| -> Result<(), ProfileError> {
        if up < floor {
            return Err(ProfileError::MonotonicityLost {
                y,
                value: up,
                floor,
            });
        }
        if th < floor {
            return Err(ProfileError::PositivityLost {
                y,
                value: th,
                floor,
            });
        }
        Ok(())
    };
    for i in 0..pair.grid.len() {
        check(pair.grid.y[i], pair.u.d1[i], pair.theta.values[i])?;
    }
    let samples = 4096;
    for i in 0..=samples {
        let y = -1.0 + 2.0 * i as f64 / samples as f64;
        check(y, pair.u.eval_d1(y), pair.theta.eval(y))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bumps::default_bumps;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid() -> Arc<Grid> {
        Grid::cgl(128)
    }

    #[test]
    fn plateau_derivatives_match_finite_differences() {
        // each analytic derivative against a centered difference of the one
        // below it, so roundoff stays in check
        let h = 1e-6;
        for &t in &[1.1, 1.3, 1.5, 1.7, 1.9] {
            let (_, p1, p2, p3) = plateau(t);
            let fd1 = (plateau(t + h).0 - plateau(t - h).0) / (2.0 * h);
            let fd2 = (plateau(t + h).1 - plateau(t - h).1) / (2.0 * h);
            let fd3 = (plateau(t + h).2 - plateau(t - h).2) / (2.0 * h);
            assert_relative_eq!(p1, fd1, max_relative = 1e-7, epsilon = 1e-9);
            assert_relative_eq!(p2, fd2, max_relative = 1e-6, epsilon = 1e-7);
            assert_relative_eq!(p3, fd3, max_relative = 1e-5, epsilon = 1e-4);
        }
    }

    #[test]
    fn modify_is_identity_on_couette() {
        let g = grid();
        let pair = ShearPair::preset("couette", &g).unwrap();
        let modified = modify_profiles(&pair, 0.1).unwrap();
        for i in 0..g.len() {
            assert_relative_eq!(modified.u.values[i], pair.u.values[i], epsilon = 1e-14);
            assert_relative_eq!(
                modified.theta.values[i],
                pair.theta.values[i],
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn cutoff_regions_of_modified_tanh() {
        // u = tanh(y), theta = 2 + y^2, delta = 0.1
        let g = grid();
        let pair = ShearPair::from_fns(
            &g,
            CurveFns {
                f: Arc::new(|y: f64| y.tanh()),
                d1: Arc::new(|y: f64| 1.0 - y.tanh().powi(2)),
                d2: Arc::new(|y: f64| {
                    let t = y.tanh();
                    -2.0 * t * (1.0 - t * t)
                }),
                d3: Arc::new(|y: f64| {
                    let t = y.tanh();
                    -2.0 * (1.0 - t * t) * (1.0 - 3.0 * t * t)
                }),
            },
            CurveFns {
                f: Arc::new(|y| 2.0 + y * y),
                d1: Arc::new(|y| 2.0 * y),
                d2: Arc::new(|_| 2.0),
                d3: Arc::new(|_| 0.0),
            },
            Provenance::Raw,
        )
        .unwrap();
        let m = modify_profiles(&pair, 0.1).unwrap();
        // inside (-delta, delta): exactly linear / constant
        assert_relative_eq!(m.u.eval(0.05), 0.05, epsilon = 1e-14);
        assert_relative_eq!(m.theta.eval(0.05), 2.0, epsilon = 1e-14);
        // outside (-2 delta, 2 delta): untouched
        assert_relative_eq!(m.u.eval(0.5), (0.5f64).tanh(), epsilon = 1e-14);
        assert_relative_eq!(m.theta.eval(-0.7), 2.49, epsilon = 1e-14);
    }

    #[test]
    fn perturb_zero_strengths_is_bitwise_identity() {
        let g = grid();
        let pair = ShearPair::preset("tanh", &g).unwrap();
        let modified = modify_profiles(&pair, 0.12).unwrap();
        let params = ModificationParams {
            delta: 0.12,
            m: 0.0,
            l: 0.0,
            gamma: 0.05,
            eta: 0.05,
        };
        let p = perturb_profiles(&modified, &params, &default_bumps()).unwrap();
        assert_eq!(p.u.values, modified.u.values);
        assert_eq!(p.theta.values, modified.theta.values);
        assert_eq!(p.u.d2, modified.u.d2);
    }

    #[test]
    fn perturbed_slope_at_zero_matches_closed_form() {
        // u = y, theta = 1, m = 1, gamma = 0.1: u'(0) = 1 + m gamma Γ(0)
        let g = grid();
        let pair = ShearPair::preset("couette", &g).unwrap();
        let modified = modify_profiles(&pair, 0.2).unwrap();
        let params = ModificationParams {
            delta: 0.2,
            m: 1.0,
            l: 0.0,
            gamma: 0.1,
            eta: 0.1,
        };
        let p = perturb_profiles(&modified, &params, &default_bumps()).unwrap();
        assert_relative_eq!(p.u.eval(0.0), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            p.u.eval_d1(0.0),
            1.0 + 0.1 / (2.0 * PI.sqrt()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn perturbation_integral_proxy_matches_quadrature() {
        let g = grid();
        let pair = ShearPair::preset("poly", &g).unwrap();
        let modified = modify_profiles(&pair, 0.15).unwrap();
        let params = ModificationParams {
            delta: 0.15,
            m: 1.5,
            l: 0.0,
            gamma: 0.03,
            eta: 0.03,
        };
        let bumps = default_bumps();
        let p = perturb_profiles(&modified, &params, &bumps).unwrap();
        for &y in &[-0.8, -0.2, -0.02, 0.015, 0.4, 0.9] {
            let direct = crate::quad::integrate(
                |t| modified.theta.eval(t) * (bumps.gamma_fn)(t / params.gamma),
                0.0,
                y,
                1e-13,
            );
            let expect = modified.u.eval(y) + params.m * params.gamma * direct;
            assert_relative_eq!(p.u.eval(y), expect, epsilon = 1e-11);
        }
    }

    #[test]
    fn monotonicity_lost_is_reported() {
        let g = grid();
        // steep downward curvature away from 0 combined with a large cutoff
        let pair = ShearPair::from_fns(
            &g,
            CurveFns {
                f: Arc::new(|y: f64| y - 0.232 * (PI * y).sin()),
                d1: Arc::new(|y: f64| 1.0 - 0.232 * PI * (PI * y).cos()),
                d2: Arc::new(|y: f64| 0.232 * PI * PI * (PI * y).sin()),
                d3: Arc::new(|y: f64| 0.232 * PI * PI * PI * (PI * y).cos()),
            },
            CurveFns {
                f: Arc::new(|_| 1.0),
                d1: Arc::new(|_| 0.0),
                d2: Arc::new(|_| 0.0),
                d3: Arc::new(|_| 0.0),
            },
            Provenance::Raw,
        )
        .unwrap();
        // u' dips to ~0.27 near 0; the linearized core has slope u'(0) ~ 0.27,
        // but the bridge region mixes in the larger outer slope: fine. A huge
        // perturbation strength must trip the floor instead.
        let modified = modify_profiles(&pair, 0.2).unwrap();
        let params = ModificationParams {
            delta: 0.2,
            m: -14.0,
            l: 0.0,
            gamma: 0.2,
            eta: 0.1,
        };
        let err = perturb_profiles(&modified, &params, &default_bumps());
        assert!(matches!(
            err,
            Err(ProfileError::MonotonicityLost { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let g = grid();
        let dir = std::env::temp_dir().join("catseye_profile_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pair.csv");
        let mut body = String::from("y,u,theta\n");
        let m = 400;
        for i in 0..=m {
            let y = -1.0 + 2.0 * i as f64 / m as f64;
            body.push_str(&format!("{y:.12e},{:.12e},{:.12e}\n", y.tanh(), 2.0 - y * y * 0.3));
        }
        std::fs::write(&path, body).unwrap();
        let pair = ShearPair::from_csv(&path, &g).unwrap();
        assert_relative_eq!(pair.u.eval(0.3), (0.3f64).tanh(), epsilon = 1e-6);
        assert!(pair.c0 > 0.3);
    }
}
