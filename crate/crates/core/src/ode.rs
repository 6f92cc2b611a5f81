//! Adaptive Dormand–Prince 5(4) integration for the regular-solution ODE and
//! its quadrature accumulators.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("step budget exhausted at t = {0}")]
    TooManySteps(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 4_000_000,
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate dy/dt = f(t, y) from `t0` to `t_end` (either direction),
/// recording the state at each of the `outputs` (sorted along the sweep).
pub fn integrate_with_output(
    mut f: impl FnMut(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<Vec<f64>>, OdeError> {
    let dim = y0.len();
    let dir = if outputs.last().copied().unwrap_or(t0) >= t0 {
        1.0
    } else {
        -1.0
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut ytmp = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];

    f(t, &y, &mut k1);
    let mut h = dir * 1e-4;
    let mut recorded = Vec::with_capacity(outputs.len());
    let mut steps = 0usize;

    for &tout in outputs {
        if (tout - t) * dir < 0.0 {
            panic!("output points must be ordered along the integration direction");
        }
        while (tout - t) * dir > 1e-300 {
            steps += 1;
            if steps > opts.max_steps {
                return Err(OdeError::TooManySteps(t));
            }
            let remaining = tout - t;
            if h.abs() > remaining.abs() {
                h = remaining;
            }
            // stages
            for i in 0..dim {
                ytmp[i] = y[i] + h * A21 * k1[i];
            }
            f(t + 0.2 * h, &ytmp, &mut k2);
            for i in 0..dim {
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + 0.3 * h, &ytmp, &mut k3);
            for i in 0..dim {
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + 0.8 * h, &ytmp, &mut k4);
            for i in 0..dim {
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + 8.0 / 9.0 * h, &ytmp, &mut k5);
            for i in 0..dim {
                ytmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + h, &ytmp, &mut k6);
            for i in 0..dim {
                y5[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            f(t + h, &y5, &mut k7);

            // error estimate
            let mut err = 0.0f64;
            for i in 0..dim {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                let r = e / sc;
                err += r * r;
            }
            err = (err / dim as f64).sqrt();

            if err <= 1.0 {
                t += h;
                y.copy_from_slice(&y5);
                k1.copy_from_slice(&k7);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
            if h.abs() < 1e-14 * (1.0 + t.abs()) {
                return Err(OdeError::StepUnderflow(t));
            }
        }
        recorded.push(y.clone());
    }
    Ok(recorded)
}

/// Integrate to a single endpoint and return the final state.
pub fn integrate_to(
    f: impl FnMut(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<Vec<f64>, OdeError> {
    let out = integrate_with_output(f, t0, y0, &[t_end], opts)?;
    Ok(out.into_iter().next().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_growth() {
        let y = integrate_to(
            |_t, y, dy| dy[0] = y[0],
            0.0,
            &[1.0],
            1.0,
            &OdeOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(y[0], 1f64.exp(), max_relative = 1e-10);
    }

    #[test]
    fn backward_integration_and_outputs() {
        let outs = [0.5, 0.0, -1.0];
        let rec = integrate_with_output(
            |t, _y, dy| dy[0] = (3.0 * t).cos(),
            1.0,
            &[(3.0f64).sin() / 3.0],
            &outs,
            &OdeOptions::default(),
        )
        .unwrap();
        for (i, &t) in outs.iter().enumerate() {
            assert_relative_eq!(rec[i][0], (3.0 * t).sin() / 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn oscillator_system() {
        let y = integrate_to(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -4.0 * y[0];
            },
            0.0,
            &[1.0, 0.0],
            2.0,
            &OdeOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(y[0], (4.0f64).cos(), epsilon = 1e-9);
        assert_relative_eq!(y[1], -2.0 * (4.0f64).sin(), epsilon = 1e-9);
    }
}
