//! Embedded adaptive Runge-Kutta integrator (Dormand-Prince 5(4)) for the
//! small fixed-size systems used as numeric oracles: Hamilton's equations and
//! the variational equations along classical paths.
//!
//! The contract is the tolerance, not the scheme: any embedded method of
//! order >= 4 would do. Fifth-order Dormand-Prince with a PI-free step
//! controller is plenty for 2- to 6-dimensional smooth systems.

use crate::error::{Error, Result};

/// Dormand-Prince coefficients (classic DOPRI5 tableau).
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A1: [f64; 1] = [1.0 / 5.0];
const A2: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A3: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A4: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A5: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Fifth-order minus fourth-order weights (error estimator).
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 2_000_000;

fn axpy<const N: usize>(y: &[f64; N], coeffs: &[(f64, [f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in coeffs {
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

/// Integrates dy/dt = f(t, y) from `t0` to `t1` (forward only) with relative
/// tolerance `rtol` and absolute tolerance `atol`, returning y(t1).
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    rtol: f64,
    atol: f64,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t1",
            value: t1,
            constraint: "finite forward time span (t1 >= t0)",
        });
    }
    if t1 == t0 {
        return Ok(y0);
    }

    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut h = span / 100.0;
    let mut k0 = f(t, &y);

    for _ in 0..MAX_STEPS {
        if t >= t1 {
            return Ok(y);
        }
        h = h.min(t1 - t);
        if h < span * 1e-15 {
            return Err(Error::NumericConvergence {
                context: "Runge-Kutta step-size underflow",
                estimate: y[0],
                residual: h,
                iterations: MAX_STEPS,
            });
        }

        let k1 = f(t + C[0] * h, &axpy(&y, &[(h * A1[0], k0)]));
        let k2 = f(t + C[1] * h, &axpy(&y, &[(h * A2[0], k0), (h * A2[1], k1)]));
        let k3 = f(
            t + C[2] * h,
            &axpy(&y, &[(h * A3[0], k0), (h * A3[1], k1), (h * A3[2], k2)]),
        );
        let k4 = f(
            t + C[3] * h,
            &axpy(
                &y,
                &[
                    (h * A4[0], k0),
                    (h * A4[1], k1),
                    (h * A4[2], k2),
                    (h * A4[3], k3),
                ],
            ),
        );
        let k5 = f(
            t + C[4] * h,
            &axpy(
                &y,
                &[
                    (h * A5[0], k0),
                    (h * A5[1], k1),
                    (h * A5[2], k2),
                    (h * A5[3], k3),
                    (h * A5[4], k4),
                ],
            ),
        );
        let y5 = axpy(
            &y,
            &[
                (h * B5[0], k0),
                (h * B5[2], k2),
                (h * B5[3], k3),
                (h * B5[4], k4),
                (h * B5[5], k5),
            ],
        );
        // FSAL stage: derivative at the candidate point.
        let k6 = f(t + h, &y5);

        let mut err_norm: f64 = 0.0;
        for i in 0..N {
            let e_i = h
                * (E[0] * k0[i]
                    + E[2] * k2[i]
                    + E[3] * k3[i]
                    + E[4] * k4[i]
                    + E[5] * k5[i]
                    + E[6] * k6[i]);
            let scale = atol + rtol * y[i].abs().max(y5[i].abs());
            err_norm = err_norm.max((e_i / scale).abs());
        }

        if err_norm <= 1.0 {
            t += h;
            y = y5;
            k0 = k6;
        }
        let factor = if err_norm > 0.0 {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }

    Err(Error::NumericConvergence {
        context: "Runge-Kutta step cap",
        estimate: y[0],
        residual: t1 - t,
        iterations: MAX_STEPS,
    })
}
