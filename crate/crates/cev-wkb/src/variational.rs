//! Variational (Jacobi) system along a classical path and the determinant
//! computed from it.
//!
//! Linearizing Hamilton's equations around a path x(tau), p(tau) gives
//!
//!   xi'  =  (4 p + b) xi + 4 x eta
//!   eta' = -(4 p + b) eta
//!
//! for a perturbation (xi, eta) = (dx, dp). The system matrix is traceless,
//! so the fundamental matrix has unit determinant for all tau. The
//! Van Vleck-Morette determinant is the sensitivity dx(T)/dp_T, i.e. the
//! xi(T) component of the solution with (xi, eta)(0) = (0, 1).
//!
//! Two independent evaluations live here: a closed-form solution obtained by
//! integrating the eta equation with the known mixed-derivative integral and
//! then applying variation of parameters to xi, and a direct numerical
//! co-integration of path and perturbations that never touches the closed
//! path formulas. Their agreement with the factored determinant of
//! [`crate::classical::vvm_determinant`] is the strongest internal
//! consistency check the crate has.

use crate::classical::{initial_momentum, EndpointConstants};
use crate::error::{Error, Result};
use crate::ode;

/// Perturbation of a phase-space point: xi multiplies dx, eta multiplies dp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalState {
    /// Position component of the perturbation.
    pub xi: f64,
    /// Momentum component of the perturbation.
    pub eta: f64,
}

/// Relative scale for pole detection in the eta denominator.
const POLE_RELATIVE: f64 = 1e-12;

/// Closed-form solution of the variational system with initial data
/// (xi0, eta0) at tau = 0, evaluated on the path described by `ec`.
///
/// In raw constants the solution reads
///
///   eta(tau) = eta0 (2 D2 + D1 - d)^2 e^{b tau} / (2 D2 e^{b tau} + D1 - d)^2
///   xi(tau)  = A2 [(d - D1)^2 e^{-b tau} + 4 D2^2 e^{b tau} - 4 (d - D1) D2]
///              - A1 (D1 e^{-b tau} + 2 D2) / (2 b D2^2)
///
/// with A1 = (2 D2 + D1 - d)^2 eta0 and A2 equal to the sum of
/// (D1 + 2 D2) eta0 / (2 b D2^2) and xi0 / (2 D2 + D1 - d)^2. Both xi
/// coefficients are regrouped here through B = D1 + 2 D2 and expm1 so that
/// nothing large forms at small |b tau|:
///
///   xi(tau) = xi0 Cx + eta0 Ce
///   Cx = 1 + (4 D2^2 em^2/u + (d - B)((d - B) + 4 D2) emm)/(B - d)^2
///   Ce = em [B (B + 2 D2 em) - d^2] / (b D2 u)
///
/// where em = expm1(b tau), emm = expm1(-b tau), u = em + 1.
pub fn variational_solution_closed(
    tau: f64,
    xi0: f64,
    eta0: f64,
    ec: &EndpointConstants,
) -> Result<VariationalState> {
    if !(0.0..=ec.maturity).contains(&tau) {
        return Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
            constraint: "0 <= tau <= maturity",
        });
    }
    let scale = ec.d2.abs().max(ec.d1.abs()).max(ec.d.abs()).max(1.0);
    let den = ec.sum_b - ec.d;
    if den.abs() < POLE_RELATIVE * scale {
        // The two-solution basis itself degenerates (infinite initial
        // momentum); report it as the tau = 0 pole it is.
        return Err(Error::MomentumPole {
            tau: 0.0,
            denom_abs: den.abs(),
            threshold: POLE_RELATIVE * scale,
        });
    }
    let em = (ec.b * tau).exp_m1();
    let emm = (-ec.b * tau).exp_m1();
    let u = em + 1.0;

    let eta_den = den + 2.0 * ec.d2 * em;
    if eta_den.abs() < POLE_RELATIVE * scale {
        return Err(Error::MomentumPole {
            tau,
            denom_abs: eta_den.abs(),
            threshold: POLE_RELATIVE * scale,
        });
    }

    let c_xi = 1.0
        + (4.0 * ec.d2 * ec.d2 * em * em / u + (-den) * ((-den) + 4.0 * ec.d2) * emm) / (den * den);
    let c_eta = em * (ec.sum_b * (ec.sum_b + 2.0 * ec.d2 * em) - ec.d * ec.d) / (ec.b * ec.d2 * u);
    let xi = xi0 * c_xi + eta0 * c_eta;
    let eta = eta0 * u * den * den / (eta_den * eta_den);
    Ok(VariationalState { xi, eta })
}

/// Determinant as the (1,2) fundamental-matrix entry, by numerical
/// co-integration of the path and two independent perturbations.
///
/// The 6-dimensional system (x, p, xi_a, eta_a, xi_b, eta_b) is integrated
/// from (x_T, p_T, 1, 0, 0, 1) with an adaptive Runge-Kutta scheme; the
/// routine shares nothing with the closed-form path expressions beyond the
/// initial momentum, so it serves as an independent oracle for
/// [`crate::classical::vvm_determinant`]. `rtol` must lie in
/// [1e-12, 1e-6]; the return value is xi_b(T) = dx(T)/dp_T.
pub fn vvm_via_variational(ec: &EndpointConstants, rtol: f64) -> Result<f64> {
    if !(1e-12..=1e-6).contains(&rtol) {
        return Err(Error::InvalidParameter {
            name: "rtol",
            value: rtol,
            constraint: "1e-12 <= rtol <= 1e-6",
        });
    }
    let p_t = initial_momentum(ec)?;
    let x_t = ec.x_t;
    let b = ec.b;
    let a = ec.b * ec.d;
    let atol = rtol * x_t.abs().max(1.0);
    let y = ode::integrate(
        move |_, y: &[f64; 6]| {
            let (x, p) = (y[0], y[1]);
            let g = 4.0 * p + b;
            [
                4.0 * x * p + b * x - a,
                -2.0 * p * p - b * p,
                g * y[2] + 4.0 * x * y[3],
                -g * y[3],
                g * y[4] + 4.0 * x * y[5],
                -g * y[5],
            ]
        },
        0.0,
        ec.maturity,
        [x_t, p_t, 1.0, 0.0, 0.0, 1.0],
        rtol,
        atol,
    )?;
    Ok(y[4])
}
