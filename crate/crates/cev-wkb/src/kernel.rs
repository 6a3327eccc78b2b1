//! Semiclassical propagator assembled from its classical ingredients.
//!
//! The kernel has the Pauli-Morette form
//!
//!   K(x, x_T; T) = (2 pi J)^{-1/2} exp(I/2) exp(-S)
//!
//! where S is the classical action between the endpoints, J the
//! Van Vleck-Morette determinant and I the time integral of the mixed
//! Hamiltonian derivative 4p + b along the path. Everything is assembled in
//! log space: far in the tails the exponent drops below -745 and the value
//! underflows to zero in f64, which is reported as a valid evaluation
//! (value = 0, finite `ln_value`) rather than an error, because tail
//! evaluations are routine inside pricing quadratures.

use serde::Serialize;

use crate::classical::{
    action, constants_from_endpoints, mixed_derivative_integral, vvm_determinant, EndpointConstants,
};
use crate::error::{Error, Result};
use crate::params::FellerParams;

/// Exponent below which exp underflows to zero in f64.
const LN_UNDERFLOW: f64 = -745.0;

#[cfg(test)]
thread_local! {
    /// Test-only fault switch: when set, the assembly enters the exponential
    /// prefactor with the wrong sign while the reported components stay
    /// truthful. Exists so the verification layer can prove its reassembly
    /// check actually catches a broken assembly.
    pub(crate) static ASSEMBLY_FAULT: std::cell::Cell<bool> =
        const { std::cell::Cell::new(false) };
}

/// One kernel evaluation, decomposed into the reported classical pieces.
///
/// The invariant connecting the fields is
///
///   ln_value = -0.5 ln(2 pi vvm) + 0.5 exp_factor_integral - action
///   value    = exp(ln_value)
///
/// computed exactly in that operation order, so the relation can be
/// re-checked bitwise from the components.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelEval {
    /// Kernel value; zero when the exponent underflows f64.
    pub value: f64,
    /// Natural log of the kernel value; always finite.
    pub ln_value: f64,
    /// Classical action S along the path.
    pub action: f64,
    /// Integral of 4p + b along the path.
    pub exp_factor_integral: f64,
    /// Van Vleck-Morette determinant J, strictly positive.
    pub vvm: f64,
    /// Path constants the components were built from.
    pub constants: EndpointConstants,
}

/// Evaluates the semiclassical kernel between Feller positions x (final) and
/// x_T (initial) over duration `maturity`.
pub fn wkb_kernel(x: f64, x_t: f64, fp: &FellerParams, maturity: f64) -> Result<KernelEval> {
    let constants = constants_from_endpoints(x, x_t, fp, maturity)?;
    let s = action(&constants)?;
    let i = mixed_derivative_integral(&constants)?;
    let j = vvm_determinant(&constants)?;

    let half_i = 0.5 * i;
    #[cfg(test)]
    let half_i = ASSEMBLY_FAULT.with(|f| if f.get() { -half_i } else { half_i });

    let ln_value = -0.5 * (2.0 * std::f64::consts::PI * j).ln() + half_i - s;
    if !ln_value.is_finite() {
        return Err(Error::InternalInvariant {
            detail: format!(
                "kernel log-value not finite: ln = {ln_value}, S = {s}, I = {i}, J = {j}, \
                 x = {x}, x_T = {x_t}, T = {maturity}"
            ),
        });
    }
    let value = ln_value.exp();
    if ln_value > LN_UNDERFLOW && !(value > 0.0) {
        return Err(Error::InternalInvariant {
            detail: format!("kernel value {value} not positive at ln = {ln_value}"),
        });
    }
    Ok(KernelEval {
        value,
        ln_value,
        action: s,
        exp_factor_integral: i,
        vvm: j,
        constants,
    })
}
