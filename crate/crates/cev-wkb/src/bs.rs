//! Black-Scholes propagator and call pricing, in both closed form and
//! quadrature form.
//!
//! In log price x = ln S the pricing PDE has Hamiltonian
//! H = (sigma^2/2) p^2 - mu p - r with mu = r - sigma^2/2. The Hamiltonian is
//! quadratic, so the semiclassical propagator is the exact heat kernel:
//!
//!   K(x, x_T; T) = (2 pi sigma^2 T)^{-1/2}
//!                  exp(-(x_T - x - mu T)^2 / (2 sigma^2 T) - r T)
//!
//! (the discount enters the kernel itself). Convolving K against the call
//! payoff max(e^{x_T} - E, 0) and completing the square yields the familiar
//! two-term expression with the standard normal CDF. The quadrature route
//! here performs that convolution numerically and exists as an independent
//! check of the closed form; the two must agree to quadrature accuracy.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::params::MarketSpec;
use crate::quad;

/// Parameters of the log-price diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsParams {
    /// Volatility (1/sqrt(year)), positive.
    pub sigma: f64,
    /// Discount rate r (1/year), nonnegative.
    pub rate: f64,
    /// Risk-neutral log-price drift mu = r - sigma^2/2 (1/year).
    pub mu_eff: f64,
}

impl BsParams {
    /// Builds the parameter set, deriving the effective drift.
    pub fn new(sigma: f64, rate: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                constraint: "sigma > 0 and finite",
            });
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rate",
                value: rate,
                constraint: "rate >= 0 and finite",
            });
        }
        Ok(BsParams {
            sigma,
            rate,
            mu_eff: rate - 0.5 * sigma * sigma,
        })
    }
}

/// Standard normal CDF through the complementary error function, which keeps
/// full relative accuracy in the lower tail where 1 - Phi(-z) would lose it.
fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Heat kernel of the log-price diffusion between log prices x (initial) and
/// x_T (terminal), over duration `maturity`.
pub fn bs_propagator(x: f64, x_t: f64, maturity: f64, p: &BsParams) -> Result<f64> {
    if !(maturity > 0.0) || !maturity.is_finite() {
        return Err(Error::InvalidParameter {
            name: "maturity",
            value: maturity,
            constraint: "maturity > 0 and finite",
        });
    }
    if !x.is_finite() || !x_t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x",
            value: if x.is_finite() { x_t } else { x },
            constraint: "log price finite",
        });
    }
    let var = p.sigma * p.sigma * maturity;
    let dev = x_t - x - p.mu_eff * maturity;
    Ok((-dev * dev / (2.0 * var) - p.rate * maturity).exp()
        / (2.0 * std::f64::consts::PI * var).sqrt())
}

/// Closed-form call price: S0 N(d1) - E e^{-rT} N(d2), with
/// d1 = (ln(S0/E) + (r + sigma^2/2) T)/(sigma sqrt(T)) and
/// d2 = d1 - sigma sqrt(T), the grouping that completing the square in the
/// payoff convolution produces.
pub fn bs_call_closed(m: &MarketSpec, sigma: f64) -> Result<f64> {
    let p = BsParams::new(sigma, m.rate)?;
    let srt = p.sigma * m.maturity.sqrt();
    let d1 = ((m.s0 / m.strike).ln() + (m.rate + 0.5 * p.sigma * p.sigma) * m.maturity) / srt;
    let d2 = d1 - srt;
    Ok(m.s0 * normal_cdf(d1) - m.strike * (-m.rate * m.maturity).exp() * normal_cdf(d2))
}

/// Call price by direct numerical convolution of the propagator with the
/// payoff over terminal log price, starting at ln E and extending the upper
/// limit by span doubling until the added tail is negligible.
///
/// `tol` is the relative quadrature tolerance, required in (0, 1e-3].
pub fn bs_call_quadrature(m: &MarketSpec, sigma: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            constraint: "0 < tol <= 1e-3",
        });
    }
    let p = BsParams::new(sigma, m.rate)?;
    let x = m.s0.ln();
    let lo = m.strike.ln();
    // First span covers the payoff-weighted bulk of the Gaussian; e^{x_T}
    // shifts the effective mean up by one extra variance, hence the wide
    // 12-sigma margin. The tail rule then doubles outward as needed.
    let srt = p.sigma * m.maturity.sqrt();
    let hi0 = (x + p.mu_eff * m.maturity + 12.0 * srt).max(lo + srt);
    let r = quad::integrate_to_infinity(
        |x_t| bs_propagator(x, x_t, m.maturity, &p).unwrap() * (x_t.exp() - m.strike),
        lo,
        hi0,
        tol,
        40,
    )?;
    Ok(r.value)
}
