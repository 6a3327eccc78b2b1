//! Model and contract parameters: CEV inputs, the Feller reduction, and the
//! stock <-> Feller-coordinate change of variables.
//!
//! The CEV dynamics dS = mu S dt + sigma S^{alpha+1} dW reduce, through
//! S^{-2 alpha} = sigma^2 alpha^2 X, to a Feller diffusion with parameters
//! a = 2 + 1/alpha, b = 2 alpha mu and d = a/b. Everything downstream works
//! in the Feller coordinate x.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CEV model parameters for dS = mu S dt + sigma S^{alpha+1} dW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CevParams {
    /// Drift rate (1/year). Nonzero: the reduction divides by b = 2 alpha mu.
    pub mu: f64,
    /// Volatility prefactor multiplying S^{alpha+1} (year^{-1/2}).
    pub sigma: f64,
    /// Elasticity exponent, -1 <= alpha <= -1e-6.
    pub alpha: f64,
}

/// Least-negative accepted elasticity; closer to zero the reduction blows up.
pub const ALPHA_MAX: f64 = -1e-6;
/// Elasticities above this draw a warning: the semiclassical error grows
/// rapidly as alpha -> 0 (absolute errors reach ~1e-1 by alpha = -0.3).
pub const ALPHA_WARN: f64 = -0.1;

impl CevParams {
    /// Validates and builds the parameter set. `alpha` in `(-0.1, -1e-6]`
    /// is accepted with a logged warning about approximation quality.
    pub fn new(mu: f64, sigma: f64, alpha: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                constraint: "sigma > 0 and finite",
            });
        }
        if !mu.is_finite() || mu == 0.0 {
            return Err(Error::InvalidParameter {
                name: "mu",
                value: mu,
                constraint: "mu != 0 and finite (b = 2*alpha*mu must be nonzero)",
            });
        }
        if !alpha.is_finite() || !(-1.0..=ALPHA_MAX).contains(&alpha) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                constraint: "-1 <= alpha <= -1e-6 (alpha = 0 is a singular reduction)",
            });
        }
        if alpha > ALPHA_WARN {
            log::warn!(
                "alpha = {alpha} is close to zero; the semiclassical approximation \
                 degrades rapidly there (expect absolute price errors above 1e-2)"
            );
        }
        Ok(Self { mu, sigma, alpha })
    }
}

/// Feller-diffusion parameters derived from [`CevParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FellerParams {
    /// a = 2 + 1/alpha (dimensionless).
    pub a: f64,
    /// b = 2 alpha mu (1/year); nonzero by construction.
    pub b: f64,
    /// d = a/b (dimensionless), so a = b*d to within one rounding.
    pub d: f64,
}

/// Computes (a, b, d) = (2 + 1/alpha, 2 alpha mu, a/b).
pub fn derive_feller_params(p: &CevParams) -> FellerParams {
    let a = 2.0 + 1.0 / p.alpha;
    let b = 2.0 * p.alpha * p.mu;
    FellerParams { a, b, d: a / b }
}

/// Maps a stock price to the Feller coordinate: x = S^{-2 alpha}/(sigma^2 alpha^2).
/// Strictly increasing in S for alpha < 0.
pub fn stock_to_feller(s: f64, p: &CevParams) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter {
            name: "s",
            value: s,
            constraint: "stock price > 0",
        });
    }
    Ok(s.powf(-2.0 * p.alpha) / (p.sigma * p.sigma * p.alpha * p.alpha))
}

/// Inverse map: S = (sigma^2 alpha^2 x)^{-1/(2 alpha)}.
pub fn feller_to_stock(x: f64, p: &CevParams) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            constraint: "feller coordinate > 0",
        });
    }
    Ok((p.sigma * p.sigma * p.alpha * p.alpha * x).powf(-1.0 / (2.0 * p.alpha)))
}

/// European call contract terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    /// Spot price S0 (currency).
    pub s0: f64,
    /// Strike E (currency).
    pub strike: f64,
    /// Discount rate r (1/year), nonnegative.
    pub rate: f64,
    /// Maturity T (years), positive.
    pub maturity: f64,
}

impl MarketSpec {
    pub fn new(s0: f64, strike: f64, rate: f64, maturity: f64) -> Result<Self> {
        if !(s0 > 0.0) || !s0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "s0",
                value: s0,
                constraint: "spot > 0 and finite",
            });
        }
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(Error::InvalidParameter {
                name: "strike",
                value: strike,
                constraint: "strike > 0 and finite",
            });
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rate",
                value: rate,
                constraint: "rate >= 0 and finite",
            });
        }
        if !(maturity > 0.0) || !maturity.is_finite() {
            return Err(Error::InvalidParameter {
                name: "maturity",
                value: maturity,
                constraint: "maturity > 0 and finite",
            });
        }
        Ok(Self {
            s0,
            strike,
            rate,
            maturity,
        })
    }
}
