//! Error taxonomy shared by every module.
//!
//! Four families matter to callers: parameter-domain violations, degenerate
//! classical paths (and the related momentum pole / log-domain conditions),
//! numeric-convergence failures (quadrature or ODE), and internal invariant
//! breaches that indicate a bug rather than bad input.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A construction argument violated its documented domain.
    #[error("invalid parameter `{name}` = {value}: requires {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// The classical path between the requested endpoints is degenerate
    /// (|D2| below threshold, the p = -b/2 branch); closed forms divide by D2.
    #[error(
        "degenerate classical path: |D2| = {d2_abs:.3e} below threshold {threshold:.3e} \
         for endpoints x = {x}, x_t = {x_t}, maturity {maturity}"
    )]
    DegeneratePath {
        d2_abs: f64,
        threshold: f64,
        x: f64,
        x_t: f64,
        maturity: f64,
    },

    /// The momentum denominator 4 D2 e^{b tau} + 2 D1 - 2 d vanished.
    #[error("momentum pole at tau = {tau}: |denominator| = {denom_abs:.3e} below {threshold:.3e}")]
    MomentumPole {
        tau: f64,
        denom_abs: f64,
        threshold: f64,
    },

    /// The log argument (2 D2 e^{bT} + D1 - d)/(2 D2 + D1 - d) was not positive.
    #[error(
        "log-domain error in {context}: ratio numerator {numerator:.6e}, \
         denominator {denominator:.6e} (both must share a sign)"
    )]
    LogDomain {
        context: &'static str,
        numerator: f64,
        denominator: f64,
    },

    /// The Van Vleck-Morette determinant came out non-positive; the kernel
    /// prefactor (2 pi J)^{-1/2} is undefined there.
    #[error("non-positive Van Vleck-Morette determinant J = {j:.6e} (x = {x}, x_t = {x_t}, maturity {maturity})")]
    NonPositiveDeterminant {
        j: f64,
        x: f64,
        x_t: f64,
        maturity: f64,
    },

    /// Adaptive quadrature or ODE stepping hit its iteration cap before
    /// meeting tolerance; the last estimate is carried for diagnostics.
    #[error(
        "numeric convergence failure in {context}: last estimate {estimate:.12e}, \
         residual estimate {residual:.3e} after {iterations} iterations"
    )]
    NumericConvergence {
        context: &'static str,
        estimate: f64,
        residual: f64,
        iterations: usize,
    },

    /// A constructed value failed its own type invariant: a bug, not bad input.
    #[error("internal invariant violated: {detail}")]
    InternalInvariant { detail: String },
}

impl Error {
    /// Process exit code for the CLI: 2 for parameter-domain errors, 3 for
    /// numeric-convergence failures, 1 for everything else (runtime domain
    /// conditions and invariant breaches).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } => 2,
            Error::NumericConvergence { .. } => 3,
            _ => 1,
        }
    }
}
