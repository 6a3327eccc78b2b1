//! Semiclassical pricing engine for the constant-elasticity-of-variance
//! (CEV) model.
//!
//! The model takes the stock through dS = mu S dt + sigma S^(alpha+1) dW
//! with negative elasticity alpha. A power-law change of variables turns it
//! into a Feller-type diffusion whose transition kernel this crate evaluates
//! in closed form through a semiclassical (WKB) expansion: a classical
//! action, a Van Vleck-Morette determinant and an exponential prefactor,
//! each available separately and assembled in log space.
//!
//! On top of the kernel sit a call-pricing quadrature ([`pricing`]), a
//! lognormal reference model ([`bs`]), an antithetic Euler Monte Carlo
//! comparator ([`mc`]), parameter sweeps with CSV output ([`sweep`]) and a
//! self-contained verification suite ([`verify`]) that measures every
//! documented property of the engine against independent oracles.
//!
//! # Example
//!
//! ```
//! use cev_wkb::params::{CevParams, MarketSpec};
//! use cev_wkb::pricing::{cev_call_price, QuadConfig};
//!
//! let market = MarketSpec::new(100.0, 110.0, 0.03, 1.0)?;
//! let model = CevParams::new(0.03, 0.3, -0.5)?;
//! let price = cev_call_price(&market, &model, &QuadConfig::default())?;
//! assert!(price > 0.0 && price < market.s0);
//! # Ok::<(), cev_wkb::error::Error>(())
//! ```
//!
//! The Monte Carlo layer parallelizes over path chunks; the environment
//! variable `CEV_WKB_THREADS` caps its thread count (unset or `0` lets the
//! runtime decide). Every estimate is bit-reproducible for a given seed
//! regardless of the thread count.

// Domain guards are written `!(x > 0.0)` on purpose: the negation keeps NaN
// on the rejecting branch, which the suggested `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bs;
pub mod classical;
pub mod error;
pub mod kernel;
pub mod mc;
pub mod params;
pub mod pricing;
pub mod quad;
pub mod sweep;
pub mod variational;
pub mod verify;

pub(crate) mod ode;
pub(crate) mod rng;

use std::sync::OnceLock;

/// Dedicated rayon pool for path simulation, sized by `CEV_WKB_THREADS`
/// (unset, empty or `0` picks the rayon default). A private pool keeps the
/// engine's parallelism independent of any global pool the embedding
/// application configures.
pub(crate) fn thread_pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var("CEV_WKB_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .thread_name(|i| format!("cev-wkb-{i}"))
            .build()
            .expect("thread pool construction only fails on resource exhaustion")
    })
}
