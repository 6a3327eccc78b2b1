//! Price a European call three ways and compare.
//!
//! The semiclassical engine integrates the WKB kernel against the payoff,
//! the Monte Carlo oracle simulates the stock directly, and the chi-square
//! pricer evaluates the exact distribution of the terminal stock. Run with
//!
//! ```bash
//! cargo run --release --example price_call
//! ```

use cev_wkb::error::Error;
use cev_wkb::mc::{mc_call_price, McConfig};
use cev_wkb::params::{CevParams, MarketSpec};
use cev_wkb::pricing::{cev_call_price, QuadConfig};
use cev_wkb::verify::chi_square_call_price;

fn main() -> Result<(), Error> {
    // A call struck ten percent out of the money, one year out, on a stock
    // with a moderate downward volatility skew.
    let market = MarketSpec::new(100.0, 110.0, 0.03, 1.0)?;
    let cev = CevParams::new(0.03, 0.3, -0.5)?;

    let wkb = cev_call_price(&market, &cev, &QuadConfig::default())?;
    let exact = chi_square_call_price(&market, &cev);

    let mc_config = McConfig {
        n_pairs: 100_000,
        steps_per_year: 1000,
        seed: 7,
    };
    let mc = mc_call_price(&market, &cev, &mc_config)?;

    println!(
        "spot {} strike {} rate {} maturity {}",
        market.s0, market.strike, market.rate, market.maturity
    );
    println!("mu {} sigma {} alpha {}", cev.mu, cev.sigma, cev.alpha);
    println!();
    println!("semiclassical   {wkb:.8e}");
    println!("exact           {exact:.8e}");
    println!(
        "monte carlo     {:.8e} +- {:.2e} ({} paths, {:.1}% absorbed)",
        mc.mean,
        mc.std_error,
        mc.n_effective,
        100.0 * mc.absorbed_fraction
    );
    println!();
    println!("wkb vs exact    {:+.2e}", wkb - exact);
    println!(
        "mc vs exact     {:+.2e} ({:+.1} std errors)",
        mc.mean - exact,
        (mc.mean - exact) / mc.std_error
    );
    Ok(())
}
