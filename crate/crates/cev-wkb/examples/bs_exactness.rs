//! The lognormal propagator prices calls to quadrature accuracy.
//!
//! In the constant-volatility limit the semiclassical construction is not
//! an approximation at all: the kernel is the exact lognormal transition
//! density, so integrating it against the payoff must reproduce the
//! closed-form price to the tolerance of the quadrature. This example
//! sweeps volatility and maturity and prints both prices with their gap.
//!
//! ```bash
//! cargo run --release --example bs_exactness
//! ```

use cev_wkb::bs::{bs_call_closed, bs_call_quadrature};
use cev_wkb::error::Error;
use cev_wkb::params::MarketSpec;

fn main() -> Result<(), Error> {
    println!(
        "{:>6} {:>5} {:>16} {:>16} {:>10}",
        "sigma", "T", "closed", "quadrature", "rel gap"
    );
    let mut worst = 0.0f64;
    for sigma in [0.1, 0.2, 0.3, 0.4, 0.5] {
        for maturity in [0.25, 0.5, 1.0, 2.0] {
            let market = MarketSpec::new(100.0, 110.0, 0.03, maturity)?;
            let closed = bs_call_closed(&market, sigma)?;
            let quad = bs_call_quadrature(&market, sigma, 1e-10)?;
            let rel = (quad - closed).abs() / closed;
            worst = worst.max(rel);
            println!("{sigma:>6.2} {maturity:>5.2} {closed:>16.10e} {quad:>16.10e} {rel:>10.2e}");
        }
    }
    println!();
    println!("worst relative gap {worst:.2e}");
    Ok(())
}
