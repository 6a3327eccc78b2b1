//! Watch the Monte Carlo estimate converge toward the semiclassical price.
//!
//! Prints the running mean and standard error at geometric checkpoints, the
//! relative deviation from the WKB price, and the measured log-log slope of
//! the standard error, which should sit near -1/2.
//!
//! ```bash
//! cargo run --release --example mc_convergence
//! ```

use cev_wkb::error::Error;
use cev_wkb::mc::{mc_convergence_curve, McConfig};
use cev_wkb::params::{CevParams, MarketSpec};
use cev_wkb::pricing::{cev_call_price, QuadConfig};

fn main() -> Result<(), Error> {
    let market = MarketSpec::new(100.0, 110.0, 0.03, 2.0)?;
    let cev = CevParams::new(0.03, 0.3, -0.4)?;

    let wkb = cev_call_price(&market, &cev, &QuadConfig::default())?;

    let config = McConfig {
        n_pairs: 100_000,
        steps_per_year: 1000,
        seed: 11,
    };
    let checkpoints: Vec<u64> = [2_000u64, 5_000, 10_000, 20_000, 50_000, 100_000, 200_000]
        .into_iter()
        .collect();
    let curve = mc_convergence_curve(&market, &cev, &config, &checkpoints)?;

    println!("wkb price {wkb:.8e}");
    println!();
    println!(
        "{:>9} {:>14} {:>11} {:>10}",
        "paths", "mean", "std err", "rel dev"
    );
    for point in &curve {
        println!(
            "{:>9} {:>14.8e} {:>11.2e} {:>10.2e}",
            point.n_paths,
            point.mean,
            point.std_error,
            (point.mean - wkb).abs() / wkb
        );
    }

    // Least-squares slope of ln(std_error) against ln(n_paths).
    let logs: Vec<(f64, f64)> = curve
        .iter()
        .map(|p| ((p.n_paths as f64).ln(), p.std_error.ln()))
        .collect();
    let n = logs.len() as f64;
    let (sx, sy): (f64, f64) = logs
        .iter()
        .fold((0.0, 0.0), |acc, (x, y)| (acc.0 + x, acc.1 + y));
    let (sxx, sxy): (f64, f64) = logs
        .iter()
        .fold((0.0, 0.0), |acc, (x, y)| (acc.0 + x * x, acc.1 + x * y));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    println!();
    println!("std-error slope {slope:.3} (half-order decay is -0.5)");
    Ok(())
}
