//! Take the semiclassical kernel apart at a handful of terminal positions.
//!
//! For each terminal coordinate the kernel reports its three ingredients:
//! the classical action, the integral of the mixed derivative of the
//! Hamiltonian, and the Van Vleck-Morette determinant. The log of the
//! kernel is assembled from exactly these pieces, so the table also shows
//! the reassembly identity ln K = -ln(2 pi J)/2 + I/2 - S.
//!
//! ```bash
//! cargo run --release --example kernel_decomposition
//! ```

use cev_wkb::error::Error;
use cev_wkb::kernel::wkb_kernel;
use cev_wkb::params::{derive_feller_params, stock_to_feller, CevParams};

fn main() -> Result<(), Error> {
    let cev = CevParams::new(0.03, 0.3, -0.5)?;
    let fp = derive_feller_params(&cev);
    let maturity = 1.0;

    // Evaluate at the Feller image of a 100 spot, with terminal stocks
    // from well below to well above it.
    let x = stock_to_feller(100.0, &cev)?;
    println!(
        "feller parameters: a {:.4} b {:.4} d {:.4}",
        fp.a, fp.b, fp.d
    );
    println!("initial feller coordinate x(100) = {x:.2}");
    println!();
    println!(
        "{:>8} {:>13} {:>13} {:>13} {:>13} {:>10}",
        "stock", "kernel", "action", "exp-factor", "determinant", "ln resid"
    );

    for stock in [60.0, 80.0, 100.0, 120.0, 160.0] {
        let x_t = stock_to_feller(stock, &cev)?;
        let k = wkb_kernel(x, x_t, &fp, maturity)?;
        let reassembled = -0.5 * (2.0 * std::f64::consts::PI * k.vvm).ln()
            + 0.5 * k.exp_factor_integral
            - k.action;
        println!(
            "{:>8.1} {:>13.6e} {:>13.6e} {:>13.6e} {:>13.6e} {:>10.1e}",
            stock,
            k.value,
            k.action,
            k.exp_factor_integral,
            k.vvm,
            (reassembled - k.ln_value).abs()
        );
    }
    Ok(())
}
