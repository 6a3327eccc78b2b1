//! Walk a classical path between two Feller endpoints.
//!
//! The path solves Hamilton's equations for H = 2 x p^2 + (b x - a) p in
//! closed form. This example fixes the two endpoints, recovers the
//! integration constants, then samples position and momentum along the
//! path. The energy column demonstrates conservation, and at the end the
//! Van Vleck-Morette determinant is computed twice: from the endpoint
//! constants and from the phase-space form seeded with the recovered
//! initial momentum.
//!
//! ```bash
//! cargo run --release --example classical_paths
//! ```

use cev_wkb::classical::{
    constants_from_endpoints, hamiltonian, initial_momentum, path_momentum, path_position,
    vvm_determinant, vvm_determinant_phase, PhaseState,
};
use cev_wkb::error::Error;
use cev_wkb::params::{derive_feller_params, stock_to_feller, CevParams};

fn main() -> Result<(), Error> {
    let cev = CevParams::new(0.03, 0.3, -0.5)?;
    let fp = derive_feller_params(&cev);
    let maturity = 1.0;

    let x = stock_to_feller(100.0, &cev)?;
    let x_t = stock_to_feller(120.0, &cev)?;
    let ec = constants_from_endpoints(x, x_t, &fp, maturity)?;
    let p_t = initial_momentum(&ec)?;

    println!("endpoints: x(T) = {x:.2} from x_T = {x_t:.2} in T = {maturity}");
    println!(
        "constants: D1 = {:.6}, D2 = {:.6}, p(0) = {p_t:.3e}",
        ec.d1, ec.d2
    );
    println!();
    println!("{:>6} {:>14} {:>14} {:>14}", "tau", "x", "p", "H");
    for k in 0..=8 {
        let tau = maturity * (k as f64 / 8.0);
        let pos = path_position(tau, &ec)?;
        let mom = path_momentum(tau, &ec)?;
        let energy = hamiltonian(&PhaseState { x: pos, p: mom }, &fp);
        println!("{tau:>6.3} {pos:>14.6} {mom:>14.6e} {energy:>14.8e}");
    }

    let j_endpoint = vvm_determinant(&ec)?;
    let j_phase = vvm_determinant_phase(x_t, p_t, &fp, maturity);
    println!();
    println!("determinant, endpoint form:    {j_endpoint:.12e}");
    println!("determinant, phase-space form: {j_phase:.12e}");
    Ok(())
}
