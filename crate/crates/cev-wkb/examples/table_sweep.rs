//! Sweep the elasticity and the maturity, printing benchmark CSV.
//!
//! Each row prices one parameter setting twice, semiclassically and by
//! simulation, and reports the gap. The absolute error column grows as the
//! elasticity approaches zero and as the maturity grows; at the path count
//! used here the gap at the accurate end of each axis is dominated by
//! simulation noise rather than by the approximation itself.
//!
//! ```bash
//! cargo run --release --example table_sweep
//! ```

use cev_wkb::error::Error;
use cev_wkb::mc::McConfig;
use cev_wkb::pricing::QuadConfig;
use cev_wkb::sweep::{run_sweep, sweep_to_csv, SweepAxis, SweepSpec};

fn main() -> Result<(), Error> {
    let mc = McConfig {
        n_pairs: 25_000,
        steps_per_year: 1000,
        seed: 1,
    };
    let quad = QuadConfig::default();

    for (axis, values) in [
        (SweepAxis::Alpha, vec![-0.9, -0.7, -0.5, -0.3]),
        (SweepAxis::Maturity, vec![0.5, 1.0, 1.5]),
    ] {
        let spec = SweepSpec::reference(axis, values);
        let rows = run_sweep(&spec, &mc, &quad)?;
        print!("{}", sweep_to_csv(axis, &rows));
        println!();
    }
    Ok(())
}
