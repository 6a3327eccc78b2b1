//! Command-line surface of the pricing engine: single-price queries, the
//! kernel decomposition, WKB-vs-MC sweeps, convergence curves and the
//! verification suite.
//!
//! Configuration resolves in three layers: built-in reference defaults, then
//! a JSON config file (`--config`), then individual flags. Prices and kernel
//! evaluations print as JSON; sweeps and convergence curves print as CSV with
//! full round-trip number formatting.
//!
//! Exit codes: 0 success, 1 verification or runtime failure, 2 parameter or
//! usage error, 3 quadrature non-convergence.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use cev_wkb::bs::bs_call_closed;
use cev_wkb::error::Error;
use cev_wkb::kernel::wkb_kernel;
use cev_wkb::mc::{mc_call_price, mc_convergence_curve, McConfig};
use cev_wkb::params::{derive_feller_params, CevParams, MarketSpec};
use cev_wkb::pricing::{cev_call_price, QuadConfig};
use cev_wkb::sweep::{run_sweep, sweep_to_csv, SweepAxis, SweepSpec};
use cev_wkb::verify::{run_verify, VerifyLevel};

#[derive(Parser)]
#[command(
    name = "cev-wkb",
    version,
    about = "Semiclassical (WKB) option pricing for the CEV model",
    long_about = "Prices European calls under the constant-elasticity-of-variance model \
                  through a closed-form semiclassical transition kernel, with a Monte Carlo \
                  comparator, parameter sweeps and a built-in verification suite."
)]
struct Cli {
    /// JSON config file with sections {"market": .., "cev": .., "mc": .., "quad": ..}.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Elasticity exponent, in [-1, -1e-6].
    #[arg(long, global = true, value_name = "A", allow_hyphen_values = true)]
    alpha: Option<f64>,

    /// Volatility scale sigma (> 0).
    #[arg(long, global = true, value_name = "V")]
    sigma: Option<f64>,

    /// Real-world drift mu (nonzero).
    #[arg(long, global = true, value_name = "M", allow_hyphen_values = true)]
    mu: Option<f64>,

    /// Risk-free rate (>= 0).
    #[arg(long, global = true, value_name = "R")]
    rate: Option<f64>,

    /// Spot price (> 0).
    #[arg(long, global = true, value_name = "S")]
    s0: Option<f64>,

    /// Strike price (> 0).
    #[arg(long, global = true, value_name = "E")]
    strike: Option<f64>,

    /// Time to maturity in years (> 0).
    #[arg(long, global = true, value_name = "T")]
    maturity: Option<f64>,

    /// Total Monte Carlo paths; must be even (two per antithetic pair).
    #[arg(long, global = true, value_name = "N")]
    paths: Option<u64>,

    /// Euler steps per year of maturity (>= 50).
    #[arg(long = "steps-per-year", global = true, value_name = "N")]
    steps_per_year: Option<u32>,

    /// Monte Carlo seed.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    /// Relative tolerance of the pricing quadrature.
    #[arg(long = "rel-tol", global = true, value_name = "TOL")]
    rel_tol: Option<f64>,

    /// Write output to a file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price a call under the lognormal reference model (closed form).
    PriceBs,
    /// Price a call with the semiclassical CEV kernel quadrature.
    PriceCev,
    /// Price a call by antithetic Euler Monte Carlo.
    McPrice,
    /// Evaluate the kernel decomposition at a Feller-coordinate pair.
    Kernel {
        /// Final Feller position x (> 0).
        #[arg(long, value_name = "X")]
        x: f64,
        /// Initial Feller position x_T (> 0).
        #[arg(long = "x-t", value_name = "XT")]
        x_t: f64,
    },
    /// Sweep one parameter axis, pricing each point by WKB and MC (CSV).
    Sweep {
        /// Axis to sweep: alpha, maturity, sigma or mu.
        #[arg(long, value_name = "AXIS")]
        axis: String,
        /// Comma-separated strictly ascending axis values.
        #[arg(
            long,
            value_name = "V1,V2,..",
            value_delimiter = ',',
            allow_hyphen_values = true
        )]
        values: Vec<f64>,
    },
    /// Running Monte Carlo estimate against path count (CSV).
    Convergence {
        /// Comma-separated ascending even path counts; defaults to seven
        /// checkpoints between 1% and 100% of --paths.
        #[arg(long, value_name = "N1,N2,..", value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
    },
    /// Run the verification suite and print its report.
    Verify {
        /// fast: reduced grids, seconds; full: complete grids plus
        /// million-path Monte Carlo cross-checks, minutes.
        #[arg(long, value_parser = ["fast", "full"], default_value = "fast")]
        level: String,
    },
}

/// Optional per-field overrides read from the JSON config file. Unknown keys
/// are rejected so typos surface instead of silently pricing the defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    market: MarketPatch,
    #[serde(default)]
    cev: CevPatch,
    #[serde(default)]
    mc: McPatch,
    #[serde(default)]
    quad: QuadPatch,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketPatch {
    s0: Option<f64>,
    strike: Option<f64>,
    rate: Option<f64>,
    maturity: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CevPatch {
    mu: Option<f64>,
    sigma: Option<f64>,
    alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct McPatch {
    n_pairs: Option<u64>,
    steps_per_year: Option<u32>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadPatch {
    rel_tol: Option<f64>,
    max_doublings: Option<u32>,
    initial_span_multiplier: Option<f64>,
}

/// Fully resolved run configuration (defaults, then file, then flags).
struct Resolved {
    market: MarketSpec,
    cev: CevParams,
    mc: McConfig,
    quad: QuadConfig,
}

enum CliError {
    /// An engine error; exits with its own code (1, 2 or 3).
    Lib(Error),
    /// A usage problem the engine never saw (bad config file, bad flag
    /// combination); exits 2 like other parameter-domain errors.
    Usage(String),
    /// Output could not be written; exits 1.
    Io(String),
    /// The verification report (already printed) contains failures; exits 1.
    VerifyFailed,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

fn resolve(cli: &Cli) -> Result<Resolved, CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
            })?;
            serde_json::from_str::<FileConfig>(&text).map_err(|e| {
                CliError::Usage(format!("cannot parse config file {}: {e}", path.display()))
            })?
        }
        None => FileConfig::default(),
    };

    let pick = |flag: Option<f64>, from_file: Option<f64>, default: f64| {
        flag.or(from_file).unwrap_or(default)
    };

    let market = MarketSpec::new(
        pick(cli.s0, file.market.s0, 100.0),
        pick(cli.strike, file.market.strike, 110.0),
        pick(cli.rate, file.market.rate, 0.03),
        pick(cli.maturity, file.market.maturity, 1.0),
    )?;
    let cev = CevParams::new(
        pick(cli.mu, file.cev.mu, 0.03),
        pick(cli.sigma, file.cev.sigma, 0.3),
        pick(cli.alpha, file.cev.alpha, -0.5),
    )?;

    let mc_default = McConfig::default();
    let n_pairs = match cli.paths {
        Some(p) => {
            if p == 0 || p % 2 != 0 {
                return Err(CliError::Usage(format!(
                    "--paths must be a positive even count (two paths per antithetic \
                     pair), got {p}"
                )));
            }
            p / 2
        }
        None => file.mc.n_pairs.unwrap_or(mc_default.n_pairs),
    };
    let mc = McConfig {
        n_pairs,
        steps_per_year: cli
            .steps_per_year
            .or(file.mc.steps_per_year)
            .unwrap_or(mc_default.steps_per_year),
        seed: cli.seed.or(file.mc.seed).unwrap_or(mc_default.seed),
    };

    let quad_default = QuadConfig::default();
    let quad = QuadConfig {
        rel_tol: pick(cli.rel_tol, file.quad.rel_tol, quad_default.rel_tol),
        max_doublings: file
            .quad
            .max_doublings
            .unwrap_or(quad_default.max_doublings),
        initial_span_multiplier: file
            .quad
            .initial_span_multiplier
            .unwrap_or(quad_default.initial_span_multiplier),
    };

    Ok(Resolved {
        market,
        cev,
        mc,
        quad,
    })
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: Option<&PathBuf>, doc: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| CliError::Io(format!("cannot render JSON: {e}")))?;
    text.push('\n');
    emit(out, &text)
}

/// Default convergence checkpoints: 1% to 100% of the configured path count,
/// rounded down to even counts.
fn default_checkpoints(total_paths: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for per_ten_thousand in [100u64, 200, 500, 1000, 2000, 5000, 10_000] {
        let mut v = total_paths / 10_000 * per_ten_thousand
            + total_paths % 10_000 * per_ten_thousand / 10_000;
        v -= v % 2;
        if v >= 2 && out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let r = resolve(cli)?;
    let out = cli.out.as_ref();
    match &cli.command {
        Command::PriceBs => {
            let price = bs_call_closed(&r.market, r.cev.sigma)?;
            emit_json(
                out,
                &serde_json::json!({
                    "market": r.market,
                    "sigma": r.cev.sigma,
                    "price": price,
                }),
            )
        }
        Command::PriceCev => {
            let price = cev_call_price(&r.market, &r.cev, &r.quad)?;
            emit_json(
                out,
                &serde_json::json!({
                    "market": r.market,
                    "cev": r.cev,
                    "quad": r.quad,
                    "price": price,
                }),
            )
        }
        Command::McPrice => {
            let estimate = mc_call_price(&r.market, &r.cev, &r.mc)?;
            emit_json(
                out,
                &serde_json::json!({
                    "market": r.market,
                    "cev": r.cev,
                    "mc": r.mc,
                    "estimate": estimate,
                }),
            )
        }
        Command::Kernel { x, x_t } => {
            let fp = derive_feller_params(&r.cev);
            let eval = wkb_kernel(*x, *x_t, &fp, r.market.maturity)?;
            emit_json(
                out,
                &serde_json::json!({
                    "cev": r.cev,
                    "feller": fp,
                    "maturity": r.market.maturity,
                    "kernel": eval,
                }),
            )
        }
        Command::Sweep { axis, values } => {
            let spec = SweepSpec {
                axis: SweepAxis::parse(axis)?,
                values: values.clone(),
                market: r.market,
                cev: r.cev,
            };
            let rows = run_sweep(&spec, &r.mc, &r.quad)?;
            emit(out, &sweep_to_csv(spec.axis, &rows))
        }
        Command::Convergence { checkpoints } => {
            let checkpoints = match checkpoints {
                Some(c) => c.clone(),
                None => default_checkpoints(2 * r.mc.n_pairs),
            };
            let curve = mc_convergence_curve(&r.market, &r.cev, &r.mc, &checkpoints)?;
            let mut csv = String::from("n_paths,mean,std_error\n");
            for pt in &curve {
                csv.push_str(&format!(
                    "{},{:.16e},{:.16e}\n",
                    pt.n_paths, pt.mean, pt.std_error
                ));
            }
            emit(out, &csv)
        }
        Command::Verify { level } => {
            let level = match level.as_str() {
                "full" => VerifyLevel::Full,
                _ => VerifyLevel::Fast,
            };
            let report = run_verify(level);
            emit(out, &report.render())?;
            if report.all_passed() {
                Ok(())
            } else {
                Err(CliError::VerifyFailed)
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
        Err(CliError::VerifyFailed) => ExitCode::FAILURE,
    }
}
