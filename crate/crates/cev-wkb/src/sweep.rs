//! Parameter sweeps comparing the semiclassical price against the Monte
//! Carlo oracle, with CSV emission and parsing.
//!
//! A sweep varies one axis (elasticity, maturity, volatility or drift) over
//! an ascending value list while the rest of the configuration stays at its
//! base. Every row runs both pricers and records the absolute gap between
//! them. Rows are reseeded individually from (base seed, row index), so a
//! row's Monte Carlo stream does not depend on which other values are swept;
//! note this means two sweeps that share an axis value still draw different
//! noise for it when the value sits at a different index.

use crate::error::{Error, Result};
use crate::mc::{mc_call_price, McConfig};
use crate::params::{CevParams, MarketSpec};
use crate::pricing::{cev_call_price, QuadConfig};
use crate::rng;

/// The parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    Maturity,
    Sigma,
    Mu,
}

impl SweepAxis {
    /// Lower-case name used in the CSV `axis` column.
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Maturity => "maturity",
            SweepAxis::Sigma => "sigma",
            SweepAxis::Mu => "mu",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "alpha" => Ok(SweepAxis::Alpha),
            "maturity" => Ok(SweepAxis::Maturity),
            "sigma" => Ok(SweepAxis::Sigma),
            "mu" => Ok(SweepAxis::Mu),
            _ => Err(Error::InvalidParameter {
                name: "axis",
                value: f64::NAN,
                constraint: "one of alpha, maturity, sigma, mu",
            }),
        }
    }
}

/// A sweep definition: which axis moves, over which values, around which
/// base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Axis values, strictly ascending. May be empty (a vacuous sweep).
    pub values: Vec<f64>,
    /// Contract terms held fixed (maturity is overridden on that axis).
    pub market: MarketSpec,
    /// Model parameters held fixed (the swept one is overridden per row).
    pub cev: CevParams,
}

impl SweepSpec {
    /// Sweep around the reference configuration: S0 = 100, E = 110,
    /// r = 0.03, T = 1 with (mu, sigma, alpha) = (0.03, 0.3, -0.5).
    pub fn reference(axis: SweepAxis, values: Vec<f64>) -> Self {
        SweepSpec {
            axis,
            values,
            market: MarketSpec::new(100.0, 110.0, 0.03, 1.0).expect("reference market is valid"),
            cev: CevParams::new(0.03, 0.3, -0.5).expect("reference parameters are valid"),
        }
    }

    fn validate(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for &v in &self.values {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "values",
                    value: v,
                    constraint: "axis values must be finite",
                });
            }
            if v <= prev {
                return Err(Error::InvalidParameter {
                    name: "values",
                    value: v,
                    constraint: "axis values must be strictly ascending",
                });
            }
            prev = v;
        }
        Ok(())
    }
}

/// One sweep row: both prices, their gap, and the Monte Carlo sizing that
/// produced the estimate. A row whose evaluation failed carries the error
/// text and NaN in the fields that could not be computed; the sweep itself
/// keeps going.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub wkb_price: f64,
    pub mc_mean: f64,
    pub mc_std_error: f64,
    /// |wkb_price - mc_mean|, NaN when either side failed.
    pub abs_error: f64,
    /// Payoff samples behind mc_mean (0 when the simulation did not run).
    pub n_paths: u64,
    /// The row's derived seed, recorded for reproducibility.
    pub seed: u64,
    /// First error encountered while evaluating the row, if any.
    pub error: Option<String>,
}

/// Runs one sweep. Rows evaluate sequentially in value order (the Monte
/// Carlo oracle still parallelizes internally); each row reseeds from
/// (mc.seed, row index). Per-row failures are recorded on the row, not
/// returned; only a malformed spec or configuration errors out.
pub fn run_sweep(spec: &SweepSpec, mc: &McConfig, q: &QuadConfig) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    mc.validate()?;
    q.validate()?;

    let mut rows = Vec::with_capacity(spec.values.len());
    for (idx, &value) in spec.values.iter().enumerate() {
        let seed = rng::stream_key(mc.seed, idx as u64);
        let mut row = SweepRow {
            axis_value: value,
            wkb_price: f64::NAN,
            mc_mean: f64::NAN,
            mc_std_error: f64::NAN,
            abs_error: f64::NAN,
            n_paths: 0,
            seed,
            error: None,
        };
        let record = |row: &mut SweepRow, e: Error| {
            if row.error.is_none() {
                row.error = Some(e.to_string());
            }
        };

        let built = apply_axis(spec, value);
        match built {
            Err(e) => record(&mut row, e),
            Ok((market, cev)) => {
                match cev_call_price(&market, &cev, q) {
                    Ok(price) => row.wkb_price = price,
                    Err(e) => record(&mut row, e),
                }
                let row_cfg = McConfig { seed, ..*mc };
                match mc_call_price(&market, &cev, &row_cfg) {
                    Ok(est) => {
                        row.mc_mean = est.mean;
                        row.mc_std_error = est.std_error;
                        row.n_paths = est.n_effective;
                    }
                    Err(e) => record(&mut row, e),
                }
                row.abs_error = (row.wkb_price - row.mc_mean).abs();
            }
        }
        if let Some(msg) = &row.error {
            log::warn!("sweep row {}={value} failed: {msg}", spec.axis.as_str());
        }
        rows.push(row);
    }
    Ok(rows)
}

fn apply_axis(spec: &SweepSpec, value: f64) -> Result<(MarketSpec, CevParams)> {
    let m = &spec.market;
    let p = &spec.cev;
    Ok(match spec.axis {
        SweepAxis::Alpha => (*m, CevParams::new(p.mu, p.sigma, value)?),
        SweepAxis::Sigma => (*m, CevParams::new(p.mu, value, p.alpha)?),
        SweepAxis::Mu => (*m, CevParams::new(value, p.sigma, p.alpha)?),
        SweepAxis::Maturity => (MarketSpec::new(m.s0, m.strike, m.rate, value)?, *p),
    })
}

/// Column order of the emitted CSV.
const CSV_HEADER: [&str; 9] = [
    "axis",
    "axis_value",
    "wkb_price",
    "mc_mean",
    "mc_std_error",
    "abs_error",
    "n_paths",
    "seed",
    "error",
];

/// Full round-trip float formatting: 17 significant digits.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders rows as CSV under the fixed header. NaNs print as `NaN`, a
/// failed row's message lands in the trailing `error` column, and floats
/// carry 17 significant digits so parsing reproduces them bit for bit.
pub fn sweep_to_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("vec write cannot fail");
    for r in rows {
        w.write_record([
            axis.as_str(),
            &fmt_f64(r.axis_value),
            &fmt_f64(r.wkb_price),
            &fmt_f64(r.mc_mean),
            &fmt_f64(r.mc_std_error),
            &fmt_f64(r.abs_error),
            &r.n_paths.to_string(),
            &r.seed.to_string(),
            r.error.as_deref().unwrap_or(""),
        ])
        .expect("vec write cannot fail");
    }
    String::from_utf8(w.into_inner().expect("vec flush cannot fail")).expect("csv output is utf-8")
}

fn parse_field<T: std::str::FromStr>(field: &str, line: u64, what: &'static str) -> Result<T> {
    field.parse().map_err(|_| Error::InvalidParameter {
        name: what,
        value: line as f64,
        constraint: "a parseable CSV field (the offending line number is reported as the value)",
    })
}

/// Parses a CSV produced by [`sweep_to_csv`] back into rows. The header
/// must match exactly and every row must carry the same, known axis name.
pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header_ok = match rdr.headers() {
        Ok(h) => h.iter().eq(CSV_HEADER),
        Err(_) => false,
    };
    if !header_ok {
        return Err(Error::InternalInvariant {
            detail: format!(
                "sweep CSV header must be exactly `{}`",
                CSV_HEADER.join(",")
            ),
        });
    }

    let mut axis: Option<SweepAxis> = None;
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|_| Error::InvalidParameter {
            name: "csv",
            value: line as f64,
            constraint: "a well-formed CSV record (the offending line number is the value)",
        })?;
        if record.len() != CSV_HEADER.len() {
            return Err(Error::InvalidParameter {
                name: "csv",
                value: line as f64,
                constraint: "nine fields per record (the offending line number is the value)",
            });
        }
        let row_axis = SweepAxis::parse(&record[0])?;
        if *axis.get_or_insert(row_axis) != row_axis {
            return Err(Error::InvalidParameter {
                name: "axis",
                value: line as f64,
                constraint: "a single axis per sweep file (the offending line number is the value)",
            });
        }
        rows.push(SweepRow {
            axis_value: parse_field(&record[1], line, "axis_value")?,
            wkb_price: parse_field(&record[2], line, "wkb_price")?,
            mc_mean: parse_field(&record[3], line, "mc_mean")?,
            mc_std_error: parse_field(&record[4], line, "mc_std_error")?,
            abs_error: parse_field(&record[5], line, "abs_error")?,
            n_paths: parse_field(&record[6], line, "n_paths")?,
            seed: parse_field(&record[7], line, "seed")?,
            error: if record[8].is_empty() {
                None
            } else {
                Some(record[8].to_string())
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_mc() -> McConfig {
        McConfig {
            n_pairs: 200,
            steps_per_year: 50,
            seed: 7,
        }
    }

    fn bits_equal(a: f64, b: f64) -> bool {
        a.to_bits() == b.to_bits()
    }

    #[test]
    fn sweep_produces_a_row_per_value_in_order() {
        let spec = SweepSpec::reference(SweepAxis::Alpha, vec![-0.9, -0.5, -0.3]);
        let rows = run_sweep(&spec, &small_mc(), &QuadConfig::default()).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, &v) in rows.iter().zip(&spec.values) {
            assert_eq!(row.axis_value, v);
            assert!(row.error.is_none(), "unexpected error: {:?}", row.error);
            assert!(row.wkb_price.is_finite());
            assert!(row.mc_mean.is_finite());
            assert_eq!(row.n_paths, 400);
            assert!(bits_equal(
                row.abs_error,
                (row.wkb_price - row.mc_mean).abs()
            ));
        }
        // Rows are reseeded individually.
        assert_ne!(rows[0].seed, rows[1].seed);
    }

    #[test]
    fn maturity_axis_moves_the_contract_not_the_model() {
        let spec = SweepSpec::reference(SweepAxis::Maturity, vec![0.5, 1.0]);
        let rows = run_sweep(&spec, &small_mc(), &QuadConfig::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.error.is_none()));
        // Longer maturity means more time value on this call.
        assert!(rows[1].wkb_price > rows[0].wkb_price);
    }

    #[test]
    fn per_row_failures_are_recorded_not_fatal() {
        // -2 is outside the elasticity domain; the row fails, the sweep
        // continues and the next row is healthy.
        let spec = SweepSpec::reference(SweepAxis::Alpha, vec![-2.0, -0.5]);
        let rows = run_sweep(&spec, &small_mc(), &QuadConfig::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_some());
        assert!(rows[0].wkb_price.is_nan());
        assert!(rows[0].mc_mean.is_nan());
        assert!(rows[0].abs_error.is_nan());
        assert_eq!(rows[0].n_paths, 0);
        assert!(rows[1].error.is_none());
        assert!(rows[1].wkb_price.is_finite());
    }

    #[test]
    fn quadrature_failures_land_in_the_error_column() {
        // One doubling from a tiny initial span cannot cover the payoff
        // region, so the tail rule gives up and the row records it.
        let q = QuadConfig {
            rel_tol: 1e-10,
            max_doublings: 1,
            initial_span_multiplier: 1e-6,
        };
        let spec = SweepSpec::reference(SweepAxis::Sigma, vec![0.3]);
        let rows = run_sweep(&spec, &small_mc(), &q).unwrap();
        assert_eq!(rows.len(), 1);
        let msg = rows[0].error.as_deref().unwrap_or("");
        assert!(
            msg.contains("convergence"),
            "expected a convergence failure, got: {msg}"
        );
        // The Monte Carlo half of the row is still healthy.
        assert!(rows[0].mc_mean.is_finite());
        assert!(rows[0].wkb_price.is_nan());
    }

    #[test]
    fn spec_validation_rejects_bad_value_lists() {
        let mut spec = SweepSpec::reference(SweepAxis::Alpha, vec![-0.5, -0.5]);
        let q = QuadConfig::default();
        assert!(run_sweep(&spec, &small_mc(), &q).is_err());
        spec.values = vec![-0.3, -0.5];
        assert!(run_sweep(&spec, &small_mc(), &q).is_err());
        spec.values = vec![f64::NAN];
        assert!(run_sweep(&spec, &small_mc(), &q).is_err());
    }

    #[test]
    fn empty_sweep_emits_header_only() {
        let spec = SweepSpec::reference(SweepAxis::Mu, Vec::new());
        let rows = run_sweep(&spec, &small_mc(), &QuadConfig::default()).unwrap();
        assert!(rows.is_empty());
        let csv = sweep_to_csv(SweepAxis::Mu, &rows);
        assert_eq!(
            csv,
            "axis,axis_value,wkb_price,mc_mean,mc_std_error,abs_error,n_paths,seed,error\n"
        );
        assert!(sweep_from_csv(&csv).unwrap().is_empty());
    }

    #[test]
    fn csv_round_trip_reproduces_rows_exactly() {
        // Includes a NaN-bearing failed row and an error message with a
        // comma, which must survive quoting.
        let rows = vec![
            SweepRow {
                axis_value: -0.5,
                wkb_price: 0.012345678901234567,
                mc_mean: 0.011111111111111112,
                mc_std_error: 3.3e-4,
                abs_error: (0.012345678901234567f64 - 0.011111111111111112).abs(),
                n_paths: 400,
                seed: 0x00ab_cdef_1234_5678,
                error: None,
            },
            SweepRow {
                axis_value: -0.3,
                wkb_price: f64::NAN,
                mc_mean: f64::NAN,
                mc_std_error: f64::NAN,
                abs_error: f64::NAN,
                n_paths: 0,
                seed: 99,
                error: Some("invalid parameter `alpha` = -2: requires -1 <= alpha, really".into()),
            },
        ];
        let text = sweep_to_csv(SweepAxis::Alpha, &rows);
        let parsed = sweep_from_csv(&text).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for (a, b) in rows.iter().zip(&parsed) {
            assert!(bits_equal(a.axis_value, b.axis_value));
            assert!(bits_equal(a.wkb_price, b.wkb_price));
            assert!(bits_equal(a.mc_mean, b.mc_mean));
            assert!(bits_equal(a.mc_std_error, b.mc_std_error));
            assert!(bits_equal(a.abs_error, b.abs_error));
            assert_eq!(a.n_paths, b.n_paths);
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.error, b.error);
        }
    }

    #[test]
    fn identical_specs_give_byte_identical_csv() {
        let spec = SweepSpec::reference(SweepAxis::Alpha, vec![-0.7, -0.5]);
        let mc = small_mc();
        let q = QuadConfig::default();
        let a = sweep_to_csv(spec.axis, &run_sweep(&spec, &mc, &q).unwrap());
        let b = sweep_to_csv(spec.axis, &run_sweep(&spec, &mc, &q).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn csv_parser_rejects_malformed_input() {
        assert!(sweep_from_csv("nonsense,header\n1,2\n").is_err());
        let good = "axis,axis_value,wkb_price,mc_mean,mc_std_error,abs_error,n_paths,seed,error\n";
        let bad_axis = format!("{good}tilt,1.0,1.0,1.0,1.0,0.0,2,1,\n");
        assert!(sweep_from_csv(&bad_axis).is_err());
        let mixed_axis =
            format!("{good}alpha,1.0,1.0,1.0,1.0,0.0,2,1,\nsigma,2.0,1.0,1.0,1.0,0.0,2,1,\n");
        assert!(sweep_from_csv(&mixed_axis).is_err());
        let bad_float = format!("{good}alpha,zap,1.0,1.0,1.0,0.0,2,1,\n");
        assert!(sweep_from_csv(&bad_float).is_err());
    }

    #[test]
    fn axis_names_round_trip() {
        for axis in [
            SweepAxis::Alpha,
            SweepAxis::Maturity,
            SweepAxis::Sigma,
            SweepAxis::Mu,
        ] {
            assert_eq!(SweepAxis::parse(axis.as_str()).unwrap(), axis);
        }
        assert!(SweepAxis::parse("strike").is_err());
    }
}
