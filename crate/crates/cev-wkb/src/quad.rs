//! Adaptive quadrature: Gauss-Kronrod 7-15 panels with bisection refinement,
//! plus the shared span-doubling rule for integrals with an infinite upper
//! (or lower) limit.
//!
//! The contract is the relative tolerance, not the rule. Panel results are
//! accumulated in ascending-interval order so a given configuration always
//! produces bit-identical sums.

// The node and weight tables keep their full published precision; the extra
// digits document the source values even though f64 rounds them.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// 7-point Gauss / 15-point Kronrod abscissae on [-1, 1] (nonnegative half).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss weights for the embedded 7-point rule (odd-index abscissae of `XGK`).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    /// Integral estimate.
    pub value: f64,
    /// Estimated absolute error.
    pub abs_error: f64,
    /// Number of integrand evaluations performed.
    pub evaluations: usize,
}

/// One Gauss-Kronrod 15-point evaluation over [a, b]: returns the Kronrod
/// estimate and an error estimate from the Gauss-Kronrod difference.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut resabs = WGK[7] * fc.abs();

    for j in 0..7 {
        let offset = half * XGK[j];
        let f1 = f(center - offset);
        let f2 = f(center + offset);
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let value = kronrod * half;
    // Standard QUADPACK-style scaled error estimate, floored near roundoff.
    let raw = ((kronrod - gauss) * half).abs();
    let resabs = resabs * half.abs();
    let err = if resabs > 0.0 && raw > 0.0 {
        let scaled = raw * (200.0 * raw / resabs).sqrt().min(1.0).max(raw / resabs);
        scaled.min(raw * 200.0).max(raw * f64::EPSILON)
    } else {
        raw
    };
    (value, err.max(resabs * f64::EPSILON * 50.0))
}

const MAX_PANELS: usize = 4096;

/// Adaptive integral of `f` over the finite interval [a, b] to relative
/// tolerance `rel_tol` (with a tiny absolute floor so exact zeros converge).
///
/// Panels with the largest error estimate are bisected until the summed error
/// meets tolerance; the final value is accumulated over panels sorted by left
/// endpoint, making the result deterministic for a given configuration.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<QuadResult> {
    if !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter {
            name: "interval",
            value: b - a,
            constraint: "finite interval with b >= a",
        });
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }

    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
    }

    let (v0, e0) = gk15(&f, a, b);
    let mut panels = vec![Panel {
        a,
        b,
        value: v0,
        error: e0,
    }];
    let mut evaluations = 15usize;

    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        let target = rel_tol * total.abs() + 1e-300;
        if total_err <= target {
            break;
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::NumericConvergence {
                context: "adaptive quadrature panel refinement",
                estimate: total,
                residual: total_err,
                iterations: panels.len(),
            });
        }
        // Bisect the worst panel.
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let Panel { a: pa, b: pb, .. } = panels[worst];
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // Interval no longer splittable in f64; accept what we have.
            break;
        }
        let (lv, le) = gk15(&f, pa, mid);
        let (rv, re) = gk15(&f, mid, pb);
        evaluations += 30;
        panels[worst] = Panel {
            a: pa,
            b: mid,
            value: lv,
            error: le,
        };
        panels.push(Panel {
            a: mid,
            b: pb,
            value: rv,
            error: re,
        });
    }

    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = panels.iter().map(|p| p.value).sum();
    let abs_error = panels.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        abs_error,
        evaluations,
    })
}

/// Integral of `f` over [lo, +inf), truncated by span doubling: integrate
/// [lo, hi0] first, then keep appending segments of doubling width until the
/// last segment contributes less than `rel_tol` times the running integral
/// (or `max_doublings` is hit, which is a convergence error carrying the
/// running estimate and the last tail contribution).
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi0: f64,
    rel_tol: f64,
    max_doublings: u32,
) -> Result<QuadResult> {
    if !(hi0 > lo) {
        return Err(Error::InvalidParameter {
            name: "hi0",
            value: hi0,
            constraint: "initial truncation point above the lower limit",
        });
    }
    let base = integrate(&f, lo, hi0, rel_tol)?;
    let mut value = base.value;
    let mut abs_error = base.abs_error;
    let mut evaluations = base.evaluations;

    let mut hi = hi0;
    let mut span = hi0 - lo;
    let mut last_tail = f64::INFINITY;
    for _ in 0..max_doublings {
        let seg = integrate(&f, hi, hi + span, rel_tol)?;
        value += seg.value;
        abs_error += seg.abs_error;
        evaluations += seg.evaluations;
        last_tail = seg.value.abs();
        hi += span;
        span *= 2.0;
        if last_tail <= rel_tol * value.abs() + 1e-300 {
            return Ok(QuadResult {
                value,
                abs_error,
                evaluations,
            });
        }
    }
    Err(Error::NumericConvergence {
        context: "tail extension of semi-infinite integral",
        estimate: value,
        residual: last_tail,
        iterations: max_doublings as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // Degree-13 polynomial: inside the 15-point Kronrod exactness degree.
        let r = integrate(|x| x.powi(13) - 3.0 * x.powi(5) + 2.0, -1.0, 3.0, 1e-12).unwrap();
        let exact = (3f64.powi(14) - 1.0) / 14.0 - 0.5 * (3f64.powi(6) - 1.0) + 2.0 * 4.0;
        assert!(
            ((r.value - exact) / exact).abs() < 1e-14,
            "got {}, want {exact}",
            r.value
        );
    }

    #[test]
    fn gaussian_against_known_mass() {
        let r = integrate(|x| (-0.5 * x * x).exp(), -40.0, 40.0, 1e-12).unwrap();
        let exact = (2.0 * std::f64::consts::PI).sqrt();
        assert!(((r.value - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn needle_requires_adaptivity() {
        // Sharp peak at 0.3 of width 1e-3 on [0, 1].
        let w = 1e-3;
        let f = move |x: f64| (-(x - 0.3) * (x - 0.3) / (2.0 * w * w)).exp();
        let r = integrate(f, 0.0, 1.0, 1e-10).unwrap();
        let exact = w * (2.0 * std::f64::consts::PI).sqrt();
        assert!(((r.value - exact) / exact).abs() < 1e-9, "got {}", r.value);
    }

    #[test]
    fn zero_width_and_zero_function() {
        assert_eq!(integrate(|x| x, 2.0, 2.0, 1e-10).unwrap().value, 0.0);
        assert_eq!(integrate(|_| 0.0, 0.0, 1.0, 1e-10).unwrap().value, 0.0);
    }

    #[test]
    fn semi_infinite_exponential_tail() {
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, 1.0, 1e-10, 40).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "got {}", r.value);
    }

    #[test]
    fn semi_infinite_gaussian_payoff_like() {
        // x * exp(-x^2/2) over [0, inf) = 1.
        let r =
            integrate_to_infinity(|x: f64| x * (-0.5 * x * x).exp(), 0.0, 0.5, 1e-10, 40).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tail_cap_reports_convergence_error_with_estimate() {
        // 1/(1+x) diverges: doubling never satisfies the tail rule.
        let err = integrate_to_infinity(|x: f64| 1.0 / (1.0 + x), 0.0, 1.0, 1e-10, 8).unwrap_err();
        match err {
            Error::NumericConvergence {
                estimate,
                iterations,
                ..
            } => {
                assert!(estimate > 0.0);
                assert_eq!(iterations, 8);
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn determinism_bitwise() {
        let f = |x: f64| (x.sin() * (-0.1 * x * x).exp()).abs() + 0.3 * x.cos();
        let a = integrate(f, -3.0, 7.0, 1e-11).unwrap().value;
        let b = integrate(f, -3.0, 7.0, 1e-11).unwrap().value;
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
