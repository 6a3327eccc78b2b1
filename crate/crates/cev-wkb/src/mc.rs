//! Monte Carlo oracle: Euler-Maruyama simulation of the CEV stock process
//! with antithetic variates.
//!
//! Each antithetic pair simulates the same discretized SDE twice, the twin
//! negating every normal increment. Discounted payoffs are averaged per
//! pair; the reported standard error is the sample deviation of the pair
//! means divided by sqrt(n_pairs), which stays unbiased under the
//! within-pair correlation the variance reduction introduces. Normals come
//! from a counter-based generator keyed by (seed, pair index, step), so the
//! estimate is bit-identical for a fixed configuration regardless of how
//! many threads simulate it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{CevParams, MarketSpec};
use crate::rng;

/// Pairs per work unit: large enough to amortize scheduling, small enough
/// to parallelize modest runs.
const CHUNK_PAIRS: u64 = 4096;

/// Monte Carlo run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    /// Number of antithetic path pairs (total paths = 2 * n_pairs).
    pub n_pairs: u64,
    /// Time discretization density; the step is 1/steps_per_year.
    pub steps_per_year: u32,
    /// Seed for the counter-based generator.
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_pairs: 500_000,
            steps_per_year: 1000,
            seed: 1,
        }
    }
}

impl McConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_pairs < 1 {
            return Err(Error::InvalidParameter {
                name: "n_pairs",
                value: self.n_pairs as f64,
                constraint: "n_pairs >= 1",
            });
        }
        if self.steps_per_year < 50 {
            return Err(Error::InvalidParameter {
                name: "steps_per_year",
                value: self.steps_per_year as f64,
                constraint: "steps_per_year >= 50",
            });
        }
        Ok(())
    }
}

/// Result of a Monte Carlo pricing run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    /// Mean discounted payoff over all paths.
    pub mean: f64,
    /// Standard error of the mean, from pair-level means.
    pub std_error: f64,
    /// Number of payoff samples behind the mean (2 * n_pairs).
    pub n_effective: u64,
    /// Fraction of paths absorbed at zero before maturity.
    pub absorbed_fraction: f64,
}

/// One point of a convergence curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    /// Paths consumed so far (even: whole antithetic pairs).
    pub n_paths: u64,
    /// Running mean of the discounted payoff.
    pub mean: f64,
    /// Running standard error from pair means.
    pub std_error: f64,
}

/// Fixed-order accumulator over pair means. Addition order is pair index
/// order within a chunk and chunk index order across chunks, so sums are
/// bit-identical however the chunks were scheduled.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    sum: f64,
    sum_sq: f64,
    absorbed: u64,
    pairs: u64,
}

impl Tally {
    fn add_pair(&mut self, pair_mean: f64, absorbed: u64) {
        self.sum += pair_mean;
        self.sum_sq += pair_mean * pair_mean;
        self.absorbed += absorbed;
        self.pairs += 1;
    }

    fn merge(&mut self, other: &Tally) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.absorbed += other.absorbed;
        self.pairs += other.pairs;
    }

    fn estimate(&self) -> McEstimate {
        let n = self.pairs as f64;
        let mean = self.sum / n;
        // Non-negative variance form; single-pair runs report zero error.
        let var = if self.pairs > 1 {
            ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            mean,
            std_error: (var / n).sqrt(),
            n_effective: 2 * self.pairs,
            absorbed_fraction: self.absorbed as f64 / (2.0 * n),
        }
    }
}

/// Time grid: full steps of 1/steps_per_year with the final step trimmed so
/// the path lands exactly on the maturity.
struct StepPlan {
    n_steps: u64,
    dt: f64,
    last_dt: f64,
}

fn plan_steps(maturity: f64, steps_per_year: u32) -> StepPlan {
    let dt = 1.0 / steps_per_year as f64;
    let n_steps = (maturity * steps_per_year as f64).ceil().max(1.0) as u64;
    let last_dt = maturity - (n_steps - 1) as f64 * dt;
    StepPlan {
        n_steps,
        dt,
        last_dt,
    }
}

/// Simulates the two paths of one antithetic pair and returns their
/// discounted payoffs plus the number absorbed (0..=2).
///
/// The stream key depends only on (seed, pair index) and the step counter
/// indexes into it, so any path can be regenerated in isolation. The twin
/// consumes the same normals negated.
fn simulate_pair(
    m: &MarketSpec,
    p: &CevParams,
    plan: &StepPlan,
    seed: u64,
    pair: u64,
) -> (f64, f64, u64) {
    let key = rng::stream_key(seed, pair);
    let discount = (-m.rate * m.maturity).exp();
    let mut s_pos = m.s0;
    let mut s_neg = m.s0;
    let expo = p.alpha + 1.0;
    // alpha = -1/2 makes the diffusion coefficient an exact square root;
    // worth special-casing because powf dominates the step cost.
    let sqrt_vol = p.alpha == -0.5;

    let mut z_hold = 0.0;
    for step in 0..plan.n_steps {
        let z = if step % 2 == 0 {
            let (z0, z1) = rng::normal_pair(key, step / 2);
            z_hold = z1;
            z0
        } else {
            z_hold
        };
        let dt = if step + 1 == plan.n_steps {
            plan.last_dt
        } else {
            plan.dt
        };
        let sq_dt = dt.sqrt();
        if s_pos > 0.0 {
            let vol = if sqrt_vol {
                s_pos.sqrt()
            } else {
                s_pos.powf(expo)
            };
            s_pos += p.mu * s_pos * dt + p.sigma * vol * sq_dt * z;
            if s_pos <= 0.0 {
                s_pos = 0.0;
            }
        }
        if s_neg > 0.0 {
            let vol = if sqrt_vol {
                s_neg.sqrt()
            } else {
                s_neg.powf(expo)
            };
            s_neg += p.mu * s_neg * dt - p.sigma * vol * sq_dt * z;
            if s_neg <= 0.0 {
                s_neg = 0.0;
            }
        }
    }
    let payoff_pos = discount * (s_pos - m.strike).max(0.0);
    let payoff_neg = discount * (s_neg - m.strike).max(0.0);
    let absorbed = u64::from(s_pos == 0.0) + u64::from(s_neg == 0.0);
    (payoff_pos, payoff_neg, absorbed)
}

/// Simulates one path on its own stream and returns its discounted payoff
/// plus whether it was absorbed. Same scheme as [`simulate_pair`] without
/// the antithetic twin.
#[cfg(test)]
fn simulate_single(m: &MarketSpec, p: &CevParams, plan: &StepPlan, key: u64) -> (f64, bool) {
    let mut s = m.s0;
    let expo = p.alpha + 1.0;
    let sqrt_vol = p.alpha == -0.5;
    let mut z_hold = 0.0;
    for step in 0..plan.n_steps {
        let z = if step % 2 == 0 {
            let (z0, z1) = rng::normal_pair(key, step / 2);
            z_hold = z1;
            z0
        } else {
            z_hold
        };
        let dt = if step + 1 == plan.n_steps {
            plan.last_dt
        } else {
            plan.dt
        };
        if s > 0.0 {
            let vol = if sqrt_vol { s.sqrt() } else { s.powf(expo) };
            s += p.mu * s * dt + p.sigma * vol * dt.sqrt() * z;
            if s <= 0.0 {
                s = 0.0;
            }
        }
    }
    let payoff = (-m.rate * m.maturity).exp() * (s - m.strike).max(0.0);
    (payoff, s == 0.0)
}

fn chunk_tally(
    m: &MarketSpec,
    p: &CevParams,
    plan: &StepPlan,
    seed: u64,
    first_pair: u64,
    count: u64,
) -> Tally {
    let mut t = Tally::default();
    for pair in first_pair..first_pair + count {
        let (y_pos, y_neg, absorbed) = simulate_pair(m, p, plan, seed, pair);
        t.add_pair(0.5 * (y_pos + y_neg), absorbed);
    }
    t
}

/// Runs all pairs over the canonical chunk grid ([0, 4096), [4096, 8192),
/// ... truncated at n_pairs), in parallel, merging chunk tallies in index
/// order. Returns the final tally plus a snapshot at each requested pair
/// count (ascending).
///
/// The chunk grid never depends on the snapshot points; a snapshot that
/// lands inside a chunk re-simulates that chunk's prefix instead of
/// splitting it. A direct run with n_pairs = s uses exactly the grouping
/// (full chunks, then the sequential partial chunk), so a snapshot at s is
/// bitwise the tally an s-pair run would produce, and the totals here are
/// bitwise independent of which snapshots were requested.
fn run_tallies(
    m: &MarketSpec,
    p: &CevParams,
    c: &McConfig,
    snapshot_pairs: &[u64],
) -> (Tally, Vec<Tally>) {
    let plan = plan_steps(m.maturity, c.steps_per_year);
    let n_chunks = c.n_pairs.div_ceil(CHUNK_PAIRS);
    let spans: Vec<(u64, u64)> = (0..n_chunks)
        .map(|i| {
            let first = i * CHUNK_PAIRS;
            (first, (c.n_pairs - first).min(CHUNK_PAIRS))
        })
        .collect();
    let tallies: Vec<Tally> = crate::thread_pool().install(|| {
        use rayon::prelude::*;
        spans
            .par_iter()
            .map(|&(first, count)| chunk_tally(m, p, &plan, c.seed, first, count))
            .collect()
    });

    let mut total = Tally::default();
    let mut snaps = Vec::with_capacity(snapshot_pairs.len());
    let mut merged = 0usize;
    for &s in snapshot_pairs {
        let whole_chunks = (s / CHUNK_PAIRS) as usize;
        let rem = s % CHUNK_PAIRS;
        while merged < whole_chunks {
            total.merge(&tallies[merged]);
            merged += 1;
        }
        let mut snap = total;
        if rem > 0 {
            snap.merge(&chunk_tally(m, p, &plan, c.seed, s - rem, rem));
        }
        snaps.push(snap);
    }
    while merged < tallies.len() {
        total.merge(&tallies[merged]);
        merged += 1;
    }
    (total, snaps)
}

/// Prices a European call by simulation. Deterministic for a fixed
/// (seed, n_pairs, steps_per_year) triple, including under parallelism.
pub fn mc_call_price(m: &MarketSpec, p: &CevParams, c: &McConfig) -> Result<McEstimate> {
    c.validate()?;
    let (total, _) = run_tallies(m, p, c, &[]);
    Ok(total.estimate())
}

/// Running estimates at the given path counts, from one path stream.
///
/// Checkpoints must be ascending, even (whole antithetic pairs) and at most
/// 2 * n_pairs; the estimate at checkpoint k uses exactly the first k paths,
/// so a checkpoint equal to the full path count reproduces
/// [`mc_call_price`] bit for bit.
pub fn mc_convergence_curve(
    m: &MarketSpec,
    p: &CevParams,
    c: &McConfig,
    checkpoints: &[u64],
) -> Result<Vec<ConvergencePoint>> {
    c.validate()?;
    if checkpoints.is_empty() {
        return Err(Error::InvalidParameter {
            name: "checkpoints",
            value: 0.0,
            constraint: "at least one checkpoint",
        });
    }
    let mut last = 0u64;
    for &k in checkpoints {
        if k % 2 != 0 || k == 0 {
            return Err(Error::InvalidParameter {
                name: "checkpoints",
                value: k as f64,
                constraint: "path counts must be positive and even (whole antithetic pairs)",
            });
        }
        if k <= last {
            return Err(Error::InvalidParameter {
                name: "checkpoints",
                value: k as f64,
                constraint: "path counts must be strictly ascending",
            });
        }
        if k > 2 * c.n_pairs {
            return Err(Error::InvalidParameter {
                name: "checkpoints",
                value: k as f64,
                constraint: "path counts cannot exceed 2 * n_pairs",
            });
        }
        last = k;
    }

    let snapshot_pairs: Vec<u64> = checkpoints.iter().map(|k| k / 2).collect();
    let run_pairs = *snapshot_pairs.last().expect("nonempty");
    let run_cfg = McConfig {
        n_pairs: run_pairs,
        ..*c
    };
    let (_, snaps) = run_tallies(m, p, &run_cfg, &snapshot_pairs);
    Ok(checkpoints
        .iter()
        .zip(&snaps)
        .map(|(&k, t)| {
            let e = t.estimate();
            ConvergencePoint {
                n_paths: k,
                mean: e.mean,
                std_error: e.std_error,
            }
        })
        .collect())
}

/// Plain-Monte-Carlo estimate with 2 * n_pairs fully independent paths
/// (each pair's twin gets its own stream instead of negated variates).
/// Exists to measure how much variance the antithetic pairing removes.
#[cfg(test)]
pub(crate) fn mc_call_price_independent(
    m: &MarketSpec,
    p: &CevParams,
    c: &McConfig,
) -> Result<McEstimate> {
    c.validate()?;
    let plan = plan_steps(m.maturity, c.steps_per_year);
    let n_paths = 2 * c.n_pairs;
    let mut t = Tally::default();
    for path in 0..n_paths {
        // A fixed xor keeps these streams disjoint from the paired ones.
        let key = rng::stream_key(c.seed ^ 0x5851_F42D_4C95_7F2D, path);
        let (y, absorbed) = simulate_single(m, p, &plan, key);
        t.add_pair(y, u64::from(absorbed));
    }
    let n = t.pairs as f64;
    let mean = t.sum / n;
    let var = ((t.sum_sq - t.sum * t.sum / n) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_effective: t.pairs,
        absorbed_fraction: t.absorbed as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_feller_params, stock_to_feller};

    fn reference_market() -> MarketSpec {
        MarketSpec::new(100.0, 110.0, 0.03, 1.0).unwrap()
    }

    fn reference_cev() -> CevParams {
        CevParams::new(0.03, 0.3, -0.5).unwrap()
    }

    #[test]
    fn deterministic_across_repeat_runs() {
        let c = McConfig {
            n_pairs: 3000,
            steps_per_year: 100,
            seed: 42,
        };
        let a = mc_call_price(&reference_market(), &reference_cev(), &c).unwrap();
        let b = mc_call_price(&reference_market(), &reference_cev(), &c).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert_eq!(a.n_effective, 6000);

        let c2 = McConfig { seed: 43, ..c };
        let d = mc_call_price(&reference_market(), &reference_cev(), &c2).unwrap();
        assert_ne!(a.mean.to_bits(), d.mean.to_bits());
    }

    #[test]
    fn chunk_split_does_not_change_the_sum() {
        // A pair count that is not a multiple of the chunk size exercises the
        // mixed chunk layout; snapshots mid-chunk must not perturb totals.
        let c = McConfig {
            n_pairs: CHUNK_PAIRS + 137,
            steps_per_year: 50,
            seed: 9,
        };
        let m = reference_market();
        let p = reference_cev();
        let (plain, _) = run_tallies(&m, &p, &c, &[]);
        let (split, snaps) = run_tallies(&m, &p, &c, &[100, CHUNK_PAIRS, c.n_pairs]);
        assert_eq!(plain.sum.to_bits(), split.sum.to_bits());
        assert_eq!(plain.sum_sq.to_bits(), split.sum_sq.to_bits());
        assert_eq!(snaps.len(), 3);
        assert_eq!(snaps[2].sum.to_bits(), plain.sum.to_bits());

        // A direct run of only the prefix matches its snapshot bitwise.
        let c_prefix = McConfig { n_pairs: 100, ..c };
        let (prefix, _) = run_tallies(&m, &p, &c_prefix, &[]);
        assert_eq!(prefix.sum.to_bits(), snaps[0].sum.to_bits());
    }

    #[test]
    fn vanishing_volatility_is_deterministic_drift() {
        let m = MarketSpec::new(100.0, 80.0, 0.03, 1.0).unwrap();
        let p = CevParams::new(0.03, 1e-12, -0.5).unwrap();
        let c = McConfig {
            n_pairs: 4,
            steps_per_year: 100_000,
            seed: 7,
        };
        let est = mc_call_price(&m, &p, &c).unwrap();

        // Exact value of the zero-noise Euler recursion.
        let plan = plan_steps(m.maturity, c.steps_per_year);
        let mut s = m.s0;
        for step in 0..plan.n_steps {
            let dt = if step + 1 == plan.n_steps {
                plan.last_dt
            } else {
                plan.dt
            };
            s += p.mu * s * dt;
        }
        let exact_discrete = (-m.rate * m.maturity).exp() * (s - m.strike).max(0.0);
        assert!(
            (est.mean - exact_discrete).abs() < 1e-9,
            "mean {} vs drift-only recursion {}",
            est.mean,
            exact_discrete
        );
        assert!(est.std_error < 1e-9);

        // The continuous-compounding value is recovered to the scheme's
        // O(dt) bias, far below the tolerance used here.
        let exact_continuous =
            (-m.rate * m.maturity).exp() * (m.s0 * (p.mu * m.maturity).exp() - m.strike);
        assert!(
            (est.mean - exact_continuous).abs() / exact_continuous < 1e-6,
            "mean {} vs continuous limit {}",
            est.mean,
            exact_continuous
        );
    }

    #[test]
    fn antithetic_pairs_cut_the_error() {
        let m = reference_market();
        let p = reference_cev();
        let mut anti_total = 0.0;
        let mut indep_total = 0.0;
        for seed in 0..20 {
            let c = McConfig {
                n_pairs: 1000,
                steps_per_year: 1000,
                seed,
            };
            anti_total += mc_call_price(&m, &p, &c).unwrap().std_error;
            indep_total += mc_call_price_independent(&m, &p, &c).unwrap().std_error;
        }
        assert!(
            anti_total <= indep_total,
            "antithetic averaged error {} vs independent {}",
            anti_total / 20.0,
            indep_total / 20.0
        );
    }

    #[test]
    fn doubling_steps_moves_mean_within_noise() {
        let m = reference_market();
        let p = reference_cev();
        let coarse = mc_call_price(
            &m,
            &p,
            &McConfig {
                n_pairs: 20_000,
                steps_per_year: 500,
                seed: 11,
            },
        )
        .unwrap();
        let fine = mc_call_price(
            &m,
            &p,
            &McConfig {
                n_pairs: 20_000,
                steps_per_year: 1000,
                seed: 11,
            },
        )
        .unwrap();
        let combined =
            (coarse.std_error * coarse.std_error + fine.std_error * fine.std_error).sqrt();
        assert!(
            (coarse.mean - fine.mean).abs() < 3.0 * combined,
            "bias {} vs 3 sigma {}",
            (coarse.mean - fine.mean).abs(),
            3.0 * combined
        );
    }

    #[test]
    fn absorption_matches_the_exact_hitting_probability() {
        // The power transform X = S^(-2 alpha) / (sigma^2 alpha^2) is a
        // squared-Bessel process with linear drift, so the probability of
        // hitting zero by T is known exactly:
        //
        //   P = Q(nu, x0 b / (2 expm1(bT))),  nu = -1/(2 alpha),
        //
        // with Q the regularized upper incomplete gamma function. A stressed
        // market (fat diffusion, long horizon) makes the event common enough
        // to measure; the Euler fraction carries O(sqrt(dt)) barrier bias,
        // hence the loose band.
        let m = MarketSpec::new(1.0, 1.0, 0.03, 2.0).unwrap();
        let c = McConfig {
            n_pairs: 4000,
            steps_per_year: 800,
            seed: 3,
        };
        for &alpha in &[-1.0, -0.65, -0.3] {
            let p = CevParams::new(0.03, 2.5, alpha).unwrap();
            let fp = derive_feller_params(&p);
            let x0 = stock_to_feller(m.s0, &p).unwrap();
            let nu = -1.0 / (2.0 * alpha);
            let zeta = x0 * fp.b / (2.0 * (fp.b * m.maturity).exp_m1());
            let exact = statrs::function::gamma::gamma_ur(nu, zeta);
            let est = mc_call_price(&m, &p, &c).unwrap();
            assert!(
                (est.absorbed_fraction - exact).abs() < 0.035,
                "alpha {alpha}: absorbed {} vs exact {exact}",
                est.absorbed_fraction
            );
        }

        // On the reference market absorption is essentially impossible at
        // every tabulated exponent, so the fraction is monotone trivially;
        // assert the expected zeros rather than skipping the regime.
        let m_ref = reference_market();
        let c_ref = McConfig {
            n_pairs: 500,
            steps_per_year: 100,
            seed: 5,
        };
        let mut last = 1.0;
        for &alpha in &[-1.0, -0.9, -0.7, -0.5, -0.3] {
            let p = CevParams::new(0.03, 0.3, alpha).unwrap();
            let f = mc_call_price(&m_ref, &p, &c_ref).unwrap().absorbed_fraction;
            assert!(f <= last, "absorption must not rise as alpha leaves -1");
            last = f;
        }
    }

    #[test]
    fn convergence_curve_is_prefix_consistent() {
        let m = reference_market();
        let p = reference_cev();
        let c = McConfig {
            n_pairs: 5000,
            steps_per_year: 100,
            seed: 21,
        };
        let curve = mc_convergence_curve(&m, &p, &c, &[200, 2000, 10_000]).unwrap();
        assert_eq!(curve.len(), 3);
        assert_eq!(curve[2].n_paths, 10_000);

        // Last point reproduces the plain estimate bitwise.
        let full = mc_call_price(&m, &p, &c).unwrap();
        assert_eq!(curve[2].mean.to_bits(), full.mean.to_bits());
        assert_eq!(curve[2].std_error.to_bits(), full.std_error.to_bits());

        // Each prefix equals an independent run truncated to that count.
        for point in &curve {
            let c_prefix = McConfig {
                n_pairs: point.n_paths / 2,
                ..c
            };
            let prefix = mc_call_price(&m, &p, &c_prefix).unwrap();
            assert_eq!(point.mean.to_bits(), prefix.mean.to_bits());
        }
    }

    #[test]
    fn convergence_curve_validates_checkpoints() {
        let m = reference_market();
        let p = reference_cev();
        let c = McConfig {
            n_pairs: 100,
            steps_per_year: 50,
            seed: 1,
        };
        assert!(mc_convergence_curve(&m, &p, &c, &[]).is_err());
        assert!(mc_convergence_curve(&m, &p, &c, &[3]).is_err());
        assert!(mc_convergence_curve(&m, &p, &c, &[10, 10]).is_err());
        assert!(mc_convergence_curve(&m, &p, &c, &[10, 4]).is_err());
        assert!(mc_convergence_curve(&m, &p, &c, &[10, 300]).is_err());
    }

    #[test]
    fn config_domain_enforced() {
        let m = reference_market();
        let p = reference_cev();
        let bad_pairs = McConfig {
            n_pairs: 0,
            steps_per_year: 100,
            seed: 1,
        };
        assert!(mc_call_price(&m, &p, &bad_pairs).is_err());
        let bad_steps = McConfig {
            n_pairs: 10,
            steps_per_year: 49,
            seed: 1,
        };
        assert!(mc_call_price(&m, &p, &bad_steps).is_err());
    }

    #[test]
    fn estimator_fields_are_coherent() {
        let est = mc_call_price(
            &reference_market(),
            &reference_cev(),
            &McConfig {
                n_pairs: 2000,
                steps_per_year: 100,
                seed: 2,
            },
        )
        .unwrap();
        assert!(est.mean > 0.0, "an at-the-money-ish call has value");
        assert!(est.std_error > 0.0);
        assert!((0.0..=1.0).contains(&est.absorbed_fraction));
        assert_eq!(est.n_effective, 4000);
    }
}
