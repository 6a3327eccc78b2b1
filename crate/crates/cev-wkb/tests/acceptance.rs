//! The crate's acceptance gate: every contract-level property at its full
//! advertised size, one printed line per criterion (visible under
//! `cargo test --test acceptance -- --nocapture`).
//!
//! Criteria 1 through 4 and 8 are deterministic formula checks with hard
//! runtime budgets. Criteria 5 through 7 cross the engine against Monte
//! Carlo at a million paths and take minutes; their correctness bounds were
//! sized for that path count.

use cev_wkb::verify::{
    check_action_vs_quadrature, check_bs_quadrature, check_convergence_behavior, check_flow_vs_rk,
    check_hamiltonian_conservation, check_kernel_short_time, check_mixed_vs_quadrature,
    check_reference_cell, check_table_trends, check_vvm_three_way, CheckResult,
};

struct Criterion {
    label: &'static str,
    passed: bool,
    seconds: f64,
    budget: Option<f64>,
    detail: String,
}

/// Bundles one or more library checks into a single criterion line. The
/// criterion passes when every check passed and the combined wall time
/// stays inside the budget, when one applies.
fn criterion(label: &'static str, budget: Option<f64>, checks: Vec<CheckResult>) -> Criterion {
    let seconds: f64 = checks.iter().map(|c| c.seconds).sum();
    let mut passed = checks.iter().all(|c| c.passed);
    if let Some(b) = budget {
        passed &= seconds <= b;
    }
    let detail = checks
        .iter()
        .map(|c| {
            format!(
                "{}: residual {:.2e} vs {:.1e} ({})",
                c.name, c.residual, c.tolerance, c.detail
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Criterion {
        label,
        passed,
        seconds,
        budget,
        detail,
    }
}

impl Criterion {
    fn render(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let budget = match self.budget {
            Some(b) => format!(" (budget {b:.0}s)"),
            None => String::new(),
        };
        format!(
            "criterion {} {} {:.2}s{} - {}",
            self.label, verdict, self.seconds, budget, self.detail
        )
    }
}

#[test]
fn acceptance_criteria() {
    let rows = vec![
        criterion(
            "1 determinant three-way agreement",
            Some(10.0),
            vec![check_vvm_three_way(200)],
        ),
        criterion(
            "2 action and exponential factor vs quadrature",
            Some(10.0),
            vec![
                check_action_vs_quadrature(200),
                check_mixed_vs_quadrature(200),
            ],
        ),
        criterion(
            "3 closed-form flow vs Runge-Kutta with conserved Hamiltonian",
            Some(10.0),
            vec![check_flow_vs_rk(200), check_hamiltonian_conservation(200)],
        ),
        criterion(
            "4 lognormal quadrature equals closed form",
            Some(5.0),
            vec![check_bs_quadrature(5)],
        ),
        criterion(
            "5 reference cell against a million-path estimate",
            None,
            vec![check_reference_cell(500_000, 5e-3)],
        ),
        criterion(
            "6 sweep error trends at desk scale",
            Some(300.0),
            vec![check_table_trends(50_000)],
        ),
        criterion(
            "7 running-estimate convergence and std-error slope",
            None,
            check_convergence_behavior(500_000).into(),
        ),
        criterion(
            "8 kernel short-time mass and determinant growth",
            Some(5.0),
            check_kernel_short_time().into(),
        ),
    ];

    let mut all = true;
    for row in &rows {
        println!("{}", row.render());
        all &= row.passed;
    }
    assert!(
        all,
        "acceptance criteria failed:\n{}",
        rows.iter()
            .filter(|r| !r.passed)
            .map(|r| r.render())
            .collect::<Vec<_>>()
            .join("\n")
    );
}
