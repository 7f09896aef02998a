//! Built-in reference-value assertions behind `--check`: a fast subset of
//! the acceptance suite that cross-checks the library against the published
//! values it is meant to reproduce. Exit code 3 on any failure.

use locverify_core::owd::solve_min_pairs;
use locverify_core::powrelay::{max_colluders, mean_b_star, mmk_wait};
use locverify_core::stats::margin_of_error;
use locverify_core::wireless::{
    carvalho_moments, required_iterations, DcfParams, PassTarget, WirelessCdf, WirelessModelKind,
    MOMENT_TABLE, P3_TABLE,
};

pub struct CheckReport {
    pub passed: usize,
    pub failed: Vec<String>,
}

fn check(report: &mut CheckReport, name: &str, ok: bool, detail: String) {
    if ok {
        report.passed += 1;
        println!("check {name}: ok ({detail})");
    } else {
        println!("check {name}: FAILED ({detail})");
        report.failed.push(format!("{name}: {detail}"));
    }
}

/// Run every built-in assertion, printing one line per check.
pub fn run_checks() -> CheckReport {
    let mut report = CheckReport {
        passed: 0,
        failed: Vec::new(),
    };

    // Minimum-pairs worked equations.
    let e = [[0.0, 7.0, 8.0], [100.0, 0.0, 9.0], [100.0, 100.0, 0.0]];
    let x = solve_min_pairs(&e);
    check(
        &mut report,
        "min-pairs-345",
        x == [3.0, 4.0, 5.0],
        format!("{x:?}"),
    );
    let e2 = [[0.0, 7.0, 8.0], [100.0, 0.0, 13.0], [100.0, 100.0, 0.0]];
    let x2 = solve_min_pairs(&e2);
    check(
        &mut report,
        "min-pairs-167",
        x2 == [1.0, 6.0, 7.0],
        format!("{x2:?}"),
    );

    // Wireless moment table.
    let dcf = DcfParams::default();
    let mut worst = 0.0f64;
    let mut ok = true;
    for &(k, e_ref, s_ref) in &MOMENT_TABLE {
        let (e, s) = carvalho_moments(k, &dcf).expect("k >= 2");
        let tol_e = (0.05 * e_ref).max(1.0);
        let tol_s = (0.05 * s_ref).max(1.0);
        worst = worst.max(((e - e_ref).abs() / tol_e).max((s - s_ref).abs() / tol_s));
        ok &= (e - e_ref).abs() <= tol_e && (s - s_ref).abs() <= tol_s;
    }
    check(
        &mut report,
        "wireless-moment-table",
        ok,
        format!("worst tolerance fraction {worst:.3}"),
    );

    // Per-delay probabilities at 3 ms, both models.
    let mut ok = true;
    let mut worst = 0.0f64;
    for &(k, carv_ref, rapt_ref) in &P3_TABLE {
        let c = WirelessCdf::build(WirelessModelKind::Carvalho, k, &dcf).unwrap();
        let r = WirelessCdf::build(WirelessModelKind::Raptis, k, &dcf).unwrap();
        worst = worst
            .max((c.p_within(3.0) - carv_ref).abs())
            .max((r.p_within(3.0) - rapt_ref).abs());
        ok &= (c.p_within(3.0) - carv_ref).abs() <= 0.02
            && (r.p_within(3.0) - rapt_ref).abs() <= 0.02;
    }
    check(
        &mut report,
        "wireless-p3-table",
        ok,
        format!("worst deviation {worst:.4}"),
    );

    // Iteration requirement for the moment model.
    let carv = WirelessCdf::build(WirelessModelKind::Carvalho, 2, &dcf).unwrap();
    let n = required_iterations(3.0, PassTarget::FixedCount(5), &carv);
    check(
        &mut report,
        "wireless-required-iterations-moment",
        n == Ok(11),
        format!("{n:?}"),
    );

    // Queueing reductions.
    let w = mmk_wait(1.0, 2.0, 1).unwrap();
    check(
        &mut report,
        "mmk-single-server",
        (w - 1.0).abs() < 1e-12,
        format!("W = {w}"),
    );
    let products: Vec<f64> = [0.05, 0.1, 0.2]
        .iter()
        .map(|&b| max_colluders(b, 25, 1.5).unwrap() as f64 * b)
        .collect();
    let spread = products.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - products.iter().cloned().fold(f64::INFINITY, f64::min);
    check(
        &mut report,
        "colluder-product-invariance",
        spread <= 1.0,
        format!("products {products:?}"),
    );
    let b_star = mean_b_star();
    check(
        &mut report,
        "fitted-b-star",
        (b_star - 0.07).abs() <= 0.005,
        format!("b* = {b_star:.4}"),
    );

    // Margin-of-error worked example: std 0.97 over 100 samples at 90%.
    let samples: Vec<f64> = (0..100)
        .map(|i| if i % 2 == 0 { 0.97 } else { -0.97 })
        .collect();
    let stats = margin_of_error(&samples, 0.90).unwrap();
    let expect_se = stats.std / 10.0;
    check(
        &mut report,
        "margin-of-error",
        (stats.standard_error - expect_se).abs() < 1e-12
            && (stats.critical_value - 1.6604).abs() < 2e-4,
        format!(
            "SE {:.4}, critical {:.4}, ME {:.4}",
            stats.standard_error, stats.critical_value, stats.margin_of_error
        ),
    );

    report
}
