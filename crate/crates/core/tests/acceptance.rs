//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line. Desk scale is n = m = 24, dt = 1e-4 unless a criterion
//! states its own resolution.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use once_cell::sync::Lazy;

use memsim::verify::{self, CheckOutcome, TrajectoryBundle};

const DESK: usize = 24;

static TRAJECTORIES: Lazy<TrajectoryBundle> =
    Lazy::new(|| verify::standard_trajectories(DESK).expect("trajectory bundle"));

fn report(criterion: &str, c: &CheckOutcome) {
    println!(
        "criterion {criterion}: {} — {}",
        if c.passed { "PASS" } else { "FAIL" },
        c.detail
    );
    assert!(c.passed, "criterion {criterion} failed: {}", c.detail);
}

/// Constant-gap exactness: phi = eta with residual <= 1e-10,
/// g = 1/(1+c)^2 within 1e-6, E_e = 1/(1+c) within 1e-6 for c in
/// {-0.5, 0, 1}.
#[test]
fn criterion_01_constant_gap() {
    report("1 (constant gap)", &verify::check_constant_gap(DESK, DESK));
}

/// Manufactured-solution convergence of the elliptic solve: error ratio
/// between n = 16 and n = 32 inside [3.2, 4.8].
#[test]
fn criterion_02_manufactured_convergence() {
    report(
        "2 (manufactured solution)",
        &verify::check_manufactured_convergence(16),
    );
}

/// Shape-derivative identity: relative error <= 1e-6 on the constant-gap
/// path, <= 1% on the sine path at desk scale and decreasing under
/// refinement.
#[test]
fn criterion_03_shape_derivative() {
    report(
        "3 (shape derivative)",
        &verify::check_shape_derivative(DESK, 12, 0.01),
    );
}

/// Energy equality: drift <= 1e-3 for lambda = 1, u0 = 0, t <= 0.05 at desk
/// scale, and halving dt reduces the drift by at least 1.7x.
#[test]
fn criterion_04_energy_equality_drift() {
    report(
        "4 (energy equality)",
        &verify::check_energy_drift(DESK, 1e-4, 0.05),
    );
}

/// Spectrum positivity: minimal eigenvalue 4 beta pi^4 + 2 tau pi^2 exactly
/// in spectral representation; coercivity over 100 random fields.
#[test]
fn criterion_05_spectrum_positivity() {
    report("5 (spectrum)", &verify::check_spectrum(DESK, 20260810));
}

/// Flat-edge curvature identity: |r| bounded by C h^2 ||w||^2 across 20
/// random sine-span fields at n = 16 and n = 32, exact zero (<= 1e-12) on
/// single modes.
#[test]
fn criterion_06_boundary_identity() {
    report("6 (boundary identity)", &verify::check_boundary_identity(20260810));
}

/// Linear-decay oracle: the lambda = 0 trajectory matches
/// 0.1 e^{-mu_11 t} sin sin within 1e-8 up to t = 0.01.
#[test]
fn criterion_07_linear_decay() {
    report("7 (linear decay)", &verify::check_linear_decay_trajectory(DESK));
    report(
        "7b (decay energy balance)",
        &verify::check_linear_decay_energy(DESK),
    );
}

/// A-priori bounds hold at every recorded sample of every verify
/// trajectory: zero violations.
#[test]
fn criterion_08_apriori_bounds() {
    report(
        "8 (a-priori bounds)",
        &verify::check_trajectory_bounds(&TRAJECTORIES),
    );
}

/// Dichotomy bookkeeping: each run ends with exactly one terminal cause;
/// the large-lambda demonstration (lambda = 50, eps = 1) touches down at a
/// finite interpolated time, pinned by a regression value (an artifact
/// observation, not a model constant).
#[test]
fn criterion_09_dichotomy_touchdown() {
    report("9 (dichotomy)", &verify::check_dichotomy(&TRAJECTORIES));

    let golden: serde_json::Value =
        serde_json::from_str(include_str!("golden/touchdown_lambda50.json"))
            .expect("golden file parses");
    let expected = golden["t_star"].as_f64().expect("t_star");
    let tol = golden["rel_tol"].as_f64().expect("rel_tol");

    let (_, trace, _) = TRAJECTORIES
        .traces
        .iter()
        .find(|(name, _, _)| name.contains("touchdown"))
        .expect("touchdown trajectory present");
    let t_star = match &trace.status {
        memsim::evolution::TerminalStatus::Touchdown { t_star } => *t_star,
        other => panic!("expected touchdown, got {other:?}"),
    };
    let rel = (t_star - expected).abs() / expected;
    println!(
        "criterion 9 (golden t*): {} — t* = {t_star:.6} vs recorded {expected:.6} (rel {rel:.3})",
        if rel <= tol { "PASS" } else { "FAIL" }
    );
    assert!(
        rel <= tol,
        "touchdown time regressed: {t_star} vs {expected} (rel {rel:.3} > {tol})"
    );
}

/// Sweep sanity: bisection on (0.1, 50) returns a bracket of width <= 0.5
/// with monotone classification, and doubling the resolution moves the
/// midpoint by <= 20%. The bracket itself is pinned as a regression value.
#[test]
fn criterion_10_sweep() {
    let sweep = verify::check_sweep(12, true, 0.5);
    report("10 (sweep)", &sweep.outcome);

    let golden: serde_json::Value = serde_json::from_str(include_str!("golden/sweep_bracket.json"))
        .expect("golden file parses");
    let expected_mid = golden["midpoint"].as_f64().expect("midpoint");
    let tol = golden["rel_tol"].as_f64().expect("rel_tol");
    let rel = (sweep.base_midpoint - expected_mid).abs() / expected_mid;
    println!(
        "criterion 10 (golden bracket): {} — midpoint {:.4} vs recorded {expected_mid:.4} (rel {rel:.3})",
        if rel <= tol { "PASS" } else { "FAIL" },
        sweep.base_midpoint
    );
    assert!(
        rel <= tol,
        "sweep midpoint regressed: {} vs {expected_mid} (rel {rel:.3} > {tol})",
        sweep.base_midpoint
    );
}

/// The physical-domain evaluation of the evolution right-hand side agrees
/// with the transformed-domain one and tightens under refinement.
#[test]
fn criterion_xx_g_cross_check() {
    report(
        "supplement (G physical route)",
        &verify::check_g_physical_consistency(12, DESK),
    );
}
