//! Built-in correctness checks: constant-gap exactness, manufactured
//! convergence, shape derivative, energy drift, boundary identity,
//! coercivity, linear decay, trajectory bounds, touchdown bookkeeping and
//! sweep stability. The CLI `verify` subcommand and the acceptance suite
//! both run through these entry points.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{
    electrostatic_energy, energy_equality_monitor, shape_derivative_check,
};
use crate::error::Result;
use crate::evolution::{
    check_apriori_bounds, simulate, touchdown_time, AdmissibleSetSpec, RunOptions,
    SimulationTrace, TerminalStatus,
};
use crate::grid::{to_nodal, w2_proxy_norm, CylinderGrid, PlateField, PlateGrid, SpectralField};
use crate::operator::{boundary_identity_check, spectrum_check};
use crate::potential::{
    compute_g, g_from_phi, lv_of_smooth, reconstruct_psi, solve_transformed_potential,
    solve_with_source, Parameters,
};
use crate::sweep::estimate_lambda_star;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

fn grid(n: usize, m: usize) -> CylinderGrid {
    CylinderGrid::new(PlateGrid::new(n).expect("n"), m).expect("m")
}

fn base_params(lambda: f64) -> Parameters {
    Parameters::new(1.0, 1.0, 0.0, 0.3, lambda).expect("params")
}

// ---------------------------------------------------------------------------
// 1. constant-gap exactness
// ---------------------------------------------------------------------------

pub fn check_constant_gap(n: usize, m: usize) -> CheckOutcome {
    let g3 = grid(n, m);
    let p = base_params(1.0);
    let mut worst_res = 0.0_f64;
    let mut worst_g = 0.0_f64;
    let mut worst_ee = 0.0_f64;
    for c in [-0.5, 0.0, 1.0] {
        let v = PlateField::constant(g3.plate, c);
        let phi = match solve_transformed_potential(&v, &p, &g3) {
            Ok(phi) => phi,
            Err(e) => return outcome("constant-gap", false, format!("solve failed: {e}")),
        };
        worst_res = worst_res.max(phi.stats.residual);
        let gv = g_from_phi(&v, &phi, &p);
        let expected = 1.0 / ((1.0 + c) * (1.0 + c));
        worst_g = worst_g.max(
            gv.values
                .iter()
                .map(|x| (x - expected).abs())
                .fold(0.0, f64::max),
        );
        match electrostatic_energy(&v, &phi, &p) {
            Ok(ee) => worst_ee = worst_ee.max((ee - 1.0 / (1.0 + c)).abs()),
            Err(e) => return outcome("constant-gap", false, format!("E_e failed: {e}")),
        }
    }
    let passed = worst_res <= 1e-10 && worst_g <= 1e-6 && worst_ee <= 1e-6;
    outcome(
        "constant-gap",
        passed,
        format!("residual {worst_res:.2e}, |g - 1/(1+c)^2| {worst_g:.2e}, |E_e - 1/(1+c)| {worst_ee:.2e}"),
    )
}

// ---------------------------------------------------------------------------
// 2. manufactured-solution convergence
// ---------------------------------------------------------------------------

fn ms_error(n: usize) -> Result<f64> {
    let g3 = grid(n, n);
    let p = base_params(1.0);
    let amp = 0.3;
    let vf = move |x: f64, y: f64| amp * (PI * x).sin() * (PI * y).sin();
    let gvf = move |x: f64, y: f64| {
        (
            amp * PI * (PI * x).cos() * (PI * y).sin(),
            amp * PI * (PI * x).sin() * (PI * y).cos(),
        )
    };
    let lvf = move |x: f64, y: f64| -2.0 * PI * PI * amp * (PI * x).sin() * (PI * y).sin();
    let bump = |x: f64, y: f64, eta: f64| eta * (1.0 - eta) * (PI * x).sin() * (PI * y).sin();

    let v = PlateField::from_fn(g3.plate, vf);
    let h = g3.plate.h();
    let mz = g3.m - 1;
    let mut src = ndarray::Array3::zeros((n, n, mz));
    for i in 0..n {
        for j in 0..n {
            for kk in 0..mz {
                let (x, y, eta) = ((i + 1) as f64 * h, (j + 1) as f64 * h, g3.eta(kk + 1));
                src[[i, j, kk]] = -lv_of_smooth(&bump, &vf, &gvf, &lvf, p.eps, x, y, eta);
            }
        }
    }
    let phi = solve_with_source(&v, &p, &g3, &src)?;
    let mut worst = 0.0_f64;
    for i in 1..=n {
        for j in 1..=n {
            for k in 1..g3.m {
                let exact = g3.eta(k) + bump(i as f64 * h, j as f64 * h, g3.eta(k));
                worst = worst.max((phi.values[[i, j, k]] - exact).abs());
            }
        }
    }
    Ok(worst)
}

pub fn check_manufactured_convergence(n_coarse: usize) -> CheckOutcome {
    let run = || -> Result<(f64, f64)> { Ok((ms_error(n_coarse)?, ms_error(2 * n_coarse)?)) };
    match run() {
        Ok((e1, e2)) => {
            let ratio = e1 / e2;
            outcome(
                "manufactured-convergence",
                (3.2..=4.8).contains(&ratio),
                format!("errors {e1:.3e} -> {e2:.3e}, ratio {ratio:.3} (want [3.2, 4.8])"),
            )
        }
        Err(e) => outcome("manufactured-convergence", false, format!("{e}")),
    }
}

// ---------------------------------------------------------------------------
// 3. shape-derivative identity
// ---------------------------------------------------------------------------

fn sine_path_error(n: usize) -> Result<f64> {
    let g3 = grid(n, n);
    let p = base_params(1.0);
    let (rel, _, _) = shape_derivative_check(
        |t| PlateField::mode(g3.plate, 1, 1, 0.1 * (1.0 + t)),
        |_| PlateField::mode(g3.plate, 1, 1, 0.1),
        &p,
        &g3,
        0.0,
        1e-3,
    )?;
    Ok(rel)
}

pub fn check_shape_derivative(n_desk: usize, n_coarse: usize, sine_tol: f64) -> CheckOutcome {
    let g3 = grid(n_desk.min(12), n_desk.min(12));
    let p = base_params(1.0);
    let constant = shape_derivative_check(
        |t| PlateField::constant(g3.plate, -0.2 + 0.1 * t),
        |_| PlateField::constant(g3.plate, 0.1),
        &p,
        &g3,
        0.0,
        1e-3,
    );
    let (const_rel, _, _) = match constant {
        Ok(v) => v,
        Err(e) => return outcome("shape-derivative", false, format!("{e}")),
    };
    let (coarse, desk) = match (sine_path_error(n_coarse), sine_path_error(n_desk)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome("shape-derivative", false, format!("{e}")),
    };
    let passed = const_rel <= 1e-6 && desk <= sine_tol && desk < coarse;
    outcome(
        "shape-derivative",
        passed,
        format!(
            "constant path {const_rel:.2e} (<= 1e-6), sine path {desk:.4} at n={n_desk} \
             (<= {sine_tol}), coarse n={n_coarse} gave {coarse:.4}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. energy equality drift
// ---------------------------------------------------------------------------

fn drift_for(dt: f64, n: usize, t_end: f64) -> Result<f64> {
    let g3 = grid(n, n);
    let p = base_params(1.0);
    let u0 = PlateField::zeros(g3.plate);
    let opts = RunOptions {
        dt,
        t_end,
        sample_stride: 10,
        steady_exit: false,
        ..Default::default()
    };
    let trace = simulate(&u0, &p, &g3, &AdmissibleSetSpec::default(), &opts)?;
    Ok(energy_equality_monitor(trace.energies()).max_drift)
}

pub fn check_energy_drift(n: usize, dt: f64, t_end: f64) -> CheckOutcome {
    match (drift_for(dt, n, t_end), drift_for(dt / 2.0, n, t_end)) {
        (Ok(d1), Ok(d2)) => {
            let ratio = d1 / d2.max(1e-300);
            let passed = d1 <= 1e-3 && ratio >= 1.7;
            outcome(
                "energy-drift",
                passed,
                format!("drift {d1:.3e} (<= 1e-3), halving dt gives {d2:.3e}, ratio {ratio:.2} (>= 1.7)"),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome("energy-drift", false, format!("{e}")),
    }
}

/// Closed-form linear-decay oracle: lambda = 0, mode (1,1) initial state;
/// the trace energies must balance the analytic dissipation
/// `E_m(u0)(1 - e^{-2 mu t})` to near roundoff.
pub fn check_linear_decay_energy(n: usize) -> CheckOutcome {
    let g3 = grid(n, n);
    let p = base_params(0.0);
    let amp = 0.1;
    let u0 = PlateField::mode(g3.plate, 1, 1, amp);
    let opts = RunOptions {
        dt: 1e-4,
        t_end: 0.01,
        sample_stride: 10,
        steady_exit: false,
        ..Default::default()
    };
    let trace = match simulate(&u0, &p, &g3, &AdmissibleSetSpec::default(), &opts) {
        Ok(t) => t,
        Err(e) => return outcome("linear-decay-energy", false, format!("{e}")),
    };
    let mu = 4.0 * PI.powi(4);
    let e0 = mu / 8.0 * amp * amp;
    let mut worst = 0.0_f64;
    for e in trace.energies() {
        let analytic_diss = e0 * (1.0 - (-2.0 * mu * e.time).exp());
        let drift = (e.e_total + analytic_diss - e0).abs();
        worst = worst.max(drift);
    }
    outcome(
        "linear-decay-energy",
        worst <= 1e-6,
        format!("max |E(t) + analytic dissipation - E(0)| = {worst:.3e} (<= 1e-6)"),
    )
}

// ---------------------------------------------------------------------------
// 5. spectrum positivity and coercivity
// ---------------------------------------------------------------------------

pub fn check_spectrum(n: usize, seed: u64) -> CheckOutcome {
    let g = PlateGrid::new(n).expect("n");
    let mut pass = true;
    let mut details = Vec::new();
    for (beta, tau) in [(1.0, 0.0), (1.0, 1.0), (2.5, 0.3)] {
        let p = Parameters::new(1.0, beta, tau, 0.3, 1.0).expect("params");
        let report = spectrum_check(g, &p, 100, seed);
        let exact = 4.0 * beta * PI.powi(4) + 2.0 * tau * PI * PI;
        let eig_err = (report.min_eigenvalue - exact).abs() / exact;
        let ok = report.all_positive
            && eig_err <= 1e-12
            && report.min_coercivity_ratio >= report.coercivity_bound;
        pass &= ok;
        details.push(format!(
            "beta={beta},tau={tau}: min mu rel err {eig_err:.1e}, coercivity {:.4} >= {:.4}",
            report.min_coercivity_ratio, report.coercivity_bound
        ));
    }
    outcome("spectrum-coercivity", pass, details.join("; "))
}

// ---------------------------------------------------------------------------
// 6. boundary identity
// ---------------------------------------------------------------------------

/// Pinned constant for the residual bound `|r| <= C h^2 ||w||^2`.
pub const BOUNDARY_IDENTITY_C: f64 = 1.0;
/// Residual level below which the identity counts as resolved to roundoff,
/// making the refinement-stability ratio vacuous.
pub const BOUNDARY_IDENTITY_EXACT: f64 = 1e-8;

fn boundary_constant(n: usize, fields: usize, seed: u64) -> f64 {
    let g = PlateGrid::new(n).expect("n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..fields {
        let mut c = SpectralField::zeros(g);
        for k in 0..6.min(n) {
            for l in 0..6.min(n) {
                c.coeffs[[k, l]] = rng.gen_range(-0.5..0.5);
            }
        }
        let w = to_nodal(&c);
        let r = boundary_identity_check(&w).abs();
        let norm = w2_proxy_norm(&w, 2.0);
        worst = worst.max(r / (g.h() * g.h() * norm * norm));
    }
    worst
}

pub fn check_boundary_identity(seed: u64) -> CheckOutcome {
    // closed-form cancellation on single modes
    let g = PlateGrid::new(24).expect("n");
    let mut worst_mode = 0.0_f64;
    for (k, l) in [(1, 1), (2, 1), (3, 2)] {
        worst_mode = worst_mode.max(boundary_identity_check(&PlateField::mode(g, k, l, 1.0)).abs());
    }

    let c16 = boundary_constant(16, 20, seed);
    let c32 = boundary_constant(32, 20, seed + 1);
    let bounded = c16 <= BOUNDARY_IDENTITY_C && c32 <= BOUNDARY_IDENTITY_C;
    // the spectral evaluation resolves the identity to roundoff; the
    // stability clause only bites if a genuine O(h^2) residual remains
    let stable = (c16 <= BOUNDARY_IDENTITY_EXACT && c32 <= BOUNDARY_IDENTITY_EXACT)
        || (c32 / c16 - 1.0).abs() <= 0.25;
    let passed = worst_mode <= 1e-12 && bounded && stable;
    outcome(
        "boundary-identity",
        passed,
        format!(
            "single modes {worst_mode:.2e} (<= 1e-12); C estimates {c16:.2e} (n=16), \
             {c32:.2e} (n=32) under pinned C = {BOUNDARY_IDENTITY_C}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. linear-decay trajectory oracle
// ---------------------------------------------------------------------------

pub fn check_linear_decay_trajectory(n: usize) -> CheckOutcome {
    let g3 = grid(n, n);
    let p = base_params(0.0);
    let amp = 0.1;
    let u0 = PlateField::mode(g3.plate, 1, 1, amp);
    let opts = RunOptions {
        dt: 1e-4,
        t_end: 0.01,
        sample_stride: 10,
        steady_exit: false,
        ..Default::default()
    };
    let trace = match simulate(&u0, &p, &g3, &AdmissibleSetSpec::default(), &opts) {
        Ok(t) => t,
        Err(e) => return outcome("linear-decay", false, format!("{e}")),
    };
    let mu = 4.0 * PI.powi(4);
    let last = trace.samples.last().unwrap();
    // compare the whole max series against the exact decay envelope
    let mut worst = 0.0_f64;
    let h = g3.plate.h();
    let peak = (0..g3.plate.n)
        .map(|i| ((i + 1) as f64 * h * PI).sin())
        .fold(0.0, f64::max);
    for s in &trace.samples {
        let expected = amp * (-mu * s.t).exp() * peak * peak;
        worst = worst.max((s.max_u - expected).abs());
    }
    outcome(
        "linear-decay",
        worst <= 1e-8 && last.t >= 0.01 - 1e-12,
        format!("max deviation from exact decay {worst:.3e} (<= 1e-8)"),
    )
}

// ---------------------------------------------------------------------------
// 8. a-priori bounds along trajectories
// ---------------------------------------------------------------------------

pub struct TrajectoryBundle {
    pub traces: Vec<(String, SimulationTrace, Parameters)>,
}

/// The standard verify trajectories: driven flat start, linear decay,
/// small-lambda horizon run, and the large-lambda touchdown demo.
pub fn standard_trajectories(n: usize) -> Result<TrajectoryBundle> {
    let g3 = grid(n, n);
    let spec = AdmissibleSetSpec::default();
    let mut traces = Vec::new();

    let p1 = base_params(1.0);
    let opts1 = RunOptions {
        dt: 1e-4,
        t_end: 0.05,
        sample_stride: 10,
        steady_exit: false,
        ..Default::default()
    };
    traces.push((
        "lambda=1 flat start".to_string(),
        simulate(&PlateField::zeros(g3.plate), &p1, &g3, &spec, &opts1)?,
        p1,
    ));

    let p0 = base_params(0.0);
    let opts0 = RunOptions {
        dt: 1e-4,
        t_end: 0.01,
        sample_stride: 10,
        steady_exit: false,
        ..Default::default()
    };
    traces.push((
        "lambda=0 mode decay".to_string(),
        simulate(&PlateField::mode(g3.plate, 1, 1, 0.1), &p0, &g3, &spec, &opts0)?,
        p0,
    ));

    let ps = base_params(0.1);
    let opts_s = RunOptions {
        dt: 1e-4,
        t_end: 1.0,
        sample_stride: 10,
        ..Default::default()
    };
    traces.push((
        "lambda=0.1 horizon".to_string(),
        simulate(&PlateField::zeros(g3.plate), &ps, &g3, &spec, &opts_s)?,
        ps,
    ));

    let pt = base_params(50.0);
    let opts_t = RunOptions {
        dt: 1e-4,
        t_end: 1.0,
        sample_stride: 10,
        ..Default::default()
    };
    traces.push((
        "lambda=50 touchdown".to_string(),
        simulate(&PlateField::zeros(g3.plate), &pt, &g3, &spec, &opts_t)?,
        pt,
    ));

    Ok(TrajectoryBundle { traces })
}

pub fn check_trajectory_bounds(bundle: &TrajectoryBundle) -> CheckOutcome {
    let mut pass = true;
    let mut details = Vec::new();
    for (name, trace, p) in &bundle.traces {
        let report = check_apriori_bounds(trace, p);
        let ok = report.g_l1_violations == 0
            && report.energy_lower_violations == 0
            && report.groenwall_violations == 0
            && report.decay_violations == 0;
        pass &= ok;
        details.push(format!(
            "{name}: {} samples, violations (g_l1 {}, energy {}, groenwall {}, decay {})",
            report.samples_checked,
            report.g_l1_violations,
            report.energy_lower_violations,
            report.groenwall_violations,
            report.decay_violations
        ));
    }
    outcome("apriori-bounds", pass, details.join("; "))
}

pub fn check_dichotomy(bundle: &TrajectoryBundle) -> CheckOutcome {
    let mut pass = true;
    let mut details = Vec::new();
    for (name, trace, _) in &bundle.traces {
        let reason = match &trace.status {
            TerminalStatus::ReachedHorizon => "horizon".to_string(),
            TerminalStatus::Touchdown { t_star } => format!("touchdown t*={t_star:.4}"),
            TerminalStatus::AdmissibilityBreach { reason, .. } => format!("breach ({reason})"),
        };
        if name.contains("touchdown") {
            let ok = matches!(trace.status, TerminalStatus::Touchdown { .. })
                && touchdown_time(trace).is_some();
            pass &= ok;
        } else {
            pass &= matches!(trace.status, TerminalStatus::ReachedHorizon);
        }
        details.push(format!("{name}: {reason}"));
    }
    outcome("dichotomy", pass, details.join("; "))
}

// ---------------------------------------------------------------------------
// 9/10. sweep
// ---------------------------------------------------------------------------

pub struct SweepCheck {
    pub outcome: CheckOutcome,
    pub base_midpoint: f64,
    pub fine_midpoint: f64,
}

pub fn check_sweep(n_base: usize, run_fine: bool, tol: f64) -> SweepCheck {
    let spec = AdmissibleSetSpec::default();
    let p = base_params(1.0);
    // classification horizon: decay to rest happens on a 1/mu_11 ~ 3e-3
    // time scale, so 0.5 leaves two orders of slack even with the
    // critical slowing near the threshold
    let sweep_opts = |dt: f64| RunOptions {
        dt,
        t_end: 0.5,
        sample_stride: 20,
        steady_rate_tol: 1e-8,
        ..Default::default()
    };
    let run_at = |n: usize, dt: f64| {
        let g3 = grid(n, n);
        let u0 = PlateField::zeros(g3.plate);
        estimate_lambda_star(&u0, &p, &g3, &spec, &sweep_opts(dt), (0.1, 50.0), tol, 0)
    };

    if !run_fine {
        return match run_at(n_base, 2e-4) {
            Ok(base) => SweepCheck {
                outcome: outcome(
                    "sweep",
                    base.width() <= tol,
                    format!(
                        "bracket [{:.3}, {:.3}] width {:.3} at n={n_base}",
                        base.lambda_lo,
                        base.lambda_hi,
                        base.width()
                    ),
                ),
                base_midpoint: base.midpoint(),
                fine_midpoint: f64::NAN,
            },
            Err(e) => SweepCheck {
                outcome: outcome("sweep", false, format!("base sweep failed: {e}")),
                base_midpoint: f64::NAN,
                fine_midpoint: f64::NAN,
            },
        };
    }

    // the two resolutions are independent; run them concurrently
    let (base, fine) = rayon::join(|| run_at(n_base, 2e-4), || run_at(2 * n_base, 1e-4));
    let (base, fine) = match (base, fine) {
        (Ok(b), Ok(f)) => (b, f),
        (Err(e), _) => {
            return SweepCheck {
                outcome: outcome("sweep", false, format!("base sweep failed: {e}")),
                base_midpoint: f64::NAN,
                fine_midpoint: f64::NAN,
            }
        }
        (_, Err(e)) => {
            return SweepCheck {
                outcome: outcome("sweep", false, format!("fine sweep failed: {e}")),
                base_midpoint: f64::NAN,
                fine_midpoint: f64::NAN,
            }
        }
    };
    let shift = (fine.midpoint() - base.midpoint()).abs() / base.midpoint();
    let passed = base.width() <= tol && fine.width() <= tol && shift <= 0.20;
    SweepCheck {
        outcome: outcome(
            "sweep",
            passed,
            format!(
                "bracket [{:.3}, {:.3}] at n={n_base}; [{:.3}, {:.3}] at n={}, midpoint shift {:.1}%",
                base.lambda_lo,
                base.lambda_hi,
                fine.lambda_lo,
                fine.lambda_hi,
                2 * n_base,
                100.0 * shift
            ),
        ),
        base_midpoint: base.midpoint(),
        fine_midpoint: fine.midpoint(),
    }
}

// ---------------------------------------------------------------------------
// physical-domain cross-checks
// ---------------------------------------------------------------------------

/// Independent physical-domain evaluation of the evolution right-hand side:
/// `G(u) = (1 + eps^2 |grad u|^2) (d_z psi(x, u(x)))^2` with the vertical
/// derivative taken one-sidedly at the top surface through the sampler.
pub fn big_g_physical(
    v: &PlateField,
    phi: &crate::potential::PotentialField,
    p: &Parameters,
) -> Result<PlateField> {
    let psi = reconstruct_psi(phi, v)?;
    let n = v.grid.n;
    let h = v.grid.h();
    let eps2 = p.eps * p.eps;
    let (vx, vy) = crate::grid::gradient(v);
    let mut values = ndarray::Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let (x, y) = ((i + 1) as f64 * h, (j + 1) as f64 * h);
            let top = v.values[[i, j]];
            let dz = (1.0 + top) / (phi.grid.m + 3) as f64;
            // psi(x, top) = 1 by the Dirichlet data
            let dpsi = (3.0 - 4.0 * psi.eval(x, y, top - dz)? + psi.eval(x, y, top - 2.0 * dz)?)
                / (2.0 * dz);
            let grad2 = vx.values[[i, j]].powi(2) + vy.values[[i, j]].powi(2);
            values[[i, j]] = (1.0 + eps2 * grad2) * dpsi * dpsi;
        }
    }
    Ok(PlateField {
        grid: v.grid,
        values,
    })
}

pub fn check_g_physical_consistency(n_coarse: usize, n_desk: usize) -> CheckOutcome {
    let run = |n: usize| -> Result<f64> {
        let g3 = grid(n, n);
        let p = Parameters::new(0.8, 1.0, 0.0, 0.3, 1.0)?;
        let v = PlateField::mode(g3.plate, 1, 1, -0.3);
        let phi = solve_transformed_potential(&v, &p, &g3)?;
        let g_t = g_from_phi(&v, &phi, &p);
        let g_p = big_g_physical(&v, &phi, &p)?;
        let scale = g_t.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
        Ok(g_t
            .values
            .iter()
            .zip(g_p.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale)
    };
    match (run(n_coarse), run(n_desk)) {
        (Ok(a), Ok(b)) => outcome(
            "g-physical-consistency",
            b < a && b <= 0.05,
            format!("relative sup gap {a:.3e} (n={n_coarse}) -> {b:.3e} (n={n_desk})"),
        ),
        (Err(e), _) | (_, Err(e)) => outcome("g-physical-consistency", false, format!("{e}")),
    }
}

// ---------------------------------------------------------------------------
// full suite
// ---------------------------------------------------------------------------

/// Run every check; `quick` shrinks grid sizes and skips the fine sweep.
/// When `dump_dir` is set, the transformed potential and nonlinearity of a
/// reference deformed state are written as CSV for external inspection.
pub fn run_all(quick: bool, seed: u64, dump_dir: Option<&Path>) -> Vec<CheckOutcome> {
    let desk = if quick { 12 } else { 24 };
    let coarse = if quick { 8 } else { 12 };
    let ms_base = if quick { 8 } else { 16 };
    let sweep_base = if quick { 8 } else { 12 };
    let sine_tol = if quick { 0.04 } else { 0.01 };

    let mut outcomes = vec![
        check_constant_gap(desk, desk),
        check_manufactured_convergence(ms_base),
        check_shape_derivative(desk, coarse, sine_tol),
        check_energy_drift(desk, 1e-4, 0.05),
        check_spectrum(desk, seed),
        check_boundary_identity(seed),
        check_linear_decay_trajectory(desk),
        check_linear_decay_energy(desk),
        check_g_physical_consistency(coarse, desk.max(16)),
    ];

    match standard_trajectories(if quick { 10 } else { 24 }) {
        Ok(bundle) => {
            outcomes.push(check_trajectory_bounds(&bundle));
            outcomes.push(check_dichotomy(&bundle));
        }
        Err(e) => outcomes.push(outcome("trajectories", false, format!("{e}"))),
    }

    let sweep = check_sweep(sweep_base, !quick, 0.5);
    outcomes.push(sweep.outcome);

    if let Some(dir) = dump_dir {
        let g3 = grid(desk, desk);
        let p = base_params(1.0);
        let v = PlateField::mode(g3.plate, 1, 1, -0.2);
        if let Ok(phi) = solve_transformed_potential(&v, &p, &g3) {
            let gv = g_from_phi(&v, &phi, &p);
            let _ = crate::output::write_phi_csv(&phi, &dir.join("phi.csv"));
            let _ = crate::output::write_plate_csv(&gv, &dir.join("g.csv"));
        }
        if let Ok(g) = compute_g(&v, &p, &g3) {
            let _ = crate::output::write_plate_csv(&g, &dir.join("g_cold.csv"));
        }
    }

    outcomes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_gap_check_passes_small() {
        let c = check_constant_gap(8, 8);
        assert!(c.passed, "{}", c.detail);
    }

    #[test]
    fn spectrum_check_passes_small() {
        let c = check_spectrum(10, 7);
        assert!(c.passed, "{}", c.detail);
    }

    #[test]
    fn boundary_identity_check_passes() {
        let c = check_boundary_identity(11);
        assert!(c.passed, "{}", c.detail);
    }

    #[test]
    fn g_physical_consistency_coarse() {
        let c = check_g_physical_consistency(8, 16);
        assert!(c.passed, "{}", c.detail);
    }
}
