//! Time integration of the coupled system: exponential stepping of the
//! plate equation against freshly solved potentials, admissibility
//! tracking, touchdown detection and trace recording.

use serde::{Deserialize, Serialize};

use crate::energy::{electrostatic_energy, mechanical_energy_spectral, EnergyBreakdown};
use crate::error::{Result, SimError};
use crate::grid::{
    integrate_plate, to_nodal, to_spectral, w2_proxy_norm, CylinderGrid, PlateField,
    SpectralField,
};
use crate::operator::{spectral_grad_norm_sq, OperatorSpectrum};
use crate::potential::{g_from_phi, solve_transformed_potential_warm, Parameters};

/// Membership data for the admissible set: proxy norm at most `1/rho` and
/// gap `v >= -1 + rho`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdmissibleSetSpec {
    /// Integrability index of the proxy norm.
    pub q: f64,
    /// Gap/norm parameter in (0, 1).
    pub rho: f64,
}

impl Default for AdmissibleSetSpec {
    fn default() -> Self {
        Self { q: 3.0, rho: 0.02 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MembershipReport {
    pub member: bool,
    pub norm: f64,
    /// `1/rho - norm`; negative when the norm condition fails.
    pub norm_margin: f64,
    /// `min v - (-1 + rho)`; negative when the gap condition fails.
    pub gap_margin: f64,
}

/// Evaluate both admissibility conditions and report margins.
pub fn admissible_check(v: &PlateField, spec: &AdmissibleSetSpec) -> MembershipReport {
    let norm = w2_proxy_norm(v, spec.q);
    let norm_margin = 1.0 / spec.rho - norm;
    let gap_margin = v.min() - (-1.0 + spec.rho);
    MembershipReport {
        member: norm_margin >= 0.0 && gap_margin >= 0.0,
        norm,
        norm_margin,
        gap_margin,
    }
}

/// Why a run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminalStatus {
    ReachedHorizon,
    Touchdown { t_star: f64 },
    AdmissibilityBreach { t: f64, reason: String },
}

/// One recorded state summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub norm_proxy: f64,
    /// Discrete `||u||_L2^2` (spectral Parseval).
    pub l2_sq: f64,
    /// Discrete `||grad u||_L2^2` (spectral).
    pub grad_sq: f64,
    /// `||G(u)||_L1`; absent when the state is past admissibility.
    pub g_l1: Option<f64>,
    /// Energy record; absent only for a terminal overshoot state.
    pub energy: Option<EnergyBreakdown>,
}

/// Time series of state summaries plus the terminal classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub samples: Vec<TraceSample>,
    pub status: TerminalStatus,
    /// Set when the run was cut short because the state became stationary.
    pub steady_at: Option<f64>,
    pub delta_stop: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n: usize,
    pub m: usize,
    pub params: Parameters,
    pub solver_iterations: usize,
    /// Largest observed gap between the work-accumulated electrostatic
    /// energy recorded in the trace and its direct quadrature evaluation
    /// (an O(h^2) consistency diagnostic).
    pub max_ee_quadrature_gap: f64,
}

impl SimulationTrace {
    pub fn energies(&self) -> impl Iterator<Item = EnergyBreakdown> + '_ {
        self.samples.iter().filter_map(|s| s.energy)
    }
}

/// Knobs of a single run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Energies recorded every `sample_stride` steps; dissipation
    /// accumulates every step regardless.
    pub sample_stride: usize,
    /// Stop when `min u <= -1 + delta_stop`; the model is singular at
    /// contact, so the run must stop strictly before it.
    pub delta_stop: f64,
    /// Extra fixed-point refinements of the frozen nonlinearity per step
    /// (0 = plain exponential step).
    pub lambda_iterations: usize,
    /// Close out a run early once the state is stationary; the
    /// classification is still `ReachedHorizon`.
    pub steady_exit: bool,
    /// Rate threshold `||du/dt|| <= tol * max(1, ||u||)` for steady exit.
    pub steady_rate_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_end: 2.0,
            sample_stride: 10,
            delta_stop: 0.05,
            lambda_iterations: 0,
            steady_exit: true,
            steady_rate_tol: 1e-9,
        }
    }
}

/// Consecutive stationary samples required before a steady exit.
const STEADY_SAMPLES: usize = 20;
/// A terminal state deeper than this gap cannot be solved for energies.
const MIN_SOLVABLE_GAP: f64 = 1e-3;

/// Internal integration state.
struct Stepper<'a> {
    p: &'a Parameters,
    grid: &'a CylinderGrid,
    spec: &'a AdmissibleSetSpec,
    op: OperatorSpectrum,
    u: PlateField,
    u_hat: SpectralField,
    warm: Option<Vec<f64>>,
    warm_prev: Option<Vec<f64>>,
    dissipation: f64,
    /// Electrostatic energy accumulated through the shape-derivative work
    /// `dE_e = -<g, du>`, seeded with the quadrature value of the initial
    /// state. This is the form whose balance against the dissipation
    /// isolates the splitting error of the frozen-g exponential step.
    ee_work: Option<f64>,
    max_ee_gap: f64,
    solver_iterations: usize,
    samples: Vec<TraceSample>,
}

impl<'a> Stepper<'a> {
    /// Initial guess for the next solve: linear extrapolation of the two
    /// previous shifted solutions when available.
    fn warm_guess(&self) -> Option<Vec<f64>> {
        match (&self.warm, &self.warm_prev) {
            (Some(cur), Some(prev)) => Some(
                cur.iter()
                    .zip(prev.iter())
                    .map(|(c, p)| 2.0 * c - p)
                    .collect(),
            ),
            (Some(cur), None) => Some(cur.clone()),
            _ => None,
        }
    }

    fn push_warm(&mut self, shifted: Vec<f64>) {
        self.warm_prev = self.warm.take();
        self.warm = Some(shifted);
    }

    fn record(&mut self, t: f64) -> Result<()> {
        let guess = self.warm_guess();
        let phi = solve_transformed_potential_warm(&self.u, self.p, self.grid, guess.as_deref())
            .map_err(|e| e.at_time(t))?;
        self.solver_iterations += phi.stats.iterations;
        self.push_warm(phi.shifted_interior());
        let g = g_from_phi(&self.u, &phi, self.p);
        let e_mech = mechanical_energy_spectral(&self.op, &self.u);
        let ee_quad = electrostatic_energy(&self.u, &phi, self.p)?;
        let e_elec = *self.ee_work.get_or_insert(ee_quad);
        self.max_ee_gap = self.max_ee_gap.max((e_elec - ee_quad).abs());
        self.samples.push(TraceSample {
            t,
            min_u: self.u.min(),
            max_u: self.u.max(),
            norm_proxy: w2_proxy_norm(&self.u, self.spec.q),
            l2_sq: self.u_hat.l2_norm_sq(),
            grad_sq: spectral_grad_norm_sq(self.grid.plate, &self.u_hat),
            g_l1: Some(integrate_plate(&g)),
            energy: Some(EnergyBreakdown {
                e_mech,
                e_elec,
                e_total: e_mech - self.p.lambda * e_elec,
                dissipation: self.dissipation,
                time: t,
            }),
        });
        Ok(())
    }

    /// Record a terminated run's final state; energies only if solvable.
    fn record_terminal(&mut self, t: f64) {
        if self.u.min() > -1.0 + MIN_SOLVABLE_GAP && self.record(t).is_ok() {
            return;
        }
        self.samples.push(TraceSample {
            t,
            min_u: self.u.min(),
            max_u: self.u.max(),
            norm_proxy: w2_proxy_norm(&self.u, self.spec.q),
            l2_sq: self.u_hat.l2_norm_sq(),
            grad_sq: spectral_grad_norm_sq(self.grid.plate, &self.u_hat),
            g_l1: None,
            energy: None,
        });
    }

    fn finish(
        self,
        status: TerminalStatus,
        steady_at: Option<f64>,
        opts: &RunOptions,
    ) -> SimulationTrace {
        SimulationTrace {
            samples: self.samples,
            status,
            steady_at,
            delta_stop: opts.delta_stop,
            dt: opts.dt,
            t_end: opts.t_end,
            n: self.grid.plate.n,
            m: self.grid.m,
            params: *self.p,
            solver_iterations: self.solver_iterations,
            max_ee_quadrature_gap: self.max_ee_gap,
        }
    }
}

/// Advance the coupled system from `u0`. Each step solves the transformed
/// potential at the current state (warm-started), evaluates `g`, and
/// applies the exponential step; energies are recorded every sample stride.
pub fn simulate(
    u0: &PlateField,
    p: &Parameters,
    grid: &CylinderGrid,
    spec: &AdmissibleSetSpec,
    opts: &RunOptions,
) -> Result<SimulationTrace> {
    u0.require_admissible()?;
    if opts.dt <= 0.0 {
        return Err(SimError::InvalidParameter {
            name: "dt",
            value: opts.dt,
            constraint: "dt > 0",
        });
    }
    let n_steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
    let threshold = -1.0 + opts.delta_stop;
    let norm_cap = 1.0 / spec.rho;

    let mut st = Stepper {
        p,
        grid,
        spec,
        op: OperatorSpectrum::new(grid.plate, p),
        u: u0.clone(),
        u_hat: to_spectral(u0),
        warm: None,
        warm_prev: None,
        dissipation: 0.0,
        ee_work: None,
        max_ee_gap: 0.0,
        solver_iterations: 0,
        samples: Vec::new(),
    };
    let mut prev_min = st.u.min();
    let mut steady_run = 0usize;

    // the initial state may already sit inside the stop gap
    if prev_min <= threshold {
        st.record_terminal(0.0);
        return Ok(st.finish(TerminalStatus::Touchdown { t_star: 0.0 }, None, opts));
    }

    for step in 0..=n_steps {
        let t = step as f64 * opts.dt;

        // potential and nonlinearity at the current state
        let guess = st.warm_guess();
        let phi = solve_transformed_potential_warm(&st.u, p, grid, guess.as_deref())
            .map_err(|e| e.at_time(t))?;
        st.solver_iterations += phi.stats.iterations;
        st.push_warm(phi.shifted_interior());
        let g = g_from_phi(&st.u, &phi, p);

        if step % opts.sample_stride == 0 || step == n_steps {
            let e_mech = mechanical_energy_spectral(&st.op, &st.u);
            let ee_quad = electrostatic_energy(&st.u, &phi, p)?;
            let e_elec = *st.ee_work.get_or_insert(ee_quad);
            st.max_ee_gap = st.max_ee_gap.max((e_elec - ee_quad).abs());
            st.samples.push(TraceSample {
                t,
                min_u: st.u.min(),
                max_u: st.u.max(),
                norm_proxy: w2_proxy_norm(&st.u, spec.q),
                l2_sq: st.u_hat.l2_norm_sq(),
                grad_sq: spectral_grad_norm_sq(grid.plate, &st.u_hat),
                g_l1: Some(integrate_plate(&g)),
                energy: Some(EnergyBreakdown {
                    e_mech,
                    e_elec,
                    e_total: e_mech - p.lambda * e_elec,
                    dissipation: st.dissipation,
                    time: t,
                }),
            });
        }
        if step == n_steps {
            return Ok(st.finish(TerminalStatus::ReachedHorizon, None, opts));
        }

        // exponential step with g frozen at u^n, optionally refined by a
        // short fixed-point loop on the step endpoint
        let g_hat = to_spectral(&g);
        let mut g_used = g_hat.clone();
        let mut u_hat_new = st.op.duhamel_step_spectral(&st.u_hat, &g_hat, opts.dt, p.lambda);
        for _ in 0..opts.lambda_iterations {
            let u_pred = to_nodal(&u_hat_new);
            if u_pred.min() <= -1.0 + MIN_SOLVABLE_GAP {
                break;
            }
            let phi_pred = solve_transformed_potential_warm(&u_pred, p, grid, st.warm.as_deref())
                .map_err(|e| e.at_time(t))?;
            st.solver_iterations += phi_pred.stats.iterations;
            let g_pred = to_spectral(&g_from_phi(&u_pred, &phi_pred, p));
            let g_avg = SpectralField {
                grid: grid.plate,
                coeffs: 0.5 * (&g_hat.coeffs + &g_pred.coeffs),
            };
            let refined = st.op.duhamel_step_spectral(&st.u_hat, &g_avg, opts.dt, p.lambda);
            let inc = 0.25
                * (&refined.coeffs - &u_hat_new.coeffs)
                    .iter()
                    .map(|d| d * d)
                    .sum::<f64>();
            u_hat_new = refined;
            g_used = g_avg;
            if inc.sqrt() <= 1e-10 {
                break;
            }
        }

        // midpoint-rule dissipation ||u^{n+1} - u^n||^2 / dt and the
        // corresponding shape-derivative work increment -<g, du>
        let mut diff_sq = 0.0;
        let mut work = 0.0;
        for ((a, b), gc) in u_hat_new
            .coeffs
            .iter()
            .zip(st.u_hat.coeffs.iter())
            .zip(g_used.coeffs.iter())
        {
            let d = a - b;
            diff_sq += d * d;
            work += gc * d;
        }
        diff_sq *= 0.25;
        st.dissipation += diff_sq / opts.dt;
        if let Some(ee) = st.ee_work.as_mut() {
            *ee -= 0.25 * work;
        }
        let rate = diff_sq.sqrt() / opts.dt;

        st.u_hat = u_hat_new;
        st.u = to_nodal(&st.u_hat);
        let t_next = t + opts.dt;
        let min_u = st.u.min();

        // touchdown has priority over the norm check
        if min_u <= threshold {
            let t_star = if min_u < prev_min {
                t + opts.dt * ((threshold - prev_min) / (min_u - prev_min)).clamp(0.0, 1.0)
            } else {
                t_next
            };
            st.record_terminal(t_next);
            return Ok(st.finish(TerminalStatus::Touchdown { t_star }, None, opts));
        }
        let norm_proxy = w2_proxy_norm(&st.u, spec.q);
        if norm_proxy > norm_cap {
            st.record_terminal(t_next);
            return Ok(st.finish(
                TerminalStatus::AdmissibilityBreach {
                    t: t_next,
                    reason: format!("norm proxy {norm_proxy:.4} exceeded cap {norm_cap:.4}"),
                },
                None,
                opts,
            ));
        }
        prev_min = min_u;

        if opts.steady_exit {
            let l2 = st.u_hat.l2_norm_sq().sqrt();
            if rate <= opts.steady_rate_tol * l2.max(1.0) {
                steady_run += 1;
            } else {
                steady_run = 0;
            }
            if steady_run >= STEADY_SAMPLES {
                st.record_terminal(t_next);
                return Ok(st.finish(TerminalStatus::ReachedHorizon, Some(t_next), opts));
            }
        }
    }

    unreachable!("loop exits through a terminal branch");
}

/// First sample time at which `min u` crossed `-1 + delta_stop`, linearly
/// interpolated between the bracketing samples; `None` when no crossing.
pub fn touchdown_time(trace: &SimulationTrace) -> Option<f64> {
    let threshold = -1.0 + trace.delta_stop;
    let mut prev: Option<(f64, f64)> = None;
    for s in &trace.samples {
        if s.min_u <= threshold {
            return Some(match prev {
                Some((t0, m0)) if m0 > threshold && s.min_u < m0 => {
                    t0 + (s.t - t0) * (threshold - m0) / (s.min_u - m0)
                }
                _ => s.t,
            });
        }
        prev = Some((s.t, s.min_u));
    }
    None
}

// ---------------------------------------------------------------------------
// A-posteriori a-priori-bound checks
// ---------------------------------------------------------------------------

/// Violation counts of the trajectory bounds: the `L1` control of `G` by
/// the `H1` norm, the total-energy lower bound, and the Gronwall-type
/// differential inequality on `||u||^2`.
#[derive(Debug, Clone, Default)]
pub struct BoundsReport {
    pub samples_checked: usize,
    pub g_l1_violations: usize,
    pub energy_lower_violations: usize,
    pub groenwall_violations: usize,
    /// Violations of the gradient-flow monotone decay
    /// `E(t_{k+1}) <= E(t_k) + tol`.
    pub decay_violations: usize,
    pub groenwall_constant: f64,
}

/// Check the a-priori bounds along a recorded trace.
///
/// For each sample with a gap `rho0 = 1 + min u`:
/// `||G||_1 <= (4 + 2/rho0^2)|D| + 4 eps^2 ||grad u||^2`, and
/// `E >= E_m / 2 - c` with
/// `c = 18 lambda^2 eps^4 ||u||^2 / (beta (1+sigma)) + lambda (4 + 1/(2 rho0^2))|D|`.
/// Between consecutive samples, `d/dt ||u||^2 <= C (1 + ||u||^2)` with
/// `C = max(2 lambda (4 + 2/rho0_min^2), 32 lambda^2 eps^4 / (beta (1+sigma)))`.
pub fn check_apriori_bounds(trace: &SimulationTrace, p: &Parameters) -> BoundsReport {
    let mut report = BoundsReport::default();
    let eps2 = p.eps * p.eps;

    let rho0_min = trace
        .samples
        .iter()
        .map(|s| 1.0 + s.min_u)
        .fold(f64::INFINITY, f64::min)
        .max(1e-12);
    let c_groen = (2.0 * p.lambda * (4.0 + 2.0 / (rho0_min * rho0_min)))
        .max(32.0 * p.lambda * p.lambda * eps2 * eps2 / (p.beta * (1.0 + p.sigma)));
    report.groenwall_constant = c_groen;

    let mut prev: Option<(f64, f64)> = None;
    let mut prev_e: Option<f64> = None;
    let decay_tol = 1e-5
        * trace
            .energies()
            .next()
            .map(|e| e.e_total.abs().max(1.0))
            .unwrap_or(1.0);
    for s in &trace.samples {
        let rho0 = (1.0 + s.min_u).max(1e-12);
        if let Some(g_l1) = s.g_l1 {
            report.samples_checked += 1;
            let bound = (4.0 + 2.0 / (rho0 * rho0)) + 4.0 * eps2 * s.grad_sq;
            if g_l1 > bound * (1.0 + 1e-9) {
                report.g_l1_violations += 1;
            }
        }
        if let Some(e) = s.energy {
            let c = 18.0 * p.lambda * p.lambda * eps2 * eps2 * s.l2_sq
                / (p.beta * (1.0 + p.sigma))
                + p.lambda * (4.0 + 1.0 / (2.0 * rho0 * rho0));
            if e.e_total < 0.5 * e.e_mech - c - 1e-9 {
                report.energy_lower_violations += 1;
            }
            // monotone decay along the flow, up to drift tolerance
            if let Some(e_prev) = prev_e {
                if e.e_total > e_prev + decay_tol {
                    report.decay_violations += 1;
                }
            }
            prev_e = Some(e.e_total);
        }
        if let Some((t0, l2_0)) = prev {
            let dtau = s.t - t0;
            if dtau > 0.0 {
                let lhs = (s.l2_sq - l2_0) / dtau;
                let rhs = c_groen * (1.0 + l2_0);
                if lhs > rhs * 1.05 + 1e-9 {
                    report.groenwall_violations += 1;
                }
            }
        }
        prev = Some((s.t, s.l2_sq));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PlateGrid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn desk(n: usize, m: usize) -> CylinderGrid {
        CylinderGrid::new(PlateGrid::new(n).unwrap(), m).unwrap()
    }

    fn params(lambda: f64) -> Parameters {
        Parameters::new(1.0, 1.0, 0.0, 0.3, lambda).unwrap()
    }

    #[test]
    fn admissible_check_reports_margins() {
        let g = PlateGrid::new(10).unwrap();
        let spec = AdmissibleSetSpec { q: 3.0, rho: 0.5 };
        let zero = admissible_check(&PlateField::zeros(g), &spec);
        assert!(zero.member);
        assert_relative_eq!(zero.norm_margin, 2.0, epsilon = 1e-12);
        assert_relative_eq!(zero.gap_margin, 0.5, epsilon = 1e-12);

        let deep = admissible_check(&PlateField::constant(g, -0.6), &spec);
        assert!(!deep.member);
        assert!(deep.gap_margin < 0.0);
    }

    #[test]
    fn admissible_check_norm_saturation() {
        let g = PlateGrid::new(12).unwrap();
        let spec = AdmissibleSetSpec { q: 3.0, rho: 0.5 };
        // scale a smooth field so its proxy norm sits at 90% of the cap
        let base = PlateField::mode(g, 1, 1, 1.0);
        let norm = w2_proxy_norm(&base, spec.q);
        let scaled = PlateField {
            grid: g,
            values: (0.9 / (spec.rho * norm)) * &base.values,
        };
        let report = admissible_check(&scaled, &spec);
        assert!(report.member);
        assert!(report.norm_margin > 0.0 && report.norm_margin < 0.25 / spec.rho);
    }

    #[test]
    fn linear_decay_matches_exact_solution() {
        // lambda = 0: u(t) = 0.1 e^{-mu_11 t} sin sin to near machine accuracy
        let grid = desk(12, 12);
        let p = params(0.0);
        let u0 = PlateField::mode(grid.plate, 1, 1, 0.1);
        let opts = RunOptions {
            dt: 1e-4,
            t_end: 0.01,
            sample_stride: 10,
            steady_exit: false,
            ..Default::default()
        };
        let trace = simulate(&u0, &p, &grid, &AdmissibleSetSpec::default(), &opts).unwrap();
        assert_eq!(trace.status, TerminalStatus::ReachedHorizon);
        let mu = 4.0 * PI.powi(4);
        let last = trace.samples.last().unwrap();
        let amp = 0.1 * (-mu * last.t).exp();
        let h = grid.plate.h();
        let center = (PI * 6.0 * h).sin().powi(2); // node nearest the center
        assert!(
            (last.max_u - amp * center).abs() < 1e-8,
            "decay mismatch: {} vs {}",
            last.max_u,
            amp * center
        );
    }

    #[test]
    fn small_lambda_runs_to_horizon() {
        let grid = desk(8, 8);
        let p = params(0.1);
        let u0 = PlateField::zeros(grid.plate);
        let opts = RunOptions {
            dt: 2e-4,
            t_end: 1.0,
            sample_stride: 50,
            ..Default::default()
        };
        let trace = simulate(&u0, &p, &grid, &AdmissibleSetSpec::default(), &opts).unwrap();
        assert_eq!(trace.status, TerminalStatus::ReachedHorizon);
        // steady exit fires long before the horizon at this coupling
        assert!(trace.steady_at.is_some());
        let min_u = trace
            .samples
            .iter()
            .map(|s| s.min_u)
            .fold(f64::INFINITY, f64::min);
        assert!(min_u > -0.1, "plate should stay near rest, got {min_u}");
    }

    #[test]
    fn large_lambda_touches_down() {
        let grid = desk(8, 8);
        let p = params(50.0);
        let u0 = PlateField::zeros(grid.plate);
        let opts = RunOptions {
            dt: 1e-4,
            t_end: 1.0,
            sample_stride: 10,
            ..Default::default()
        };
        let trace = simulate(&u0, &p, &grid, &AdmissibleSetSpec::default(), &opts).unwrap();
        match trace.status {
            TerminalStatus::Touchdown { t_star } => {
                assert!(t_star > 0.0 && t_star < 1.0);
                let last = trace.samples.last().unwrap();
                assert!(last.min_u <= -1.0 + trace.delta_stop);
            }
            ref other => panic!("expected touchdown, got {other:?}"),
        }
    }

    #[test]
    fn touchdown_time_interpolates_between_samples() {
        // synthetic trace crossing -0.9 between t = 0.30 and t = 0.31
        let mk = |t: f64, min_u: f64| TraceSample {
            t,
            min_u,
            max_u: 0.0,
            norm_proxy: 0.0,
            l2_sq: 0.0,
            grad_sq: 0.0,
            g_l1: None,
            energy: None,
        };
        let trace = SimulationTrace {
            samples: vec![mk(0.30, -0.89), mk(0.31, -0.91)],
            status: TerminalStatus::Touchdown { t_star: 0.305 },
            steady_at: None,
            delta_stop: 0.1,
            dt: 1e-2,
            t_end: 1.0,
            n: 8,
            m: 8,
            params: params(1.0),
            solver_iterations: 0,
            max_ee_quadrature_gap: 0.0,
        };
        assert_relative_eq!(touchdown_time(&trace).unwrap(), 0.305, epsilon = 1e-12);
    }

    #[test]
    fn touchdown_absent_for_decay_run() {
        let grid = desk(8, 8);
        let p = params(0.0);
        let u0 = PlateField::mode(grid.plate, 1, 1, 0.1);
        let opts = RunOptions {
            dt: 1e-3,
            t_end: 0.02,
            sample_stride: 5,
            steady_exit: false,
            ..Default::default()
        };
        let trace = simulate(&u0, &p, &grid, &AdmissibleSetSpec::default(), &opts).unwrap();
        assert!(touchdown_time(&trace).is_none());
    }

    #[test]
    fn work_form_tracks_quadrature_energy() {
        let grid = desk(12, 12);
        let p = params(2.0);
        let u0 = PlateField::zeros(grid.plate);
        let opts = RunOptions {
            dt: 1e-4,
            t_end: 0.03,
            sample_stride: 10,
            steady_exit: false,
            ..Default::default()
        };
        let trace = simulate(&u0, &p, &grid, &AdmissibleSetSpec::default(), &opts).unwrap();
        // the two electrostatic-energy routes stay within an O(h^2) envelope
        let h2 = grid.plate.h() * grid.plate.h();
        assert!(
            trace.max_ee_quadrature_gap <= h2,
            "work/quadrature E_e gap {} above {h2}",
            trace.max_ee_quadrature_gap
        );
    }

    #[test]
    fn fixed_point_refinement_improves_step_accuracy() {
        // averaging g at the predicted endpoint should land closer to a
        // fine-step reference than the plain frozen-g step
        let grid = desk(8, 8);
        let p = params(3.0);
        let u0 = PlateField::zeros(grid.plate);
        let run = |dt: f64, iters: usize| {
            let opts = RunOptions {
                dt,
                t_end: 4e-3,
                sample_stride: usize::MAX - 1,
                lambda_iterations: iters,
                steady_exit: false,
                ..Default::default()
            };
            simulate(&u0, &p, &grid, &AdmissibleSetSpec::default(), &opts)
                .unwrap()
                .samples
                .last()
                .unwrap()
                .min_u
        };
        let reference = run(5e-5, 0);
        let plain = run(4e-4, 0);
        let refined = run(4e-4, 2);
        assert!(
            (refined - reference).abs() < (plain - reference).abs(),
            "refined {refined} vs plain {plain}, reference {reference}"
        );
    }

    #[test]
    fn refinement_in_dt_is_first_order() {
        // halving dt changes u(t_end) by O(dt): the endpoint difference
        // between dt and dt/2 should drop by about half again with dt/4
        let grid = desk(10, 10);
        let p = params(2.0);
        let u0 = PlateField::zeros(grid.plate);
        let endpoint = |dt: f64| {
            let opts = RunOptions {
                dt,
                t_end: 0.02,
                sample_stride: usize::MAX - 1,
                steady_exit: false,
                ..Default::default()
            };
            let trace = simulate(&u0, &p, &grid, &AdmissibleSetSpec::default(), &opts).unwrap();
            trace.samples.last().unwrap().min_u
        };
        let coarse = endpoint(4e-4);
        let mid = endpoint(2e-4);
        let fine = endpoint(1e-4);
        let d1 = (coarse - mid).abs();
        let d2 = (mid - fine).abs();
        let ratio = d1 / d2;
        assert!(
            (1.5..=3.0).contains(&ratio),
            "dt refinement ratio {ratio} ({d1} vs {d2})"
        );
    }

    #[test]
    fn bounds_hold_on_moderate_run() {
        let grid = desk(10, 10);
        let p = params(1.0);
        let u0 = PlateField::zeros(grid.plate);
        let opts = RunOptions {
            dt: 1e-4,
            t_end: 0.02,
            sample_stride: 10,
            steady_exit: false,
            ..Default::default()
        };
        let trace = simulate(&u0, &p, &grid, &AdmissibleSetSpec::default(), &opts).unwrap();
        let report = check_apriori_bounds(&trace, &p);
        assert!(report.samples_checked > 10);
        assert_eq!(report.g_l1_violations, 0);
        assert_eq!(report.energy_lower_violations, 0);
        assert_eq!(report.groenwall_violations, 0);
        assert_eq!(report.decay_violations, 0);
        // sample times strictly increase
        for pair in trace.samples.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
    }

    #[test]
    fn flat_rest_state_has_identically_zero_drift() {
        // lambda = 0, u0 = 0: nothing moves, dissipation stays zero
        let grid = desk(8, 8);
        let p = params(0.0);
        let u0 = PlateField::zeros(grid.plate);
        let opts = RunOptions {
            dt: 1e-3,
            t_end: 0.01,
            sample_stride: 2,
            steady_exit: false,
            ..Default::default()
        };
        let trace = simulate(&u0, &p, &grid, &AdmissibleSetSpec::default(), &opts).unwrap();
        let report = crate::energy::energy_equality_monitor(trace.energies());
        assert_eq!(report.max_drift, 0.0);
        for s in &trace.samples {
            assert_eq!(s.min_u, 0.0);
            assert_eq!(s.energy.unwrap().dissipation, 0.0);
        }
    }
}
