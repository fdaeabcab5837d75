//! Bisection estimate of the pull-in threshold: the voltage parameter
//! separating runs that reach the horizon from runs that touch down.
//!
//! Classification happens at a finite horizon, so the returned bracket is a
//! resolution- and horizon-dependent estimate, not a model constant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::evolution::{simulate, AdmissibleSetSpec, RunOptions, SimulationTrace, TerminalStatus};
use crate::grid::{CylinderGrid, PlateField};
use crate::potential::Parameters;

/// Outcome of one classified run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Global { steady_at: Option<f64> },
    Touchdown { t_star: f64 },
}

impl Classification {
    pub fn is_touchdown(&self) -> bool {
        matches!(self, Classification::Touchdown { .. })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub classification: Classification,
}

/// Final bracket plus the visited history and resolution metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    /// Largest visited lambda classified global-at-horizon.
    pub lambda_lo: f64,
    /// Smallest visited lambda classified touchdown.
    pub lambda_hi: f64,
    pub tol: f64,
    pub history: Vec<SweepPoint>,
    pub n: usize,
    pub m: usize,
    pub dt: f64,
    pub t_end: f64,
    pub delta_stop: f64,
}

impl SweepResult {
    pub fn width(&self) -> f64 {
        self.lambda_hi - self.lambda_lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lambda_lo + self.lambda_hi)
    }
}

fn classify(trace: &SimulationTrace) -> Result<Classification> {
    match &trace.status {
        TerminalStatus::ReachedHorizon => Ok(Classification::Global {
            steady_at: trace.steady_at,
        }),
        TerminalStatus::Touchdown { t_star } => Ok(Classification::Touchdown { t_star: *t_star }),
        TerminalStatus::AdmissibilityBreach { t, reason } => Err(SimError::Config(format!(
            "admissibility breach at t = {t:.6} during sweep run: {reason}"
        ))),
    }
}

fn run_one(
    u0: &PlateField,
    base: &Parameters,
    grid: &CylinderGrid,
    spec: &AdmissibleSetSpec,
    opts: &RunOptions,
    lambda: f64,
) -> Result<SweepPoint> {
    let p = Parameters::new(base.eps, base.beta, base.tau, base.sigma, lambda)?;
    let trace = simulate(u0, &p, grid, spec, opts)?;
    Ok(SweepPoint {
        lambda,
        classification: classify(&trace)?,
    })
}

/// History must stay consistent with a monotone threshold: every global
/// lambda strictly below every touchdown lambda.
fn assert_monotone(history: &[SweepPoint]) -> Result<()> {
    let max_global = history
        .iter()
        .filter(|p| !p.classification.is_touchdown())
        .map(|p| p.lambda)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_touchdown = history
        .iter()
        .filter(|p| p.classification.is_touchdown())
        .map(|p| p.lambda)
        .fold(f64::INFINITY, f64::min);
    if max_global >= min_touchdown {
        return Err(SimError::NonMonotoneClassification {
            global: max_global,
            touchdown: min_touchdown,
        });
    }
    Ok(())
}

/// Bisect the pull-in threshold inside `bracket0 = (lambda_lo, lambda_hi)`.
///
/// The endpoints are verified first: the lower one must run to the horizon
/// and the upper one must touch down, otherwise `InvalidBracket`. An
/// optional pre-scan evaluates `prescan` interior points concurrently and
/// shrinks the bracket before bisection starts.
#[allow(clippy::too_many_arguments)]
pub fn estimate_lambda_star(
    u0: &PlateField,
    base: &Parameters,
    grid: &CylinderGrid,
    spec: &AdmissibleSetSpec,
    opts: &RunOptions,
    bracket0: (f64, f64),
    tol: f64,
    prescan: usize,
) -> Result<SweepResult> {
    let (mut lo, mut hi) = bracket0;
    if lo >= hi || lo <= 0.0 {
        return Err(SimError::Config(format!(
            "bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    let mut history = Vec::new();

    let lo_point = run_one(u0, base, grid, spec, opts, lo)?;
    if lo_point.classification.is_touchdown() {
        return Err(SimError::InvalidBracket {
            lambda: lo,
            got: "touchdown".into(),
            expected: "global-at-horizon".into(),
        });
    }
    history.push(lo_point);
    let hi_point = run_one(u0, base, grid, spec, opts, hi)?;
    if !hi_point.classification.is_touchdown() {
        return Err(SimError::InvalidBracket {
            lambda: hi,
            got: "global-at-horizon".into(),
            expected: "touchdown".into(),
        });
    }
    history.push(hi_point);

    if prescan > 0 {
        let step = (hi - lo) / (prescan + 1) as f64;
        let lambdas: Vec<f64> = (1..=prescan).map(|i| lo + step * i as f64).collect();
        let mut points = lambdas
            .par_iter()
            .map(|&l| run_one(u0, base, grid, spec, opts, l))
            .collect::<Result<Vec<_>>>()?;
        points.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        for pt in points {
            if pt.classification.is_touchdown() {
                hi = hi.min(pt.lambda);
            } else {
                lo = lo.max(pt.lambda);
            }
            history.push(pt);
        }
        assert_monotone(&history)?;
    }

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let pt = run_one(u0, base, grid, spec, opts, mid)?;
        if pt.classification.is_touchdown() {
            hi = mid;
        } else {
            lo = mid;
        }
        history.push(pt);
        assert_monotone(&history)?;
    }

    Ok(SweepResult {
        lambda_lo: lo,
        lambda_hi: hi,
        tol,
        history,
        n: grid.plate.n,
        m: grid.m,
        dt: opts.dt,
        t_end: opts.t_end,
        delta_stop: opts.delta_stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PlateGrid;

    fn desk(n: usize) -> CylinderGrid {
        CylinderGrid::new(PlateGrid::new(n).unwrap(), n).unwrap()
    }

    fn base() -> Parameters {
        Parameters::new(1.0, 1.0, 0.0, 0.3, 1.0).unwrap()
    }

    fn fast_opts() -> RunOptions {
        RunOptions {
            dt: 5e-4,
            t_end: 0.5,
            sample_stride: 20,
            ..Default::default()
        }
    }

    #[test]
    fn degenerate_bracket_rejected() {
        let grid = desk(8);
        let u0 = PlateField::zeros(grid.plate);
        // both ends global: the upper end never touches down
        let err = estimate_lambda_star(
            &u0,
            &base(),
            &grid,
            &AdmissibleSetSpec::default(),
            &fast_opts(),
            (0.05, 0.1),
            0.01,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::InvalidBracket { .. }), "{err}");
    }

    #[test]
    fn tol_wider_than_bracket_returns_endpoints() {
        let grid = desk(8);
        let u0 = PlateField::zeros(grid.plate);
        let result = estimate_lambda_star(
            &u0,
            &base(),
            &grid,
            &AdmissibleSetSpec::default(),
            &fast_opts(),
            (0.1, 60.0),
            100.0,
            0,
        )
        .unwrap();
        assert_eq!(result.lambda_lo, 0.1);
        assert_eq!(result.lambda_hi, 60.0);
        assert_eq!(result.history.len(), 2);
    }

    #[test]
    fn prescan_narrows_bracket_before_bisection() {
        let grid = desk(8);
        let u0 = PlateField::zeros(grid.plate);
        let result = estimate_lambda_star(
            &u0,
            &base(),
            &grid,
            &AdmissibleSetSpec::default(),
            &fast_opts(),
            (0.1, 60.0),
            25.0,
            2,
        )
        .unwrap();
        // endpoints + 2 prescan points, all consistent with one threshold
        assert!(result.history.len() >= 4);
        assert!(result.width() <= 25.0);
    }

    #[test]
    fn bisection_shrinks_bracket() {
        let grid = desk(8);
        let u0 = PlateField::zeros(grid.plate);
        let result = estimate_lambda_star(
            &u0,
            &base(),
            &grid,
            &AdmissibleSetSpec::default(),
            &fast_opts(),
            (0.1, 60.0),
            5.0,
            0,
        )
        .unwrap();
        assert!(result.width() <= 5.0, "width {}", result.width());
        assert!(result.lambda_lo < result.lambda_hi);
        // every visited lambda lies in the initial bracket
        assert!(result
            .history
            .iter()
            .all(|p| (0.1..=60.0).contains(&p.lambda)));
        // monotone classification across history
        let max_g = result
            .history
            .iter()
            .filter(|p| !p.classification.is_touchdown())
            .map(|p| p.lambda)
            .fold(f64::NEG_INFINITY, f64::max);
        let min_t = result
            .history
            .iter()
            .filter(|p| p.classification.is_touchdown())
            .map(|p| p.lambda)
            .fold(f64::INFINITY, f64::min);
        assert!(max_g < min_t);
        // touchdown happens sooner at stronger coupling
        let mut td: Vec<(f64, f64)> = result
            .history
            .iter()
            .filter_map(|p| match p.classification {
                Classification::Touchdown { t_star } => Some((p.lambda, t_star)),
                _ => None,
            })
            .collect();
        td.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(td.len() >= 2);
        for pair in td.windows(2) {
            assert!(
                pair[1].1 <= pair[0].1,
                "t* should not increase with lambda: {td:?}"
            );
        }
    }
}
