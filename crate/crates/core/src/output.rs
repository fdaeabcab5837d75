//! Fixed-schema CSV and JSON writers.
//!
//! `trace.csv` columns: `t,min_u,max_u,norm_proxy,E_m,E_e,E,dissipation,drift`
//! (energy cells empty for a terminal state past admissibility).
//! `summary.json` and `sweep.json` schemas are documented in the README.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::json;

use crate::energy::energy_equality_monitor;
use crate::error::Result;
use crate::evolution::{touchdown_time, SimulationTrace, TerminalStatus};
use crate::grid::PlateField;
use crate::potential::PotentialField;
use crate::sweep::SweepResult;

pub const TRACE_HEADER: &str = "t,min_u,max_u,norm_proxy,E_m,E_e,E,dissipation,drift";

/// Render a trace as CSV text (deterministic formatting).
pub fn trace_csv(trace: &SimulationTrace) -> String {
    let monitor = energy_equality_monitor(trace.energies());
    let mut drift_iter = monitor.drifts.iter();
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for s in &trace.samples {
        match s.energy {
            Some(e) => {
                let drift = drift_iter.next().map(|d| d.1).unwrap_or(0.0);
                out.push_str(&format!(
                    "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                    s.t,
                    s.min_u,
                    s.max_u,
                    s.norm_proxy,
                    e.e_mech,
                    e.e_elec,
                    e.e_total,
                    e.dissipation,
                    drift
                ));
            }
            None => {
                out.push_str(&format!(
                    "{:.12e},{:.12e},{:.12e},{:.12e},,,,,\n",
                    s.t, s.min_u, s.max_u, s.norm_proxy
                ));
            }
        }
    }
    out
}

pub fn write_trace_csv(trace: &SimulationTrace, path: &Path) -> Result<()> {
    fs::write(path, trace_csv(trace))?;
    Ok(())
}

/// Render the run summary as pretty JSON.
pub fn summary_json(trace: &SimulationTrace) -> String {
    let monitor = energy_equality_monitor(trace.energies());
    let status = match &trace.status {
        TerminalStatus::ReachedHorizon => json!({ "kind": "reached_horizon" }),
        TerminalStatus::Touchdown { t_star } => {
            json!({ "kind": "touchdown", "t_star": t_star })
        }
        TerminalStatus::AdmissibilityBreach { t, reason } => {
            json!({ "kind": "admissibility_breach", "t": t, "reason": reason })
        }
    };
    let last = trace.samples.last();
    let doc = json!({
        "schema_version": 1,
        "status": status,
        "touchdown_time": touchdown_time(trace),
        "steady_at": trace.steady_at,
        "parameters": trace.params,
        "resolution": {
            "n": trace.n,
            "m": trace.m,
            "dt": trace.dt,
            "t_end": trace.t_end,
            "delta_stop": trace.delta_stop,
        },
        "final": last.map(|s| json!({
            "t": s.t,
            "min_u": s.min_u,
            "max_u": s.max_u,
            "norm_proxy": s.norm_proxy,
            "dissipation": s.energy.map(|e| e.dissipation),
            "e_total": s.energy.map(|e| e.e_total),
        })),
        "max_energy_drift": monitor.max_drift,
        "first_step_drift": monitor.first_step_drift,
        "solver_iterations": trace.solver_iterations,
    });
    serde_json::to_string_pretty(&doc).expect("summary serializes")
}

pub fn write_summary_json(trace: &SimulationTrace, path: &Path) -> Result<()> {
    fs::write(path, summary_json(trace))?;
    Ok(())
}

pub fn write_sweep_json(result: &SweepResult, path: &Path) -> Result<()> {
    let doc = json!({
        "schema_version": 1,
        "lambda_lo": result.lambda_lo,
        "lambda_hi": result.lambda_hi,
        "midpoint": result.midpoint(),
        "width": result.width(),
        "tol": result.tol,
        "history": result.history,
        "resolution": {
            "n": result.n,
            "m": result.m,
            "dt": result.dt,
            "t_end": result.t_end,
            "delta_stop": result.delta_stop,
        },
    });
    fs::write(path, serde_json::to_string_pretty(&doc).expect("sweep serializes"))?;
    Ok(())
}

/// Eigenvalue table `k,l,mu` of the plate operator.
pub fn spectrum_csv(spec: &crate::operator::OperatorSpectrum) -> String {
    let mut out = String::from("k,l,mu\n");
    for k in 0..spec.grid.n {
        for l in 0..spec.grid.n {
            out.push_str(&format!("{},{},{:.12e}\n", k + 1, l + 1, spec.mu[[k, l]]));
        }
    }
    out
}

/// Verification dump of the transformed potential: columns `i,j,k,value`
/// over the closed cylinder grid.
pub fn write_phi_csv(phi: &PotentialField, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "i,j,k,value")?;
    let (ni, nj, nk) = phi.values.dim();
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                writeln!(f, "{i},{j},{k},{:.12e}", phi.values[[i, j, k]])?;
            }
        }
    }
    Ok(())
}

/// Verification dump of a plate field (for example `g`): columns `i,j,value`
/// over interior nodes.
pub fn write_plate_csv(field: &PlateField, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "i,j,value")?;
    for i in 0..field.grid.n {
        for j in 0..field.grid.n {
            writeln!(f, "{},{},{:.12e}", i + 1, j + 1, field.values[[i, j]])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::TraceSample;
    use crate::potential::Parameters;

    fn tiny_trace() -> SimulationTrace {
        SimulationTrace {
            samples: vec![
                TraceSample {
                    t: 0.0,
                    min_u: 0.0,
                    max_u: 0.0,
                    norm_proxy: 0.0,
                    l2_sq: 0.0,
                    grad_sq: 0.0,
                    g_l1: Some(1.0),
                    energy: Some(crate::energy::EnergyBreakdown {
                        e_mech: 0.0,
                        e_elec: 1.0,
                        e_total: -1.0,
                        dissipation: 0.0,
                        time: 0.0,
                    }),
                },
                TraceSample {
                    t: 0.1,
                    min_u: -0.99,
                    max_u: 0.0,
                    norm_proxy: 3.0,
                    l2_sq: 0.5,
                    grad_sq: 1.0,
                    g_l1: None,
                    energy: None,
                },
            ],
            status: TerminalStatus::Touchdown { t_star: 0.09 },
            steady_at: None,
            delta_stop: 0.05,
            dt: 1e-4,
            t_end: 1.0,
            n: 8,
            m: 8,
            params: Parameters::new(1.0, 1.0, 0.0, 0.3, 1.0).unwrap(),
            solver_iterations: 7,
            max_ee_quadrature_gap: 0.0,
        }
    }

    #[test]
    fn csv_has_fixed_header_and_empty_energy_cells() {
        let text = trace_csv(&tiny_trace());
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        let _first = lines.next().unwrap();
        let second = lines.next().unwrap();
        assert!(second.ends_with(",,,,,"), "terminal row: {second}");
    }

    #[test]
    fn summary_reports_touchdown() {
        let text = summary_json(&tiny_trace());
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["status"]["kind"], "touchdown");
        assert!(doc["touchdown_time"].is_number());
    }
}
