//! TOML run configuration: sections `domain`, `parameters`, `time`,
//! `admissibility`, `initial`, `sweep`, `output`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::evolution::{AdmissibleSetSpec, RunOptions};
use crate::grid::{CylinderGrid, PlateField, PlateGrid};
use crate::potential::Parameters;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainSection {
    pub n: usize,
    pub m: usize,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self { n: 24, m: 24 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ParametersSection {
    pub eps: f64,
    pub beta: f64,
    pub tau: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl Default for ParametersSection {
    fn default() -> Self {
        Self {
            eps: 1.0,
            beta: 1.0,
            tau: 0.0,
            sigma: 0.3,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub sample_stride: usize,
    pub lambda_iterations: usize,
    pub steady_exit: bool,
    pub steady_rate_tol: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        let d = RunOptions::default();
        Self {
            dt: d.dt,
            t_end: d.t_end,
            sample_stride: d.sample_stride,
            lambda_iterations: d.lambda_iterations,
            steady_exit: d.steady_exit,
            steady_rate_tol: d.steady_rate_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmissibilitySection {
    pub q: f64,
    pub rho: f64,
    pub delta_stop: f64,
}

impl Default for AdmissibilitySection {
    fn default() -> Self {
        Self {
            q: 3.0,
            rho: 0.02,
            delta_stop: 0.05,
        }
    }
}

/// Initial deformation: `zero`, a single sine `mode`, or a `uniform` lift.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialSection {
    pub kind: String,
    pub k: usize,
    pub l: usize,
    pub amplitude: f64,
    pub value: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            kind: "zero".into(),
            k: 1,
            l: 1,
            amplitude: 0.1,
            value: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub tol: f64,
    pub prescan: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lambda_lo: 0.1,
            lambda_hi: 50.0,
            tol: 0.5,
            prescan: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct OutputSection {
    /// Also dump the potential and nonlinearity as CSV in verify mode.
    pub write_fields: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SimConfig {
    pub domain: DomainSection,
    pub parameters: ParametersSection,
    pub time: TimeSection,
    pub admissibility: AdmissibilitySection,
    pub initial: InitialSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| SimError::Config(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Range-check everything that has a stated constraint.
    pub fn validate(&self) -> Result<()> {
        self.parameters()?;
        self.grid()?;
        let t = &self.time;
        if t.dt <= 0.0 || !t.dt.is_finite() {
            return Err(SimError::InvalidParameter {
                name: "time.dt",
                value: t.dt,
                constraint: "dt > 0",
            });
        }
        if t.t_end <= 0.0 {
            return Err(SimError::InvalidParameter {
                name: "time.t_end",
                value: t.t_end,
                constraint: "t_end > 0",
            });
        }
        if t.sample_stride == 0 {
            return Err(SimError::InvalidParameter {
                name: "time.sample_stride",
                value: 0.0,
                constraint: "sample_stride >= 1",
            });
        }
        let a = &self.admissibility;
        if !(a.rho > 0.0 && a.rho < 1.0) {
            return Err(SimError::InvalidParameter {
                name: "admissibility.rho",
                value: a.rho,
                constraint: "0 < rho < 1",
            });
        }
        if !(a.delta_stop > 0.0 && a.delta_stop < 1.0) {
            return Err(SimError::InvalidParameter {
                name: "admissibility.delta_stop",
                value: a.delta_stop,
                constraint: "0 < delta_stop < 1",
            });
        }
        if a.q < 1.0 {
            return Err(SimError::InvalidParameter {
                name: "admissibility.q",
                value: a.q,
                constraint: "q >= 1",
            });
        }
        match self.initial.kind.as_str() {
            "zero" | "mode" | "uniform" => {}
            other => {
                return Err(SimError::Config(format!(
                    "initial.kind must be zero|mode|uniform, got {other:?}"
                )))
            }
        }
        if self.sweep.lambda_lo >= self.sweep.lambda_hi || self.sweep.lambda_lo <= 0.0 {
            return Err(SimError::Config(format!(
                "sweep bracket must satisfy 0 < lo < hi, got ({}, {})",
                self.sweep.lambda_lo, self.sweep.lambda_hi
            )));
        }
        Ok(())
    }

    pub fn parameters(&self) -> Result<Parameters> {
        let p = &self.parameters;
        Parameters::new(p.eps, p.beta, p.tau, p.sigma, p.lambda)
    }

    pub fn grid(&self) -> Result<CylinderGrid> {
        CylinderGrid::new(PlateGrid::new(self.domain.n)?, self.domain.m)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            dt: self.time.dt,
            t_end: self.time.t_end,
            sample_stride: self.time.sample_stride,
            delta_stop: self.admissibility.delta_stop,
            lambda_iterations: self.time.lambda_iterations,
            steady_exit: self.time.steady_exit,
            steady_rate_tol: self.time.steady_rate_tol,
        }
    }

    pub fn admissible_spec(&self) -> AdmissibleSetSpec {
        AdmissibleSetSpec {
            q: self.admissibility.q,
            rho: self.admissibility.rho,
        }
    }

    pub fn initial_field(&self) -> Result<PlateField> {
        let grid = self.grid()?.plate;
        let init = &self.initial;
        let u0 = match init.kind.as_str() {
            "zero" => PlateField::zeros(grid),
            "mode" => PlateField::mode(grid, init.k.max(1), init.l.max(1), init.amplitude),
            "uniform" => PlateField::constant(grid, init.value),
            other => {
                return Err(SimError::Config(format!(
                    "initial.kind must be zero|mode|uniform, got {other:?}"
                )))
            }
        };
        u0.require_admissible()?;
        Ok(u0)
    }
}
