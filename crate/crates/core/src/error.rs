//! Error type shared across the simulation engine.

use thiserror::Error;

/// Errors produced by solves, time stepping and the sweep driver.
#[derive(Debug, Error)]
pub enum SimError {
    /// A deformation field reached the ground plate (`1 + v <= 0` at a node),
    /// so the elliptic problem and the nonlinearity are undefined.
    #[error("deformation not admissible: min(v) = {min:.6} <= -1")]
    NonAdmissible { min: f64 },

    /// The Krylov iteration stalled above the requested residual tolerance.
    #[error("elliptic solver stalled: relative residual {residual:.3e} after {iterations} iterations{}",
        at.map(|t| format!(" (t = {t:.6})")).unwrap_or_default())]
    SolverDivergence {
        residual: f64,
        iterations: usize,
        at: Option<f64>,
    },

    /// Physical-domain sampler was queried outside the deformed gap.
    #[error("point z = {z:.6} outside the gap [-1, {top:.6}] at x = ({x1:.4}, {x2:.4})")]
    OutOfDomain { x1: f64, x2: f64, z: f64, top: f64 },

    /// The initial sweep bracket does not straddle the threshold.
    #[error("invalid bracket: lambda = {lambda:.6} classified as {got}, expected {expected}")]
    InvalidBracket {
        lambda: f64,
        got: String,
        expected: String,
    },

    /// A visited lambda grid contradicts monotone touchdown classification.
    #[error("non-monotone classification: lambda = {global:.6} ran to horizon while lambda = {touchdown:.6} < it touched down")]
    NonMonotoneClassification { global: f64, touchdown: f64 },

    /// A model or discretization parameter is outside its admissible range.
    #[error("invalid parameter {name} = {value}: requires {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    /// Attach a simulation time stamp to a solver failure.
    pub fn at_time(self, t: f64) -> Self {
        match self {
            SimError::SolverDivergence {
                residual,
                iterations,
                ..
            } => SimError::SolverDivergence {
                residual,
                iterations,
                at: Some(t),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
