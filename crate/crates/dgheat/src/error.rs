//! Crate-wide error type.

use num_complex::Complex64;
use thiserror::Error;

/// Which time-mesh condition a partition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshCondition {
    /// `k_min >= c * k^beta`
    MinStep,
    /// `kappa^-1 <= k_m / k_{m+1} <= kappa`
    StepRatio,
    /// `k <= T / 4`
    MaxStep,
}

impl std::fmt::Display for MeshCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeshCondition::MinStep => write!(f, "(i) k_min >= c*k^beta"),
            MeshCondition::StepRatio => write!(f, "(ii) kappa^-1 <= k_m/k_{{m+1}} <= kappa"),
            MeshCondition::MaxStep => write!(f, "(iii) k <= T/4"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name}: {detail}")]
    Domain { name: &'static str, detail: String },

    #[error("time mesh violates condition {condition} at m={index}: {detail}")]
    MeshCondition {
        condition: MeshCondition,
        index: usize,
        detail: String,
    },

    #[error("unsupported configuration: {0}")]
    Capability(String),

    #[error("rational kernel pole near z = {z} (|p_hat(z)| = {magnitude:.3e})")]
    Pole { z: Complex64, magnitude: f64 },

    #[error("shift z = {z} is within {distance:.3e} of generalized eigenvalue {eigenvalue}")]
    NearSingular {
        z: Complex64,
        eigenvalue: f64,
        distance: f64,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("time t = {t} outside (0, {horizon}]")]
    TimeRange { t: f64, horizon: f64 },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("eigen-oracle needs the full interior basis ({expected} modes), got {got}")]
    IncompleteEigenbasis { expected: usize, got: usize },

    #[error("precision limit: {0}")]
    Precision(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
