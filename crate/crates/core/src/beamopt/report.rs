//! Optimizer output report.

use crate::rhs::{ApertureWindow, HolographicPattern};
use crate::scalar::{Cplx, Real};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Returned solution: the holographic pattern, the digital beamformer when
/// one was optimized, and the aperture window in force.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: serde::Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct Solution<T: Real> {
    pub pattern: HolographicPattern<T>,
    pub digital: Option<DMatrix<Cplx<T>>>,
    pub window: ApertureWindow,
}

/// Feasibility margins of the returned solution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Feasibility<T: Real> {
    /// Minimum per-row leakage slack.
    pub min_leakage_slack: T,
    /// Minimum slack over the problem's extra constraints (+∞ when none).
    pub min_constraint_slack: T,
}

/// Optimizer output: solution, per-iteration objective trace of the winning
/// restart, feasibility margins, and reproducibility metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: serde::Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct SolveReport<T: Real> {
    pub solution: Solution<T>,
    pub objective: T,
    /// Objective values at the accepted iterates of the winning restart
    /// (final penalty round); non-decreasing by construction.
    pub objective_trace: Vec<T>,
    pub feasibility: Feasibility<T>,
    pub seed: u64,
    pub restarts_used: usize,
}
