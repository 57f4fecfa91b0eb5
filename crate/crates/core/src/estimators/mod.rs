//! Covariance estimators.
//!
//! The dictionary-based estimators ([`ml`], [`nnls`]) fit non-negative weights over a
//! mixed spike/kernel [`Dictionary`](crate::asf::Dictionary). The grid-based rivals
//! ([`spice`], [`l21`]) work on a plain steering matrix. [`sample`] is the debiased
//! sample covariance.

pub mod l21;
pub mod ml;
mod newton;
pub mod nnls;
pub mod sample;
pub mod spice;

use std::fmt::Write as _;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CovError, Result};
use crate::linalg::CMat;

pub use l21::estimate_l21;
pub use ml::{cccp_step, estimate_ml, estimate_ml_from, ml_gradient, ml_objective};
pub use nnls::{estimate_nnls, nnls_init, NnlsOutcome};
pub use sample::estimate_sample_cov;
pub use spice::{estimate_spice, spice_cost};

/// Non-negative weights over dictionary atoms, spike weights first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(CovError::NegativeCoefficient { index, value });
        }
        Ok(Self(u))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for CoefficientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Iteration limits and tolerances shared by the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub cccp_max_outer: usize,
    pub cccp_objective_rel_tol: f64,
    pub inner_max_iters: usize,
    pub inner_grad_tol: f64,
    pub backtracking: f64,
    pub initial_step: f64,
    pub sufficient_decrease: f64,
    pub nnls_tol: f64,
    pub l21_max_iters: usize,
    pub l21_rel_tol: f64,
    pub spice_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cccp_max_outer: 50,
            cccp_objective_rel_tol: 1e-6,
            inner_max_iters: 500,
            inner_grad_tol: 1e-8,
            backtracking: 0.5,
            initial_step: 1.0,
            sufficient_decrease: 1e-4,
            nnls_tol: 1e-10,
            l21_max_iters: 2000,
            l21_rel_tol: 1e-8,
            spice_max_iters: 500,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.cccp_max_outer,
            self.inner_max_iters,
            self.l21_max_iters,
            self.spice_max_iters,
        ];
        let reals = [
            self.cccp_objective_rel_tol,
            self.inner_grad_tol,
            self.initial_step,
            self.sufficient_decrease,
            self.nnls_tol,
            self.l21_rel_tol,
        ];
        if counts.contains(&0) || reals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(CovError::Config("solver limits and tolerances must be positive".into()));
        }
        if !(self.backtracking > 0.0 && self.backtracking < 1.0) {
            return Err(CovError::Config(format!(
                "backtracking factor must lie in (0, 1), got {}",
                self.backtracking
            )));
        }
        Ok(())
    }
}

/// Per-run solver diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Objective value before the first and after every outer iteration.
    pub objective_trace: Vec<f64>,
    /// Inner iterations per outer iteration (a single entry for single-loop solvers).
    pub inner_iterations: Vec<usize>,
    pub converged: bool,
    pub notes: Vec<String>,
}

impl Diagnostics {
    pub fn outer_iterations(&self) -> usize {
        self.objective_trace.len().saturating_sub(1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,objective,inner_iterations\n");
        for (i, f) in self.objective_trace.iter().enumerate() {
            let inner = if i == 0 {
                0
            } else {
                self.inner_iterations.get(i - 1).copied().unwrap_or(0)
            };
            let _ = writeln!(out, "{i},{f:.9e},{inner}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| CovError::io(path, e))
    }
}

/// An estimated channel covariance with its coefficients and solver diagnostics.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub sigma_h: CMat,
    /// Empty for the sample-covariance baseline.
    pub u: CoefficientVector,
    pub diagnostics: Diagnostics,
}

/// `‖P(u − g) − u‖_∞`, the projected-gradient stationarity measure on `u ≥ 0`.
pub(crate) fn projected_gradient_norm(u: &[f64], g: &[f64]) -> f64 {
    u.iter()
        .zip(g)
        .map(|(&x, &d)| ((x - d).max(0.0) - x).abs())
        .fold(0.0, f64::max)
}
