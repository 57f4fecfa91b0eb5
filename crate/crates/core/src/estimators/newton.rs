//! Newton's method on the non-negative orthant for smooth convex objectives.
//!
//! Each step minimizes the local quadratic model exactly over `x ≥ 0` (an NNLS problem
//! in the Hessian, solved by Lawson–Hanson) and searches the segment towards that
//! point with an Armijo test. Iterates stay feasible by convexity of the orthant.

use nalgebra::{DMatrix, DVector};

use super::nnls::lawson_hanson;
use super::{projected_gradient_norm, SolverConfig};
use crate::error::Result;

pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start and after every accepted step.
    pub trace: Vec<f64>,
}

/// Minimize over `x ≥ 0`. `value` returns `f(x)`; `full` returns `(f, ∇f, ∇²f)`.
/// Stops when `‖P(x − ∇f) − x‖_∞ ≤ tol`.
pub(crate) fn minimize<V, F>(
    x0: Vec<f64>,
    tol: f64,
    max_iters: usize,
    cfg: &SolverConfig,
    mut value: V,
    mut full: F,
) -> Result<NewtonOutcome>
where
    V: FnMut(&[f64]) -> Result<f64>,
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)>,
{
    let n = x0.len();
    let mut x = x0;
    let mut iterations = 0;
    let mut converged = false;
    let mut trace = Vec::new();
    while iterations < max_iters {
        let (f, g, h) = full(&x)?;
        if trace.is_empty() {
            trace.push(f);
        }
        if projected_gradient_norm(&x, &g) <= tol {
            converged = true;
            break;
        }
        // z = argmin_{z ≥ 0} ½ zᵀHz + (g − Hx)ᵀz, the bound-constrained Newton point
        let hmax = h.diagonal().iter().fold(0.0f64, |a, &v| a.max(v)).max(f64::MIN_POSITIVE);
        let mut hr = h;
        for i in 0..n {
            hr[(i, i)] += 1e-12 * hmax;
        }
        let xv = DVector::from_column_slice(&x);
        let rhs = &hr * &xv - DVector::from_column_slice(&g);
        let (z, _, _) = lawson_hanson(&hr, &rhs, 1e-14, 10 * n + 10);
        let d: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            // the model predicts no decrease
            converged = true;
            break;
        }
        iterations += 1;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| (xi + lambda * di).max(0.0)).collect();
            let f_trial = value(&trial)?;
            if f_trial <= f + cfg.sufficient_decrease * lambda * slope {
                accepted = Some((trial, f_trial));
                break;
            }
            lambda *= cfg.backtracking;
        }
        let Some((trial, f_trial)) = accepted else {
            // no decrease available at machine precision
            converged = true;
            break;
        };
        let moved = trial.iter().zip(&x).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        let size = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        x = trial;
        trace.push(f_trial);
        if moved <= 4.0 * f64::EPSILON * (1.0 + size) {
            // the step is below rounding level
            converged = true;
            break;
        }
    }
    Ok(NewtonOutcome {
        x,
        iterations,
        converged,
        trace,
    })
}
