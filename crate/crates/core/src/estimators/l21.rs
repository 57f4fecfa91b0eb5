//! ℓ2,1-regularized multi-snapshot least squares over a steering-vector grid.
//!
//! Solves `min_W ½‖(1/√M) D W − Y‖_F² + √N ‖W‖_{2,1}` by monotone FISTA and turns the
//! row norms of the solution into power estimates `u_i = ‖W_i‖ / (M√N)`.
//!
//! The objective only sees `Y` through `Y Yᴴ`: with `Ỹ = (Y Yᴴ)^{1/2}` the map
//! `W = Z Ỹ⁺ Y` is a row-norm–preserving bijection between the solutions for `Ỹ` and
//! `Y`. The solver therefore runs on the `M × M` matrix `Ỹ` regardless of `N`.

use num_complex::Complex64;

use super::{CoefficientVector, Diagnostics, EstimateResult, SolverConfig};
use crate::asf::SteeringDictionary;
use crate::error::{CovError, Result};
use crate::linalg::{frobenius_norm, psd_sqrt, spectral_norm, symmetrize, CMat};
use crate::sampling::SnapshotSet;

fn row_norms(w: &CMat) -> Vec<f64> {
    w.row_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect()
}

fn objective(a: &CMat, w: &CMat, y: &CMat, lambda: f64) -> f64 {
    let r = a * w - y;
    0.5 * frobenius_norm(&r).powi(2) + lambda * row_norms(w).iter().sum::<f64>()
}

/// Row-wise group soft-threshold.
fn prox(v: &CMat, t: f64) -> CMat {
    let mut out = v.clone();
    for (i, norm) in row_norms(v).into_iter().enumerate() {
        let scale = if norm > t { 1.0 - t / norm } else { 0.0 };
        out.row_mut(i).scale_mut(scale);
    }
    out
}

/// Solution of `min_W ½‖A W − Y‖_F² + λ‖W‖_{2,1}` with its objective trace.
#[derive(Debug, Clone)]
pub struct GroupLasso {
    pub w: CMat,
    pub diagnostics: Diagnostics,
}

/// Monotone FISTA with step `1/‖A‖₂²`. Stops when the relative change of the
/// objective falls below `cfg.l21_rel_tol` or after `cfg.l21_max_iters` iterations.
pub fn group_lasso(a: &CMat, y: &CMat, lambda: f64, cfg: &SolverConfig) -> Result<GroupLasso> {
    if a.nrows() != y.nrows() {
        return Err(CovError::DimensionMismatch {
            expected: a.nrows(),
            got: y.nrows(),
        });
    }
    let lip = spectral_norm(a).powi(2);
    let mut w = CMat::zeros(a.ncols(), y.ncols());
    let mut diagnostics = Diagnostics::default();
    let mut f = objective(a, &w, y, lambda);
    diagnostics.objective_trace.push(f);
    if lip == 0.0 || f == 0.0 {
        diagnostics.converged = true;
        return Ok(GroupLasso { w, diagnostics });
    }
    let step = 1.0 / lip;
    let ah = a.adjoint();
    let mut w_prev = w.clone();
    let mut z_prev = w.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    while iterations < cfg.l21_max_iters {
        iterations += 1;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // extrapolation point of the monotone variant: x_k + (t_{k-1}/t_k)(z_k − x_k) + ((t_{k-1} − 1)/t_k)(x_k − x_{k-1})
        let v = if iterations == 1 {
            w.clone()
        } else {
            &w + (&z_prev - &w) * Complex64::new(t / t_next, 0.0) + (&w - &w_prev) * Complex64::new((t - 1.0) / t_next, 0.0)
        };
        let grad = &ah * (a * &v - y);
        let z = prox(&(&v - grad * Complex64::new(step, 0.0)), lambda * step);
        let fz = objective(a, &z, y, lambda);
        let change = (f - fz).abs() / f.abs().max(f64::MIN_POSITIVE);
        w_prev = w.clone();
        if fz <= f {
            w = z.clone();
            f = fz;
        }
        z_prev = z;
        t = t_next;
        diagnostics.objective_trace.push(f);
        if change <= cfg.l21_rel_tol {
            diagnostics.converged = true;
            break;
        }
    }
    diagnostics.inner_iterations.push(iterations);
    Ok(GroupLasso { w, diagnostics })
}

/// ℓ2,1 estimate `D diag(u*) Dᴴ` from the raw snapshots.
pub fn estimate_l21(dict: &SteeringDictionary, snapshots: &SnapshotSet, cfg: &SolverConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    let m = snapshots.m();
    if m != dict.matrix.nrows() {
        return Err(CovError::DimensionMismatch {
            expected: dict.matrix.nrows(),
            got: m,
        });
    }
    let n = snapshots.n() as f64;
    let y_red = psd_sqrt(&(&snapshots.y * snapshots.y.adjoint()));
    let a = &dict.matrix * Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
    let sol = group_lasso(&a, &y_red, n.sqrt(), cfg)?;
    let scale = m as f64 * n.sqrt();
    let u: Vec<f64> = row_norms(&sol.w).into_iter().map(|r| r / scale).collect();
    let sigma_h = symmetrize(&dict.covariance(&u));
    Ok(EstimateResult {
        sigma_h,
        u: CoefficientVector::new(u)?,
        diagnostics: sol.diagnostics,
    })
}
