//! Maximum-likelihood fit by the concave-convex procedure.
//!
//! The negative log-likelihood `f(u) = tr(C(u)⁻¹ Σ̂_y) + log det C(u)`, with
//! `C(u) = Σ_i u_i S_i + N0 I`, splits into a convex trace term and a concave
//! log-determinant. Each CCCP step linearizes the log-determinant at the current
//! iterate and minimizes the resulting convex surrogate over `u ≥ 0`.

use super::nnls::nnls_init;
use super::{newton, CoefficientVector, Diagnostics, EstimateResult, SolverConfig};
use crate::asf::Dictionary;
use crate::error::{CovError, Result};
use nalgebra::DMatrix;

use crate::linalg::{add_scaled_identity, check_square, cholesky, log_det_chol, trace_re, CMat};

/// Slack on the descent contract, relative to `1 + |f|`.
pub const DESCENT_SLACK: f64 = 1e-9;

fn check_inputs(u: &[f64], dict: &Dictionary, sigma_y: &CMat, n0: f64) -> Result<()> {
    if u.len() != dict.len() {
        return Err(CovError::DimensionMismatch {
            expected: dict.len(),
            got: u.len(),
        });
    }
    if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(CovError::NegativeCoefficient { index, value });
    }
    let m = check_square(sigma_y)?;
    if m != dict.m() {
        return Err(CovError::DimensionMismatch {
            expected: dict.m(),
            got: m,
        });
    }
    if !(n0.is_finite() && n0 > 0.0) {
        return Err(CovError::InvalidArgument(format!("noise power must be positive, got {n0}")));
    }
    Ok(())
}

fn model(dict: &Dictionary, u: &[f64], n0: f64) -> CMat {
    add_scaled_identity(&dict.combine(u), n0)
}

/// Pieces of the objective at one point: `tr(C⁻¹Σ̂)`, `log det C`, and `K Σ̂ K` when requested.
struct Eval {
    trace_term: f64,
    log_det: f64,
    k: Option<CMat>,
    ksk: Option<CMat>,
}

fn evaluate(dict: &Dictionary, u: &[f64], sigma_y: &CMat, n0: f64, with_grad: bool) -> Result<Eval> {
    let c = model(dict, u, n0);
    let chol = cholesky(&c)?;
    let log_det = log_det_chol(&chol);
    let (trace_term, k, ksk) = if with_grad {
        let k = chol.inverse();
        let ks = &k * sigma_y;
        let trace_term = trace_re(&ks);
        let ksk = ks * &k;
        (trace_term, Some(k), Some(ksk))
    } else {
        (trace_re(&chol.solve(sigma_y)), None, None)
    };
    if !(trace_term.is_finite() && log_det.is_finite()) {
        return Err(CovError::NonFinite("ML objective"));
    }
    Ok(Eval {
        trace_term,
        log_det,
        k,
        ksk,
    })
}

/// `f(u) = tr((Σ(u) + N0 I)⁻¹ Σ̂_y) + log det(Σ(u) + N0 I)`.
pub fn ml_objective(u: &[f64], dict: &Dictionary, sigma_y: &CMat, n0: f64) -> Result<f64> {
    check_inputs(u, dict, sigma_y, n0)?;
    let e = evaluate(dict, u, sigma_y, n0, false)?;
    Ok(e.trace_term + e.log_det)
}

/// `∂f/∂u_j = tr(S_j K) − tr(K Σ̂_y K S_j)` with `K = (Σ(u) + N0 I)⁻¹`.
pub fn ml_gradient(u: &[f64], dict: &Dictionary, sigma_y: &CMat, n0: f64) -> Result<Vec<f64>> {
    check_inputs(u, dict, sigma_y, n0)?;
    let e = evaluate(dict, u, sigma_y, n0, true)?;
    let k = e.k.expect("requested");
    let diff = k - e.ksk.expect("requested");
    Ok(dict.traces_with(&diff))
}

/// One CCCP update and the objective before and after it.
#[derive(Debug, Clone)]
pub struct CccpStep {
    pub u: Vec<f64>,
    pub f_before: f64,
    pub f_after: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
}

/// Surrogate `g(u) = tr(C(u)⁻¹ Σ̂_y) + wᵀu`, its gradient `w − [tr(S_j K Σ̂ K)]_j` and
/// Hessian `2 Re tr(K S_i K S_j K Σ̂)`.
fn surrogate(dict: &Dictionary, u: &[f64], w: &[f64], sigma_y: &CMat, n0: f64) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
    let c = model(dict, u, n0);
    let k = cholesky(&c)?.inverse();
    let ks = &k * sigma_y;
    let trace_term = trace_re(&ks);
    if !trace_term.is_finite() {
        return Err(CovError::NonFinite("ML surrogate"));
    }
    let a = dict.left_products(&k);
    let m2 = c.nrows() * c.nrows();
    let n = a.len();
    // tr(A_i P_j) as one product: rows hold A_i, columns hold P_jᵀ, both column-major
    let rows = CMat::from_fn(n, m2, |i, idx| a[i][idx]);
    let mut cols = CMat::zeros(m2, n);
    let mut grad = Vec::with_capacity(n);
    for (j, aj) in a.iter().enumerate() {
        let p = aj * &ks;
        grad.push(w[j] - p.trace().re);
        cols.column_mut(j).copy_from_slice(p.transpose().as_slice());
    }
    let prod = rows * cols;
    let h = DMatrix::from_fn(n, n, |i, j| prod[(i, j)].re + prod[(j, i)].re);
    let lin: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    Ok((trace_term + lin, grad, h))
}

/// `u_{t+1} = argmin_{u ≥ 0} tr(C(u)⁻¹ Σ̂_y) + Σ_j u_j tr(S_j C(u_t)⁻¹)`.
///
/// The convex inner problem is solved by projected Newton from the warm start `u_t`.
/// It stops once the projected-gradient norm falls below
/// `inner_grad_tol·(1 + ‖w‖_∞)`. Returns [`CovError::DescentViolation`] if the
/// likelihood objective increases by more than the descent slack.
pub fn cccp_step(u_t: &[f64], dict: &Dictionary, sigma_y: &CMat, n0: f64, cfg: &SolverConfig) -> Result<CccpStep> {
    check_inputs(u_t, dict, sigma_y, n0)?;
    cccp_step_unchecked(u_t, dict, sigma_y, n0, cfg, 0)
}

fn cccp_step_unchecked(
    u_t: &[f64],
    dict: &Dictionary,
    sigma_y: &CMat,
    n0: f64,
    cfg: &SolverConfig,
    iteration: usize,
) -> Result<CccpStep> {
    let at_t = evaluate(dict, u_t, sigma_y, n0, true)?;
    let f_before = at_t.trace_term + at_t.log_det;
    let w = dict.traces_with(at_t.k.as_ref().expect("requested"));
    let tol = cfg.inner_grad_tol * (1.0 + w.iter().fold(0.0f64, |a, b| a.max(b.abs())));

    let lin = |u: &[f64]| -> f64 { u.iter().zip(&w).map(|(a, b)| a * b).sum() };
    let inner = newton::minimize(
        u_t.to_vec(),
        tol,
        cfg.inner_max_iters,
        cfg,
        |u| Ok(evaluate(dict, u, sigma_y, n0, false)?.trace_term + lin(u)),
        |u| surrogate(dict, u, &w, sigma_y, n0),
    )?;
    let u = inner.x;

    let after = evaluate(dict, &u, sigma_y, n0, false)?;
    let f_after = after.trace_term + after.log_det;
    if f_after > f_before + DESCENT_SLACK * (1.0 + f_before.abs()) {
        return Err(CovError::DescentViolation {
            iteration,
            before: f_before,
            after: f_after,
        });
    }
    Ok(CccpStep {
        u,
        f_before,
        f_after,
        inner_iterations: inner.iterations,
        inner_converged: inner.converged,
    })
}

/// ML estimate with CCCP started from the NNLS fit.
pub fn estimate_ml(dict: &Dictionary, sigma_y: &CMat, n0: f64, cfg: &SolverConfig) -> Result<EstimateResult> {
    let init = nnls_init(dict, sigma_y, n0, cfg)?;
    let mut est = estimate_ml_from(dict, sigma_y, n0, &init.u, cfg)?;
    if !init.converged {
        est.diagnostics.notes.push("NNLS initialization hit its iteration limit".into());
    }
    Ok(est)
}

/// ML estimate with CCCP started from a given feasible point.
///
/// Iterates until `|f(u_t) − f(u_{t+1})| ≤ cccp_objective_rel_tol·(1 + |f(u_t)|)` or
/// `cccp_max_outer` steps.
pub fn estimate_ml_from(
    dict: &Dictionary,
    sigma_y: &CMat,
    n0: f64,
    u0: &[f64],
    cfg: &SolverConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    check_inputs(u0, dict, sigma_y, n0)?;
    let mut u = u0.to_vec();
    let mut diagnostics = Diagnostics::default();
    for t in 0..cfg.cccp_max_outer {
        let step = cccp_step_unchecked(&u, dict, sigma_y, n0, cfg, t)?;
        if t == 0 {
            diagnostics.objective_trace.push(step.f_before);
        }
        diagnostics.objective_trace.push(step.f_after);
        diagnostics.inner_iterations.push(step.inner_iterations);
        if !step.inner_converged {
            diagnostics
                .notes
                .push(format!("inner solver hit its iteration limit at outer step {t}"));
        }
        u = step.u;
        if (step.f_before - step.f_after).abs() <= cfg.cccp_objective_rel_tol * (1.0 + step.f_before.abs()) {
            diagnostics.converged = true;
            break;
        }
    }
    let u = CoefficientVector::new(u)?;
    let sigma_h = dict.combine(&u);
    Ok(EstimateResult {
        sigma_h,
        u,
        diagnostics,
    })
}

/// Number of recorded objective increases beyond the descent slack.
pub fn descent_violations(trace: &[f64]) -> usize {
    trace
        .windows(2)
        .filter(|w| w[1] > w[0] + DESCENT_SLACK * (1.0 + w[0].abs()))
        .count()
}
