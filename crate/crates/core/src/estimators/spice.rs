//! SPICE covariance fitting over a steering-vector grid.
//!
//! Minimizes `g(u) = tr(Σ(u) R⁻¹) + tr(Σ(u)⁻¹ R)` over `u ≥ 0`, where `R` is the
//! sample covariance and `Σ(u) = D diag(u) Dᴴ + N0 I`. Keeping the noise term inside
//! the model keeps `Σ(u)` invertible; it is removed from the returned estimate.

use nalgebra::DMatrix;

use super::{newton, CoefficientVector, Diagnostics, EstimateResult, SolverConfig};
use crate::asf::SteeringDictionary;
use crate::error::{CovError, Result};
use crate::linalg::{add_scaled_identity, check_square, cholesky, trace_re, CMat};
use crate::sampling::SampleCovariance;

/// `tr(Σ Σ̂⁻¹) + tr(Σ⁻¹ Σ̂)` for positive-definite `Σ` and `Σ̂`.
pub fn spice_cost(sigma: &CMat, sigma_hat: &CMat) -> Result<f64> {
    let a = cholesky(sigma)?;
    let b = cholesky(sigma_hat)?;
    Ok(trace_re(&b.solve(sigma)) + trace_re(&a.solve(sigma_hat)))
}

/// Column-wise quadratic forms `a_jᴴ X a_j`.
fn column_forms(d: &CMat, x: &CMat) -> Vec<f64> {
    let xd = x * d;
    (0..d.ncols())
        .map(|j| {
            d.column(j)
                .iter()
                .zip(xd.column(j).iter())
                .map(|(a, b)| (a.conj() * b).re)
                .sum()
        })
        .collect()
}

struct Problem<'a> {
    d: &'a CMat,
    r: CMat,
    /// `a_jᴴ R⁻¹ a_j`
    p: Vec<f64>,
    n0_tr_rinv: f64,
    n0: f64,
}

impl Problem<'_> {
    fn covariance(&self, u: &[f64]) -> CMat {
        let mut scaled = self.d.clone();
        for (j, &w) in u.iter().enumerate() {
            scaled.column_mut(j).scale_mut(w);
        }
        scaled * self.d.adjoint()
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        let sigma = add_scaled_identity(&self.covariance(u), self.n0);
        let lin: f64 = u.iter().zip(&self.p).map(|(a, b)| a * b).sum::<f64>() + self.n0_tr_rinv;
        finite(lin + trace_re(&cholesky(&sigma)?.solve(&self.r)))
    }

    /// Cost, gradient `p_j − a_jᴴ K R K a_j` and Hessian `2 Re[(a_iᴴ K a_j)(a_jᴴ K R K a_i)]`
    /// with `K = Σ(u)⁻¹`.
    fn full(&self, u: &[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        let sigma = add_scaled_identity(&self.covariance(u), self.n0);
        let k = cholesky(&sigma)?.inverse();
        let lin: f64 = u.iter().zip(&self.p).map(|(a, b)| a * b).sum::<f64>() + self.n0_tr_rinv;
        let kr = &k * &self.r;
        let v = finite(lin + trace_re(&kr))?;
        let kd = &k * self.d;
        let b = self.d.adjoint() * &kd;
        let e = kd.adjoint() * (&self.r * &kd);
        let grad = self.p.iter().enumerate().map(|(j, p)| p - e[(j, j)].re).collect();
        let n = u.len();
        let h = DMatrix::from_fn(n, n, |i, j| 2.0 * (b[(i, j)] * e[(i, j)].conj()).re);
        Ok((v, grad, h))
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CovError::NonFinite("SPICE cost"))
    }
}

/// SPICE estimate `D diag(u*) Dᴴ`.
///
/// When fewer snapshots than antennas make `R` singular, a ridge of
/// `1e−6·tr(R)/M` is added and noted in the diagnostics. Start point is the
/// beamformer power `a_jᴴ R a_j / M²`.
pub fn estimate_spice(
    dict: &SteeringDictionary,
    sample: &SampleCovariance,
    n0: f64,
    cfg: &SolverConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    let m = check_square(&sample.matrix)?;
    if m != dict.matrix.nrows() {
        return Err(CovError::DimensionMismatch {
            expected: dict.matrix.nrows(),
            got: m,
        });
    }
    if !(n0.is_finite() && n0 > 0.0) {
        return Err(CovError::InvalidArgument(format!("noise power must be positive, got {n0}")));
    }
    let mut diagnostics = Diagnostics::default();
    let mut r = sample.matrix.clone();
    let mut r_chol = if sample.n >= m { cholesky(&r).ok() } else { None };
    if r_chol.is_none() {
        let ridge = 1e-6 * trace_re(&r).max(f64::MIN_POSITIVE) / m as f64;
        r = add_scaled_identity(&r, ridge);
        r_chol = Some(cholesky(&r)?);
        diagnostics.notes.push(format!("ridge {ridge:e} added to a singular sample covariance"));
    }
    let r_inv = r_chol.expect("set above").inverse();
    let p = column_forms(&dict.matrix, &r_inv);
    let prob = Problem {
        d: &dict.matrix,
        n0_tr_rinv: n0 * trace_re(&r_inv),
        p,
        r,
        n0,
    };

    let mf = (m * m) as f64;
    let u: Vec<f64> = column_forms(&dict.matrix, &prob.r).into_iter().map(|v| (v / mf).max(0.0)).collect();
    let tol = cfg.inner_grad_tol * (1.0 + prob.p.iter().fold(0.0f64, |a, b| a.max(b.abs())));
    let out = newton::minimize(u, tol, cfg.spice_max_iters, cfg, |u| prob.value(u), |u| prob.full(u))?;
    diagnostics.objective_trace = out.trace;
    diagnostics.converged = out.converged;
    let (u, iterations) = (out.x, out.iterations);
    diagnostics.inner_iterations.push(iterations);
    let sigma_h = crate::linalg::symmetrize(&prob.covariance(&u));
    Ok(EstimateResult {
        sigma_h,
        u: CoefficientVector::new(u)?,
        diagnostics,
    })
}
