//! Lawson–Hanson non-negative least squares, used to initialize the ML fit.

use nalgebra::{DMatrix, DVector};

use super::{CoefficientVector, Diagnostics, EstimateResult, SolverConfig};
use crate::asf::Dictionary;
use crate::error::{CovError, Result};
use crate::linalg::{add_scaled_identity, check_square, frobenius_inner, CMat};

/// Result of an NNLS solve.
#[derive(Debug, Clone)]
pub struct NnlsOutcome {
    pub u: CoefficientVector,
    pub converged: bool,
    pub iterations: usize,
}

/// `min_{x ≥ 0} ½xᵀGx − bᵀx` for a symmetric PSD Gram matrix `G`, by the Lawson–Hanson
/// active-set method. Equivalent to `min ‖Ax − f‖²` with `G = AᵀA`, `b = Aᵀf`.
///
/// Stops when every inactive coordinate has dual value `w_j ≤ tol·max|b|`.
pub fn lawson_hanson(g: &DMatrix<f64>, b: &DVector<f64>, tol: f64, max_iter: usize) -> (DVector<f64>, bool, usize) {
    let n = b.len();
    let mut x = DVector::zeros(n);
    let scale = b.amax();
    if scale == 0.0 {
        return (x, true, 0);
    }
    let thresh = tol * scale;
    let mut passive = vec![false; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let w = b - g * &x;
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        match candidate {
            Some(j) if w[j] > thresh => passive[j] = true,
            _ => {
                converged = true;
                break;
            }
        }
        iterations += 1;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z = solve_passive(g, b, &idx);
            if idx.iter().zip(z.iter()).all(|(_, &v)| v > 0.0) {
                x.fill(0.0);
                for (&j, &v) in idx.iter().zip(z.iter()) {
                    x[j] = v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            let mut hit = idx[0];
            for (&j, &v) in idx.iter().zip(z.iter()) {
                if v <= 0.0 {
                    let denom = x[j] - v;
                    let a = if denom > 0.0 { x[j] / denom } else { 0.0 };
                    if a < alpha {
                        alpha = a;
                        hit = j;
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (&j, &v) in idx.iter().zip(z.iter()) {
                x[j] += alpha * (v - x[j]);
            }
            x[hit] = 0.0;
            let mut dropped = false;
            for &j in &idx {
                if x[j] <= 0.0 {
                    x[j] = 0.0;
                    passive[j] = false;
                    dropped = true;
                }
            }
            if !dropped || iterations >= max_iter {
                break;
            }
            iterations += 1;
        }
    }
    (x, converged, iterations)
}

/// Solve the unconstrained normal equations restricted to the passive set.
fn solve_passive(g: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |i, j| g[(idx[i], idx[j])]);
    let rhs = DVector::from_fn(k, |i, _| b[idx[i]]);
    if let Some(ch) = sub.clone().cholesky() {
        let z = ch.solve(&rhs);
        if z.iter().all(|v| v.is_finite()) {
            return z;
        }
    }
    let svd = sub.svd(true, true);
    let cut = 1e-13 * svd.singular_values.max();
    svd.solve(&rhs, cut).unwrap_or_else(|_| DVector::zeros(k))
}

/// Gram matrix `G_ij = ⟨S_i, S_j⟩_F` of a dictionary.
pub(crate) fn dictionary_gram(dict: &Dictionary) -> DMatrix<f64> {
    let n = dict.len();
    let atoms = dict.atoms();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = frobenius_inner(&atoms[i], &atoms[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `u⁰ = argmin_{u ≥ 0} ‖Σ_i u_i S_i − (Σ̂_y − N0 I)‖_F²`.
///
/// The complex residual is treated as the stacked real and imaginary parts, which
/// turns the problem into a real NNLS whose Gram matrix is `Re tr(S_i S_j)`.
pub fn nnls_init(dict: &Dictionary, sigma_y: &CMat, n0: f64, cfg: &SolverConfig) -> Result<NnlsOutcome> {
    if dict.is_empty() {
        return Err(CovError::InvalidArgument("NNLS needs a non-empty dictionary".into()));
    }
    let m = check_square(sigma_y)?;
    if m != dict.m() {
        return Err(CovError::DimensionMismatch {
            expected: dict.m(),
            got: m,
        });
    }
    let target = add_scaled_identity(sigma_y, -n0);
    let g = dictionary_gram(dict);
    let b = DVector::from_iterator(dict.len(), dict.atoms().iter().map(|s| frobenius_inner(s, &target)));
    let (x, converged, iterations) = lawson_hanson(&g, &b, cfg.nnls_tol, 10 * dict.len());
    let u = CoefficientVector::new(x.iter().map(|v| v.max(0.0)).collect())?;
    Ok(NnlsOutcome {
        u,
        converged,
        iterations,
    })
}

/// The NNLS fit used as an estimator in its own right.
pub fn estimate_nnls(dict: &Dictionary, sigma_y: &CMat, n0: f64, cfg: &SolverConfig) -> Result<EstimateResult> {
    let out = nnls_init(dict, sigma_y, n0, cfg)?;
    let sigma_h = dict.combine(&out.u);
    let mut diagnostics = Diagnostics {
        converged: out.converged,
        inner_iterations: vec![out.iterations],
        ..Diagnostics::default()
    };
    if !out.converged {
        diagnostics.notes.push("active-set iteration limit reached".into());
    }
    Ok(EstimateResult {
        sigma_h,
        u: out.u,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, outer};
    use num_complex::Complex64;

    fn diag_atoms(m: usize) -> Dictionary {
        let atoms = (0..m)
            .map(|i| {
                let mut s = CMat::zeros(m, m);
                s[(i, i)] = Complex64::new(1.0, 0.0);
                s
            })
            .collect();
        Dictionary::from_atoms(atoms).unwrap()
    }

    #[test]
    fn orthogonal_atoms_recover_exact_weights() {
        let d = diag_atoms(3);
        let n0 = 0.5;
        let sigma_y = add_scaled_identity(&(&d.atoms()[0] * Complex64::new(2.0, 0.0)), n0);
        let out = nnls_init(&d, &sigma_y, n0, &SolverConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.u.as_slice(), &[2.0, 0.0, 0.0]);
    }

    #[test]
    fn noise_only_target_gives_zero() {
        let d = diag_atoms(2);
        let out = nnls_init(&d, &identity(2), 1.0, &SolverConfig::default()).unwrap();
        assert_eq!(out.u.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn negative_directions_are_clamped() {
        let d = diag_atoms(2);
        let mut target = identity(2);
        target[(1, 1)] = Complex64::new(-3.0, 0.0);
        let out = nnls_init(&d, &target, 0.0, &SolverConfig::default()).unwrap();
        assert_eq!(out.u.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn lawson_hanson_correlated_pair() {
        // G = [[2, 1], [1, 2]], b = [3, -1]: the unconstrained solution has x2 < 0,
        // the constrained one is x = (1.5, 0).
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![3.0, -1.0]);
        let (x, ok, _) = lawson_hanson(&g, &b, 1e-12, 20);
        assert!(ok);
        assert!((x[0] - 1.5).abs() < 1e-14 && x[1] == 0.0);
    }

    #[test]
    fn estimate_nnls_synthesizes() {
        let g = crate::geometry::ArrayGeometry::ula(4).unwrap();
        let a = crate::geometry::steering(&g, &crate::geometry::Aoa::Line(0.2)).unwrap();
        let d = Dictionary::from_atoms(vec![outer(&a), identity(4)]).unwrap();
        let sigma_y = add_scaled_identity(&(outer(&a) * Complex64::new(0.7, 0.0)), 1.3);
        let est = estimate_nnls(&d, &sigma_y, 1.0, &SolverConfig::default()).unwrap();
        assert!((est.u[0] - 0.7).abs() < 1e-10 && (est.u[1] - 0.3).abs() < 1e-10);
    }
}
