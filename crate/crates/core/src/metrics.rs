//! Error metrics against a ground-truth covariance.

use crate::error::{CovError, Result};
use crate::linalg::{check_square, frobenius_norm, sorted_eigen, CMat};

/// Energy fraction the dominant subspace of the true covariance must exceed.
pub const SUBSPACE_ENERGY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub e_nf: f64,
    pub e_gd: f64,
    /// Dimension of the compared dominant subspaces.
    pub j: usize,
    /// Estimate has fewer than `J` numerically non-zero eigenvalues.
    pub rank_deficient: bool,
}

/// `‖Σ − Σ̂‖_F / ‖Σ‖_F`.
pub fn frobenius_error(truth: &CMat, estimate: &CMat) -> Result<f64> {
    let m = check_square(truth)?;
    if estimate.shape() != (m, m) {
        return Err(CovError::DimensionMismatch {
            expected: m,
            got: estimate.nrows(),
        });
    }
    let norm = frobenius_norm(truth);
    if norm == 0.0 {
        return Err(CovError::ZeroReference("the Frobenius error"));
    }
    Ok(frobenius_norm(&(truth - estimate)) / norm)
}

/// Grassmannian distance `‖τ‖₂` between the top-`J` eigenspaces, where `J` is the
/// smallest dimension holding more than 95% of the true covariance's eigenvalue mass
/// and `cos τ_j` are the singular values of `U_Jᴴ Ũ_J`.
///
/// Returns the distance, `J` and whether the estimate has fewer than `J` eigenvalues
/// above `1e−12` of its largest.
pub fn grassmann_error(truth: &CMat, estimate: &CMat) -> Result<(f64, usize, bool)> {
    let m = check_square(truth)?;
    if estimate.shape() != (m, m) {
        return Err(CovError::DimensionMismatch {
            expected: m,
            got: estimate.nrows(),
        });
    }
    let (alpha, u) = sorted_eigen(truth);
    let total: f64 = alpha.iter().map(|a| a.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(CovError::ZeroReference("the Grassmannian error"));
    }
    let mut acc = 0.0;
    let mut j = m;
    for (i, a) in alpha.iter().enumerate() {
        acc += a.max(0.0);
        if acc / total > SUBSPACE_ENERGY {
            j = i + 1;
            break;
        }
    }
    let (beta, v) = sorted_eigen(estimate);
    let top = beta.first().copied().unwrap_or(0.0).max(0.0);
    let rank_deficient = beta.iter().filter(|&&b| b > 1e-12 * top && top > 0.0).count() < j;
    let cross = u.columns(0, j).adjoint() * v.columns(0, j);
    let dist = cross
        .singular_values()
        .iter()
        .map(|s| s.clamp(0.0, 1.0).acos().powi(2))
        .sum::<f64>()
        .sqrt();
    Ok((dist, j, rank_deficient))
}

pub fn evaluate(truth: &CMat, estimate: &CMat) -> Result<MetricReport> {
    let e_nf = frobenius_error(truth, estimate)?;
    let (e_gd, j, rank_deficient) = grassmann_error(truth, estimate)?;
    Ok(MetricReport {
        e_nf,
        e_gd,
        j,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVec;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(v.len(), v.iter().map(|&x| Complex64::new(x, 0.0))))
    }

    #[test]
    fn frobenius_examples() {
        let s = diag(&[2.0, 0.0]);
        assert_eq!(frobenius_error(&s, &s).unwrap(), 0.0);
        assert_eq!(frobenius_error(&s, &diag(&[0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(frobenius_error(&s, &diag(&[1.0, 0.0])).unwrap(), 0.5);
        assert!(frobenius_error(&diag(&[0.0, 0.0]), &s).is_err());
    }

    #[test]
    fn grassmann_examples() {
        let s = diag(&[1.0, 0.0]);
        assert_eq!(grassmann_error(&s, &s).unwrap().0, 0.0);
        let (d, j, _) = grassmann_error(&s, &diag(&[0.0, 1.0])).unwrap();
        assert_eq!(j, 1);
        assert!((d - FRAC_PI_2).abs() < 1e-12);
        let (c, sn) = (FRAC_PI_6.cos(), FRAC_PI_6.sin());
        let v = CVec::from_vec(vec![Complex64::new(c, 0.0), Complex64::new(sn, 0.0)]);
        let (d, _, _) = grassmann_error(&s, &(&v * v.adjoint())).unwrap();
        assert!((d - FRAC_PI_6).abs() < 1e-10);
    }

    #[test]
    fn rank_deficiency_is_flagged() {
        let s = diag(&[1.0, 1.0, 1.0]);
        let (_, j, flagged) = grassmann_error(&s, &diag(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(j, 3);
        assert!(flagged);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        fn random_psd(seed: u64, m: usize) -> CMat {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = CMat::from_fn(m, m, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            &x * x.adjoint()
        }

        proptest! {
            #[test]
            fn scale_invariance(seed in any::<u64>(), m in 2usize..8, k in -6i32..6, c in 0.1f64..10.0) {
                let s = random_psd(seed, m);
                let t = random_psd(seed.wrapping_add(1), m);
                let base = grassmann_error(&s, &t).unwrap().0;
                // powers of two leave the eigenvectors bit-identical
                let scaled = grassmann_error(&s, &(&t * Complex64::new(2f64.powi(k), 0.0))).unwrap().0;
                prop_assert_eq!(base, scaled);
                let f = frobenius_error(&s, &(&s * Complex64::new(c, 0.0))).unwrap();
                prop_assert!((f - (1.0 - c).abs()).abs() < 1e-12);
                let d = grassmann_error(&s, &t).unwrap();
                prop_assert!(d.0 >= 0.0 && d.0 <= FRAC_PI_2 * (d.1 as f64).sqrt() + 1e-12);
            }
        }
    }
}
