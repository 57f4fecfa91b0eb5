//! Small dense complex linear-algebra helpers shared by the estimators.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{CovError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn frobenius_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Relative Hermitian defect ‖A − Aᴴ‖_F / max(‖A‖_F, tiny).
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt() / frobenius_norm(a).max(f64::MIN_POSITIVE)
}

pub fn symmetrize(a: &CMat) -> CMat {
    let mut out = a.clone();
    let n = a.nrows();
    for i in 0..n {
        out[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}

pub fn check_square(a: &CMat) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(CovError::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub fn check_finite(a: &CMat, what: &'static str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(CovError::NonFinite(what))
    }
}

/// Re tr(A B) for square matrices, computed without forming the product.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// ⟨A, B⟩_F = Re tr(Aᴴ B).
pub fn frobenius_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

pub fn trace_re(a: &CMat) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)].re).sum()
}

/// Quadratic form vᴴ A v (real part).
pub fn quad_form(a: &CMat, v: &CVec) -> f64 {
    let av = a * v;
    v.iter().zip(av.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn identity(m: usize) -> CMat {
    CMat::identity(m, m)
}

/// A + s·I.
pub fn add_scaled_identity(a: &CMat, s: f64) -> CMat {
    let mut out = a.clone();
    for i in 0..a.nrows() {
        out[(i, i)] += Complex64::new(s, 0.0);
    }
    out
}

/// Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky(a: &CMat) -> Result<Cholesky<Complex64, Dyn>> {
    Cholesky::new(a.clone()).ok_or(CovError::NotPositiveDefinite)
}

/// log det of a Hermitian positive-definite matrix from its Cholesky factor.
pub fn log_det_chol(chol: &Cholesky<Complex64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>()
}

/// Hermitian eigen-factorization with eigenvalues sorted descending.
///
/// Returns raw (unnormalized) eigenvectors; see [`crate::music::hermitian_eig`] for the
/// phase-normalized public variant.
pub(crate) fn sorted_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = symmetrize(a).symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Projection onto the PSD cone: negative eigenvalues clamped to zero.
pub fn project_psd(a: &CMat) -> CMat {
    let (values, vectors) = sorted_eigen(a);
    rebuild(&vectors, values.iter().map(|&v| v.max(0.0)))
}

/// Hermitian square root of a PSD matrix (negative eigenvalues clamped).
pub fn psd_sqrt(a: &CMat) -> CMat {
    let (values, vectors) = sorted_eigen(a);
    rebuild(&vectors, values.iter().map(|&v| v.max(0.0).sqrt()))
}

fn rebuild(vectors: &CMat, values: impl Iterator<Item = f64>) -> CMat {
    let mut scaled = vectors.clone();
    for (j, v) in values.enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    symmetrize(&(scaled * vectors.adjoint()))
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    symmetrize(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    a.singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trace_product_matches_dense_product() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.5), c(2.0, -1.0), c(0.0, 3.0), c(4.0, 0.0)]);
        let b = CMat::from_row_slice(2, 2, &[c(0.5, 0.0), c(1.0, 1.0), c(-2.0, 0.0), c(1.0, -1.0)]);
        let dense = (&a * &b).trace().re;
        assert!((trace_product_re(&a, &b) - dense).abs() < 1e-14);
    }

    #[test]
    fn psd_projection_and_sqrt() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(1.0, 0.0)]);
        // eigenvalues 3 and -1
        let p = project_psd(&a);
        assert!(min_eigenvalue(&p) > -1e-12);
        let s = psd_sqrt(&p);
        assert!(frobenius_norm(&(&s * &s - &p)) < 1e-12);
    }

    #[test]
    fn log_det_of_diagonal() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0, 0.0), c(3.0, 0.0)]));
        let chol = cholesky(&a).unwrap();
        assert!((log_det_chol(&chol) - 6f64.ln()).abs() < 1e-14);
    }
}
