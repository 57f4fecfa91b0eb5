//! Channel snapshots, additive white noise and sample covariances.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CovError, Result};
use crate::linalg::{
    add_scaled_identity, check_finite, check_square, frobenius_norm, hermitian_defect,
    sorted_eigen, symmetrize, CMat,
};

/// Magic bytes of the snapshot file format.
pub const SNAPSHOT_MAGIC: &[u8; 4] = b"COVY";

/// `N` noisy pilot observations `y_s = h_s + z_s` stacked as columns of an `M × N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub y: CMat,
    pub n0: f64,
}

impl SnapshotSet {
    pub fn new(y: CMat, n0: f64) -> Result<Self> {
        if y.ncols() == 0 {
            return Err(CovError::InvalidArgument("a snapshot set needs N ≥ 1".into()));
        }
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(CovError::InvalidArgument(format!("noise power must be positive, got {n0}")));
        }
        Ok(Self { y, n0 })
    }

    pub fn m(&self) -> usize {
        self.y.nrows()
    }

    pub fn n(&self) -> usize {
        self.y.ncols()
    }

    /// Sampling ratio ζ = M/N.
    pub fn zeta(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }

    /// Write the binary fixture format: `COVY`, u32 M, u32 N, f32 N0 (all little
    /// endian), then M·N row-major complex64 values as (re, im) f32 pairs.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| CovError::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| CovError::io(path, e));
        write(SNAPSHOT_MAGIC)?;
        write(&(self.m() as u32).to_le_bytes())?;
        write(&(self.n() as u32).to_le_bytes())?;
        write(&(self.n0 as f32).to_le_bytes())?;
        for i in 0..self.m() {
            for j in 0..self.n() {
                let z = self.y[(i, j)];
                write(&(z.re as f32).to_le_bytes())?;
                write(&(z.im as f32).to_le_bytes())?;
            }
        }
        w.flush().map_err(|e| CovError::io(path, e))
    }

    /// Read a file produced by [`SnapshotSet::write_to`].
    pub fn read_from(path: &Path) -> Result<SnapshotSet> {
        let file = File::open(path).map_err(|e| CovError::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| CovError::io(path, e))?;
        let bad = |reason: String| CovError::Format {
            path: path.to_path_buf(),
            reason,
        };
        if bytes.len() < 16 || &bytes[..4] != SNAPSHOT_MAGIC {
            return Err(bad("missing COVY header".into()));
        }
        let word = |k: usize| <[u8; 4]>::try_from(&bytes[4 * k..4 * k + 4]).unwrap();
        let m = u32::from_le_bytes(word(1)) as usize;
        let n = u32::from_le_bytes(word(2)) as usize;
        let n0 = f32::from_le_bytes(word(3)) as f64;
        let expected = 16 + 8 * m * n;
        if bytes.len() != expected {
            return Err(bad(format!("expected {expected} bytes for {m}×{n}, found {}", bytes.len())));
        }
        let mut y = CMat::zeros(m, n);
        let mut k = 4;
        for i in 0..m {
            for j in 0..n {
                y[(i, j)] = Complex64::new(
                    f32::from_le_bytes(word(k)) as f64,
                    f32::from_le_bytes(word(k + 1)) as f64,
                );
                k += 2;
            }
        }
        SnapshotSet::new(y, n0).map_err(|e| bad(e.to_string()))
    }
}

/// `Σ̂_y = (1/N) Y Yᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    pub matrix: CMat,
    pub n: usize,
}

fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draw `n` i.i.d. circularly-symmetric complex Gaussian vectors with covariance `sigma`.
///
/// The factor `F` with `F Fᴴ = Σ` comes from a Hermitian eigendecomposition with
/// slightly negative eigenvalues clamped to zero, so rank-deficient covariances work.
pub fn sample_channels<R: Rng + ?Sized>(sigma: &CMat, n: usize, rng: &mut R) -> Result<CMat> {
    let m = check_square(sigma)?;
    check_finite(sigma, "channel covariance")?;
    let scale = frobenius_norm(sigma);
    if scale == 0.0 {
        return Ok(CMat::zeros(m, n));
    }
    let defect = hermitian_defect(sigma);
    if defect > 1e-10 {
        return Err(CovError::NotHermitian(defect));
    }
    let (values, vectors) = sorted_eigen(sigma);
    let floor = -1e-6 * scale;
    if let Some(&lo) = values.last() {
        if lo < floor {
            return Err(CovError::NotPsd {
                value: lo,
                tolerance: floor,
            });
        }
    }
    // eigenvalues at rounding level are treated as exact zeros
    let cut = 1e-13 * values.first().copied().unwrap_or(0.0).max(0.0);
    let mut factor = vectors;
    for (j, &v) in values.iter().enumerate() {
        factor.column_mut(j).scale_mut(if v > cut { v.sqrt() } else { 0.0 });
    }
    let g = CMat::from_fn(m, n, |_, _| standard_complex_normal(rng));
    Ok(factor * g)
}

/// `Y = H + Z` with i.i.d. `CN(0, N0)` noise entries.
pub fn add_noise<R: Rng + ?Sized>(h: &CMat, n0: f64, rng: &mut R) -> Result<SnapshotSet> {
    if !(n0.is_finite() && n0 > 0.0) {
        return Err(CovError::InvalidArgument(format!("noise power must be positive, got {n0}")));
    }
    let sd = n0.sqrt();
    let mut y = h.clone();
    for z in y.iter_mut() {
        *z += standard_complex_normal(rng) * sd;
    }
    SnapshotSet::new(y, n0)
}

/// Noise power for a target SNR in dB, with SNR = (tr(Σ_h)/M) / N0.
pub fn noise_power_for_snr(sigma_h: &CMat, snr_db: f64) -> f64 {
    let per_antenna = crate::linalg::trace_re(sigma_h) / sigma_h.nrows() as f64;
    per_antenna * 10f64.powf(-snr_db / 10.0)
}

pub fn sample_covariance(snapshots: &SnapshotSet) -> SampleCovariance {
    let n = snapshots.n();
    let raw = &snapshots.y * snapshots.y.adjoint() * Complex64::new(1.0 / n as f64, 0.0);
    SampleCovariance {
        matrix: symmetrize(&raw),
        n,
    }
}

/// `(1/N) Y Yᴴ − N0 I`. May be indefinite for small N.
pub fn debiased_sample_covariance(snapshots: &SnapshotSet) -> CMat {
    add_scaled_identity(&sample_covariance(snapshots).matrix, -snapshots.n0)
}
