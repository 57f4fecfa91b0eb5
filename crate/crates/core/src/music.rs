//! MUSIC: eigen-analysis of the sample covariance, K-means model-order selection
//! and pseudo-spectrum minimization.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CovError, Result};
use crate::geometry::{aoa_grid, plane_grid, steering, steering_unchecked, Aoa, ArrayGeometry, ArrayKind};
use crate::linalg::{check_finite, check_square, frobenius_norm, hermitian_defect, sorted_eigen, CMat};

/// Hermitian eigendecomposition `Σ = Û Λ̂ Ûᴴ` with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl EigenDecomposition {
    pub fn m(&self) -> usize {
        self.values.len()
    }

    /// Columns `r..M` of `Û`.
    pub fn noise_subspace(&self, r: usize) -> CMat {
        self.vectors.columns(r, self.m() - r).into_owned()
    }
}

/// Eigendecomposition of a Hermitian matrix. Each eigenvector is rotated so that its
/// first non-negligible component is real and positive.
pub fn hermitian_eig(sigma: &CMat) -> Result<EigenDecomposition> {
    check_square(sigma)?;
    check_finite(sigma, "eigendecomposition input")?;
    let defect = hermitian_defect(sigma);
    if frobenius_norm(sigma) > 0.0 && defect > 1e-10 {
        return Err(CovError::NotHermitian(defect));
    }
    let (values, mut vectors) = sorted_eigen(sigma);
    for mut col in vectors.column_iter_mut() {
        let peak = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(lead) = col.iter().copied().find(|z| z.norm() > 1e-8 * peak) {
            let rot = lead.conj() / lead.norm();
            for z in col.iter_mut() {
                *z *= rot;
            }
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpikeCountConfig {
    /// Soft-truncation exponent applied to normalized eigenvalues.
    pub p: f64,
    /// Number of K-means restarts.
    pub restarts: usize,
    /// Confidence level of the CCDF threshold.
    pub eta: f64,
    pub kmeans_max_iters: usize,
}

impl Default for SpikeCountConfig {
    fn default() -> Self {
        Self {
            p: 0.5,
            restarts: 100,
            eta: 0.95,
            kmeans_max_iters: 100,
        }
    }
}

impl SpikeCountConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(CovError::Config(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(CovError::Config(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if self.restarts == 0 || self.kmeans_max_iters == 0 {
            return Err(CovError::Config("restarts and kmeans_max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of [`kmeans_1d`]. `assignment[i]` is 0 or 1, indexing `centers`.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centers: (f64, f64),
    pub assignment: Vec<usize>,
    pub iterations: usize,
}

fn assign(values: &[f64], c: (f64, f64), out: &mut [usize]) {
    let lower = if c.1 < c.0 { 1 } else { 0 };
    for (slot, &v) in out.iter_mut().zip(values) {
        let d0 = (v - c.0).abs();
        let d1 = (v - c.1).abs();
        *slot = if d0 < d1 {
            0
        } else if d1 < d0 {
            1
        } else {
            lower
        };
    }
}

/// Two-cluster Lloyd iteration on scalars.
///
/// Distance ties go to the cluster with the lower center. A cluster that empties is
/// re-seeded at the point farthest from the other center.
pub fn kmeans_1d(values: &[f64], init: (f64, f64), max_iters: usize) -> Result<KMeans> {
    if values.len() < 2 {
        return Err(CovError::InvalidArgument("K-means needs at least two values".into()));
    }
    if init.0 == init.1 {
        return Err(CovError::InvalidArgument("initial K-means centers must differ".into()));
    }
    let mut centers = init;
    let mut assignment = vec![0; values.len()];
    let mut next = assignment.clone();
    let mut iterations = 0;
    for it in 0..max_iters.max(1) {
        assign(values, centers, &mut next);
        iterations = it + 1;
        if it > 0 && next == assignment {
            break;
        }
        std::mem::swap(&mut assignment, &mut next);
        let mut sum = [0.0; 2];
        let mut count = [0usize; 2];
        for (&v, &k) in values.iter().zip(&assignment) {
            sum[k] += v;
            count[k] += 1;
        }
        let mut c = [centers.0, centers.1];
        for k in 0..2 {
            if count[k] > 0 {
                c[k] = sum[k] / count[k] as f64;
            }
        }
        for k in 0..2 {
            if count[k] == 0 {
                let other = c[1 - k];
                c[k] = values
                    .iter()
                    .copied()
                    .fold((f64::NEG_INFINITY, other), |(best, at), v| {
                        let d = (v - other).abs();
                        if d > best {
                            (d, v)
                        } else {
                            (best, at)
                        }
                    })
                    .1;
            }
        }
        centers = (c[0], c[1]);
    }
    Ok(KMeans {
        centers,
        assignment,
        iterations,
    })
}

/// Per-restart estimates and the CCDF behind a spike count.
#[derive(Debug, Clone)]
pub struct SpikeCount {
    pub r_hat: usize,
    /// Soft-truncated normalized eigenvalues `β_i = (λ_i/λ_1)^p`.
    pub beta: Vec<f64>,
    pub per_restart: Vec<usize>,
    /// `ccdf[t-1]` is the fraction of restarts with estimate strictly above `t`.
    pub ccdf: Vec<f64>,
    pub diagnostic: Option<String>,
}

/// Count of points at least as close to the larger center as to the smaller one.
fn upper_cluster_size(beta: &[f64], centers: (f64, f64)) -> usize {
    let (lo, hi) = if centers.0 <= centers.1 {
        centers
    } else {
        (centers.1, centers.0)
    };
    if lo == hi {
        return 0;
    }
    beta.iter().filter(|&&b| (b - hi).abs() <= (b - lo).abs()).count()
}

/// Estimate the number of spikes from the eigenvalue profile.
///
/// Each restart clusters `β` into two groups from random centers drawn uniformly in
/// [0, 1]; its estimate is the size of the upper group. The returned count is the
/// smallest `t ≥ 1` with `F(t) = #{ℓ : r̂(ℓ) > t}/L ≤ 1 − η`.
pub fn estimate_num_spikes<R: Rng + ?Sized>(
    eig: &EigenDecomposition,
    cfg: &SpikeCountConfig,
    rng: &mut R,
) -> Result<SpikeCount> {
    cfg.validate()?;
    let m = eig.m();
    let top = eig.values.first().copied().unwrap_or(0.0);
    if !(top > 0.0) || m < 2 {
        return Ok(SpikeCount {
            r_hat: 0,
            beta: Vec::new(),
            per_restart: Vec::new(),
            ccdf: Vec::new(),
            diagnostic: Some(format!("largest eigenvalue {top} is not positive")),
        });
    }
    let beta: Vec<f64> = eig.values.iter().map(|&l| (l.max(0.0) / top).powf(cfg.p)).collect();
    let inits: Vec<(f64, f64)> = (0..cfg.restarts)
        .map(|_| loop {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            if a != b {
                break (a, b);
            }
        })
        .collect();
    let per_restart = inits
        .iter()
        .map(|&init| {
            kmeans_1d(&beta, init, cfg.kmeans_max_iters).map(|k| upper_cluster_size(&beta, k.centers))
        })
        .collect::<Result<Vec<_>>>()?;
    let l = per_restart.len() as f64;
    let ccdf: Vec<f64> = (1..=m)
        .map(|t| per_restart.iter().filter(|&&r| r > t).count() as f64 / l)
        .collect();
    let r_hat = ccdf
        .iter()
        .position(|&f| f <= 1.0 - cfg.eta)
        .map_or(m, |i| i + 1);
    Ok(SpikeCount {
        r_hat,
        beta,
        per_restart,
        ccdf,
        diagnostic: None,
    })
}

fn check_noise_dim(eig: &EigenDecomposition, r: usize) -> Result<()> {
    if r >= eig.m() {
        return Err(CovError::EmptyNoiseSubspace { r, m: eig.m() });
    }
    Ok(())
}

/// `η̂(ξ) = ‖U_noiᴴ a(ξ)‖²` with `U_noi` the eigenvectors beyond the first `r`.
pub fn pseudo_spectrum(eig: &EigenDecomposition, r: usize, geom: &ArrayGeometry, aoa: &Aoa) -> Result<f64> {
    check_noise_dim(eig, r)?;
    if geom.m() != eig.m() {
        return Err(CovError::DimensionMismatch {
            expected: eig.m(),
            got: geom.m(),
        });
    }
    let a = steering(geom, aoa)?;
    let proj = eig.noise_subspace(r).adjoint() * a;
    Ok(proj.iter().map(|z| z.norm_sqr()).sum())
}

/// Pseudo-spectrum evaluated at many points at once.
pub fn pseudo_spectrum_many(
    eig: &EigenDecomposition,
    r: usize,
    geom: &ArrayGeometry,
    points: &[Aoa],
) -> Result<Vec<f64>> {
    check_noise_dim(eig, r)?;
    if geom.m() != eig.m() {
        return Err(CovError::DimensionMismatch {
            expected: eig.m(),
            got: geom.m(),
        });
    }
    let mut a = CMat::zeros(geom.m(), points.len());
    for (j, p) in points.iter().enumerate() {
        if !geom.contains(p) {
            return Err(CovError::DomainViolation(format!("{p:?}")));
        }
        a.set_column(j, &steering_unchecked(geom, p));
    }
    let proj = eig.noise_subspace(r).adjoint() * a;
    Ok(proj
        .column_iter()
        .map(|c| c.iter().map(|z: &Complex64| z.norm_sqr()).sum())
        .collect())
}

/// Dominant pseudo-spectrum minimizers.
#[derive(Debug, Clone)]
pub struct SpikeLocations {
    pub locations: Vec<Aoa>,
    /// Pseudo-spectrum value at each grid minimum (before refinement).
    pub values: Vec<f64>,
    /// Fewer local minima than requested were found.
    pub shortfall: bool,
}

/// Default search-grid resolution: `10M` points for a ULA, `4√M` per axis for a UPA.
pub fn default_grid_resolution(geom: &ArrayGeometry) -> usize {
    match geom.kind() {
        ArrayKind::Ula => 10 * geom.m(),
        ArrayKind::Upa => 4 * geom.side(),
    }
}

/// Spacing between neighbouring grid points.
pub fn grid_step(resolution: usize) -> f64 {
    2.0 / (resolution.max(2) - 1) as f64
}

/// The `r` deepest strict local minima of the pseudo-spectrum on the search grid.
///
/// Boundary points count as minima when smaller than their in-grid neighbours. ULA
/// minima in the interior are refined by one parabolic interpolation step.
pub fn locate_spikes(
    eig: &EigenDecomposition,
    r: usize,
    geom: &ArrayGeometry,
    resolution: usize,
) -> Result<SpikeLocations> {
    if r == 0 {
        return Err(CovError::InvalidArgument("cannot locate zero spikes".into()));
    }
    check_noise_dim(eig, r)?;
    let grid = aoa_grid(geom, resolution)?;
    let eta = pseudo_spectrum_many(eig, r, geom, &grid)?;
    let mut minima: Vec<(f64, Aoa)> = Vec::new();
    match geom.kind() {
        ArrayKind::Ula => {
            let n = eta.len();
            let h = grid_step(resolution);
            for i in 0..n {
                let left = i == 0 || eta[i] < eta[i - 1];
                let right = i + 1 == n || eta[i] < eta[i + 1];
                if !(left && right) {
                    continue;
                }
                let mut x = grid[i].coords()[0];
                if i > 0 && i + 1 < n {
                    let curv = eta[i - 1] - 2.0 * eta[i] + eta[i + 1];
                    if curv > 0.0 {
                        let delta = (0.5 * (eta[i - 1] - eta[i + 1]) / curv).clamp(-0.5, 0.5);
                        x = (x + delta * h).clamp(-1.0, 1.0);
                    }
                }
                minima.push((eta[i], Aoa::Line(x)));
            }
        }
        ArrayKind::Upa => {
            let (axis, mask) = plane_grid(resolution);
            let n = axis.len();
            // map from full Cartesian index to position in the filtered grid
            let mut slot = vec![usize::MAX; n * n];
            let mut k = 0;
            for (idx, &ok) in mask.iter().enumerate() {
                if ok {
                    slot[idx] = k;
                    k += 1;
                }
            }
            for p in 0..n {
                for q in 0..n {
                    let here = slot[p * n + q];
                    if here == usize::MAX {
                        continue;
                    }
                    let mut is_min = true;
                    for dp in -1i64..=1 {
                        for dq in -1i64..=1 {
                            if dp == 0 && dq == 0 {
                                continue;
                            }
                            let (pp, qq) = (p as i64 + dp, q as i64 + dq);
                            if pp < 0 || qq < 0 || pp >= n as i64 || qq >= n as i64 {
                                continue;
                            }
                            let nb = slot[pp as usize * n + qq as usize];
                            if nb != usize::MAX && eta[here] >= eta[nb] {
                                is_min = false;
                            }
                        }
                    }
                    if is_min {
                        minima.push((eta[here], grid[here]));
                    }
                }
            }
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let shortfall = minima.len() < r;
    minima.truncate(r);
    Ok(SpikeLocations {
        values: minima.iter().map(|m| m.0).collect(),
        locations: minima.into_iter().map(|m| m.1).collect(),
        shortfall,
    })
}

/// Full MUSIC pass on a sample covariance.
#[derive(Debug, Clone)]
pub struct MusicOutcome {
    pub eig: EigenDecomposition,
    pub count: SpikeCount,
    /// Spike count used for localization, capped at `M − 1`.
    pub r_used: usize,
    pub spikes: SpikeLocations,
}

pub fn run_music<R: Rng + ?Sized>(
    sample_cov: &CMat,
    geom: &ArrayGeometry,
    cfg: &SpikeCountConfig,
    resolution: usize,
    rng: &mut R,
) -> Result<MusicOutcome> {
    let eig = hermitian_eig(sample_cov)?;
    let count = estimate_num_spikes(&eig, cfg, rng)?;
    let r_used = count.r_hat.min(eig.m() - 1);
    let spikes = if r_used == 0 {
        SpikeLocations {
            locations: Vec::new(),
            values: Vec::new(),
            shortfall: false,
        }
    } else {
        locate_spikes(&eig, r_used, geom, resolution)?
    };
    Ok(MusicOutcome {
        eig,
        count,
        r_used,
        spikes,
    })
}
