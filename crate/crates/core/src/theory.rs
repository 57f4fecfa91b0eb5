//! Spiked-covariance numerics: the bulk eigenvalue law, the map
//! `φ(ω) = ω(1 − ζ ∫ λ/(λ − ω) dν(λ))`, its minimizer `ω₀`, and eigenvalue escape.
//!
//! A population spike `λ > ω₀` produces a sample eigenvalue near `φ(λ)` outside the
//! bulk, whose right edge sits at `φ(ω₀)`.

use serde::Serialize;

use crate::asf::{true_covariance, AsfSpec};
use crate::error::{CovError, Result};
use crate::geometry::{ArrayGeometry, ArrayKind};
use crate::harness::derive_rng;
use crate::linalg::{add_scaled_identity, sorted_eigen};
use crate::sampling::{add_noise, sample_channels, sample_covariance};

/// Default antenna count for the empirical bulk law.
pub const DEFAULT_PROBE_M: usize = 512;

/// Empirical measure of the spike-free eigenvalue distribution (sorted ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct BulkLaw {
    values: Vec<f64>,
}

impl BulkLaw {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(CovError::InvalidArgument("bulk atoms must be positive and finite".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    /// `count` atoms at `value`.
    pub fn point_mass(value: f64, count: usize) -> Result<Self> {
        Self::from_values(vec![value; count.max(1)])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_support(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Empirical bulk law: eigenvalues of `Σ_c(M_probe) + N0 I` for the continuous part
/// of an ASF, evaluated on an array of the same kind with `m_probe` elements (rounded
/// down to a square for planar arrays).
pub fn bulk_law(geom: &ArrayGeometry, gamma_c: &AsfSpec, n0: f64, m_probe: usize) -> Result<BulkLaw> {
    if !gamma_c.spikes.is_empty() {
        return Err(CovError::InvalidArgument("the bulk law takes a spike-free ASF".into()));
    }
    if m_probe < 64 {
        return Err(CovError::InvalidArgument(format!("M_probe must be at least 64, got {m_probe}")));
    }
    if !(n0.is_finite() && n0 > 0.0) {
        return Err(CovError::InvalidArgument(format!("noise power must be positive, got {n0}")));
    }
    let probe = match geom.kind() {
        ArrayKind::Ula => ArrayGeometry::ula(m_probe)?,
        ArrayKind::Upa => ArrayGeometry::upa((m_probe as f64).sqrt().floor() as usize)?,
    };
    let sigma = add_scaled_identity(&true_covariance(&probe, gamma_c)?, n0);
    let (values, _) = sorted_eigen(&sigma);
    // tiny negative rounding on rank-deficient parts stays at the noise floor
    BulkLaw::from_values(values.into_iter().map(|v| v.max(n0)).collect())
}

/// `φ(ω)` on the empirical measure; defined only for `ω > sup supp ν`.
pub fn phi(omega: f64, nu: &BulkLaw, zeta: f64) -> Result<f64> {
    let edge = nu.sup_support();
    if !(omega > edge) {
        return Err(CovError::OutsideBulkSupport { omega, edge });
    }
    let mean = nu.values.iter().map(|&l| l / (l - omega)).sum::<f64>() / nu.values.len() as f64;
    Ok(omega * (1.0 - zeta * mean))
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Minimizer of `φ` over `(sup supp ν, ∞)` by golden-section search.
///
/// The bracket starts at `[sup·(1 + 1e−6), sup + 10(1 + √ζ)·mean(ν)]` and its right end
/// doubles its distance to the support edge until `φ` increases there; the search fails
/// once that distance exceeds `10³·mean(ν)`.
pub fn omega0(nu: &BulkLaw, zeta: f64) -> Result<f64> {
    if !(zeta.is_finite() && zeta > 0.0) {
        return Err(CovError::InvalidArgument(format!("sampling ratio must be positive, got {zeta}")));
    }
    let sup = nu.sup_support();
    let mean = nu.mean();
    let lo = sup * (1.0 + 1e-6);
    let mut hi = sup + 10.0 * (1.0 + zeta.sqrt()) * mean;
    let f = |w: f64| phi(w, nu, zeta);
    loop {
        let probe = hi - 1e-3 * (hi - lo);
        if f(hi)? > f(probe)? {
            break;
        }
        let span = 2.0 * (hi - sup);
        if span > 1e3 * mean {
            return Err(CovError::BracketFailure(sup + span));
        }
        hi = sup + span;
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a) > 1e-10 * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Outcome of the detectability check `λ_r > ω₀`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Separation {
    pub separated: bool,
    pub omega0: f64,
    pub lambda_r: f64,
    /// `φ(λ_k)` for the `r` largest population eigenvalues, when `λ_k` lies above the bulk.
    pub predicted: Vec<Option<f64>>,
    /// Right edge `φ(ω₀)` of the sample bulk.
    pub bulk_edge: f64,
}

pub fn separation_check(eigenvalues: &[f64], r: usize, nu: &BulkLaw, zeta: f64) -> Result<Separation> {
    if r == 0 || r > eigenvalues.len() {
        return Err(CovError::InvalidArgument(format!(
            "spike count {r} out of range for {} eigenvalues",
            eigenvalues.len()
        )));
    }
    let mut lam = eigenvalues.to_vec();
    lam.sort_by(|a, b| b.total_cmp(a));
    let w0 = omega0(nu, zeta)?;
    let predicted = lam[..r].iter().map(|&l| phi(l, nu, zeta).ok()).collect();
    Ok(Separation {
        separated: lam[r - 1] > w0,
        omega0: w0,
        lambda_r: lam[r - 1],
        predicted,
        bulk_edge: phi(w0, nu, zeta)?,
    })
}

/// Sample eigenvalues of one escape trial.
#[derive(Debug, Clone, Serialize)]
pub struct EscapeRow {
    pub m: usize,
    pub n: usize,
    pub seed: usize,
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// `λ̂_r / λ̂_{r+1}`.
    pub gap_ratio: f64,
    /// Sample eigenvalues above the predicted bulk edge `φ(ω₀)`.
    pub escaped: usize,
    pub bulk_edge: f64,
}

/// Sample-covariance spectra of an ASF on ULAs of the given sizes with `N = 2M`.
///
/// `r` selects the gap ratio `λ̂_r/λ̂_{r+1}`; trial `s` at size `M` draws from the
/// stream `("escape", M, s)`.
pub fn escape_experiment(
    asf: &AsfSpec,
    sizes: &[usize],
    n0: f64,
    r: usize,
    seeds: usize,
    master_seed: u64,
) -> Result<Vec<EscapeRow>> {
    let mut rows = Vec::with_capacity(sizes.len() * seeds);
    for &m in sizes {
        let geom = ArrayGeometry::ula(m)?;
        if r == 0 || r >= m {
            return Err(CovError::InvalidArgument(format!("gap index {r} out of range for M = {m}")));
        }
        let n = 2 * m;
        let sigma = true_covariance(&geom, asf)?;
        let nu = bulk_law(&geom, &asf.continuous_part(), n0, DEFAULT_PROBE_M.max(4 * m))?;
        let zeta = m as f64 / n as f64;
        let edge = phi(omega0(&nu, zeta)?, &nu, zeta)?;
        for s in 0..seeds {
            let mut rng = derive_rng(master_seed, "escape", &[m as u64, s as u64]);
            let h = sample_channels(&sigma, n, &mut rng)?;
            let y = add_noise(&h, n0, &mut rng)?;
            let (eig, _) = sorted_eigen(&sample_covariance(&y).matrix);
            rows.push(EscapeRow {
                m,
                n,
                seed: s,
                gap_ratio: eig[r - 1] / eig[r],
                escaped: eig.iter().filter(|&&l| l > edge).count(),
                eigenvalues: eig,
                bulk_edge: edge,
            });
        }
    }
    Ok(rows)
}
