//! Angular spread functions and the mixed spike/kernel dictionary.
//!
//! An ASF is a non-negative measure over the AoA domain made of Dirac spikes and a
//! mixture of kernel densities. Every component maps to a positive semi-definite
//! "atom" `S = ∫ ψ(ξ) a(ξ) a(ξ)ᴴ dξ`, and a covariance is a non-negative
//! combination of atoms.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CovError, Result};
use crate::geometry::{steering, Aoa, ArrayGeometry, ArrayKind};
use crate::linalg::{
    frobenius_norm, hermitian_defect, min_eigenvalue, outer, trace_re, CMat, CVec, ZERO,
};

/// Minimum interval width accepted for a kernel support.
const MIN_SUPPORT_WIDTH: f64 = 1e-12;

/// A Dirac component `c · δ(ξ − ξ_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    #[serde(rename = "xi")]
    pub location: Aoa,
    #[serde(rename = "c")]
    pub weight: f64,
}

/// A unit-mass density over the AoA domain.
///
/// Only rectangular densities exist today. A new family is added as a variant
/// together with its arms in [`KernelAtom::covariance`] and [`KernelAtom::density`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelAtom {
    /// Uniform density on `[l, u]` (ULA).
    Interval { l: f64, u: f64 },
    /// Uniform density on the axis-aligned box `[lx, ux] × [ly, uy]` (UPA).
    ///
    /// The density is normalized over the whole box; the part of the box outside
    /// the unit disk is not truncated.
    Rect { lx: f64, ux: f64, ly: f64, uy: f64 },
}

impl KernelAtom {
    pub fn interval(l: f64, u: f64) -> Result<Self> {
        check_width(l, u)?;
        Ok(KernelAtom::Interval { l, u })
    }

    pub fn rect(x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        check_width(x.0, x.1)?;
        check_width(y.0, y.1)?;
        Ok(KernelAtom::Rect {
            lx: x.0,
            ux: x.1,
            ly: y.0,
            uy: y.1,
        })
    }

    /// Lebesgue measure of the support.
    pub fn measure(&self) -> f64 {
        match *self {
            KernelAtom::Interval { l, u } => u - l,
            KernelAtom::Rect { lx, ux, ly, uy } => (ux - lx) * (uy - ly),
        }
    }

    /// Value of the density at `aoa` (zero outside the support).
    pub fn density(&self, aoa: &Aoa) -> f64 {
        let [x, y] = aoa.coords();
        match *self {
            KernelAtom::Interval { l, u } => {
                if (l..=u).contains(&x) {
                    1.0 / (u - l)
                } else {
                    0.0
                }
            }
            KernelAtom::Rect { lx, ux, ly, uy } => {
                if (lx..=ux).contains(&x) && (ly..=uy).contains(&y) {
                    1.0 / self.measure()
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self, geom: &ArrayGeometry) -> Result<()> {
        match (*self, geom.kind()) {
            (KernelAtom::Interval { l, u }, ArrayKind::Ula) => check_width(l, u),
            (KernelAtom::Rect { lx, ux, ly, uy }, ArrayKind::Upa) => {
                check_width(lx, ux)?;
                check_width(ly, uy)
            }
            _ => Err(CovError::InvalidArgument(format!(
                "kernel {self:?} does not match a {:?} array",
                geom.kind()
            ))),
        }
    }

    /// Covariance atom `∫ ψ(ξ) a(ξ) a(ξ)ᴴ dξ` in closed form.
    pub fn covariance(&self, geom: &ArrayGeometry) -> Result<CMat> {
        self.validate(geom)?;
        let m = geom.m();
        let mut s = CMat::zeros(m, m);
        match *self {
            KernelAtom::Interval { l, u } => {
                // Toeplitz: entry (i, k) depends on i − k only.
                let taps: Vec<Complex64> = (0..m as i64).map(|d| mean_phase(d, l, u)).collect();
                for i in 0..m {
                    for k in 0..m {
                        s[(i, k)] = if i >= k {
                            taps[i - k]
                        } else {
                            taps[k - i].conj()
                        };
                    }
                }
            }
            KernelAtom::Rect { lx, ux, ly, uy } => {
                let side = geom.side() as i64;
                let span = (2 * side - 1) as usize;
                let fx: Vec<Complex64> = (-(side - 1)..side).map(|d| mean_phase(d, lx, ux)).collect();
                let fy: Vec<Complex64> = (-(side - 1)..side).map(|d| mean_phase(d, ly, uy)).collect();
                debug_assert_eq!(fx.len(), span);
                for i in 0..m {
                    let (pi, qi) = geom.lattice(i);
                    for k in 0..m {
                        let (pk, qk) = geom.lattice(k);
                        let dx = (pi - pk + side - 1) as usize;
                        let dy = (qi - qk + side - 1) as usize;
                        s[(i, k)] = fx[dx] * fy[dy];
                    }
                }
            }
        }
        Ok(s)
    }
}

fn check_width(l: f64, u: f64) -> Result<()> {
    if !(l.is_finite() && u.is_finite()) || u - l < MIN_SUPPORT_WIDTH {
        return Err(CovError::DegenerateSupport { l, u });
    }
    Ok(())
}

/// `(1/(u−l)) ∫_l^u e^{jπdξ} dξ`, written as a phase times a sinc so that narrow
/// supports do not cancel catastrophically.
fn mean_phase(d: i64, l: f64, u: f64) -> Complex64 {
    if d == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let half = PI * d as f64 * (u - l) / 2.0;
    let center = PI * d as f64 * (u + l) / 2.0;
    Complex64::from_polar(half.sin() / half, center)
}

/// Rank-one atom `a(ξ) a(ξ)ᴴ` for a spike at `aoa`.
pub fn atom_matrix_spike(geom: &ArrayGeometry, aoa: &Aoa) -> Result<CMat> {
    Ok(outer(&steering(geom, aoa)?))
}

/// Covariance atom of a kernel density.
pub fn atom_matrix_kernel(geom: &ArrayGeometry, kernel: &KernelAtom) -> Result<CMat> {
    kernel.covariance(geom)
}

/// A weighted kernel component `b · ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm {
    #[serde(flatten)]
    pub atom: KernelAtom,
    #[serde(rename = "b")]
    pub weight: f64,
}

/// Ground-truth angular spread function: spikes plus a kernel mixture.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AsfSpec {
    pub spikes: Vec<Spike>,
    pub kernels: Vec<KernelTerm>,
}

impl AsfSpec {
    pub fn validate(&self) -> Result<()> {
        for s in &self.spikes {
            if !(s.weight.is_finite() && s.weight >= 0.0) {
                return Err(CovError::InvalidArgument(format!("spike weight {}", s.weight)));
            }
        }
        for k in &self.kernels {
            if !(k.weight.is_finite() && k.weight >= 0.0) {
                return Err(CovError::InvalidArgument(format!("kernel weight {}", k.weight)));
            }
        }
        Ok(())
    }

    /// Total mass `Σ c_k + Σ b_i`.
    pub fn mass(&self) -> f64 {
        self.spike_mass() + self.kernel_mass()
    }

    pub fn spike_mass(&self) -> f64 {
        self.spikes.iter().map(|s| s.weight).sum()
    }

    pub fn kernel_mass(&self) -> f64 {
        self.kernels.iter().map(|k| k.weight).sum()
    }

    /// The continuous part alone.
    pub fn continuous_part(&self) -> AsfSpec {
        AsfSpec {
            spikes: Vec::new(),
            kernels: self.kernels.clone(),
        }
    }

    /// Continuous density `γ_c(ξ)`.
    pub fn continuous_density(&self, aoa: &Aoa) -> f64 {
        self.kernels
            .iter()
            .map(|k| k.weight * k.atom.density(aoa))
            .sum()
    }

    /// Two unit-height rectangles on [−0.7, −0.4] and [0, 0.6] plus spikes of
    /// weight 1/2 at −0.2 and 0.4.
    pub fn example() -> AsfSpec {
        // A unit-height rectangle on an interval of width w is w times its unit-mass density.
        AsfSpec {
            spikes: vec![
                Spike {
                    location: Aoa::Line(-0.2),
                    weight: 0.5,
                },
                Spike {
                    location: Aoa::Line(0.4),
                    weight: 0.5,
                },
            ],
            kernels: vec![
                KernelTerm {
                    atom: KernelAtom::Interval { l: -0.7, u: -0.4 },
                    weight: 0.3,
                },
                KernelTerm {
                    atom: KernelAtom::Interval { l: 0.0, u: 0.6 },
                    weight: 0.6,
                },
            ],
        }
    }

    /// Serialize to pretty JSON.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| CovError::Config(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<AsfSpec> {
        let asf: AsfSpec = serde_json::from_str(s).map_err(|e| CovError::Config(e.to_string()))?;
        asf.validate()?;
        Ok(asf)
    }
}

/// Where a dictionary atom came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomSource {
    Spike(Aoa),
    Kernel(KernelAtom),
    /// Externally supplied matrix.
    Custom,
}

/// Ordered list of PSD atoms, spike atoms first, then kernel atoms.
#[derive(Debug, Clone)]
pub struct Dictionary {
    m: usize,
    atoms: Vec<CMat>,
    /// Rank-one factor `a` with `S = a aᴴ`, when known.
    factors: Vec<Option<CVec>>,
    sources: Vec<AtomSource>,
    spike_count: usize,
    kernel_count: usize,
    warnings: Vec<String>,
}

impl Dictionary {
    /// Build the mixed dictionary. Spike locations closer than `min_separation` to an
    /// earlier one are dropped (with a warning record), so earlier locations win.
    pub fn build(
        geom: &ArrayGeometry,
        spike_locs: &[Aoa],
        kernels: &[KernelAtom],
        min_separation: f64,
    ) -> Result<Dictionary> {
        if kernels.is_empty() {
            return Err(CovError::InvalidArgument(
                "the kernel list of a dictionary must be non-empty".into(),
            ));
        }
        let mut kept: Vec<Aoa> = Vec::with_capacity(spike_locs.len());
        let mut warnings = Vec::new();
        for loc in spike_locs {
            if let Some(prev) = kept.iter().find(|k| k.distance(loc) <= min_separation) {
                let msg = format!("spike at {loc:?} merged into {prev:?}");
                warn!("{msg}");
                warnings.push(msg);
                continue;
            }
            kept.push(*loc);
        }
        let mut atoms = Vec::with_capacity(kept.len() + kernels.len());
        let mut factors = Vec::with_capacity(atoms.capacity());
        let mut sources = Vec::with_capacity(atoms.capacity());
        for loc in &kept {
            let a = steering(geom, loc)?;
            atoms.push(outer(&a));
            factors.push(Some(a));
            sources.push(AtomSource::Spike(*loc));
        }
        for k in kernels {
            atoms.push(k.covariance(geom)?);
            factors.push(None);
            sources.push(AtomSource::Kernel(*k));
        }
        Ok(Dictionary {
            m: geom.m(),
            atoms,
            factors,
            sources,
            spike_count: kept.len(),
            kernel_count: kernels.len(),
            warnings,
        })
    }

    /// Dictionary from arbitrary Hermitian PSD matrices (all counted as kernel atoms).
    pub fn from_atoms(atoms: Vec<CMat>) -> Result<Dictionary> {
        let m = atoms
            .first()
            .ok_or_else(|| CovError::InvalidArgument("empty atom list".into()))?
            .nrows();
        for a in &atoms {
            if a.nrows() != m || a.ncols() != m {
                return Err(CovError::DimensionMismatch {
                    expected: m,
                    got: a.nrows().max(a.ncols()),
                });
            }
            let defect = hermitian_defect(a);
            if defect > 1e-10 {
                return Err(CovError::NotHermitian(defect));
            }
            let tol = 1e-10 * frobenius_norm(a);
            let lo = min_eigenvalue(a);
            if lo < -tol {
                return Err(CovError::NotPsd {
                    value: lo,
                    tolerance: tol,
                });
            }
        }
        let n = atoms.len();
        Ok(Dictionary {
            m,
            factors: vec![None; n],
            sources: vec![AtomSource::Custom; n],
            atoms,
            spike_count: 0,
            kernel_count: n,
            warnings: Vec::new(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[CMat] {
        &self.atoms
    }

    pub fn sources(&self) -> &[AtomSource] {
        &self.sources
    }

    /// Number of spike atoms r̂ (after deduplication).
    pub fn spike_count(&self) -> usize {
        self.spike_count
    }

    /// Number of kernel atoms n.
    pub fn kernel_count(&self) -> usize {
        self.kernel_count
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `Σ_i u_i S_i` without validation.
    pub(crate) fn combine(&self, u: &[f64]) -> CMat {
        let mut out = CMat::zeros(self.m, self.m);
        for (atom, &w) in self.atoms.iter().zip(u) {
            if w != 0.0 {
                out.zip_apply(atom, |o, a| *o += a * w);
            }
        }
        out
    }

    /// `Re tr(S_j X)` for every atom, in dictionary order.
    /// `X S_i` for every atom, in dictionary order.
    pub(crate) fn left_products(&self, x: &CMat) -> Vec<CMat> {
        self.atoms
            .iter()
            .zip(&self.factors)
            .map(|(atom, factor)| match factor {
                Some(a) => (x * a) * a.adjoint(),
                None => x * atom,
            })
            .collect()
    }

    pub(crate) fn traces_with(&self, x: &CMat) -> Vec<f64> {
        self.atoms
            .iter()
            .zip(&self.factors)
            .map(|(atom, factor)| match factor {
                Some(a) => crate::linalg::quad_form(x, a),
                None => crate::linalg::trace_product_re(atom, x),
            })
            .collect()
    }
}

/// `Σ_i u_i S_i` for a validated non-negative coefficient vector.
pub fn synthesize_covariance(dict: &Dictionary, u: &[f64]) -> Result<CMat> {
    if u.len() != dict.len() {
        return Err(CovError::DimensionMismatch {
            expected: dict.len(),
            got: u.len(),
        });
    }
    if let Some((index, &value)) = u.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(CovError::NegativeCoefficient { index, value });
    }
    Ok(dict.combine(u))
}

/// Exact channel covariance `Σ_h` of an ASF.
pub fn true_covariance(geom: &ArrayGeometry, asf: &AsfSpec) -> Result<CMat> {
    asf.validate()?;
    let m = geom.m();
    let mut sigma = CMat::from_element(m, m, ZERO);
    for s in &asf.spikes {
        let a = steering(geom, &s.location)?;
        sigma += outer(&a) * Complex64::new(s.weight, 0.0);
    }
    for k in &asf.kernels {
        sigma += k.atom.covariance(geom)? * Complex64::new(k.weight, 0.0);
    }
    Ok(sigma)
}

/// `n` non-overlapping rectangular densities tiling the domain.
///
/// ULA: intervals `[−1 + 2(i−1)/n, −1 + 2i/n]`. UPA: `n` must be a perfect square and
/// the tiles are the `√n × √n` products of such intervals, x-major.
pub fn uniform_kernels(geom: &ArrayGeometry, n: usize) -> Result<Vec<KernelAtom>> {
    if n == 0 {
        return Err(CovError::InvalidArgument("kernel count must be positive".into()));
    }
    let edges = |count: usize| -> Vec<(f64, f64)> {
        (0..count)
            .map(|i| {
                let lo = -1.0 + 2.0 * i as f64 / count as f64;
                let hi = if i + 1 == count {
                    1.0
                } else {
                    -1.0 + 2.0 * (i + 1) as f64 / count as f64
                };
                (lo, hi)
            })
            .collect()
    };
    match geom.kind() {
        ArrayKind::Ula => edges(n)
            .into_iter()
            .map(|(l, u)| KernelAtom::interval(l, u))
            .collect(),
        ArrayKind::Upa => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(CovError::InvalidArgument(format!(
                    "UPA kernel count {n} is not a perfect square"
                )));
            }
            let e = edges(side);
            let mut out = Vec::with_capacity(n);
            for &x in &e {
                for &y in &e {
                    out.push(KernelAtom::rect(x, y)?);
                }
            }
            Ok(out)
        }
    }
}

/// Centres of the tiles produced by [`uniform_kernels`], restricted to the AoA domain.
pub fn kernel_centres(geom: &ArrayGeometry, kernels: &[KernelAtom]) -> Vec<Aoa> {
    kernels
        .iter()
        .map(|k| match *k {
            KernelAtom::Interval { l, u } => Aoa::Line(0.5 * (l + u)),
            KernelAtom::Rect { lx, ux, ly, uy } => Aoa::Plane(0.5 * (lx + ux), 0.5 * (ly + uy)),
        })
        .filter(|a| geom.contains(a))
        .collect()
}

/// Steering matrix `D = [a(ξ_1) … a(ξ_Q)]` for the grid-based rival estimators.
#[derive(Debug, Clone)]
pub struct SteeringDictionary {
    pub locations: Vec<Aoa>,
    pub matrix: CMat,
}

impl SteeringDictionary {
    pub fn new(geom: &ArrayGeometry, locations: Vec<Aoa>) -> Result<Self> {
        if locations.is_empty() {
            return Err(CovError::InvalidArgument("empty steering dictionary".into()));
        }
        let mut matrix = CMat::zeros(geom.m(), locations.len());
        for (j, loc) in locations.iter().enumerate() {
            matrix.set_column(j, &steering(geom, loc)?);
        }
        Ok(Self { locations, matrix })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// `D diag(u) Dᴴ`.
    pub fn covariance(&self, u: &[f64]) -> CMat {
        let mut scaled = self.matrix.clone();
        for (j, &w) in u.iter().enumerate() {
            scaled.column_mut(j).scale_mut(w);
        }
        crate::linalg::symmetrize(&(scaled * self.matrix.adjoint()))
    }
}

fn uniform_disk_point<R: Rng + ?Sized>(rng: &mut R) -> Aoa {
    loop {
        let x: f64 = rng.random_range(-1.0..=1.0);
        let y: f64 = rng.random_range(-1.0..=1.0);
        if x * x + y * y <= 1.0 {
            return Aoa::Plane(x, y);
        }
    }
}

/// Random ASF: two spikes of weight 1/4 plus two rectangles sharing mass 1/2.
///
/// ULA: spikes uniform on [−1, 1]; one rectangle inside [−1, 0] and one inside
/// [0, 1], widths uniform on [0.1, 0.3]. UPA: spikes uniform on the unit disk;
/// rectangles in two distinct random quadrants with areas uniform on [0.3, 0.5].
/// Each rectangle carries mass proportional to its measure.
pub fn random_asf<R: Rng + ?Sized>(geom: &ArrayGeometry, rng: &mut R) -> AsfSpec {
    let (spikes, atoms) = match geom.kind() {
        ArrayKind::Ula => {
            let spikes = [0, 1].map(|_| Aoa::Line(rng.random_range(-1.0..=1.0)));
            let atoms = [(-1.0, 0.0), (0.0, 1.0)].map(|(lo, hi): (f64, f64)| {
                let width: f64 = rng.random_range(0.1..=0.3);
                let start = rng.random_range(lo..=hi - width);
                KernelAtom::Interval {
                    l: start,
                    u: start + width,
                }
            });
            (spikes, atoms)
        }
        ArrayKind::Upa => {
            let spikes = [0, 1].map(|_| uniform_disk_point(rng));
            let first = rng.random_range(0..4usize);
            let second = (first + rng.random_range(1..4usize)) % 4;
            let atoms = [first, second].map(|quadrant| {
                let area: f64 = rng.random_range(0.3..=0.5);
                let width: f64 = rng.random_range(area..=1.0);
                let height = area / width;
                let x0 = rng.random_range(0.0..=1.0 - width);
                let y0 = rng.random_range(0.0..=1.0 - height);
                let (sx, sy) = match quadrant {
                    0 => (1.0, 1.0),
                    1 => (-1.0, 1.0),
                    2 => (-1.0, -1.0),
                    _ => (1.0, -1.0),
                };
                let span = |s: f64, a: f64, b: f64| if s > 0.0 { (a, b) } else { (-b, -a) };
                let (lx, ux) = span(sx, x0, x0 + width);
                let (ly, uy) = span(sy, y0, y0 + height);
                KernelAtom::Rect { lx, ux, ly, uy }
            });
            (spikes, atoms)
        }
    };
    let z: f64 = atoms.iter().map(KernelAtom::measure).sum();
    AsfSpec {
        spikes: spikes
            .iter()
            .map(|&location| Spike {
                location,
                weight: 0.25,
            })
            .collect(),
        kernels: atoms
            .iter()
            .map(|&atom| KernelTerm {
                atom,
                weight: atom.measure() / (2.0 * z),
            })
            .collect(),
    }
}

/// Trace of every atom should be M; exposed for diagnostics.
pub fn atom_trace(atom: &CMat) -> f64 {
    trace_re(atom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        frobenius_norm(&(a - b)) <= tol
    }

    #[test]
    fn spike_atoms() {
        let g = ArrayGeometry::ula(2).unwrap();
        let s0 = atom_matrix_spike(&g, &Aoa::Line(0.0)).unwrap();
        assert!(close(&s0, &CMat::from_element(2, 2, Complex64::new(1.0, 0.0)), 1e-14));
        let s1 = atom_matrix_spike(&g, &Aoa::Line(1.0)).unwrap();
        let want = CMat::from_row_slice(
            2,
            2,
            &[1.0, -1.0, -1.0, 1.0].map(|v| Complex64::new(v, 0.0)),
        );
        assert!(close(&s1, &want, 1e-14));
        let g4 = ArrayGeometry::ula(4).unwrap();
        let s = atom_matrix_spike(&g4, &Aoa::Line(0.37)).unwrap();
        let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        assert!((ev[0] - 4.0).abs() < 1e-12);
        assert!(ev[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn full_interval_kernel_is_identity() {
        let g = ArrayGeometry::ula(6).unwrap();
        let s = atom_matrix_kernel(&g, &KernelAtom::interval(-1.0, 1.0).unwrap()).unwrap();
        assert!(close(&s, &identity(6), 1e-14));
    }

    #[test]
    fn half_interval_kernel_off_diagonal() {
        let g = ArrayGeometry::ula(2).unwrap();
        let s = atom_matrix_kernel(&g, &KernelAtom::interval(0.0, 1.0).unwrap()).unwrap();
        // (e^{jπ} − 1)/(jπ) = 2j/π
        assert!((s[(1, 0)] - Complex64::new(0.0, 2.0 / PI)).norm() < 1e-14);
        assert!((s[(1, 0)].norm() - 0.636_619_772_367_581_3).abs() < 1e-12);
        assert!((s[(0, 0)].re - 1.0).abs() < 1e-15 && (s[(1, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_and_mismatched_kernels_rejected() {
        assert!(KernelAtom::interval(0.2, 0.2).is_err());
        let g = ArrayGeometry::ula(4).unwrap();
        let rect = KernelAtom::rect((0.0, 0.5), (0.0, 0.5)).unwrap();
        assert!(rect.covariance(&g).is_err());
    }

    #[test]
    fn dictionary_layout() {
        let g = ArrayGeometry::ula(8).unwrap();
        let kernels = uniform_kernels(&g, 4).unwrap();
        let d = Dictionary::build(&g, &[Aoa::Line(-0.3), Aoa::Line(0.5)], &kernels, 0.01).unwrap();
        assert_eq!((d.len(), d.spike_count(), d.kernel_count()), (6, 2, 4));
        assert!(matches!(d.sources()[0], AtomSource::Spike(_)));
        assert!(matches!(d.sources()[5], AtomSource::Kernel(_)));
        let d0 = Dictionary::build(&g, &[], &kernels, 0.01).unwrap();
        assert_eq!((d0.len(), d0.spike_count()), (4, 0));
        assert!(Dictionary::build(&g, &[], &[], 0.01).is_err());
    }

    #[test]
    fn near_duplicate_spikes_are_merged() {
        let g = ArrayGeometry::ula(8).unwrap();
        let kernels = uniform_kernels(&g, 4).unwrap();
        let d = Dictionary::build(
            &g,
            &[Aoa::Line(0.1), Aoa::Line(0.105), Aoa::Line(0.5)],
            &kernels,
            0.01,
        )
        .unwrap();
        assert_eq!(d.spike_count(), 2);
        assert_eq!(d.warnings().len(), 1);
    }

    #[test]
    fn default_ula_kernel_tiling() {
        let g = ArrayGeometry::ula(20).unwrap();
        let ks = uniform_kernels(&g, 2 * g.m()).unwrap();
        assert_eq!(ks.len(), 40);
        let total: f64 = ks.iter().map(KernelAtom::measure).sum();
        assert!((total - 2.0).abs() < 1e-12);
        for w in ks.windows(2) {
            match (w[0], w[1]) {
                (KernelAtom::Interval { u, .. }, KernelAtom::Interval { l, .. }) => {
                    assert_eq!(u, l)
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn synthesize_checks_and_traces() {
        let g = ArrayGeometry::ula(5).unwrap();
        let kernels = uniform_kernels(&g, 3).unwrap();
        let d = Dictionary::build(&g, &[Aoa::Line(0.2)], &kernels, 0.01).unwrap();
        let zero = synthesize_covariance(&d, &[0.0; 4]).unwrap();
        assert_eq!(frobenius_norm(&zero), 0.0);
        let first = synthesize_covariance(&d, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(close(&first, &d.atoms()[0], 1e-15));
        let mixed = synthesize_covariance(&d, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((trace_re(&mixed) - 5.0).abs() < 1e-12);
        assert!(synthesize_covariance(&d, &[1.0, 0.0]).is_err());
        assert!(matches!(
            synthesize_covariance(&d, &[1.0, -0.1, 0.0, 0.0]),
            Err(CovError::NegativeCoefficient { index: 1, .. })
        ));
    }

    #[test]
    fn true_covariance_examples() {
        let g = ArrayGeometry::ula(4).unwrap();
        let spike = AsfSpec {
            spikes: vec![Spike {
                location: Aoa::Line(0.0),
                weight: 1.0,
            }],
            kernels: vec![],
        };
        let s = true_covariance(&g, &spike).unwrap();
        assert!(close(&s, &CMat::from_element(4, 4, Complex64::new(1.0, 0.0)), 1e-14));
        let flat = AsfSpec {
            spikes: vec![],
            kernels: vec![KernelTerm {
                atom: KernelAtom::interval(-1.0, 1.0).unwrap(),
                weight: 1.0,
            }],
        };
        assert!(close(&true_covariance(&g, &flat).unwrap(), &identity(4), 1e-14));
    }

    #[test]
    fn true_covariance_equals_dictionary_synthesis() {
        let g = ArrayGeometry::ula(12).unwrap();
        let asf = AsfSpec::example();
        let locs: Vec<Aoa> = asf.spikes.iter().map(|s| s.location).collect();
        let kernels: Vec<KernelAtom> = asf.kernels.iter().map(|k| k.atom).collect();
        let d = Dictionary::build(&g, &locs, &kernels, 1e-6).unwrap();
        let u: Vec<f64> = asf
            .spikes
            .iter()
            .map(|s| s.weight)
            .chain(asf.kernels.iter().map(|k| k.weight))
            .collect();
        let a = true_covariance(&g, &asf).unwrap();
        let b = synthesize_covariance(&d, &u).unwrap();
        assert!(close(&a, &b, 1e-12));
    }

    #[test]
    fn random_asf_has_unit_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for geom in [ArrayGeometry::ula(20).unwrap(), ArrayGeometry::upa(5).unwrap()] {
            for _ in 0..200 {
                let asf = random_asf(&geom, &mut rng);
                assert!((asf.spike_mass() - 0.5).abs() < 1e-15);
                assert!((asf.kernel_mass() - 0.5).abs() < 1e-12);
                assert!(asf.spikes.iter().all(|s| geom.contains(&s.location)));
                let sigma = true_covariance(&geom, &asf).unwrap();
                assert!((trace_re(&sigma) - geom.m() as f64).abs() < 1e-9);
                match geom.kind() {
                    ArrayKind::Ula => {
                        let [a, b] = [asf.kernels[0].atom, asf.kernels[1].atom];
                        for (k, (lo, hi)) in [(a, (-1.0, 0.0)), (b, (0.0, 1.0))] {
                            let KernelAtom::Interval { l, u } = k else { unreachable!() };
                            assert!(l >= lo && u <= hi + 1e-15);
                            assert!((0.1 - 1e-12..=0.3 + 1e-12).contains(&(u - l)));
                        }
                    }
                    ArrayKind::Upa => {
                        for k in &asf.kernels {
                            assert!((0.3 - 1e-12..=0.5 + 1e-12).contains(&k.atom.measure()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn random_asf_is_seed_deterministic() {
        let g = ArrayGeometry::ula(20).unwrap();
        let a = random_asf(&g, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_asf(&g, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn random_ula_spikes_are_uniform() {
        let g = ArrayGeometry::ula(20).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut xs: Vec<f64> = (0..10_000)
            .flat_map(|_| random_asf(&g, &mut rng).spikes)
            .map(|s| s.location.coords()[0])
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = (x + 1.0) / 2.0;
                (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn asf_json_round_trip() {
        let ula = AsfSpec::example();
        let back = AsfSpec::from_json(&ula.to_json().unwrap()).unwrap();
        assert_eq!(ula, back, "{}", ula.to_json().unwrap());
        let upa = random_asf(&ArrayGeometry::upa(5).unwrap(), &mut ChaCha8Rng::seed_from_u64(1));
        let json = upa.to_json().unwrap();
        assert!(json.contains("\"lx\""));
        assert_eq!(AsfSpec::from_json(&json).unwrap(), upa);
        let raw = r#"{"spikes":[{"xi":0.1,"c":0.5}],"kernels":[{"l":-0.5,"u":0.0,"b":0.5}]}"#;
        let parsed = AsfSpec::from_json(raw).unwrap();
        assert_eq!(parsed.spikes[0].location, Aoa::Line(0.1));
        assert!(AsfSpec::from_json(r#"{"spikes":[{"xi":0.1,"c":-1}],"kernels":[]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn synthesis_is_linear(
                u in proptest::collection::vec(0.0f64..2.0, 6),
                v in proptest::collection::vec(0.0f64..2.0, 6),
                alpha in 0.0f64..3.0,
                beta in 0.0f64..3.0,
            ) {
                let g = ArrayGeometry::ula(6).unwrap();
                let kernels = uniform_kernels(&g, 4).unwrap();
                let d = Dictionary::build(&g, &[Aoa::Line(-0.4), Aoa::Line(0.7)], &kernels, 0.01).unwrap();
                let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
                let lhs = synthesize_covariance(&d, &w).unwrap();
                let rhs = synthesize_covariance(&d, &u).unwrap() * Complex64::new(alpha, 0.0)
                    + synthesize_covariance(&d, &v).unwrap() * Complex64::new(beta, 0.0);
                prop_assert!(frobenius_norm(&(lhs - rhs)) < 1e-12 * (1.0 + frobenius_norm(&d.combine(&w))));
            }

            #[test]
            fn kernel_atoms_are_hermitian_psd_with_trace_m(l in -1.0f64..0.9, w in 0.01f64..1.0, m in 2usize..24) {
                let u = (l + w).min(1.0);
                let g = ArrayGeometry::ula(m).unwrap();
                let s = KernelAtom::interval(l, u).unwrap().covariance(&g).unwrap();
                prop_assert!(hermitian_defect(&s) < 1e-14);
                prop_assert!(min_eigenvalue(&s) >= -1e-10 * frobenius_norm(&s));
                prop_assert!((trace_re(&s) - m as f64).abs() < 1e-9);
            }
        }
    }
}
