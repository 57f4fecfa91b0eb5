//! Antenna-array geometry, steering vectors and angle-of-arrival grids.
//!
//! Element positions are stored in units of the carrier wavelength, so the array
//! response reduces to `[a(ξ)]_i = exp(j 2π ⟨ξ, r_i⟩)`. Both supported layouts use
//! half-wavelength spacing.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CovError, Result};
use crate::linalg::CVec;

/// Slack on the AoA domain boundary, absorbing rounding in grid construction.
const DOMAIN_SLACK: f64 = 1e-12;

/// Inter-element spacing in wavelengths.
pub const HALF_WAVELENGTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    Ula,
    Upa,
}

/// A uniform linear or square planar array at half-wavelength spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    kind: ArrayKind,
    positions: Vec<[f64; 3]>,
}

impl ArrayGeometry {
    /// Linear array along the x axis with `m ≥ 2` elements.
    pub fn ula(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(CovError::InvalidArgument(format!(
                "a ULA needs at least 2 elements, got {m}"
            )));
        }
        let positions = (0..m)
            .map(|i| [HALF_WAVELENGTH * i as f64, 0.0, 0.0])
            .collect();
        Ok(Self {
            kind: ArrayKind::Ula,
            positions,
        })
    }

    /// Square planar array with `side × side` elements in the xy plane.
    pub fn upa(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(CovError::InvalidArgument(format!(
                "a UPA needs a side of at least 2 elements, got {side}"
            )));
        }
        let mut positions = Vec::with_capacity(side * side);
        for p in 0..side {
            for q in 0..side {
                positions.push([HALF_WAVELENGTH * p as f64, HALF_WAVELENGTH * q as f64, 0.0]);
            }
        }
        Ok(Self {
            kind: ArrayKind::Upa,
            positions,
        })
    }

    /// Square planar array from its total element count; `m` must be a perfect square.
    pub fn upa_with_elements(m: usize) -> Result<Self> {
        let side = (m as f64).sqrt().round() as usize;
        if side * side != m {
            return Err(CovError::InvalidArgument(format!(
                "UPA element count {m} is not a perfect square"
            )));
        }
        Self::upa(side)
    }

    pub fn kind(&self) -> ArrayKind {
        self.kind
    }

    /// Number of antenna elements M.
    pub fn m(&self) -> usize {
        self.positions.len()
    }

    /// Elements per axis (`M` for a ULA, `√M` for a UPA).
    pub fn side(&self) -> usize {
        match self.kind {
            ArrayKind::Ula => self.m(),
            ArrayKind::Upa => (self.m() as f64).sqrt().round() as usize,
        }
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// Integer lattice coordinates of element `i` (x index, y index).
    pub(crate) fn lattice(&self, i: usize) -> (i64, i64) {
        match self.kind {
            ArrayKind::Ula => (i as i64, 0),
            ArrayKind::Upa => {
                let side = self.side();
                ((i / side) as i64, (i % side) as i64)
            }
        }
    }

    pub fn contains(&self, aoa: &Aoa) -> bool {
        match (self.kind, aoa) {
            (ArrayKind::Ula, Aoa::Line(x)) => x.is_finite() && x.abs() <= 1.0 + DOMAIN_SLACK,
            (ArrayKind::Upa, Aoa::Plane(x, y)) => {
                x.is_finite() && y.is_finite() && x * x + y * y <= 1.0 + DOMAIN_SLACK
            }
            _ => false,
        }
    }

    fn check(&self, aoa: &Aoa) -> Result<()> {
        if self.contains(aoa) {
            Ok(())
        } else {
            Err(CovError::DomainViolation(format!("{aoa:?} for a {:?}", self.kind)))
        }
    }
}

/// Angle of arrival: the sine-of-angle for a ULA, or the projection of the
/// unit direction onto the array plane for a UPA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Aoa {
    Line(f64),
    Plane(f64, f64),
}

impl Aoa {
    pub fn coords(&self) -> [f64; 2] {
        match *self {
            Aoa::Line(x) => [x, 0.0],
            Aoa::Plane(x, y) => [x, y],
        }
    }

    /// Euclidean distance between two AoAs.
    pub fn distance(&self, other: &Aoa) -> f64 {
        let [a, b] = self.coords();
        let [c, d] = other.coords();
        ((a - c).powi(2) + (b - d).powi(2)).sqrt()
    }

    /// Lexicographic total order.
    pub fn total_cmp(&self, other: &Aoa) -> Ordering {
        let [a, b] = self.coords();
        let [c, d] = other.coords();
        a.total_cmp(&c).then(b.total_cmp(&d))
    }
}

/// Array response vector `a(ξ)`.
pub fn steering(geom: &ArrayGeometry, aoa: &Aoa) -> Result<CVec> {
    geom.check(aoa)?;
    Ok(steering_unchecked(geom, aoa))
}

pub(crate) fn steering_unchecked(geom: &ArrayGeometry, aoa: &Aoa) -> CVec {
    let [x, y] = aoa.coords();
    CVec::from_iterator(
        geom.m(),
        geom.positions.iter().map(|r| {
            let phase = 2.0 * PI * (x * r[0] + y * r[1]);
            Complex64::from_polar(1.0, phase)
        }),
    )
}

fn linspace(resolution: usize) -> Vec<f64> {
    let step = 2.0 / (resolution - 1) as f64;
    (0..resolution)
        .map(|i| {
            if i + 1 == resolution {
                1.0
            } else {
                -1.0 + step * i as f64
            }
        })
        .collect()
}

/// Search grid over the AoA domain.
///
/// ULA: `resolution` equispaced points on [−1, 1] including both endpoints.
/// UPA: the `resolution × resolution` Cartesian grid on [−1, 1]² restricted to the
/// unit disk, x-major order.
pub fn aoa_grid(geom: &ArrayGeometry, resolution: usize) -> Result<Vec<Aoa>> {
    if resolution < 2 {
        return Err(CovError::InvalidArgument(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    let axis = linspace(resolution);
    Ok(match geom.kind {
        ArrayKind::Ula => axis.into_iter().map(Aoa::Line).collect(),
        ArrayKind::Upa => {
            let mut points = Vec::new();
            for &x in &axis {
                for &y in &axis {
                    let p = Aoa::Plane(x, y);
                    if geom.contains(&p) {
                        points.push(p);
                    }
                }
            }
            points
        }
    })
}

/// Full Cartesian UPA grid with a validity mask, used for 2-D neighbourhood searches.
pub(crate) fn plane_grid(resolution: usize) -> (Vec<f64>, Vec<bool>) {
    let axis = linspace(resolution);
    let mut mask = Vec::with_capacity(resolution * resolution);
    for &x in &axis {
        for &y in &axis {
            mask.push(x * x + y * y <= 1.0 + DOMAIN_SLACK);
        }
    }
    (axis, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ula_broadside_is_all_ones() {
        let g = ArrayGeometry::ula(4).unwrap();
        let a = steering(&g, &Aoa::Line(0.0)).unwrap();
        for z in a.iter() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn ula_half_sine_gives_quarter_turns() {
        let g = ArrayGeometry::ula(3).unwrap();
        let a = steering(&g, &Aoa::Line(0.5)).unwrap();
        let want = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
        ];
        for (z, w) in a.iter().zip(want) {
            assert!((z - w).norm() < 1e-15);
        }
    }

    #[test]
    fn upa_origin_is_all_ones() {
        let g = ArrayGeometry::upa(2).unwrap();
        let a = steering(&g, &Aoa::Plane(0.0, 0.0)).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let ula = ArrayGeometry::ula(4).unwrap();
        assert!(steering(&ula, &Aoa::Line(1.5)).is_err());
        assert!(steering(&ula, &Aoa::Plane(0.0, 0.0)).is_err());
        let upa = ArrayGeometry::upa(3).unwrap();
        assert!(steering(&upa, &Aoa::Plane(0.8, 0.8)).is_err());
    }

    #[test]
    fn geometry_constructors_validate() {
        assert!(ArrayGeometry::ula(1).is_err());
        assert!(ArrayGeometry::upa_with_elements(24).is_err());
        assert_eq!(ArrayGeometry::upa_with_elements(25).unwrap().side(), 5);
    }

    #[test]
    fn grids() {
        let g = ArrayGeometry::ula(4).unwrap();
        assert_eq!(
            aoa_grid(&g, 3).unwrap(),
            vec![Aoa::Line(-1.0), Aoa::Line(0.0), Aoa::Line(1.0)]
        );
        assert_eq!(
            aoa_grid(&g, 5).unwrap(),
            [-1.0, -0.5, 0.0, 0.5, 1.0].map(Aoa::Line).to_vec()
        );
        let p = ArrayGeometry::upa(2).unwrap();
        assert_eq!(aoa_grid(&p, 3).unwrap().len(), 5);
        assert!(aoa_grid(&g, 1).is_err());
    }

    #[test]
    fn lattice_matches_positions() {
        let g = ArrayGeometry::upa(3).unwrap();
        for i in 0..g.m() {
            let (p, q) = g.lattice(i);
            assert_eq!(g.positions()[i][0], 0.5 * p as f64);
            assert_eq!(g.positions()[i][1], 0.5 * q as f64);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn steering_has_unit_modulus_entries(m in 2usize..40, x in -1.0f64..=1.0) {
                let g = ArrayGeometry::ula(m).unwrap();
                let a = steering(&g, &Aoa::Line(x)).unwrap();
                let energy: f64 = a.iter().map(|z| z.norm_sqr()).sum();
                prop_assert!((energy - m as f64).abs() < 1e-10);
                let b = steering(&g, &Aoa::Line(-x)).unwrap();
                for (u, v) in a.iter().zip(b.iter()) {
                    prop_assert!((u.conj() - v).norm() < 1e-12);
                }
            }

            #[test]
            fn grid_is_deterministic(res in 2usize..64) {
                let g = ArrayGeometry::upa(3).unwrap();
                prop_assert_eq!(aoa_grid(&g, res).unwrap(), aoa_grid(&g, res).unwrap());
            }
        }
    }
}
