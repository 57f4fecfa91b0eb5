//! Channel covariance estimation for massive MIMO base-station arrays.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: array layouts, steering vectors and angle-of-arrival grids.
//! * [`asf`]: angular spread functions, dictionary atoms and covariance synthesis.
//! * [`sampling`]: channel snapshots, additive noise and sample covariances.
//! * [`music`]: eigen-analysis, K-means spike counting and pseudo-spectrum localization.
//! * [`estimators`]: NNLS, CCCP maximum likelihood, SPICE, ℓ2,1 and the sample covariance.
//! * [`metrics`]: normalized Frobenius and Grassmannian errors.
//! * [`theory`]: spiked-model bulk laws, the escape map φ and its minimizer.
//! * [`harness`]: seeded Monte Carlo sweeps, CSV and SVG reporting.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asf;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod music;
pub mod sampling;
pub mod theory;

pub use asf::{AsfSpec, AtomSource, Dictionary, KernelAtom, Spike};
pub use error::{CovError, Result};
pub use estimators::{CoefficientVector, EstimateResult, SolverConfig};
pub use geometry::{Aoa, ArrayGeometry, ArrayKind};
pub use linalg::{CMat, CVec};
pub use metrics::MetricReport;
pub use music::{EigenDecomposition, SpikeCountConfig};
pub use sampling::{SampleCovariance, SnapshotSet};
pub use theory::BulkLaw;
