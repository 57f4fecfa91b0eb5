//! Debiased sample covariance projected onto the PSD cone.

use super::{CoefficientVector, Diagnostics, EstimateResult};
use crate::linalg::project_psd;
use crate::sampling::{debiased_sample_covariance, SnapshotSet};

pub fn estimate_sample_cov(snapshots: &SnapshotSet) -> EstimateResult {
    EstimateResult {
        sigma_h: project_psd(&debiased_sample_covariance(snapshots)),
        u: CoefficientVector::default(),
        diagnostics: Diagnostics {
            converged: true,
            ..Diagnostics::default()
        },
    }
}
