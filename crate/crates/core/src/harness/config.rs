//! Experiment configuration, read from JSON.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asf::AsfSpec;
use crate::error::{CovError, Result};
use crate::estimators::SolverConfig;
use crate::geometry::{ArrayGeometry, ArrayKind};
use crate::music::{default_grid_resolution, SpikeCountConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeometryConfig {
    Ula { m: usize },
    Upa { side: usize },
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ArrayGeometry> {
        match *self {
            GeometryConfig::Ula { m } => ArrayGeometry::ula(m),
            GeometryConfig::Upa { side } => ArrayGeometry::upa(side),
        }
        .map_err(|e| CovError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Ml,
    Nnls,
    Spice,
    L21,
    Sample,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Ml,
        EstimatorKind::Nnls,
        EstimatorKind::Spice,
        EstimatorKind::L21,
        EstimatorKind::Sample,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Ml => "ml",
            EstimatorKind::Nnls => "nnls",
            EstimatorKind::Spice => "spice",
            EstimatorKind::L21 => "l21",
            EstimatorKind::Sample => "sample",
        }
    }

    pub fn parse(s: &str) -> Option<EstimatorKind> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub snr_db: f64,
    /// Snapshot-to-antenna ratios N/M.
    pub ratios: Vec<f64>,
    pub num_asfs: usize,
    pub trials_per_asf: usize,
    /// Kernel atoms in the ML dictionary; `2M` for a ULA and `9M` for a UPA when unset.
    pub n_atoms: Option<usize>,
    pub estimators: Vec<EstimatorKind>,
    pub spike_cfg: SpikeCountConfig,
    pub solver_cfg: SolverConfig,
    pub master_seed: u64,
    /// MUSIC search grid; `10M` points (ULA) or `4√M` per axis (UPA) when unset.
    pub grid_resolution: Option<usize>,
    /// Fixed ASF used for every draw instead of random ones.
    pub asf: Option<AsfSpec>,
    /// Array sizes for the eigenvalue-escape table of the `theory` report.
    pub escape_ms: Vec<usize>,
    /// Record wall-clock runtimes in the results; zero otherwise, keeping output reproducible.
    pub record_timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::Ula { m: 20 },
            snr_db: 20.0,
            ratios: vec![1.0, 2.0, 4.0, 8.0],
            num_asfs: 20,
            trials_per_asf: 20,
            n_atoms: None,
            estimators: EstimatorKind::ALL.to_vec(),
            spike_cfg: SpikeCountConfig::default(),
            solver_cfg: SolverConfig::default(),
            master_seed: 2018,
            grid_resolution: None,
            asf: None,
            escape_ms: vec![25, 50, 100],
            record_timings: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| CovError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CovError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// 100 random ASFs with 50 trials each.
    pub fn paper_scale(mut self) -> Self {
        self.num_asfs = 100;
        self.trials_per_asf = 50;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let geom = self.geometry.build()?;
        let bad = |msg: String| Err(CovError::Config(msg));
        if self.num_asfs == 0 || self.trials_per_asf == 0 {
            return bad("num_asfs and trials_per_asf must be at least 1".into());
        }
        if self.ratios.is_empty() || self.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("ratios must be a non-empty list of positive numbers".into());
        }
        if self.estimators.is_empty() {
            return bad("at least one estimator is required".into());
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db must be finite".into());
        }
        if self.n_atoms == Some(0) {
            return bad("n_atoms must be positive".into());
        }
        if geom.kind() == ArrayKind::Upa {
            let n = self.kernel_count(&geom);
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return bad(format!("UPA n_atoms {n} must be a perfect square"));
            }
        }
        if matches!(self.grid_resolution, Some(r) if r < 3) {
            return bad("grid_resolution must be at least 3".into());
        }
        if let Some(asf) = &self.asf {
            asf.validate().map_err(|e| CovError::Config(e.to_string()))?;
        }
        self.spike_cfg.validate()?;
        self.solver_cfg.validate()?;
        Ok(())
    }

    pub fn kernel_count(&self, geom: &ArrayGeometry) -> usize {
        self.n_atoms.unwrap_or(match geom.kind() {
            ArrayKind::Ula => 2 * geom.m(),
            ArrayKind::Upa => 9 * geom.m(),
        })
    }

    pub fn resolution(&self, geom: &ArrayGeometry) -> usize {
        self.grid_resolution.unwrap_or_else(|| default_grid_resolution(geom))
    }

    /// Snapshot count for a ratio, at least 1.
    pub fn snapshots(&self, m: usize, ratio: f64) -> usize {
        ((ratio * m as f64).round() as usize).max(1)
    }

    /// `N0 = 10^(−SNR/10)` for unit per-antenna channel power.
    pub fn noise_power(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.clone().paper_scale().trials_per_asf, 50);
        assert!((cfg.noise_power() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"geometry": {"kind": "upa", "side": 5}, "estimators": ["ml", "spice"]}"#).unwrap();
        let g = cfg.geometry.build().unwrap();
        assert_eq!(cfg.kernel_count(&g), 225);
        assert_eq!(cfg.resolution(&g), 20);
        assert_eq!(cfg.estimators, vec![EstimatorKind::Ml, EstimatorKind::Spice]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            r#"{"num_asfs": 0}"#,
            r#"{"ratios": []}"#,
            r#"{"ratios": [-1]}"#,
            r#"{"geometry": {"kind": "ula", "m": 1}}"#,
            r#"{"estimators": ["magic"]}"#,
            r#"{"unknown_field": 3}"#,
            r#"{"geometry": {"kind": "upa", "side": 5}, "n_atoms": 50}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(CovError::Config(_))), "{bad}");
        }
    }
}
