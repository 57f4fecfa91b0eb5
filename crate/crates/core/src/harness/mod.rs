//! Seeded Monte Carlo sweeps over random ASFs and snapshot draws.
//!
//! Every ASF draw uses the stream `("asf", a)` and every snapshot set the stream
//! `("trial", a, ratio_index, t)`, so results do not depend on scheduling. Rows come
//! out in `(asf, ratio, trial, estimator)` order.

pub mod config;
pub mod report;
pub mod rng;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{EstimatorKind, ExperimentConfig, GeometryConfig};
pub use report::{aggregate, error_curves_svg, eigenvalues_svg, parse_csv, plot_eigenvalues_svg, plot_svg, read_csv, to_csv, write_csv, Aggregate};
pub use rng::derive_rng;

use crate::asf::{kernel_centres, random_asf, true_covariance, uniform_kernels, AsfSpec, AtomSource, Dictionary, KernelAtom, SteeringDictionary};
use crate::error::{CovError, Result};
use crate::estimators::ml::descent_violations;
use crate::estimators::{
    estimate_l21, estimate_ml_from, estimate_sample_cov, estimate_spice, nnls_init, Diagnostics, EstimateResult,
    NnlsOutcome,
};
use crate::geometry::{Aoa, ArrayGeometry};
use crate::linalg::CMat;
use crate::metrics;
use crate::music::{grid_step, run_music};
use crate::sampling::{add_noise, sample_channels, sample_covariance};

/// One estimator run on one snapshot set.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub estimator: EstimatorKind,
    pub m: usize,
    pub n: usize,
    pub asf: usize,
    pub trial: usize,
    pub e_nf: f64,
    pub e_gd: f64,
    pub j: usize,
    pub r_hat: usize,
    pub runtime_ms: f64,
    pub converged: bool,
    /// Failure or solver note; not part of the CSV.
    pub note: Option<String>,
    /// CCCP outer iterations (ML only).
    pub outer_iterations: usize,
    /// Objective increases beyond the descent slack (ML only).
    pub descent_violations: usize,
}

/// Everything a trial needs that depends only on the ASF index.
struct AsfCase {
    sigma_h: CMat,
}

/// Shared, immutable inputs for the sweep.
struct Plan {
    geom: ArrayGeometry,
    kernels: Vec<KernelAtom>,
    centres: Vec<Aoa>,
    resolution: usize,
    n0: f64,
}

/// ASF used for index `a`.
pub fn asf_for(cfg: &ExperimentConfig, geom: &ArrayGeometry, a: usize) -> AsfSpec {
    match &cfg.asf {
        Some(fixed) => fixed.clone(),
        None => random_asf(geom, &mut derive_rng(cfg.master_seed, "asf", &[a as u64])),
    }
}

/// Run the sweep on the global thread pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let geom = cfg.geometry.build()?;
    let kernels = uniform_kernels(&geom, cfg.kernel_count(&geom))?;
    let plan = Plan {
        centres: kernel_centres(&geom, &kernels),
        resolution: cfg.resolution(&geom),
        n0: cfg.noise_power(),
        kernels,
        geom,
    };
    let cases = (0..cfg.num_asfs)
        .map(|a| {
            let asf = asf_for(cfg, &plan.geom, a);
            Ok(AsfCase {
                sigma_h: true_covariance(&plan.geom, &asf)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize, usize)> = (0..cfg.num_asfs)
        .flat_map(|a| (0..cfg.ratios.len()).flat_map(move |k| (0..cfg.trials_per_asf).map(move |t| (a, k, t))))
        .collect();
    let rows: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(a, k, t)| run_trial(cfg, &plan, &cases[a], a, k, t))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Run the sweep on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<ResultRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CovError::Config(format!("cannot build a pool of {threads} threads: {e}")))?;
    pool.install(|| run_experiment(cfg))
}

fn failed_row(base: &ResultRow, estimator: EstimatorKind, note: String) -> ResultRow {
    ResultRow {
        estimator,
        e_nf: f64::NAN,
        e_gd: f64::NAN,
        j: 0,
        converged: false,
        note: Some(note),
        ..base.clone()
    }
}

fn run_trial(cfg: &ExperimentConfig, plan: &Plan, case: &AsfCase, a: usize, k: usize, t: usize) -> Vec<ResultRow> {
    let m = plan.geom.m();
    let n = cfg.snapshots(m, cfg.ratios[k]);
    let base = ResultRow {
        estimator: EstimatorKind::Ml,
        m,
        n,
        asf: a,
        trial: t,
        e_nf: f64::NAN,
        e_gd: f64::NAN,
        j: 0,
        r_hat: 0,
        runtime_ms: 0.0,
        converged: false,
        note: None,
        outer_iterations: 0,
        descent_violations: 0,
    };
    let mut rng = derive_rng(cfg.master_seed, "trial", &[a as u64, k as u64, t as u64]);
    let prepared = (|| -> Result<_> {
        let h = sample_channels(&case.sigma_h, n, &mut rng)?;
        let y = add_noise(&h, plan.n0, &mut rng)?;
        let sample = sample_covariance(&y);
        let music = run_music(&sample.matrix, &plan.geom, &cfg.spike_cfg, plan.resolution, &mut rng)?;
        let dict = Dictionary::build(&plan.geom, &music.spikes.locations, &plan.kernels, grid_step(plan.resolution))?;
        let mut rival: Vec<Aoa> = dict
            .sources()
            .iter()
            .filter_map(|s| match s {
                AtomSource::Spike(loc) => Some(*loc),
                _ => None,
            })
            .collect();
        rival.extend(plan.centres.iter().copied());
        let steering = SteeringDictionary::new(&plan.geom, rival)?;
        Ok((y, sample, music.count.r_hat, dict, steering))
    })();
    let (y, sample, r_hat, dict, steering) = match prepared {
        Ok(p) => p,
        Err(e) => {
            return cfg
                .estimators
                .iter()
                .map(|&kind| failed_row(&base, kind, format!("preparation failed: {e}")))
                .collect()
        }
    };
    let base = ResultRow { r_hat, ..base };

    // NNLS is shared between the NNLS row and the ML initialization.
    let needs_nnls = cfg.estimators.iter().any(|k| matches!(k, EstimatorKind::Ml | EstimatorKind::Nnls));
    let shared = needs_nnls.then(|| {
        let start = Instant::now();
        let out = nnls_init(&dict, &sample.matrix, plan.n0, &cfg.solver_cfg).map_err(|e| e.to_string());
        (out, start.elapsed().as_secs_f64() * 1e3)
    });
    let nnls = || -> (Result<NnlsOutcome>, f64) {
        let (out, ms) = shared.as_ref().expect("computed when needed");
        let out = out.clone().map_err(|e| CovError::InvalidArgument(format!("NNLS failed: {e}")));
        (out, *ms)
    };

    let mut rows = Vec::with_capacity(cfg.estimators.len());
    for &kind in &cfg.estimators {
        let start = Instant::now();
        let (result, extra_ms): (Result<EstimateResult>, f64) = match kind {
            EstimatorKind::Ml => {
                let (init, ms) = nnls();
                (init.and_then(|o| estimate_ml_from(&dict, &sample.matrix, plan.n0, &o.u, &cfg.solver_cfg)), ms)
            }
            EstimatorKind::Nnls => {
                let (init, ms) = nnls();
                (
                    init.map(|o| EstimateResult {
                        sigma_h: dict.combine(&o.u),
                        diagnostics: Diagnostics {
                            converged: o.converged,
                            inner_iterations: vec![o.iterations],
                            ..Diagnostics::default()
                        },
                        u: o.u,
                    }),
                    ms,
                )
            }
            EstimatorKind::Spice => (estimate_spice(&steering, &sample, plan.n0, &cfg.solver_cfg), 0.0),
            EstimatorKind::L21 => (estimate_l21(&steering, &y, &cfg.solver_cfg), 0.0),
            EstimatorKind::Sample => (Ok(estimate_sample_cov(&y)), 0.0),
        };
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let runtime_ms = if cfg.record_timings {
            elapsed + if kind == EstimatorKind::Ml { extra_ms } else { 0.0 }
        } else {
            0.0
        };
        let row = match result {
            Ok(est) => match metrics::evaluate(&case.sigma_h, &est.sigma_h) {
                Ok(rep) => ResultRow {
                    estimator: kind,
                    e_nf: rep.e_nf,
                    e_gd: rep.e_gd,
                    j: rep.j,
                    runtime_ms,
                    converged: est.diagnostics.converged,
                    note: est.diagnostics.notes.first().cloned(),
                    outer_iterations: if kind == EstimatorKind::Ml {
                        est.diagnostics.outer_iterations()
                    } else {
                        0
                    },
                    descent_violations: descent_violations(&est.diagnostics.objective_trace),
                    ..base.clone()
                },
                Err(e) => failed_row(&base, kind, format!("metric failed: {e}")),
            },
            Err(e) => {
                let violated = matches!(e, CovError::DescentViolation { .. });
                ResultRow {
                    descent_violations: usize::from(violated),
                    runtime_ms,
                    ..failed_row(&base, kind, e.to_string())
                }
            }
        };
        rows.push(row);
    }
    rows
}
