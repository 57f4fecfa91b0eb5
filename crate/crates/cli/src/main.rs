//! `covest`: run covariance-estimation sweeps, MUSIC dumps and spiked-model reports.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use covest_core::asf::true_covariance;
use covest_core::geometry::{aoa_grid, Aoa, ArrayKind};
use covest_core::harness::{
    aggregate, asf_for, derive_rng, plot_svg, read_csv, run_experiment, run_experiment_with_threads, to_csv,
    write_csv, ExperimentConfig,
};
use covest_core::linalg::add_scaled_identity;
use covest_core::music::{hermitian_eig, pseudo_spectrum_many, run_music};
use covest_core::sampling::{add_noise, noise_power_for_snr, sample_channels, sample_covariance};
use covest_core::theory::{bulk_law, escape_experiment, separation_check, DEFAULT_PROBE_M};
use covest_core::CovError;

#[derive(Parser)]
#[command(name = "covest", version, about = "Massive-MIMO channel covariance estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep over ASFs, snapshot ratios and estimators.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Results CSV; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for the error-curve SVG.
        #[arg(long)]
        plots: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// 100 ASFs with 50 trials each.
        #[arg(long)]
        paper_scale: bool,
        /// Record wall-clock runtimes (makes the CSV non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Eigenvalues, normalized values, CCDF and pseudo-spectrum of one snapshot set.
    Music {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bulk edge, escape predictions and the eigenvalue-escape table.
    Theory {
        #[arg(long)]
        config: PathBuf,
    },
    /// Error-curve SVG from a results CSV.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &CovError) -> u8 {
    match e {
        CovError::Config(_) => 2,
        CovError::Io { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Run {
            config,
            out,
            plots,
            seed,
            threads,
            paper_scale,
            timings,
        } => cmd_run(&config, out.as_deref(), plots.as_deref(), seed, threads, paper_scale, timings),
        Command::Music { config, out } => cmd_music(&config, &out),
        Command::Theory { config } => cmd_theory(&config),
        Command::Plot { input, out } => cmd_plot(&input, &out),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("covest: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CovError> {
    std::fs::write(path, text).map_err(|e| CovError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CovError> {
    std::fs::create_dir_all(dir).map_err(|e| CovError::io(dir, e))
}

fn print_stdout(text: &str) -> Result<(), CovError> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| CovError::io(Path::new("<stdout>"), e))
}

fn cmd_run(
    config: &Path,
    out: Option<&Path>,
    plots: Option<&Path>,
    seed: Option<u64>,
    threads: Option<usize>,
    paper_scale: bool,
    timings: bool,
) -> Result<(), CovError> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    if paper_scale {
        cfg = cfg.paper_scale();
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.record_timings |= timings;
    log::info!(
        "{} ASFs x {} trials x {} ratios",
        cfg.num_asfs,
        cfg.trials_per_asf,
        cfg.ratios.len()
    );
    let rows = match threads {
        Some(t) => run_experiment_with_threads(&cfg, t)?,
        None => run_experiment(&cfg)?,
    };
    match out {
        Some(path) => write_csv(&rows, path)?,
        None => print_stdout(&to_csv(&rows))?,
    }
    let aggs = aggregate(&rows);
    for a in &aggs {
        eprintln!(
            "{:>6} M={:<4} N={:<5} E_NF {:.4e}  E_GD {:.4e}  failures {}/{}",
            a.estimator.name(),
            a.m,
            a.n,
            a.mean_e_nf,
            a.mean_e_gd,
            a.failures,
            a.count
        );
    }
    if let Some(dir) = plots {
        ensure_dir(dir)?;
        plot_svg(&aggs, &dir.join("errors.svg"))?;
    }
    Ok(())
}

fn coords(aoa: &Aoa) -> (f64, String) {
    match aoa {
        Aoa::Line(x) => (*x, String::new()),
        _ => {
            let [x, y] = aoa.coords();
            (x, format!("{y:.8e}"))
        }
    }
}

/// CSV with columns `section,index,x,y,value`; `y` is empty on linear arrays.
fn cmd_music(config: &Path, out: &Path) -> Result<(), CovError> {
    let cfg = ExperimentConfig::from_file(config)?;
    let geom = cfg.geometry.build()?;
    let asf = asf_for(&cfg, &geom, 0);
    let sigma = true_covariance(&geom, &asf)?;
    let n0 = noise_power_for_snr(&sigma, cfg.snr_db);
    let n = cfg.snapshots(geom.m(), cfg.ratios[0]);
    let mut rng = derive_rng(cfg.master_seed, "music", &[0]);
    let y = add_noise(&sample_channels(&sigma, n, &mut rng)?, n0, &mut rng)?;
    let resolution = cfg.resolution(&geom);
    let music = run_music(&sample_covariance(&y).matrix, &geom, &cfg.spike_cfg, resolution, &mut rng)?;

    let mut csv = String::from("section,index,x,y,value\n");
    for (i, v) in music.eig.values.iter().enumerate() {
        writeln!(csv, "eigenvalue,{},,,{v:.8e}", i + 1).unwrap();
    }
    for (i, b) in music.count.beta.iter().enumerate() {
        writeln!(csv, "beta,{},,,{b:.8e}", i + 1).unwrap();
    }
    for (i, f) in music.count.ccdf.iter().enumerate() {
        writeln!(csv, "ccdf,{},{},,{f:.8e}", i + 1, i + 1).unwrap();
    }
    writeln!(csv, "r_hat,0,,,{}", music.count.r_hat).unwrap();
    for (i, (loc, v)) in music.spikes.locations.iter().zip(&music.spikes.values).enumerate() {
        let (x, y) = coords(loc);
        writeln!(csv, "spike,{i},{x:.8e},{y},{v:.8e}").unwrap();
    }
    let grid = aoa_grid(&geom, resolution)?;
    let spectrum = pseudo_spectrum_many(&music.eig, music.r_used, &geom, &grid)?;
    for (i, (p, v)) in grid.iter().zip(&spectrum).enumerate() {
        let (x, y) = coords(p);
        writeln!(csv, "spectrum,{i},{x:.8e},{y},{v:.8e}").unwrap();
    }
    write_file(out, &csv)?;
    eprintln!("r_hat = {} from {} snapshots at M = {}", music.count.r_hat, n, geom.m());
    Ok(())
}

fn cmd_theory(config: &Path) -> Result<(), CovError> {
    let cfg = ExperimentConfig::from_file(config)?;
    let geom = cfg.geometry.build()?;
    let asf = asf_for(&cfg, &geom, 0);
    let sigma = true_covariance(&geom, &asf)?;
    let n0 = noise_power_for_snr(&sigma, cfg.snr_db);
    let r = asf.spikes.len();
    let nu = bulk_law(&geom, &asf.continuous_part(), n0, DEFAULT_PROBE_M)?;
    let population = hermitian_eig(&add_scaled_identity(&sigma, n0))?.values;

    let mut out = String::from("ratio,zeta,omega0,bulk_edge,lambda_r,separated,predicted\n");
    for &ratio in &cfg.ratios {
        let n = cfg.snapshots(geom.m(), ratio);
        let zeta = geom.m() as f64 / n as f64;
        if r == 0 {
            writeln!(out, "{ratio},{zeta:.8e},,,,,").unwrap();
            continue;
        }
        let s = separation_check(&population, r, &nu, zeta)?;
        let predicted: Vec<String> = s
            .predicted
            .iter()
            .map(|p| p.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}")))
            .collect();
        writeln!(
            out,
            "{ratio},{zeta:.8e},{:.8e},{:.8e},{:.8e},{},{}",
            s.omega0,
            s.bulk_edge,
            s.lambda_r,
            s.separated,
            predicted.join(";")
        )
        .unwrap();
    }

    if geom.kind() == ArrayKind::Ula && r > 0 && !cfg.escape_ms.is_empty() {
        let rows = escape_experiment(&asf, &cfg.escape_ms, n0, r, cfg.trials_per_asf, cfg.master_seed)?;
        out.push_str("\nm,n,seed,gap_ratio,escaped,bulk_edge,top_eigenvalues\n");
        for row in &rows {
            let top: Vec<String> = row.eigenvalues.iter().take(r + 2).map(|v| format!("{v:.6e}")).collect();
            writeln!(
                out,
                "{},{},{},{:.8e},{},{:.8e},{}",
                row.m,
                row.n,
                row.seed,
                row.gap_ratio,
                row.escaped,
                row.bulk_edge,
                top.join(";")
            )
            .unwrap();
        }
    }
    print_stdout(&out)
}

fn cmd_plot(input: &Path, out: &Path) -> Result<(), CovError> {
    let rows = read_csv(input)?;
    ensure_dir(out)?;
    plot_svg(&aggregate(&rows), &out.join("errors.svg"))
}
