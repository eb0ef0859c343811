//! Experiment runner for the Lieb-Liniger quench toolkit.
//!
//! One scenario per invocation; flags override config-file fields. Exit
//! codes: 0 success, 1 validation failure, 2 configuration error, 3 runtime
//! abort. `LLQ_THREADS` caps worker parallelism.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use llq::experiments::{self, config::Scenario, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(
    name = "llq",
    about = "Quench dynamics of the 1D Bose gas: TEBD on the discretized Lieb-Liniger lattice plus exact two-particle analytics",
    after_help = "Outputs land in --out: fixed-schema CSV files, SVG plots, a JSON run report \
                  and the resolved configuration echo. Units: gamma is the Tonks parameter g/rho; \
                  times are in units of 4/rho^2."
)]
struct Cli {
    /// JSON configuration file; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Which experiment to run.
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Post-quench Tonks parameter.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,

    /// Particle number N.
    #[arg(long = "n-particles")]
    n_particles: Option<usize>,

    /// Lattice sites M.
    #[arg(long)]
    sites: Option<usize>,

    /// Bond-dimension cap.
    #[arg(long)]
    chi: Option<usize>,

    /// Time step (scenario units; see --help of the config file docs).
    #[arg(long)]
    dt: Option<f64>,

    /// Total evolved time.
    #[arg(long = "t-final")]
    t_final: Option<f64>,

    /// Seed for randomized validation instances.
    #[arg(long)]
    seed: Option<u64>,

    /// Use the paper-scale preset (N = 18, 1280 sites, chi = 100); a full
    /// trajectory at this size is a long-running job.
    #[arg(long = "paper-scale")]
    paper_scale: bool,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, experiments::RunError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path).map_err(experiments::RunError::Config)?,
        None => ExperimentConfig::default(),
    };
    if cli.paper_scale {
        cfg = cfg.paper_scale();
    }
    if let Some(s) = cli.scenario {
        cfg.scenario = s;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(gamma) = cli.gamma {
        cfg.physics.gamma = gamma;
    }
    if let Some(n) = cli.n_particles {
        cfg.physics.n_particles = n;
    }
    if let Some(m) = cli.sites {
        cfg.lattice.n_sites = m;
    }
    if let Some(chi) = cli.chi {
        cfg.truncation.chi_max = chi;
    }
    if let Some(dt) = cli.dt {
        cfg.evolution.dt = Some(dt);
    }
    if let Some(t) = cli.t_final {
        cfg.evolution.t_final = Some(t);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("LLQ_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not apply LLQ_THREADS={n}: {e}");
                }
            }
            _ => log::warn!("ignoring unparsable LLQ_THREADS={v}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    init_thread_pool();
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match experiments::run(&cfg) {
        Ok(report) => {
            println!("scenario {} finished", report.scenario);
            for m in &report.messages {
                println!("  {m}");
            }
            println!("outputs in {}:", report.output_dir.display());
            for a in &report.artifacts {
                println!("  {}", a.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
