//! Reproducible experiment runs: the four scenarios behind the `llq` binary.
//!
//! Each runner validates its configuration up front, executes, and leaves a
//! self-contained output directory: the resolved configuration echo, fixed-
//! schema CSV files (the data contract), SVG convenience plots, and a JSON
//! run report with the derived quantities (measured central density, the
//! lattice-binding correction, beat frequencies, timings).

pub mod config;
mod emit;
mod validate;

pub use config::{ConfigError, ExperimentConfig, Resolved, Scenario};
pub use validate::{CheckResult, ValidationReport};

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::bethe2::{self, Bethe2Error, HsReference};
use crate::ed::EdError;
use crate::model::LatticeParams;
use crate::observables::{self, ObservablesError, Trajectory, TrajectoryObserver};
use crate::tebd::{self, EvolutionConfig, GroundStateConfig, PrepReport, TebdError};
use emit::{finite, write_csv, LinePlot, Series, PALETTE};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Tebd(#[from] TebdError),
    #[error(transparent)]
    Mps(#[from] crate::mps::MpsError),
    #[error(transparent)]
    Bethe(#[from] Bethe2Error),
    #[error(transparent)]
    Observables(#[from] ObservablesError),
    #[error(transparent)]
    Ed(#[from] EdError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("validation failed: {failed} of {total} checks")]
    ValidationFailed { failed: usize, total: usize },
}

impl RunError {
    /// Process exit code: 0 success, 1 validation failure, 2 config error,
    /// 3 runtime abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::ValidationFailed { .. } => 1,
            _ => 3,
        }
    }
}

/// What a run left behind.
#[derive(Debug)]
pub struct RunReport {
    pub scenario: Scenario,
    pub output_dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
    /// One-line human summaries printed by the binary.
    pub messages: Vec<String>,
}

/// Dispatch on the configured scenario.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    match cfg.scenario {
        Scenario::Spectrum => run_spectrum(cfg),
        Scenario::Quench => run_quench(cfg),
        Scenario::TwoParticle => run_two_particle(cfg),
        Scenario::Validate => run_validate_scenario(cfg),
    }
}

fn echo_config(cfg: &ExperimentConfig, derived: serde_json::Value) -> serde_json::Value {
    let mut full = cfg.clone();
    full.evolution.dt = Some(cfg.dt());
    full.evolution.t_final = Some(cfg.t_final());
    json!({ "config": full, "derived": derived })
}

fn write_json(path: &PathBuf, value: &serde_json::Value) -> Result<(), RunError> {
    std::fs::write(path, serde_json::to_string_pretty(value).expect("serializable") + "\n")?;
    Ok(())
}

/// Sweep the two-particle spectrum over 1/γ (both signs) and emit
/// `spectrum.csv` (inv_gamma, branch, energy) plus a plot in the style of
/// the energy-vs-inverse-coupling figure.
pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let started = Instant::now();
    cfg.resolve()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let sp = &cfg.spectrum;
    let gammas: Vec<f64> = (0..sp.points)
        .map(|k| {
            sp.inv_gamma_min
                + (sp.inv_gamma_max - sp.inv_gamma_min) * k as f64 / (sp.points - 1) as f64
        })
        .filter(|inv| inv.abs() >= 1e-6) // 1/γ = 0 is the γ = ±∞ limit point
        .map(|inv| 1.0 / inv)
        .collect();
    let points = gammas
        .par_iter()
        .map(|&g| bethe2::spectrum(&[g], sp.n_branches).map(|mut v| v.pop().expect("one point")))
        .collect::<Result<Vec<_>, _>>()?;

    let csv_path = cfg.output_dir.join("spectrum.csv");
    let mut rows = Vec::new();
    for p in &points {
        for &(branch, energy) in &p.branches {
            rows.push(vec![Some(p.inv_gamma), Some(branch as f64), finite(energy)]);
        }
    }
    write_csv(&csv_path, &["inv_gamma", "branch", "energy"], rows)?;

    let mut series = Vec::new();
    let mut labels: Vec<i32> = points.iter().flat_map(|p| p.branches.iter().map(|b| b.0)).collect();
    labels.sort_unstable();
    labels.dedup();
    for (k, &branch) in labels.iter().enumerate() {
        let mut pts: Vec<(f64, f64)> = points
            .iter()
            .filter_map(|p| {
                p.branches.iter().find(|(b, _)| *b == branch).map(|&(_, e)| (p.inv_gamma, e))
            })
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("grid is finite"));
        let label =
            if branch < 0 { "bound pair".to_string() } else { format!("gas branch {branch}") };
        series.push(Series {
            label,
            points: pts,
            color: PALETTE[k % PALETTE.len()],
            dashed: branch < 0,
        });
    }
    let svg_path = cfg.output_dir.join("spectrum.svg");
    LinePlot {
        title: "Two-particle spectrum (ring, L = 1)".into(),
        x_label: "1/gamma".into(),
        y_label: "energy".into(),
        series,
    }
    .write(&svg_path)?;

    let report_path = cfg.output_dir.join("run_report.json");
    write_json(
        &report_path,
        &json!({
            "scenario": "spectrum",
            "points": points.len(),
            "branches": sp.n_branches,
            "wall_seconds": started.elapsed().as_secs_f64(),
        }),
    )?;
    let echo_path = cfg.output_dir.join("config_resolved.json");
    write_json(&echo_path, &echo_config(cfg, json!({})))?;
    Ok(RunReport {
        scenario: Scenario::Spectrum,
        output_dir: cfg.output_dir.clone(),
        artifacts: vec![csv_path, svg_path, report_path, echo_path],
        messages: vec![format!("swept {} couplings", points.len())],
    })
}

/// Everything the quench pipeline produces before any file is written.
pub struct QuenchOutcome {
    pub trajectory: Trajectory,
    pub lp_final: LatticeParams,
    /// Measured cloud-center density of the prepared state.
    pub rho_c: f64,
    /// Final interaction strength g = γ·ρ_c.
    pub g_final: f64,
    /// 1D scattering length −2/g (None for the free quench).
    pub a_1d: Option<f64>,
    /// Program-time units per reported time unit, 4/ρ_c².
    pub time_unit: f64,
    /// Lattice coupling parameter u = |g|Δx/2 controlling the two-body
    /// binding-energy renormalization.
    pub lattice_u: f64,
    /// Lattice/continuum two-body binding ratio 2(√(1+u²)−1)/u².
    pub binding_correction: f64,
    pub prep: PrepReport,
    pub summary: tebd::EvolutionSummary,
    pub hs: Option<HsReference>,
}

/// Prepare the Tonks-Girardeau initial state, switch the coupling, evolve,
/// and record the trajectory. Shared by the quench scenario, the
/// two-particle companion run and the acceptance suite.
pub fn quench_pipeline(cfg: &ExperimentConfig, r: &Resolved) -> Result<QuenchOutcome, RunError> {
    let prep_cfg = GroundStateConfig {
        dtau: 0.3 / r.lp.hopping,
        policy: r.policy,
        ..GroundStateConfig::default()
    };
    let n = cfg.physics.n_particles;
    let (mut state, prep) = match cfg.physics.gamma_initial {
        None => tebd::prepare_tg_state(&r.lp, n, &prep_cfg)?,
        Some(gi) => {
            let lp_init = r.lp.with_onsite_u(gi * cfg.physics.rho / r.lp.dx);
            tebd::prepare_ground_state(&lp_init, n, &prep_cfg)?
        }
    };
    let density = observables::density_profile(&state, &r.lp);
    let rho_c = density[observables::anchor_site(&density)];
    // Pin the coupling to the measured central density so that γ = g/ρ_c is
    // exact for the state actually prepared.
    let g_final = cfg.physics.gamma * rho_c;
    let lp_final = r.lp.with_onsite_u(g_final / r.lp.dx);
    let time_unit = 4.0 / (rho_c * rho_c);
    let dt_prog = r.dt * time_unit;
    let n_steps = (r.t_final / r.dt).ceil().max(1.0) as usize;
    let evo = EvolutionConfig {
        dt: dt_prog,
        n_steps,
        policy: r.policy,
        measure_every: cfg.evolution.measure_every,
        order: cfg.evolution.order,
        abort_trunc_weight: Some(cfg.evolution.abort_trunc_weight),
    };
    let mut observer = TrajectoryObserver::new(&lp_final, time_unit, Some(cfg.evolution.row_every));
    let summary = tebd::evolve_real(&mut state, &lp_final, &evo, &mut observer)?;
    let trajectory = observer.into_trajectory();

    let lattice_u = 0.5 * g_final.abs() * lp_final.dx;
    let binding_correction = if lattice_u > 0.0 {
        2.0 * ((1.0 + lattice_u * lattice_u).sqrt() - 1.0) / (lattice_u * lattice_u)
    } else {
        1.0
    };
    let a_1d = (g_final != 0.0).then(|| -2.0 / g_final);
    let hs = match a_1d {
        Some(a) if a > 0.0 && a * rho_c < 1.0 => {
            trajectory.rows.first().map(|row| bethe2::hs_reference(row, a, rho_c)).transpose()?
        }
        _ => None,
    };
    Ok(QuenchOutcome {
        trajectory,
        lp_final,
        rho_c,
        g_final,
        a_1d,
        time_unit,
        lattice_u,
        binding_correction,
        prep,
        summary,
        hs,
    })
}

/// Linear interpolation of a sampled curve onto one target point; `None`
/// outside the data or across holes wider than `max_gap`.
fn interp(xs: &[f64], ys: &[f64], x: f64, max_gap: f64) -> Option<f64> {
    if xs.len() < 2 || x < xs[0] || x > *xs.last().expect("non-empty") {
        return None;
    }
    let k = xs.partition_point(|&v| v < x).min(xs.len() - 1).max(1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    if x1 - x0 > max_gap {
        return None;
    }
    let (y0, y1) = (ys[k - 1], ys[k]);
    if !y0.is_finite() || !y1.is_finite() {
        return None;
    }
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Trapped many-body quench: trajectory CSV, per-snapshot correlation rows
/// with the hard-sphere reference column, and the two figure-style plots.
pub fn run_quench(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let resolved = cfg.resolve()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let out = quench_pipeline(cfg, &resolved)?;
    let mut artifacts = Vec::new();

    let tr = &out.trajectory;
    let traj_path = cfg.output_dir.join("trajectory.csv");
    write_csv(
        &traj_path,
        &["time", "g2_local", "g3_local", "sum_rule", "max_entropy", "truncation_weight"],
        (0..tr.series.times.len()).map(|k| {
            vec![
                Some(tr.series.times[k]),
                finite(tr.series.g2_local[k]),
                finite(tr.series.g3_local[k]),
                Some(tr.sum_rule[k]),
                Some(tr.max_entropy[k]),
                Some(tr.truncation_weight[k]),
            ]
        }),
    )?;
    artifacts.push(traj_path);

    for (k, row) in tr.rows.iter().enumerate() {
        let path = cfg.output_dir.join(format!("g2row_t{k:03}.csv"));
        let max_gap = 3.0 * out.lp_final.dx;
        write_csv(
            &path,
            &["x", "g2", "hs_g2", "hs_valid", "time"],
            row.xs.iter().zip(&row.g2).map(|(&x, &g)| {
                let hs_val = out
                    .hs
                    .as_ref()
                    .and_then(|hs| interp(&hs.xs, &hs.g2, x, max_gap));
                let hs_ok = out
                    .hs
                    .as_ref()
                    .map(|_| if x.abs() <= 1.0 / out.rho_c { 1.0 } else { 0.0 });
                vec![Some(x), finite(g), hs_val, hs_ok, Some(row.time)]
            }),
        )?;
        artifacts.push(path);
    }

    // Figure-style plots: snapshot rows with the hard-sphere reference, and
    // the local correlation series.
    let mut row_series = Vec::new();
    let picks: Vec<usize> = match tr.rows.len() {
        0 => vec![],
        1 => vec![0],
        2 => vec![0, 1],
        n => vec![0, n / 4, n / 2, n - 1],
    };
    for (c, &k) in picks.iter().enumerate() {
        let row = &tr.rows[k];
        row_series.push(Series {
            label: format!("t = {:.4}", row.time),
            points: row.xs.iter().zip(&row.g2).map(|(&x, &g)| (x, g)).collect(),
            color: PALETTE[c % PALETTE.len()],
            dashed: false,
        });
    }
    if let Some(hs) = &out.hs {
        row_series.push(Series {
            label: "hard-sphere reference".into(),
            points: hs
                .xs
                .iter()
                .zip(&hs.g2)
                .zip(&hs.valid)
                .map(|((&x, &g), &ok)| (x, if ok { g } else { f64::NAN }))
                .collect(),
            color: PALETTE[5],
            dashed: true,
        });
    }
    let rows_svg = cfg.output_dir.join("quench_g2row.svg");
    LinePlot {
        title: format!("g2(0, x) at gamma = {}", cfg.physics.gamma),
        x_label: "x - x_center".into(),
        y_label: "g2".into(),
        series: row_series,
    }
    .write(&rows_svg)?;
    artifacts.push(rows_svg);

    let local_svg = cfg.output_dir.join("quench_local.svg");
    LinePlot {
        title: format!(
            "Local correlations, N = {}, gamma = {}",
            cfg.physics.n_particles, cfg.physics.gamma
        ),
        x_label: "time (4/rho^2)".into(),
        y_label: "g2, g3".into(),
        series: vec![
            Series {
                label: "g2(0,0)".into(),
                points: tr.series.times.iter().zip(&tr.series.g2_local).map(|(&t, &v)| (t, v)).collect(),
                color: PALETTE[0],
                dashed: false,
            },
            Series {
                label: "g3(0,0,0)".into(),
                points: tr.series.times.iter().zip(&tr.series.g3_local).map(|(&t, &v)| (t, v)).collect(),
                color: PALETTE[1],
                dashed: true,
            },
        ],
    }
    .write(&local_svg)?;
    artifacts.push(local_svg);

    let beat_measured = observables::dominant_frequency(&tr.series.times, &tr.series.g2_local).ok();
    let beat_bethe = (cfg.physics.gamma < 0.0)
        .then(|| bethe2::solve_bound_root(cfg.physics.gamma).map(|root| -root.energy))
        .transpose()?;
    let report_path = cfg.output_dir.join("run_report.json");
    write_json(
        &report_path,
        &json!({
            "scenario": "quench",
            "rho_center": out.rho_c,
            "gamma": cfg.physics.gamma,
            "g_final": out.g_final,
            "a_1d": out.a_1d,
            "time_unit": out.time_unit,
            "lattice_u": out.lattice_u,
            "lattice_binding_correction": out.binding_correction,
            "beat_frequency_measured": beat_measured,
            "beat_frequency_two_particle": beat_bethe,
            "prep": { "energy": out.prep.energy, "sweeps": out.prep.sweeps, "g2_center": out.prep.g2_center },
            "evolution": {
                "steps": out.summary.steps,
                "total_trunc_weight": out.summary.total_trunc_weight,
                "max_step_trunc_weight": out.summary.max_step_trunc_weight,
                "max_norm_drift": out.summary.max_norm_drift,
                "final_energy": out.summary.final_energy,
            },
            "wall_seconds": started.elapsed().as_secs_f64(),
        }),
    )?;
    artifacts.push(report_path.clone());
    let echo_path = cfg.output_dir.join("config_resolved.json");
    write_json(
        &echo_path,
        &echo_config(
            cfg,
            json!({
                "omega": resolved.omega,
                "box_length": resolved.box_length,
                "dx": resolved.lp.dx,
                "hopping": resolved.lp.hopping,
                "mean_filling": cfg.physics.n_particles as f64 / cfg.lattice.n_sites as f64,
            }),
        ),
    )?;
    artifacts.push(echo_path);

    let mut messages = vec![format!(
        "rho_c = {:.4}, g = {:.4}, {} steps, max step truncation {:.2e}",
        out.rho_c,
        out.g_final,
        out.summary.steps,
        out.summary.max_step_trunc_weight
    )];
    if let (Some(m), Some(b)) = (beat_measured, beat_bethe) {
        messages.push(format!(
            "beat frequency {:.2} vs two-particle binding {:.2} (lattice correction {:.3})",
            m, b, out.binding_correction
        ));
    }
    Ok(RunReport {
        scenario: Scenario::Quench,
        output_dir: cfg.output_dir.clone(),
        artifacts,
        messages,
    })
}

/// Exact two-particle quench: the eigenbasis series against the single-mode
/// and two-state beating approximations (plus an optional matched TEBD run).
pub fn run_two_particle(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let started = Instant::now();
    cfg.resolve()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let gamma = cfg.physics.gamma;
    let dt = cfg.dt();
    let t_final = cfg.t_final();
    let n_t = ((t_final / dt).ceil() as usize + 1).max(2);
    let times = bethe2::time_grid(t_final, n_t);
    let exact = bethe2::g2_exact_quench(gamma, &times, cfg.two_particle.n_branches)?;
    let eq_single: Vec<f64> = times.iter().map(|&t| bethe2::g2_single_mode(gamma, t)).collect();
    let eq_two: Vec<f64> = times.iter().map(|&t| bethe2::g2_two_state(gamma, t)).collect();

    let mut artifacts = Vec::new();
    let csv_path = cfg.output_dir.join("two_particle.csv");
    write_csv(
        &csv_path,
        &["time", "g2_exact", "g2_single_mode", "g2_two_state"],
        (0..times.len()).map(|k| {
            vec![Some(times[k]), Some(exact.g2[k]), Some(eq_single[k]), Some(eq_two[k])]
        }),
    )?;
    artifacts.push(csv_path);

    let mut series = vec![
        Series {
            label: "exact eigenbasis".into(),
            points: times.iter().zip(&exact.g2).map(|(&t, &v)| (t, v)).collect(),
            color: PALETTE[5],
            dashed: false,
        },
        Series {
            label: "single-mode approximation".into(),
            points: times.iter().zip(&eq_single).map(|(&t, &v)| (t, v)).collect(),
            color: PALETTE[2],
            dashed: false,
        },
        Series {
            label: "beating approximation".into(),
            points: times.iter().zip(&eq_two).map(|(&t, &v)| (t, v)).collect(),
            color: PALETTE[0],
            dashed: true,
        },
    ];

    let mut companion = serde_json::Value::Null;
    if cfg.two_particle.companion_tebd {
        let resolved = cfg.resolve()?;
        let out = quench_pipeline(cfg, &resolved)?;
        let tr = &out.trajectory;
        let path = cfg.output_dir.join("two_particle_tebd.csv");
        write_csv(
            &path,
            &["time", "g2_local"],
            (0..tr.series.times.len())
                .map(|k| vec![Some(tr.series.times[k]), finite(tr.series.g2_local[k])]),
        )?;
        artifacts.push(path);
        series.push(Series {
            label: format!("TEBD, N = {}", cfg.physics.n_particles),
            points: tr.series.times.iter().zip(&tr.series.g2_local).map(|(&t, &v)| (t, v)).collect(),
            color: PALETTE[1],
            dashed: false,
        });
        companion = json!({
            "n_particles": cfg.physics.n_particles,
            "rho_center": out.rho_c,
            "lattice_binding_correction": out.binding_correction,
        });
    }

    let svg_path = cfg.output_dir.join("two_particle.svg");
    LinePlot {
        title: format!("Quench g2(t) at gamma = {gamma}"),
        x_label: "time (4/rho^2)".into(),
        y_label: "g2(0,0)".into(),
        series,
    }
    .write(&svg_path)?;
    artifacts.push(svg_path);

    let beat = observables::dominant_frequency(&times, &exact.g2).ok();
    let report_path = cfg.output_dir.join("run_report.json");
    write_json(
        &report_path,
        &json!({
            "scenario": "two-particle",
            "gamma": gamma,
            "n_branches": cfg.two_particle.n_branches,
            "completeness": exact.completeness,
            "beat_frequency_measured": beat,
            "beat_frequency_expected": gamma * gamma + std::f64::consts::PI.powi(2),
            "companion_tebd": companion,
            "wall_seconds": started.elapsed().as_secs_f64(),
        }),
    )?;
    artifacts.push(report_path);
    let echo_path = cfg.output_dir.join("config_resolved.json");
    write_json(&echo_path, &echo_config(cfg, json!({})))?;
    artifacts.push(echo_path);

    Ok(RunReport {
        scenario: Scenario::TwoParticle,
        output_dir: cfg.output_dir.clone(),
        artifacts,
        messages: vec![format!(
            "completeness {:.10}, beat {:?} vs gamma^2 + pi^2 = {:.2}",
            exact.completeness,
            beat,
            gamma * gamma + std::f64::consts::PI.powi(2)
        )],
    })
}

/// Oracle-equivalence and asymptotics suite; exits non-zero (through
/// [`RunError::ValidationFailed`]) when any check misses its tolerance.
pub fn run_validate_scenario(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    cfg.resolve()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let report = validate::run_validate(cfg)?;
    let path = cfg.output_dir.join("validate_report.json");
    write_json(&path, &serde_json::to_value(&report).expect("serializable"))?;
    let echo_path = cfg.output_dir.join("config_resolved.json");
    write_json(&echo_path, &echo_config(cfg, json!({})))?;
    let messages: Vec<String> = report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {}: measured {:.3e} (tolerance {:.3e})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance
            )
        })
        .collect();
    if !report.passed {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        for m in &messages {
            eprintln!("{m}");
        }
        return Err(RunError::ValidationFailed { failed, total: report.checks.len() });
    }
    Ok(RunReport {
        scenario: Scenario::Validate,
        output_dir: cfg.output_dir.clone(),
        artifacts: vec![path, echo_path],
        messages,
    })
}
