//! Experiment configuration: one JSON document, every field optional with a
//! sensible desk-scale default, command-line flags overriding file fields.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{self, ContinuumParams, LatticeParams, ModelError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum Scenario {
    /// Two-particle spectrum against 1/γ.
    Spectrum,
    /// Trapped many-body quench trajectory.
    Quench,
    /// Exact two-particle quench vs. the beating approximations.
    TwoParticle,
    /// Oracle-equivalence and asymptotics validation suite.
    Validate,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Quench => "quench",
            Scenario::TwoParticle => "two-particle",
            Scenario::Validate => "validate",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    pub n_particles: usize,
    /// Post-quench Tonks parameter γ = g/ρ (ρ is the measured cloud-center
    /// density of the prepared state).
    pub gamma: f64,
    /// Initial repulsive γ; absent means the hardcore γ = +∞ limit.
    pub gamma_initial: Option<f64>,
    /// Target cloud-center density; sets the length scale of the run.
    pub rho: f64,
    /// Trap frequency; derived from `rho` and N when absent.
    pub omega: Option<f64>,
    /// Simulated box length; derived from the cloud radius when absent.
    pub box_length: Option<f64>,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            n_particles: 6,
            gamma: -18.7931,
            gamma_initial: None,
            rho: 1.0,
            omega: None,
            box_length: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub n_sites: usize,
    pub n_max: u8,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self { n_sites: 256, n_max: 4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    /// Time step; reported units of 4/ρ² for the quench scenario, ring units
    /// for two-particle, program units for the validate Trotter ladder.
    /// Absent picks the scenario default.
    pub dt: Option<f64>,
    /// Total evolved time in the same units as `dt`.
    pub t_final: Option<f64>,
    /// Steps between measurements.
    pub measure_every: usize,
    /// Measurements between stored full correlation rows.
    pub row_every: usize,
    /// Trotter order (2 or 4).
    pub order: u8,
    /// Per-step truncation-weight abort threshold.
    pub abort_trunc_weight: f64,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            dt: None,
            t_final: None,
            measure_every: 15,
            row_every: 8,
            order: 4,
            abort_trunc_weight: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    pub chi_max: usize,
    pub svd_cutoff: f64,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self { chi_max: 64, svd_cutoff: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub inv_gamma_min: f64,
    pub inv_gamma_max: f64,
    pub points: usize,
    pub n_branches: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { inv_gamma_min: -0.4, inv_gamma_max: 0.4, points: 161, n_branches: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TwoParticleSection {
    /// Gas branches kept in the eigenbasis expansion.
    pub n_branches: usize,
    /// Also run the matched many-body TEBD quench and emit its local g².
    pub companion_tebd: bool,
}

impl Default for TwoParticleSection {
    fn default() -> Self {
        Self { n_branches: 400, companion_tebd: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    /// Randomized property-test instances per suite.
    pub cases: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self { cases: 60 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub physics: PhysicsSection,
    pub lattice: LatticeSection,
    pub evolution: EvolutionSection,
    pub truncation: TruncationSection,
    pub spectrum: SpectrumSection,
    pub two_particle: TwoParticleSection,
    pub validate: ValidateSection,
    /// Seed for randomized validation instances (the physics runs are
    /// deterministic and ignore it).
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Quench,
            physics: PhysicsSection::default(),
            lattice: LatticeSection::default(),
            evolution: EvolutionSection::default(),
            truncation: TruncationSection::default(),
            spectrum: SpectrumSection::default(),
            two_particle: TwoParticleSection::default(),
            validate: ValidateSection::default(),
            seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The paper-scale preset: N = 18 on 1280 sites at χ = 100. Loads and
    /// runs like any other configuration, but a full trajectory is a
    /// long-running job rather than a desk-scale one.
    pub fn paper_scale(mut self) -> Self {
        self.physics.n_particles = 18;
        self.lattice.n_sites = 1280;
        self.truncation.chi_max = 100;
        self
    }

    /// Scenario default for `evolution.dt` (see the field's unit note).
    pub fn default_dt(&self) -> f64 {
        match self.scenario {
            Scenario::Quench => 5e-5,
            Scenario::TwoParticle => 1e-5,
            Scenario::Validate => 0.05,
            Scenario::Spectrum => 5e-5,
        }
    }

    /// Scenario default for `evolution.t_final`.
    pub fn default_t_final(&self) -> f64 {
        match self.scenario {
            Scenario::Quench => 0.09,
            Scenario::TwoParticle => 5e-3,
            Scenario::Validate => 0.4,
            Scenario::Spectrum => 0.09,
        }
    }

    pub fn dt(&self) -> f64 {
        self.evolution.dt.unwrap_or_else(|| self.default_dt())
    }

    pub fn t_final(&self) -> f64 {
        self.evolution.t_final.unwrap_or_else(|| self.default_t_final())
    }

    /// Validate every precondition the configured scenario will rely on and
    /// assemble the physical setup. Fails fast with field-level messages.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let p = &self.physics;
        if p.n_particles == 0 {
            return Err(invalid("physics.n_particles", "must be at least 1"));
        }
        if !(p.rho > 0.0) {
            return Err(invalid("physics.rho", format!("must be positive, got {}", p.rho)));
        }
        if !p.gamma.is_finite() {
            return Err(invalid("physics.gamma", "must be finite"));
        }
        if let Some(gi) = p.gamma_initial {
            if !(gi > 0.0) {
                return Err(invalid(
                    "physics.gamma_initial",
                    "must be positive (repulsive); omit it for the hardcore limit",
                ));
            }
        }
        let n = p.n_particles as f64;
        // Trap frequency giving central density rho in the Tonks cloud, and a
        // box comfortably wider than the cloud diameter 2R = 4N/(pi rho).
        let omega = p.omega.unwrap_or(std::f64::consts::PI.powi(2) * p.rho * p.rho / (2.0 * n));
        if !(omega >= 0.0) {
            return Err(invalid("physics.omega", format!("must be non-negative, got {omega}")));
        }
        let cloud_radius = 2.0 * n / (std::f64::consts::PI * p.rho);
        let box_length = p.box_length.unwrap_or(2.4 * cloud_radius);
        let cp = ContinuumParams::new(p.n_particles, p.gamma * p.rho, p.rho, omega, box_length)
            .map_err(|e| invalid("physics", e.to_string()))?;
        let lp = model::discretize(&cp, self.lattice.n_sites, self.lattice.n_max).map_err(
            |e| match e {
                ModelError::CutoffTooSmall(_) => invalid("lattice.n_max", e.to_string()),
                _ => invalid("lattice.n_sites", e.to_string()),
            },
        )?;
        let dt = self.dt();
        let t_final = self.t_final();
        if !(dt > 0.0) {
            return Err(invalid("evolution.dt", format!("must be positive, got {dt}")));
        }
        if !(t_final >= dt) {
            return Err(invalid(
                "evolution.t_final",
                format!("must be at least dt = {dt}, got {t_final}"),
            ));
        }
        if self.evolution.measure_every == 0 {
            return Err(invalid("evolution.measure_every", "must be at least 1"));
        }
        if self.evolution.row_every == 0 {
            return Err(invalid("evolution.row_every", "must be at least 1"));
        }
        if self.evolution.order != 2 && self.evolution.order != 4 {
            return Err(invalid("evolution.order", "must be 2 or 4"));
        }
        if !(self.evolution.abort_trunc_weight > 0.0) {
            return Err(invalid("evolution.abort_trunc_weight", "must be positive"));
        }
        let policy = crate::mps::TruncationPolicy::new(
            self.truncation.chi_max,
            self.truncation.svd_cutoff,
        )
        .map_err(|e| invalid("truncation", e.to_string()))?;
        if self.spectrum.points < 2 {
            return Err(invalid("spectrum.points", "need at least 2 grid points"));
        }
        if !(self.spectrum.inv_gamma_min < self.spectrum.inv_gamma_max) {
            return Err(invalid("spectrum.inv_gamma_min", "range must be non-empty"));
        }
        if self.spectrum.n_branches == 0 {
            return Err(invalid("spectrum.n_branches", "need at least 1 branch"));
        }
        if self.two_particle.n_branches < 8 {
            return Err(invalid("two_particle.n_branches", "need at least 8 branches"));
        }
        if self.scenario == Scenario::TwoParticle && !(p.gamma < 0.0) {
            return Err(invalid(
                "physics.gamma",
                "the two-particle comparison quenches to attractive coupling (gamma < 0)",
            ));
        }
        if self.validate.cases == 0 {
            return Err(invalid("validate.cases", "need at least 1 case"));
        }
        Ok(Resolved { cp, lp, omega, box_length, policy, dt, t_final })
    }
}

/// Fully derived physical setup echoed next to every run's outputs.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cp: ContinuumParams,
    pub lp: LatticeParams,
    pub omega: f64,
    pub box_length: f64,
    pub policy: crate::mps::TruncationPolicy,
    pub dt: f64,
    pub t_final: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_resolves() {
        let cfg = ExperimentConfig::default();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.lp.n_sites, 256);
        assert_eq!(r.cp.n_particles, 6);
        // gamma * a_1d * rho = -2 wiring.
        assert!((r.cp.g - cfg.physics.gamma * cfg.physics.rho).abs() < 1e-12);
        // Cloud diameter fits inside the box with margin.
        let cloud = 4.0 * 6.0 / std::f64::consts::PI;
        assert!(r.box_length > 1.1 * cloud);
    }

    #[test]
    fn paper_scale_preset_loads_and_resolves() {
        let cfg = ExperimentConfig::default().paper_scale();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.lp.n_sites, 1280);
        assert_eq!(cfg.truncation.chi_max, 100);
        assert!(18.0 / 1280.0 < crate::model::MAX_MEAN_FILLING);
    }

    #[test]
    fn json_round_trip_and_unknown_field_rejection() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(cfg, back);
        assert!(ExperimentConfig::from_json("{\"scenario\":\"quench\",\"typo\":1}").is_err());
        let partial = ExperimentConfig::from_json("{\"scenario\":\"spectrum\"}").unwrap();
        assert_eq!(partial.scenario, Scenario::Spectrum);
        assert_eq!(partial.lattice.n_sites, 256);
    }

    #[test]
    fn field_level_errors() {
        let mut cfg = ExperimentConfig::default();
        cfg.lattice.n_sites = 8;
        match cfg.resolve() {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "lattice.n_sites"),
            other => panic!("expected field error, got {other:?}"),
        }
        let mut cfg = ExperimentConfig::default();
        cfg.evolution.order = 3;
        assert!(matches!(cfg.resolve(), Err(ConfigError::Invalid { field: "evolution.order", .. })));
        let mut cfg = ExperimentConfig::default();
        cfg.scenario = Scenario::TwoParticle;
        cfg.physics.gamma = 3.0;
        assert!(matches!(cfg.resolve(), Err(ConfigError::Invalid { field: "physics.gamma", .. })));
    }
}
