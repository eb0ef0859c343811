//! Continuum gas parameters and the continuum → lattice mapping.
//!
//! The physical system is a 1D Bose gas with contact interactions of strength
//! `g` (units of 1/length with ħ = m = 1) in an optional harmonic trap
//! V(x) = ½ω²x². For simulation the gas is discretized onto a sparsely filled
//! Bose-Hubbard chain with
//!
//! ```text
//! J = 1/(2Δx²),    U = g/Δx,    V_i = ½ω²x_i²
//! ```
//!
//! which reproduces the continuum dispersion −½∂² and the δ-interaction to
//! O(Δx²) at low filling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean lattice occupation above which the low-filling mapping is no longer
/// trusted and [`discretize`] refuses to proceed.
pub const MAX_MEAN_FILLING: f64 = 0.15;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("n_particles must be at least 1")]
    NoParticles,
    #[error("reference density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("box length must be positive, got {0}")]
    NonPositiveBoxLength(f64),
    #[error("trap frequency must be non-negative, got {0}")]
    NegativeTrapFrequency(f64),
    #[error("interaction strength must be finite, got {0}")]
    NonFiniteInteraction(f64),
    #[error("need at least {min} sites for {n} particles, got {got}")]
    TooFewSites { min: usize, n: usize, got: usize },
    #[error("local occupation cutoff must be at least 2, got {0}")]
    CutoffTooSmall(u8),
    #[error("mean filling {filling:.4} exceeds the sparse-lattice bound {max}")]
    FillingTooHigh { filling: f64, max: f64 },
    #[error("scattering length is undefined at g = 0")]
    ZeroInteraction,
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
}

/// Physical description of the continuum gas in units ħ = m = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumParams {
    /// Particle number N.
    pub n_particles: usize,
    /// Interaction strength g (1/length); either sign, must be finite.
    pub g: f64,
    /// Reference linear density ρ, conventionally the cloud-center density.
    pub rho: f64,
    /// Trap angular frequency ω ≥ 0; zero means no trap.
    pub omega: f64,
    /// Total simulated length.
    pub box_length: f64,
}

impl ContinuumParams {
    pub fn new(
        n_particles: usize,
        g: f64,
        rho: f64,
        omega: f64,
        box_length: f64,
    ) -> Result<Self, ModelError> {
        if n_particles < 1 {
            return Err(ModelError::NoParticles);
        }
        if !(rho > 0.0) {
            return Err(ModelError::NonPositiveDensity(rho));
        }
        if !(box_length > 0.0) {
            return Err(ModelError::NonPositiveBoxLength(box_length));
        }
        if !(omega >= 0.0) {
            return Err(ModelError::NegativeTrapFrequency(omega));
        }
        if !g.is_finite() {
            return Err(ModelError::NonFiniteInteraction(g));
        }
        Ok(Self { n_particles, g, rho, omega, box_length })
    }

    /// Dimensionless Tonks parameter γ = g/ρ.
    pub fn tonks_parameter(&self) -> f64 {
        tonks_parameter(self.g, self.rho).expect("rho validated positive")
    }

    /// The time unit 4/ρ² used for reporting dynamics.
    pub fn unit_system(&self) -> UnitSystem {
        UnitSystem::from_density(self.rho)
    }
}

/// Discretized Bose-Hubbard description of the gas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    /// Number of lattice sites M.
    pub n_sites: usize,
    /// Lattice spacing Δx.
    pub dx: f64,
    /// Hopping J = 1/(2Δx²).
    pub hopping: f64,
    /// On-site interaction U = g/Δx.
    pub onsite_u: f64,
    /// Per-site trap energy V_i, length `n_sites`.
    pub potential: Vec<f64>,
    /// Local occupation cutoff (physical dimension is `n_max + 1`).
    pub n_max: u8,
}

impl LatticeParams {
    /// Site position measured from the box center.
    pub fn x(&self, site: usize) -> f64 {
        (site as f64 + 0.5) * self.dx - 0.5 * self.n_sites as f64 * self.dx
    }

    /// Number of nearest-neighbour bonds.
    pub fn n_bonds(&self) -> usize {
        self.n_sites - 1
    }

    /// Same lattice with a different on-site interaction; used to switch the
    /// coupling at the quench.
    pub fn with_onsite_u(&self, onsite_u: f64) -> Self {
        Self { onsite_u, potential: self.potential.clone(), ..*self }
    }

    /// Hardcore (n_max = 1) copy of this lattice with the interaction removed.
    /// With at most one particle per site, U multiplies n(n−1) = 0, so this is
    /// the γ = +∞ limit realized structurally.
    pub fn hardcore(&self) -> Self {
        Self { n_max: 1, onsite_u: 0.0, potential: self.potential.clone(), ..*self }
    }
}

/// Working unit system: ħ = m = 1, times reported in units of 4/ρ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub hbar: f64,
    pub mass: f64,
    /// 4/ρ², the time unit used for all reported dynamics.
    pub time_unit: f64,
}

impl UnitSystem {
    pub fn from_density(rho: f64) -> Self {
        assert!(rho > 0.0, "density must be positive");
        Self { hbar: 1.0, mass: 1.0, time_unit: 4.0 / (rho * rho) }
    }

    /// Convert a program-unit time to reporting units of 4/ρ².
    pub fn to_reported(&self, t_program: f64) -> f64 {
        t_program / self.time_unit
    }

    /// Convert a reported time (units of 4/ρ²) to program units.
    pub fn to_program(&self, t_reported: f64) -> f64 {
        t_reported * self.time_unit
    }
}

/// Map the continuum gas onto a Bose-Hubbard chain with `n_sites` sites and
/// local cutoff `n_max`.
///
/// Fails when the mean filling N/M reaches [`MAX_MEAN_FILLING`] (the mapping
/// assumes a sparse lattice), when fewer than 2N sites are requested, or when
/// `n_max < 2`.
pub fn discretize(
    cp: &ContinuumParams,
    n_sites: usize,
    n_max: u8,
) -> Result<LatticeParams, ModelError> {
    if n_max < 2 {
        return Err(ModelError::CutoffTooSmall(n_max));
    }
    if n_sites < 2 * cp.n_particles {
        return Err(ModelError::TooFewSites {
            min: 2 * cp.n_particles,
            n: cp.n_particles,
            got: n_sites,
        });
    }
    let filling = cp.n_particles as f64 / n_sites as f64;
    if filling >= MAX_MEAN_FILLING {
        return Err(ModelError::FillingTooHigh { filling, max: MAX_MEAN_FILLING });
    }
    let dx = cp.box_length / n_sites as f64;
    let hopping = 0.5 / (dx * dx);
    let onsite_u = cp.g / dx;
    let half_m = 0.5 * n_sites as f64 * dx;
    let potential = (0..n_sites)
        .map(|i| {
            let x = (i as f64 + 0.5) * dx - half_m;
            0.5 * cp.omega * cp.omega * x * x
        })
        .collect();
    Ok(LatticeParams { n_sites, dx, hopping, onsite_u, potential, n_max })
}

/// Dimensionless Tonks parameter γ = g/ρ.
pub fn tonks_parameter(g: f64, rho: f64) -> Result<f64, ModelError> {
    if !(rho > 0.0) {
        return Err(ModelError::NonPositiveDensity(rho));
    }
    Ok(g / rho)
}

/// 1D scattering length a_1D = −2/g.
pub fn scattering_length(g: f64) -> Result<f64, ModelError> {
    if g == 0.0 {
        return Err(ModelError::ZeroInteraction);
    }
    Ok(-2.0 / g)
}

/// Beat frequency of the pair-bound-state oscillation, ω = γ²ħρ²/(4m).
/// With ħ = m = 1 this is γ²ρ²/4, the pair binding energy at strong coupling.
pub fn beat_frequency(gamma: f64, rho: f64, mass: f64) -> Result<f64, ModelError> {
    if !(rho > 0.0) {
        return Err(ModelError::NonPositiveDensity(rho));
    }
    if !(mass > 0.0) {
        return Err(ModelError::NonPositiveMass(mass));
    }
    let hbar = 1.0;
    Ok(gamma * gamma * hbar * rho * rho / (4.0 * mass))
}

/// Beat frequency expressed through the longitudinal trap frequency for a
/// harmonically trapped TG cloud: ω = γ²Nω∥/4.
pub fn beat_frequency_trapped(gamma: f64, n_particles: usize, omega_par: f64) -> f64 {
    gamma * gamma * n_particles as f64 * omega_par / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cp(n: usize, g: f64, omega: f64, box_length: f64) -> ContinuumParams {
        ContinuumParams::new(n, g, 1.0, omega, box_length).unwrap()
    }

    #[test]
    fn discretize_paper_scale() {
        // N = 18 on 1280 sites at gamma = -18.7931 with unit central density.
        let p = ContinuumParams::new(18, -18.7931, 1.0, 0.1, 40.0).unwrap();
        let lp = discretize(&p, 1280, 4).unwrap();
        assert_eq!(lp.n_sites, 1280);
        assert_relative_eq!(lp.dx, 40.0 / 1280.0);
        assert_relative_eq!(lp.hopping, 0.5 / (lp.dx * lp.dx));
        assert_relative_eq!(lp.onsite_u, -18.7931 / lp.dx);
        assert!(18.0 / 1280.0 < MAX_MEAN_FILLING);
    }

    #[test]
    fn discretize_free_gas() {
        let lp = discretize(&cp(2, 0.0, 0.0, 10.0), 64, 2).unwrap();
        assert_eq!(lp.onsite_u, 0.0);
        assert_relative_eq!(lp.hopping, 0.5 / (lp.dx * lp.dx));
        assert!(lp.potential.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn discretize_known_numbers() {
        // dx = 0.1, g = -2 -> J = 50, U = -20.
        let p = ContinuumParams::new(2, -2.0, 1.0, 0.0, 1.6).unwrap();
        let lp = discretize(&p, 16, 3).unwrap();
        assert_relative_eq!(lp.dx, 0.1);
        assert_relative_eq!(lp.hopping, 50.0);
        assert_relative_eq!(lp.onsite_u, -20.0);
    }

    #[test]
    fn discretize_rejects_bad_inputs() {
        let p = cp(10, -1.0, 0.0, 10.0);
        assert!(matches!(discretize(&p, 19, 4), Err(ModelError::TooFewSites { .. })));
        assert!(matches!(discretize(&p, 64, 1), Err(ModelError::CutoffTooSmall(1))));
        // 10 particles on 20 sites: filling 0.5 >= 0.15 even though 2N fits.
        let p2 = cp(10, -1.0, 0.0, 10.0);
        assert!(matches!(discretize(&p2, 20, 4), Err(ModelError::FillingTooHigh { .. })));
    }

    #[test]
    fn halving_dx_scales_couplings() {
        let p = cp(2, -3.0, 0.0, 12.8);
        let coarse = discretize(&p, 64, 4).unwrap();
        let fine = discretize(&p, 128, 4).unwrap();
        assert_relative_eq!(fine.hopping, 4.0 * coarse.hopping, max_relative = 1e-14);
        assert_relative_eq!(fine.onsite_u, 2.0 * coarse.onsite_u, max_relative = 1e-14);
    }

    #[test]
    fn potential_symmetric_about_center() {
        let p = cp(2, -1.0, 0.7, 8.0);
        for m in [31usize, 32] {
            let lp = discretize(&p, m, 4).unwrap();
            for i in 0..m {
                assert_abs_diff_eq!(lp.potential[i], lp.potential[m - 1 - i], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn tonks_parameter_values() {
        assert_eq!(tonks_parameter(-2.0, 1.0).unwrap(), -2.0);
        assert_eq!(tonks_parameter(0.0, 5.0).unwrap(), 0.0);
        assert!(tonks_parameter(1.0, 0.0).is_err());
    }

    #[test]
    fn scattering_length_values() {
        assert_eq!(scattering_length(-2.0).unwrap(), 1.0);
        assert_eq!(scattering_length(4.0).unwrap(), -0.5);
        assert_eq!(scattering_length(0.0), Err(ModelError::ZeroInteraction));
    }

    #[test]
    fn gamma_a1d_rho_identity() {
        // gamma * a_1D * rho = -2 for any valid (g, rho).
        for &(g, rho) in &[(-2.0, 1.0), (3.5, 0.4), (-18.7931, 2.3), (1e-3, 10.0)] {
            let gamma = tonks_parameter(g, rho).unwrap();
            let a = scattering_length(g).unwrap();
            assert_relative_eq!(gamma * a * rho, -2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn beat_frequency_values() {
        assert_relative_eq!(beat_frequency(-10.0, 2.0, 1.0).unwrap(), 100.0);
        assert_relative_eq!(beat_frequency(-1.0, 1.0, 1.0).unwrap(), 0.25);
        assert_relative_eq!(beat_frequency_trapped(-10.0, 4, 0.5), 50.0);
        assert!(beat_frequency(-1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn time_unit_round_trip() {
        let u = UnitSystem::from_density(1.5);
        assert_relative_eq!(u.time_unit, 4.0 / 2.25);
        assert_relative_eq!(u.to_program(u.to_reported(0.37)), 0.37, max_relative = 1e-15);
    }
}
