//! Continuum-normalized correlation functions and evolution time series.
//!
//! All quantities are read directly from the lattice MPS. Densities are
//! ⟨n_i⟩/Δx; pair correlations use normal ordering at coinciding points, so
//! g²(x,x) = ⟨n(n−1)⟩/⟨n⟩² and the lattice Δx factors cancel in every g².
//! Non-local rows are normalized with the local densities ⟨n_a⟩⟨n_j⟩, which
//! makes g² → 1 at large separation inside a trapped cloud.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::model::LatticeParams;
use crate::mps::{MpsError, SymmetricMps};
use crate::tebd::{self, EvolutionConfig, EvolutionObserver, StepDiagnostics, TebdError};

/// Expectation values of the density below this are treated as vacuum and
/// guarded against division; guarded entries are reported as NaN and written
/// as missing values in CSV output.
pub const DENSITY_GUARD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ObservablesError {
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error("density at site {site} is below the division guard")]
    VanishingDensity { site: usize },
    #[error("three-body correlations need a local cutoff of at least 3, got {n_max}")]
    CutoffTooSmallForTriples { n_max: u8 },
    #[error("fit window [{lo}, {hi}] selects fewer than two usable points")]
    WindowTooNarrow { lo: f64, hi: f64 },
    #[error("power-law fit window contains non-positive values")]
    NonPositiveData,
    #[error("frequency estimation needs at least 8 uniformly spaced samples")]
    SeriesTooShort,
    #[error("series values must be finite")]
    NonFiniteData,
}

/// One non-local correlation row g²(x_a, x_j) at fixed anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    /// Absolute anchor position (measured from the box center).
    pub anchor_x: f64,
    /// Displacements x_j − x_a.
    pub xs: Vec<f64>,
    /// g² values; NaN marks density-guarded entries.
    pub g2: Vec<f64>,
    /// Time stamp in reporting units.
    pub time: f64,
}

/// Local correlation time series at the cloud center.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalSeries {
    pub times: Vec<f64>,
    pub g2_local: Vec<f64>,
    /// NaN when the cutoff cannot resolve triples.
    pub g3_local: Vec<f64>,
    pub density_center: Vec<f64>,
}

/// Everything recorded over one evolution run.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub series: LocalSeries,
    pub sum_rule: Vec<f64>,
    pub max_entropy: Vec<f64>,
    pub truncation_weight: Vec<f64>,
    pub norm_drift: Vec<f64>,
    pub energy: Vec<f64>,
    pub max_bond_dim: Vec<usize>,
    /// Full g² rows captured every `row_every`-th measurement.
    pub rows: Vec<CorrelationRow>,
    /// Program-time units per reported time unit (4/ρ²).
    pub time_unit: f64,
    /// Anchor site pinned at the first measurement.
    pub anchor: usize,
}

fn diagonal_op(d: usize, f: impl Fn(usize) -> f64) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |r, c| if r == c { C64::new(f(r), 0.0) } else { C64::ZERO })
}

/// Index of the density maximum, ties broken toward the smaller index.
pub fn anchor_site(occupations: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in occupations.iter().enumerate() {
        if v > occupations[best] {
            best = i;
        }
    }
    best
}

/// Density profile ρ(x_i) = ⟨n_i⟩/Δx.
pub fn density_profile(state: &SymmetricMps, lp: &LatticeParams) -> Vec<f64> {
    state.site_occupations().into_iter().map(|n| n / lp.dx).collect()
}

/// Local pair correlation g² = ⟨n(n−1)⟩/⟨n⟩² at one site.
pub fn g2_local(state: &SymmetricMps, site: usize) -> Result<f64, ObservablesError> {
    let d = state.n_max() as usize + 1;
    let nn = state
        .expectation_onsite(site, &diagonal_op(d, |n| (n * n.saturating_sub(1)) as f64))?
        .re;
    let n = state.expectation_onsite(site, &diagonal_op(d, |n| n as f64))?.re;
    if n < DENSITY_GUARD {
        return Err(ObservablesError::VanishingDensity { site });
    }
    Ok(nn / (n * n))
}

/// Local triple correlation g³ = ⟨n(n−1)(n−2)⟩/⟨n⟩³; requires n_max ≥ 3.
pub fn g3_local(state: &SymmetricMps, site: usize) -> Result<f64, ObservablesError> {
    if state.n_max() < 3 {
        return Err(ObservablesError::CutoffTooSmallForTriples { n_max: state.n_max() });
    }
    let d = state.n_max() as usize + 1;
    let nnn = state
        .expectation_onsite(
            site,
            &diagonal_op(d, |n| (n * n.saturating_sub(1) * n.saturating_sub(2)) as f64),
        )?
        .re;
    let n = state.expectation_onsite(site, &diagonal_op(d, |n| n as f64))?.re;
    if n < DENSITY_GUARD {
        return Err(ObservablesError::VanishingDensity { site });
    }
    Ok(nnn / (n * n * n))
}

/// Non-local row g²(x_a, x_j) = ⟨n_a n_j⟩ / (⟨n_a⟩⟨n_j⟩) with the
/// normal-ordered value ⟨n_a(n_a−1)⟩/⟨n_a⟩² at the anchor itself. The anchor
/// defaults to the density maximum ("center of the cloud").
pub fn g2_row(
    state: &SymmetricMps,
    lp: &LatticeParams,
    anchor: Option<usize>,
    time: f64,
) -> Result<CorrelationRow, ObservablesError> {
    let occ = state.site_occupations();
    let a = anchor.unwrap_or_else(|| anchor_site(&occ));
    if occ[a] < DENSITY_GUARD {
        return Err(ObservablesError::VanishingDensity { site: a });
    }
    let nn = state.density_correlations(a)?;
    let anchor_x = lp.x(a);
    let mut xs = Vec::with_capacity(occ.len());
    let mut g2 = Vec::with_capacity(occ.len());
    for j in 0..occ.len() {
        xs.push(lp.x(j) - anchor_x);
        if j == a {
            g2.push(nn[a] / (occ[a] * occ[a]));
        } else if occ[j] < DENSITY_GUARD {
            g2.push(f64::NAN);
        } else {
            g2.push(nn[j] / (occ[a] * occ[j]));
        }
    }
    Ok(CorrelationRow { anchor_x, xs, g2, time })
}

/// ∫ dx ρ(x) g²(x_a, x): equals N − 1 when the row is normalized with local
/// densities (the lattice identity Σ_j⟨n_a n_j⟩ − ⟨n_a⟩ = (N−1)⟨n_a⟩ holds
/// exactly, trap or no trap). Guarded (NaN) entries contribute nothing.
pub fn sum_rule(row: &CorrelationRow, density: &[f64], dx: f64) -> f64 {
    row.g2
        .iter()
        .zip(density)
        .filter(|(g, _)| g.is_finite())
        .map(|(g, rho)| g * rho * dx)
        .sum()
}

/// Least-squares slope of ln v against ln t over the window `t ∈ [lo, hi]`.
pub fn fit_power_law(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
) -> Result<f64, ObservablesError> {
    let (lo, hi) = window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < lo || t > hi || t <= 0.0 {
            continue;
        }
        if !v.is_finite() || v <= 0.0 {
            return Err(ObservablesError::NonPositiveData);
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    if xs.len() < 2 {
        return Err(ObservablesError::WindowTooNarrow { lo, hi });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(ObservablesError::WindowTooNarrow { lo, hi });
    }
    Ok(sxy / sxx)
}

/// Dominant angular frequency of a uniformly sampled series: linear detrend,
/// Hann window, zero-padded FFT for the coarse peak, then a golden-section
/// refinement of the windowed periodogram around it.
pub fn dominant_frequency(times: &[f64], values: &[f64]) -> Result<f64, ObservablesError> {
    let n = times.len().min(values.len());
    if n < 8 {
        return Err(ObservablesError::SeriesTooShort);
    }
    if values.iter().take(n).any(|v| !v.is_finite()) {
        return Err(ObservablesError::NonFiniteData);
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(ObservablesError::SeriesTooShort);
    }
    // Linear detrend.
    let nn = n as f64;
    let mx = times.iter().take(n).sum::<f64>() / nn;
    let my = values.iter().take(n).sum::<f64>() / nn;
    let sxx: f64 = times.iter().take(n).map(|t| (t - mx) * (t - mx)).sum();
    let sxy: f64 =
        times.iter().zip(values).take(n).map(|(t, v)| (t - mx) * (v - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let windowed: Vec<f64> = (0..n)
        .map(|k| {
            let hann = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
            (values[k] - my - slope * (times[k] - mx)) * hann
        })
        .collect();
    // Coarse peak from a zero-padded FFT.
    let n_pad = (8 * n).next_power_of_two();
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = windowed
        .iter()
        .map(|&v| rustfft::num_complex::Complex::new(v, 0.0))
        .chain(std::iter::repeat(rustfft::num_complex::Complex::new(0.0, 0.0)))
        .take(n_pad)
        .collect();
    FftPlanner::new().plan_fft_forward(n_pad).process(&mut buf);
    let bin_width = 2.0 * std::f64::consts::PI / (n_pad as f64 * dt);
    // Skip everything below two Rayleigh resolutions to avoid the detrend
    // residual at DC.
    let k_min = (2 * n_pad / n).max(1);
    let k_max = n_pad / 2;
    let mut best_k = k_min;
    let mut best_p = 0.0;
    for (k, z) in buf.iter().enumerate().take(k_max).skip(k_min) {
        let p = z.norm_sqr();
        if p > best_p {
            best_p = p;
            best_k = k;
        }
    }
    if best_p == 0.0 {
        return Err(ObservablesError::SeriesTooShort);
    }
    // Golden-section refinement of |Σ w_k e^{-iωt_k}|² in ±1 bin.
    let power = |omega: f64| -> f64 {
        let mut acc = C64::ZERO;
        for (k, &w) in windowed.iter().enumerate() {
            acc += C64::from_polar(1.0, -omega * times[k]) * w;
        }
        acc.norm_sqr()
    };
    let mut a = (best_k as f64 - 1.0) * bin_width;
    let mut b = (best_k as f64 + 1.0) * bin_width;
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut pc, mut pd) = (power(c), power(d));
    for _ in 0..80 {
        if pc > pd {
            b = d;
            d = c;
            pd = pc;
            c = b - phi * (b - a);
            pc = power(c);
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + phi * (b - a);
            pd = power(d);
        }
    }
    Ok(0.5 * (a + b))
}

/// Evolution observer that assembles a [`Trajectory`]: local g²/g³ at the
/// pinned anchor, the sum rule over the full row, and the engine
/// diagnostics. A full correlation row is stored every `row_every`-th
/// measurement (always including t = 0).
pub struct TrajectoryObserver<'a> {
    lp: &'a LatticeParams,
    time_unit: f64,
    row_every: Option<usize>,
    measurements: usize,
    pub trajectory: Trajectory,
}

impl<'a> TrajectoryObserver<'a> {
    /// `time_unit` converts program times to reported times (pass 4/ρ² for
    /// the conventional units, or 1.0 to keep program units).
    pub fn new(lp: &'a LatticeParams, time_unit: f64, row_every: Option<usize>) -> Self {
        Self {
            lp,
            time_unit,
            row_every,
            measurements: 0,
            trajectory: Trajectory { time_unit, ..Default::default() },
        }
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.trajectory
    }
}

impl EvolutionObserver for TrajectoryObserver<'_> {
    fn measure(&mut self, state: &SymmetricMps, diag: &StepDiagnostics) -> Result<(), String> {
        let occ = state.site_occupations();
        if self.measurements == 0 {
            self.trajectory.anchor = anchor_site(&occ);
        }
        let anchor = self.trajectory.anchor;
        let t = diag.time / self.time_unit;
        let row = g2_row(state, self.lp, Some(anchor), t).map_err(|e| e.to_string())?;
        let density: Vec<f64> = occ.iter().map(|n| n / self.lp.dx).collect();
        let g2 = g2_local(state, anchor).map_err(|e| e.to_string())?;
        let g3 = g3_local(state, anchor).unwrap_or(f64::NAN);
        let tr = &mut self.trajectory;
        tr.series.times.push(t);
        tr.series.g2_local.push(g2);
        tr.series.g3_local.push(g3);
        tr.series.density_center.push(density[anchor]);
        tr.sum_rule.push(sum_rule(&row, &density, self.lp.dx));
        tr.max_entropy.push(diag.max_entropy);
        tr.truncation_weight.push(diag.step_trunc_weight);
        tr.norm_drift.push(diag.norm_drift);
        tr.energy.push(diag.energy);
        tr.max_bond_dim.push(diag.max_bond_dim);
        if let Some(every) = self.row_every {
            if self.measurements % every.max(1) == 0 {
                tr.rows.push(row);
            }
        }
        self.measurements += 1;
        Ok(())
    }
}

/// Run a real-time evolution while recording the standard trajectory.
/// This is the one-call form of "evolve and observe": times are reported in
/// units of `time_unit` program units.
pub fn record_quench(
    state: &mut SymmetricMps,
    lp: &LatticeParams,
    config: &EvolutionConfig,
    time_unit: f64,
    row_every: Option<usize>,
) -> Result<Trajectory, TebdError> {
    let mut observer = TrajectoryObserver::new(lp, time_unit, row_every);
    tebd::evolve_real(state, lp, config, &mut observer)?;
    Ok(observer.into_trajectory())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn lattice(n_sites: usize, length: f64) -> LatticeParams {
        let dx = length / n_sites as f64;
        LatticeParams {
            n_sites,
            dx,
            hopping: 0.5 / (dx * dx),
            onsite_u: -1.0 / dx,
            potential: vec![0.0; n_sites],
            n_max: 3,
        }
    }

    #[test]
    fn density_profile_of_fock_state() {
        let lp = lattice(3, 1.5); // dx = 0.5
        let state = SymmetricMps::init_fock(&[0, 2, 0], 3).unwrap();
        assert_eq!(density_profile(&state, &lp), vec![0.0, 4.0, 0.0]);
        // Closure: sum rho_i dx = N.
        let total: f64 = density_profile(&state, &lp).iter().map(|r| r * lp.dx).sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn local_correlations_on_fock_states() {
        let state = SymmetricMps::init_fock(&[0, 2, 0], 3).unwrap();
        assert_relative_eq!(g2_local(&state, 1).unwrap(), 0.5); // 2·1/2² = 0.5
        assert_abs_diff_eq!(g3_local(&state, 1).unwrap(), 0.0);
        assert!(matches!(
            g2_local(&state, 0),
            Err(ObservablesError::VanishingDensity { site: 0 })
        ));
        let n3 = SymmetricMps::init_fock(&[3, 0], 3).unwrap();
        assert_relative_eq!(g3_local(&n3, 0).unwrap(), 6.0 / 27.0);
        let hardcore = SymmetricMps::init_fock(&[1, 1], 1).unwrap();
        assert_abs_diff_eq!(g2_local(&hardcore, 0).unwrap(), 0.0);
        assert!(matches!(
            g3_local(&hardcore, 0),
            Err(ObservablesError::CutoffTooSmallForTriples { n_max: 1 })
        ));
    }

    #[test]
    fn g2_row_on_product_state_factorizes() {
        let lp = lattice(4, 2.0);
        let state = SymmetricMps::init_fock(&[1, 1, 0, 1], 3).unwrap();
        let row = g2_row(&state, &lp, None, 0.0).unwrap();
        // Anchor is the smallest-index maximum: site 0.
        assert_eq!(row.anchor_x, lp.x(0));
        assert_relative_eq!(row.g2[1], 1.0, max_relative = 1e-12);
        assert_relative_eq!(row.g2[3], 1.0, max_relative = 1e-12);
        assert!(row.g2[2].is_nan()); // empty site is guarded
        assert_relative_eq!(row.g2[0], 0.0); // normal ordering at the anchor
        assert_relative_eq!(row.xs[3] - row.xs[1], 2.0 * lp.dx, max_relative = 1e-12);
    }

    #[test]
    fn sum_rule_is_exactly_n_minus_one_on_lattice_states() {
        let lp = lattice(4, 2.0);
        for occs in [[1u8, 1, 0, 1], [2, 0, 1, 0], [1, 0, 1, 0]] {
            let state = SymmetricMps::init_fock(&occs, 3).unwrap();
            let n: u32 = occs.iter().map(|&x| x as u32).sum();
            let row = g2_row(&state, &lp, None, 0.0).unwrap();
            let density = density_profile(&state, &lp);
            assert_relative_eq!(
                sum_rule(&row, &density, lp.dx),
                (n - 1) as f64,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn power_law_fit_recovers_synthetic_exponent() {
        let times: Vec<f64> = (1..200).map(|k| k as f64 * 1e-3).collect();
        let values: Vec<f64> = times.iter().map(|t| 2.7 * t.powf(1.3371)).collect();
        let p = fit_power_law(&times, &values, (5e-3, 0.15)).unwrap();
        assert_abs_diff_eq!(p, 1.3371, epsilon = 1e-6);
        assert!(matches!(
            fit_power_law(&times, &values, (0.5, 0.6)),
            Err(ObservablesError::WindowTooNarrow { .. })
        ));
        let bad: Vec<f64> = times.iter().map(|t| t - 0.05).collect();
        assert!(matches!(
            fit_power_law(&times, &bad, (5e-3, 0.15)),
            Err(ObservablesError::NonPositiveData)
        ));
    }

    #[test]
    fn dominant_frequency_of_synthetic_beat() {
        let omega = 733.0;
        let times: Vec<f64> = (0..4000).map(|k| k as f64 * 1e-4).collect();
        let values: Vec<f64> =
            times.iter().map(|&t| 0.3 + 0.05 * t + 0.2 * (omega * t).cos()).collect();
        let est = dominant_frequency(&times, &values).unwrap();
        assert_relative_eq!(est, omega, max_relative = 1e-3);
    }

    #[test]
    fn anchor_prefers_smaller_index_on_ties() {
        assert_eq!(anchor_site(&[0.1, 0.9, 0.9, 0.2]), 1);
        assert_eq!(anchor_site(&[1.0]), 0);
    }
}
