//! Particle-number-conserving matrix product states.
//!
//! Site tensors are stored block-sparse: the bond index on each side of a
//! site is labelled by the cumulative particle number to the left of that
//! bond, and a site block `(q, n)` (left charge q, occupation n) connects the
//! left sector q to the right sector q + n. The leftmost bond carries charge
//! 0 and the rightmost the total particle number, which makes global number
//! conservation a purely structural property — no operation can change it.
//!
//! States are kept in mixed-canonical form around an orthogonality center:
//! tensors left of the center are left-orthogonal, tensors right of it
//! right-orthogonal. Expectation values close against the identity on both
//! sides of the (center-containing) contraction window, and the Schmidt
//! spectrum of the center bonds can be read off with one block SVD.

mod gate;
mod snapshot;
mod svd;
mod update;

pub use gate::{pair_states, TwoSiteOp};
pub use snapshot::SnapshotError;
pub use update::{SweepDirection, UpdateStats};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Schmidt values below `DEGENERACY_TOL`·λ_max of the last kept value are
/// considered degenerate with it; whole multiplets are kept together even if
/// that slightly exceeds the bond-dimension cap.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MpsError {
    #[error("occupation {occ} at site {site} exceeds the local cutoff {n_max}")]
    OccupationExceedsCutoff { site: usize, occ: u8, n_max: u8 },
    #[error("state must contain at least one site")]
    EmptySystem,
    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("bond {bond} out of range for {n_bonds} bonds")]
    BondOutOfRange { bond: usize, n_bonds: usize },
    #[error("states have different site counts ({0} vs {1})")]
    SiteCountMismatch(usize, usize),
    #[error("states carry different total charge ({0} vs {1})")]
    ChargeMismatch(u32, u32),
    #[error("operator dimension mismatch: expected {expected}, got {got}")]
    OperatorDimensionMismatch { expected: usize, got: usize },
    #[error("two-site operator does not conserve the particle number")]
    NonConservingGate,
    #[error("gate built for cutoff {gate} applied to state with cutoff {state}")]
    GateCutoffMismatch { state: u8, gate: u8 },
    #[error("two-point correlator requires distinct sites; use a one-site operator at {0}")]
    SamePoint(usize),
    #[error("operator has off-diagonal occupation elements; only number-diagonal one-site factors are supported in multi-point correlators")]
    NonDiagonalOperator,
    #[error("truncation removed every Schmidt value")]
    ZeroStateAfterTruncation,
    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),
    #[error("Schmidt spectrum requested at bond {bond} but the orthogonality center is at site {center}")]
    NotCanonicalAtBond { bond: usize, center: usize },
    #[error("cutoff can only be expanded: state has {current}, requested {requested}")]
    CutoffShrink { current: u8, requested: u8 },
}

/// Bond-dimension cap and relative discard threshold for truncated updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Maximum total (all charge sectors) number of Schmidt values kept.
    pub chi_max: usize,
    /// Relative threshold: values below `svd_cutoff`·λ_max are discarded.
    pub svd_cutoff: f64,
}

impl TruncationPolicy {
    pub fn new(chi_max: usize, svd_cutoff: f64) -> Result<Self, MpsError> {
        if chi_max < 1 {
            return Err(MpsError::InvalidPolicy("chi_max must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&svd_cutoff) {
            return Err(MpsError::InvalidPolicy(format!(
                "svd_cutoff must lie in [0, 1), got {svd_cutoff}"
            )));
        }
        Ok(Self { chi_max, svd_cutoff })
    }

    /// No bond-dimension cap and no discard threshold (exact evolution).
    pub fn exact() -> Self {
        Self { chi_max: usize::MAX, svd_cutoff: 0.0 }
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { chi_max: 100, svd_cutoff: 1e-10 }
    }
}

/// Schmidt spectrum across one bond, jointly sorted over all charge sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BondSpectrum {
    /// Schmidt values, descending.
    pub values: Vec<f64>,
    /// Particle number to the left of the bond for each value.
    pub charges: Vec<u32>,
}

impl BondSpectrum {
    /// Von Neumann entanglement entropy −Σ p ln p with p = λ²/Σλ².
    pub fn entropy(&self) -> f64 {
        let total: f64 = self.values.iter().map(|l| l * l).sum();
        if total <= 0.0 {
            return 0.0;
        }
        -self
            .values
            .iter()
            .map(|l| l * l / total)
            .filter(|&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|l| l * l).sum()
    }
}

/// Charge sectors (and their dimensions) living on one bond.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BondBasis {
    sectors: Vec<(u32, usize)>,
}

impl BondBasis {
    fn single(charge: u32) -> Self {
        Self { sectors: vec![(charge, 1)] }
    }

    fn from_sorted(sectors: Vec<(u32, usize)>) -> Self {
        debug_assert!(sectors.windows(2).all(|w| w[0].0 < w[1].0));
        Self { sectors }
    }

    pub fn dim(&self, charge: u32) -> Option<usize> {
        self.sectors
            .binary_search_by_key(&charge, |&(q, _)| q)
            .ok()
            .map(|i| self.sectors[i].1)
    }

    pub fn total_dim(&self) -> usize {
        self.sectors.iter().map(|&(_, d)| d).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, usize)> + '_ {
        self.sectors.iter().copied()
    }
}

type Blocks = BTreeMap<(u32, u8), DMatrix<C64>>;

/// A matrix product state with explicit particle-number block structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMps {
    n_max: u8,
    total_charge: u32,
    /// `n_sites + 1` bond bases; bonds[0] = {0}, bonds[n_sites] = {N}.
    bonds: Vec<BondBasis>,
    sites: Vec<Blocks>,
    center: usize,
}

impl SymmetricMps {
    /// Product (Fock) state with the given site occupations; exactly
    /// normalized, all bond dimensions one, center at site 0.
    pub fn init_fock(occupations: &[u8], n_max: u8) -> Result<Self, MpsError> {
        if occupations.is_empty() {
            return Err(MpsError::EmptySystem);
        }
        let mut bonds = Vec::with_capacity(occupations.len() + 1);
        let mut sites = Vec::with_capacity(occupations.len());
        let mut charge = 0u32;
        bonds.push(BondBasis::single(0));
        for (site, &occ) in occupations.iter().enumerate() {
            if occ > n_max {
                return Err(MpsError::OccupationExceedsCutoff { site, occ, n_max });
            }
            let mut blocks = Blocks::new();
            blocks.insert((charge, occ), DMatrix::from_element(1, 1, C64::ONE));
            sites.push(blocks);
            charge += occ as u32;
            bonds.push(BondBasis::single(charge));
        }
        Ok(Self { n_max, total_charge: charge, bonds, sites, center: 0 })
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_bonds(&self) -> usize {
        self.sites.len() - 1
    }

    pub fn n_max(&self) -> u8 {
        self.n_max
    }

    pub fn total_charge(&self) -> u32 {
        self.total_charge
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Total dimension of each internal bond (between sites b and b+1).
    pub fn bond_dims(&self) -> Vec<usize> {
        (1..self.sites.len()).map(|b| self.bonds[b].total_dim()).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Norm of the state; with a valid center this is just the Frobenius
    /// norm of the center tensor.
    pub fn norm(&self) -> f64 {
        self.sites[self.center]
            .values()
            .map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Scale the center tensor so the state has unit norm.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm();
        if norm > 0.0 {
            let s = C64::new(1.0 / norm, 0.0);
            for block in self.sites[self.center].values_mut() {
                *block *= s;
            }
        }
        norm
    }

    /// Raise the local occupation cutoff (the block data is unchanged; only
    /// the range of admissible occupations grows).
    pub fn expand_cutoff(&mut self, n_max: u8) -> Result<(), MpsError> {
        if n_max < self.n_max {
            return Err(MpsError::CutoffShrink { current: self.n_max, requested: n_max });
        }
        self.n_max = n_max;
        Ok(())
    }

    /// Move the orthogonality center to `site` by QR sweeps.
    pub fn move_center_to(&mut self, site: usize) -> Result<(), MpsError> {
        if site >= self.sites.len() {
            return Err(MpsError::SiteOutOfRange { site, n_sites: self.sites.len() });
        }
        while self.center < site {
            self.shift_center_right();
        }
        while self.center > site {
            self.shift_center_left();
        }
        Ok(())
    }

    /// One QR step to the right: left-orthogonalize the center site and
    /// absorb the triangular factor into its right neighbour.
    fn shift_center_right(&mut self) {
        let c = self.center;
        debug_assert!(c + 1 < self.sites.len());
        // Group the center blocks by right charge.
        let mut groups: BTreeMap<u32, Vec<(u32, u8)>> = BTreeMap::new();
        for &(q, n) in self.sites[c].keys() {
            groups.entry(q + n as u32).or_default().push((q, n));
        }
        let mut new_center = Blocks::new();
        let mut r_factors: BTreeMap<u32, DMatrix<C64>> = BTreeMap::new();
        let mut new_sectors = Vec::new();
        for (qr, keys) in groups {
            let dim_r = self.bonds[c + 1].dim(qr).expect("block outside bond basis");
            let rows: usize = keys.iter().map(|k| self.sites[c][k].nrows()).sum();
            let mut stacked = DMatrix::<C64>::zeros(rows, dim_r);
            let mut off = 0;
            for k in &keys {
                let b = &self.sites[c][k];
                stacked.view_mut((off, 0), (b.nrows(), dim_r)).copy_from(b);
                off += b.nrows();
            }
            let qr_fact = stacked.qr();
            let q_mat = qr_fact.q();
            let r_mat = qr_fact.r();
            let rank = q_mat.ncols();
            if rank == 0 {
                continue;
            }
            let mut off = 0;
            for k in keys {
                let nrows = self.sites[c][&k].nrows();
                new_center.insert(k, q_mat.rows(off, nrows).into_owned());
                off += nrows;
            }
            new_sectors.push((qr, rank));
            r_factors.insert(qr, r_mat);
        }
        let old_next = std::mem::take(&mut self.sites[c + 1]);
        let mut new_next = Blocks::new();
        for ((q, n), block) in old_next {
            if let Some(r) = r_factors.get(&q) {
                new_next.insert((q, n), r * block);
            }
        }
        self.sites[c] = new_center;
        self.sites[c + 1] = new_next;
        self.bonds[c + 1] = BondBasis::from_sorted(new_sectors);
        self.center = c + 1;
    }

    /// One LQ step to the left (as QR of the adjoint).
    fn shift_center_left(&mut self) {
        let c = self.center;
        debug_assert!(c > 0);
        let mut groups: BTreeMap<u32, Vec<(u32, u8)>> = BTreeMap::new();
        for &(q, n) in self.sites[c].keys() {
            groups.entry(q).or_default().push((q, n));
        }
        let mut new_center = Blocks::new();
        let mut l_factors: BTreeMap<u32, DMatrix<C64>> = BTreeMap::new();
        let mut new_sectors = Vec::new();
        for (ql, keys) in groups {
            let dim_l = self.bonds[c].dim(ql).expect("block outside bond basis");
            let cols: usize = keys.iter().map(|k| self.sites[c][k].ncols()).sum();
            let mut stacked = DMatrix::<C64>::zeros(dim_l, cols);
            let mut off = 0;
            for k in &keys {
                let b = &self.sites[c][k];
                stacked.view_mut((0, off), (dim_l, b.ncols())).copy_from(b);
                off += b.ncols();
            }
            // stacked = L · Q with row-orthonormal Q, via QR of the adjoint.
            let qr_fact = stacked.adjoint().qr();
            let q_adj = qr_fact.q().adjoint();
            let l_mat = qr_fact.r().adjoint();
            let rank = q_adj.nrows();
            if rank == 0 {
                continue;
            }
            let mut off = 0;
            for k in keys {
                let ncols = self.sites[c][&k].ncols();
                new_center.insert(k, q_adj.columns(off, ncols).into_owned());
                off += ncols;
            }
            new_sectors.push((ql, rank));
            l_factors.insert(ql, l_mat);
        }
        let old_prev = std::mem::take(&mut self.sites[c - 1]);
        let mut new_prev = Blocks::new();
        for ((q, n), block) in old_prev {
            if let Some(l) = l_factors.get(&(q + n as u32)) {
                new_prev.insert((q, n), block * l);
            }
        }
        self.sites[c] = new_center;
        self.sites[c - 1] = new_prev;
        self.bonds[c] = BondBasis::from_sorted(new_sectors);
        self.center = c - 1;
    }

    /// Schmidt spectrum across `bond` (between sites `bond` and `bond + 1`).
    /// The center must already sit on one of the two adjacent sites.
    pub fn bond_spectrum(&self, bond: usize) -> Result<BondSpectrum, MpsError> {
        if bond >= self.n_bonds() {
            return Err(MpsError::BondOutOfRange { bond, n_bonds: self.n_bonds() });
        }
        if self.center != bond && self.center != bond + 1 {
            return Err(MpsError::NotCanonicalAtBond { bond, center: self.center });
        }
        let mut entries: Vec<(f64, u32)> = Vec::new();
        if self.center == bond {
            // Group by right charge; the stacked row index is (q, n).
            let mut groups: BTreeMap<u32, Vec<(u32, u8)>> = BTreeMap::new();
            for &(q, n) in self.sites[bond].keys() {
                groups.entry(q + n as u32).or_default().push((q, n));
            }
            for (qr, keys) in groups {
                let dim_r = self.bonds[bond + 1].dim(qr).expect("block outside bond basis");
                let rows: usize = keys.iter().map(|k| self.sites[bond][k].nrows()).sum();
                let mut stacked = DMatrix::<C64>::zeros(rows, dim_r);
                let mut off = 0;
                for k in &keys {
                    let b = &self.sites[bond][k];
                    stacked.view_mut((off, 0), (b.nrows(), dim_r)).copy_from(b);
                    off += b.nrows();
                }
                for s in svd::singular_values(&stacked) {
                    entries.push((s, qr));
                }
            }
        } else {
            let site = bond + 1;
            let mut groups: BTreeMap<u32, Vec<(u32, u8)>> = BTreeMap::new();
            for &(q, n) in self.sites[site].keys() {
                groups.entry(q).or_default().push((q, n));
            }
            for (ql, keys) in groups {
                let dim_l = self.bonds[site].dim(ql).expect("block outside bond basis");
                let cols: usize = keys.iter().map(|k| self.sites[site][k].ncols()).sum();
                let mut stacked = DMatrix::<C64>::zeros(dim_l, cols);
                let mut off = 0;
                for k in &keys {
                    let b = &self.sites[site][k];
                    stacked.view_mut((0, off), (dim_l, b.ncols())).copy_from(b);
                    off += b.ncols();
                }
                for s in svd::singular_values(&stacked) {
                    entries.push((s, ql));
                }
            }
        }
        entries.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("Schmidt values are finite"));
        Ok(BondSpectrum {
            values: entries.iter().map(|e| e.0).collect(),
            charges: entries.iter().map(|e| e.1).collect(),
        })
    }

    /// Entanglement entropy across `bond`; requires canonical form at that
    /// bond (center on an adjacent site).
    pub fn entanglement_entropy(&self, bond: usize) -> Result<f64, MpsError> {
        Ok(self.bond_spectrum(bond)?.entropy())
    }

    /// Amplitude ⟨occupations|ψ⟩ of one Fock configuration.
    pub fn amplitude(&self, occupations: &[u8]) -> Result<C64, MpsError> {
        if occupations.len() != self.sites.len() {
            return Err(MpsError::SiteCountMismatch(occupations.len(), self.sites.len()));
        }
        let mut vec = DMatrix::from_element(1, 1, C64::ONE);
        let mut q = 0u32;
        for (site, &n) in occupations.iter().enumerate() {
            match self.sites[site].get(&(q, n)) {
                Some(block) => vec = vec * block,
                None => return Ok(C64::ZERO),
            }
            q += n as u32;
        }
        debug_assert_eq!(vec.shape(), (1, 1));
        Ok(vec[(0, 0)])
    }

    /// ⟨self|other⟩ by full transfer contraction; works in any gauge.
    pub fn overlap(&self, other: &Self) -> Result<C64, MpsError> {
        if self.sites.len() != other.sites.len() {
            return Err(MpsError::SiteCountMismatch(self.sites.len(), other.sites.len()));
        }
        if self.total_charge != other.total_charge {
            return Err(MpsError::ChargeMismatch(self.total_charge, other.total_charge));
        }
        let mut env: BTreeMap<u32, DMatrix<C64>> = BTreeMap::new();
        env.insert(0, DMatrix::from_element(1, 1, C64::ONE));
        for site in 0..self.sites.len() {
            let mut next: BTreeMap<u32, DMatrix<C64>> = BTreeMap::new();
            for (&q, e) in &env {
                for n in 0..=self.n_max.max(other.n_max) {
                    let (Some(a), Some(b)) =
                        (self.sites[site].get(&(q, n)), other.sites[site].get(&(q, n)))
                    else {
                        continue;
                    };
                    let contrib = a.adjoint() * e * b;
                    next.entry(q + n as u32)
                        .and_modify(|m| *m += &contrib)
                        .or_insert(contrib);
                }
            }
            env = next;
        }
        Ok(env
            .get(&self.total_charge)
            .map(|m| m[(0, 0)])
            .unwrap_or(C64::ZERO))
    }

    /// Expectation value of a one-site operator (a (n_max+1)² matrix in the
    /// occupation basis). For a state with definite particle number only the
    /// number-diagonal part of the operator can contribute; off-diagonal
    /// elements are structurally zero and silently ignored.
    pub fn expectation_onsite(&self, site: usize, op: &DMatrix<C64>) -> Result<C64, MpsError> {
        if site >= self.sites.len() {
            return Err(MpsError::SiteOutOfRange { site, n_sites: self.sites.len() });
        }
        let d = self.n_max as usize + 1;
        if op.nrows() != d || op.ncols() != d {
            return Err(MpsError::OperatorDimensionMismatch { expected: d, got: op.nrows() });
        }
        let diag: Vec<C64> = (0..d).map(|n| op[(n, n)]).collect();
        self.expect_diag_product(&[(site, &diag)])
    }

    /// ⟨O_i O_j⟩ for number-diagonal one-site operators at distinct sites.
    pub fn expectation_two_point(
        &self,
        site_i: usize,
        site_j: usize,
        op_i: &DMatrix<C64>,
        op_j: &DMatrix<C64>,
    ) -> Result<C64, MpsError> {
        if site_i == site_j {
            return Err(MpsError::SamePoint(site_i));
        }
        let d = self.n_max as usize + 1;
        for op in [op_i, op_j] {
            if op.nrows() != d || op.ncols() != d {
                return Err(MpsError::OperatorDimensionMismatch { expected: d, got: op.nrows() });
            }
            let max = op.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
            for r in 0..d {
                for c in 0..d {
                    if r != c && op[(r, c)].norm() > 1e-14 * max {
                        return Err(MpsError::NonDiagonalOperator);
                    }
                }
            }
        }
        let diag_i: Vec<C64> = (0..d).map(|n| op_i[(n, n)]).collect();
        let diag_j: Vec<C64> = (0..d).map(|n| op_j[(n, n)]).collect();
        let (lo, hi) = if site_i < site_j { (site_i, site_j) } else { (site_j, site_i) };
        let (diag_lo, diag_hi) =
            if site_i < site_j { (&diag_i, &diag_j) } else { (&diag_j, &diag_i) };
        self.expect_diag_product(&[(lo, diag_lo), (hi, diag_hi)])
    }

    /// Right transfer environments R[b] for every bond, built by plain
    /// contraction from the right edge; valid in any gauge.
    fn right_envs(&self, weight_site: Option<(usize, &[C64])>) -> Vec<Env> {
        let n_sites = self.sites.len();
        let mut envs = Vec::with_capacity(n_sites + 1);
        envs.push(Env::boundary(self.total_charge));
        for s in (0..n_sites).rev() {
            let weight = match weight_site {
                Some((site, w)) if site == s => Some(w),
                _ => None,
            };
            let next = envs.last().expect("non-empty").step_left(&self.sites[s], weight);
            envs.push(next);
        }
        envs.reverse();
        envs
    }

    /// Occupation expectation ⟨n_s⟩ for every site in one O(M) double pass;
    /// makes no canonical-form assumptions.
    pub fn site_occupations(&self) -> Vec<f64> {
        let d = self.n_max as usize + 1;
        let number: Vec<C64> = (0..d).map(|n| C64::new(n as f64, 0.0)).collect();
        let n_sites = self.sites.len();
        let right = self.right_envs(None);
        let mut out = vec![0.0; n_sites];
        let mut env = Env::boundary(0);
        for s in 0..n_sites {
            out[s] = env.cross(&self.sites[s], Some(&number), &right[s + 1]).re;
            if s + 1 < n_sites {
                env = env.step_right(&self.sites[s], None);
            }
        }
        out
    }

    /// ⟨n_a n_j⟩ for a fixed anchor a and every j ≠ a in O(M), plus the
    /// normal-ordered ⟨n_a(n_a−1)⟩ at the anchor itself. Gauge-independent.
    pub fn density_correlations(&self, anchor: usize) -> Result<Vec<f64>, MpsError> {
        let n_sites = self.sites.len();
        if anchor >= n_sites {
            return Err(MpsError::SiteOutOfRange { site: anchor, n_sites });
        }
        let d = self.n_max as usize + 1;
        let number: Vec<C64> = (0..d).map(|n| C64::new(n as f64, 0.0)).collect();
        let pair: Vec<C64> =
            (0..d).map(|n| C64::new((n * n.saturating_sub(1)) as f64, 0.0)).collect();
        let right_plain = self.right_envs(None);
        let right_anchor = self.right_envs(Some((anchor, &number)));
        let mut out = vec![0.0; n_sites];
        let mut env_plain = Env::boundary(0);
        let mut env_anchor: Option<Env> = None;
        for s in 0..n_sites {
            match s.cmp(&anchor) {
                std::cmp::Ordering::Less => {
                    // The anchor insert sits to the right of s.
                    out[s] = env_plain.cross(&self.sites[s], Some(&number), &right_anchor[s + 1]).re;
                }
                std::cmp::Ordering::Equal => {
                    out[s] = env_plain.cross(&self.sites[s], Some(&pair), &right_plain[s + 1]).re;
                    env_anchor =
                        Some(env_plain.step_right(&self.sites[s], Some(&number)));
                }
                std::cmp::Ordering::Greater => {
                    let env = env_anchor.as_ref().expect("set at the anchor");
                    out[s] = env.cross(&self.sites[s], Some(&number), &right_plain[s + 1]).re;
                }
            }
            if s + 1 < n_sites {
                if s >= anchor {
                    env_anchor = env_anchor.map(|e| {
                        if s == anchor {
                            e
                        } else {
                            e.step_right(&self.sites[s], None)
                        }
                    });
                }
                if s < anchor {
                    env_plain = env_plain.step_right(&self.sites[s], None);
                }
            }
        }
        Ok(out)
    }

    /// Expectation of a product of number-diagonal one-site factors by full
    /// transfer contraction; `inserts` must be sorted by site and free of
    /// duplicates. Gauge-independent.
    fn expect_diag_product(&self, inserts: &[(usize, &[C64])]) -> Result<C64, MpsError> {
        debug_assert!(inserts.windows(2).all(|w| w[0].0 < w[1].0));
        let mut env = Env::boundary(0);
        for (s, site) in self.sites.iter().enumerate() {
            let weight = inserts.iter().find(|(k, _)| *k == s).map(|(_, w)| *w);
            env = env.step_right(site, weight);
        }
        Ok(env.scalar(self.total_charge))
    }

    /// Residual max|A†A − 1| of left-orthogonality at `site` (test hook).
    pub fn left_ortho_residual(&self, site: usize) -> f64 {
        let mut acc: BTreeMap<u32, DMatrix<C64>> = BTreeMap::new();
        for (&(q, n), block) in &self.sites[site] {
            let qr = q + n as u32;
            let contrib = block.adjoint() * block;
            acc.entry(qr).and_modify(|m| *m += &contrib).or_insert(contrib);
        }
        let mut worst = 0.0f64;
        for (_, m) in acc {
            let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
            worst = worst.max((m - id).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        worst
    }

    /// Residual max|AA† − 1| of right-orthogonality at `site` (test hook).
    pub fn right_ortho_residual(&self, site: usize) -> f64 {
        let mut acc: BTreeMap<u32, DMatrix<C64>> = BTreeMap::new();
        for (&(q, _), block) in &self.sites[site] {
            let contrib = block * block.adjoint();
            acc.entry(q).and_modify(|m| *m += &contrib).or_insert(contrib);
        }
        let mut worst = 0.0f64;
        for (_, m) in acc {
            let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
            worst = worst.max((m - id).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        worst
    }

    /// Structural audit: block selection rules, bond-basis consistency and
    /// boundary charges. Returns a description of the first violation.
    pub fn check_structure(&self) -> Result<(), String> {
        if self.bonds[0].sectors != vec![(0, 1)] {
            return Err("left boundary must carry charge 0 with dimension 1".into());
        }
        let last = self.bonds[self.sites.len()].sectors.clone();
        if last != vec![(self.total_charge, 1)] {
            return Err(format!("right boundary must be {{({}, 1)}}", self.total_charge));
        }
        for (site, blocks) in self.sites.iter().enumerate() {
            for (&(q, n), block) in blocks {
                if n > self.n_max {
                    return Err(format!("site {site}: occupation {n} above cutoff"));
                }
                let Some(dl) = self.bonds[site].dim(q) else {
                    return Err(format!("site {site}: left charge {q} not in bond basis"));
                };
                let Some(dr) = self.bonds[site + 1].dim(q + n as u32) else {
                    return Err(format!("site {site}: right charge {} not in bond basis", q + n as u32));
                };
                if block.nrows() != dl || block.ncols() != dr {
                    return Err(format!(
                        "site {site}: block ({q},{n}) is {}x{}, bond bases give {dl}x{dr}",
                        block.nrows(),
                        block.ncols()
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Sector-diagonal transfer environment used by the read-only contractions.
/// A left environment at bond b maps the bra/ket bond spaces onto each other
/// per charge sector; a right environment is the mirror object.
struct Env {
    mats: BTreeMap<u32, DMatrix<C64>>,
}

impl Env {
    /// The trivial 1×1 environment at an outer boundary carrying `charge`.
    fn boundary(charge: u32) -> Self {
        let mut mats = BTreeMap::new();
        mats.insert(charge, DMatrix::from_element(1, 1, C64::ONE));
        Self { mats }
    }

    /// Contract one site from the left, optionally weighting occupation n by
    /// `weight[n]`.
    fn step_right(&self, site: &Blocks, weight: Option<&[C64]>) -> Self {
        let mut mats: BTreeMap<u32, DMatrix<C64>> = BTreeMap::new();
        for (&(q, n), block) in site {
            let Some(e) = self.mats.get(&q) else { continue };
            let w = weight.map_or(C64::ONE, |w| w[n as usize]);
            if w == C64::ZERO {
                continue;
            }
            let contrib = block.adjoint() * e * block * w;
            mats.entry(q + n as u32).and_modify(|m| *m += &contrib).or_insert(contrib);
        }
        Self { mats }
    }

    /// Contract one site from the right.
    fn step_left(&self, site: &Blocks, weight: Option<&[C64]>) -> Self {
        let mut mats: BTreeMap<u32, DMatrix<C64>> = BTreeMap::new();
        for (&(q, n), block) in site {
            let Some(e) = self.mats.get(&(q + n as u32)) else { continue };
            let w = weight.map_or(C64::ONE, |w| w[n as usize]);
            if w == C64::ZERO {
                continue;
            }
            let contrib = block * e * block.adjoint() * w;
            mats.entry(q).and_modify(|m| *m += &contrib).or_insert(contrib);
        }
        Self { mats }
    }

    /// Contract a left environment, one weighted site, and a right
    /// environment into the scalar Σ w_n tr(B† E B R).
    fn cross(&self, site: &Blocks, weight: Option<&[C64]>, right: &Env) -> C64 {
        let mut val = C64::ZERO;
        for (&(q, n), block) in site {
            let Some(e) = self.mats.get(&q) else { continue };
            let Some(r) = right.mats.get(&(q + n as u32)) else { continue };
            let w = weight.map_or(C64::ONE, |w| w[n as usize]);
            if w == C64::ZERO {
                continue;
            }
            val += w * (block.adjoint() * e * block * r).trace();
        }
        val
    }

    /// Read off the final 1×1 sector after a full left-to-right transfer.
    fn scalar(&self, charge: u32) -> C64 {
        self.mats.get(&charge).map(|m| m[(0, 0)]).unwrap_or(C64::ZERO)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn number_op(n_max: u8) -> DMatrix<C64> {
        let d = n_max as usize + 1;
        DMatrix::from_fn(d, d, |r, c| {
            if r == c { C64::new(r as f64, 0.0) } else { C64::ZERO }
        })
    }

    #[test]
    fn fock_state_is_normalized_product() {
        let psi = SymmetricMps::init_fock(&[0, 1, 1, 0], 2).unwrap();
        assert_eq!(psi.total_charge(), 2);
        assert_relative_eq!(psi.norm(), 1.0, max_relative = 1e-14);
        let mut psi = psi;
        for b in 0..psi.n_bonds() {
            psi.move_center_to(b).unwrap();
            assert_abs_diff_eq!(psi.entanglement_entropy(b).unwrap(), 0.0, epsilon = 1e-14);
        }
        psi.check_structure().unwrap();
    }

    #[test]
    fn fock_cutoff_guard() {
        assert!(SymmetricMps::init_fock(&[2, 0], 2).is_ok());
        assert_eq!(
            SymmetricMps::init_fock(&[2, 0], 1),
            Err(MpsError::OccupationExceedsCutoff { site: 0, occ: 2, n_max: 1 })
        );
    }

    #[test]
    fn alternating_fock_charge_bookkeeping() {
        let occs: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let psi = SymmetricMps::init_fock(&occs, 3).unwrap();
        assert_eq!(psi.total_charge(), 5);
        assert_eq!(psi.bond_dims(), vec![1; 9]);
    }

    #[test]
    fn center_moves_preserve_state_and_orthogonality() {
        let mut psi = SymmetricMps::init_fock(&[1, 0, 2, 0, 1], 2).unwrap();
        let reference = psi.clone();
        psi.move_center_to(4).unwrap();
        psi.move_center_to(1).unwrap();
        psi.move_center_to(3).unwrap();
        for s in 0..3 {
            assert!(psi.left_ortho_residual(s) < 1e-12, "site {s}");
        }
        assert!(psi.right_ortho_residual(4) < 1e-12);
        let ov = psi.overlap(&reference).unwrap();
        assert_relative_eq!(ov.norm(), 1.0, max_relative = 1e-12);
        psi.check_structure().unwrap();
    }

    #[test]
    fn overlap_of_orthogonal_fock_states() {
        let a = SymmetricMps::init_fock(&[1, 0, 1, 0], 2).unwrap();
        let b = SymmetricMps::init_fock(&[0, 1, 1, 0], 2).unwrap();
        assert_eq!(a.overlap(&a).unwrap(), C64::ONE);
        assert_eq!(a.overlap(&b).unwrap(), C64::ZERO);
        let c = SymmetricMps::init_fock(&[1, 1, 1, 0], 2).unwrap();
        assert!(matches!(a.overlap(&c), Err(MpsError::ChargeMismatch(2, 3))));
    }

    #[test]
    fn onsite_expectations_on_fock() {
        let psi = SymmetricMps::init_fock(&[0, 2, 0], 3).unwrap();
        let n = number_op(3);
        assert_relative_eq!(psi.expectation_onsite(1, &n).unwrap().re, 2.0);
        assert_abs_diff_eq!(psi.expectation_onsite(0, &n).unwrap().re, 0.0);
        let id = DMatrix::<C64>::identity(4, 4);
        assert_relative_eq!(psi.expectation_onsite(2, &id).unwrap().re, 1.0);
        assert_eq!(psi.site_occupations(), vec![0.0, 2.0, 0.0]);
    }

    #[test]
    fn two_point_on_fock_factorizes() {
        let psi = SymmetricMps::init_fock(&[1, 0, 1], 2).unwrap();
        let n = number_op(2);
        let nn = psi.expectation_two_point(0, 2, &n, &n).unwrap().re;
        assert_relative_eq!(nn, 1.0);
        let through_products = psi.expectation_onsite(0, &n).unwrap().re
            * psi.expectation_onsite(2, &n).unwrap().re;
        assert_relative_eq!(nn, through_products);
        assert!(matches!(
            psi.expectation_two_point(1, 1, &n, &n),
            Err(MpsError::SamePoint(1))
        ));
    }

    #[test]
    fn density_correlations_match_pointwise_calls() {
        let mut psi = SymmetricMps::init_fock(&[1, 0, 2, 1, 0], 2).unwrap();
        psi.move_center_to(2).unwrap();
        let anchor = 2;
        let row = psi.density_correlations(anchor).unwrap();
        let n = number_op(2);
        for j in 0..5 {
            if j == anchor {
                assert_relative_eq!(row[j], 2.0); // <n(n-1)> on n=2
            } else {
                let direct = psi.expectation_two_point(anchor, j, &n, &n).unwrap().re;
                assert_relative_eq!(row[j], direct, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn amplitude_reads_back_fock_component() {
        let psi = SymmetricMps::init_fock(&[1, 2, 0], 2).unwrap();
        assert_eq!(psi.amplitude(&[1, 2, 0]).unwrap(), C64::ONE);
        assert_eq!(psi.amplitude(&[2, 1, 0]).unwrap(), C64::ZERO);
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::new(0, 0.1).is_err());
        assert!(TruncationPolicy::new(10, 1.0).is_err());
        assert!(TruncationPolicy::new(10, -0.1).is_err());
        let p = TruncationPolicy::default();
        assert_eq!(p.chi_max, 100);
        assert_relative_eq!(p.svd_cutoff, 1e-10);
    }

    #[test]
    fn spectrum_requires_adjacent_center() {
        let mut psi = SymmetricMps::init_fock(&[1, 0, 1, 0], 2).unwrap();
        psi.move_center_to(0).unwrap();
        assert!(matches!(
            psi.bond_spectrum(2),
            Err(MpsError::NotCanonicalAtBond { bond: 2, center: 0 })
        ));
        psi.move_center_to(2).unwrap();
        let sp = psi.bond_spectrum(2).unwrap();
        assert_eq!(sp.values.len(), 1);
        assert_relative_eq!(sp.norm_sqr(), 1.0, max_relative = 1e-12);
    }
}
