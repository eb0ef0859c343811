//! Exact diagonalization of the number-conserving Bose-Hubbard chain at
//! small sizes: the ground truth against which the MPS machinery, the TEBD
//! stepper and the observables are validated.
//!
//! The Fock basis is enumerated in lexicographic occupation order with a
//! combinatorial ranking table, so state ↔ index conversion is exact and
//! deterministic. Time evolution goes through one dense symmetric
//! eigendecomposition (exact up to solver roundoff).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::LatticeParams;
use crate::mps::SymmetricMps;

/// Default cap on the basis dimension (number of amplitudes held in memory).
pub const DEFAULT_BASIS_BUDGET: usize = 200_000;

#[derive(Debug, Error, PartialEq)]
pub enum EdError {
    #[error("basis dimension {dim} exceeds the budget {budget}")]
    BudgetExceeded { dim: usize, budget: usize },
    #[error("occupation vector does not belong to this basis")]
    NotInBasis,
    #[error("state dimension {got} does not match basis dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator needs {expected} diagonal entries, got {got}")]
    OperatorMismatch { expected: usize, got: usize },
    #[error("MPS carries {got} particles, basis expects {expected}")]
    ChargeMismatch { expected: u32, got: u32 },
}

/// Open chain or periodic ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Ring,
}

/// Enumerated occupation basis with fixed particle number and local cutoff.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub n_sites: usize,
    pub n_particles: u32,
    pub n_max: u8,
    states: Vec<Vec<u8>>,
    /// counts[s][p]: configurations of p particles on s sites.
    counts: Vec<Vec<usize>>,
}

impl FockBasis {
    pub fn new(n_sites: usize, n_particles: u32, n_max: u8) -> Result<Self, EdError> {
        Self::with_budget(n_sites, n_particles, n_max, DEFAULT_BASIS_BUDGET)
    }

    pub fn with_budget(
        n_sites: usize,
        n_particles: u32,
        n_max: u8,
        budget: usize,
    ) -> Result<Self, EdError> {
        let p = n_particles as usize;
        let mut counts = vec![vec![0usize; p + 1]; n_sites + 1];
        counts[0][0] = 1;
        for s in 1..=n_sites {
            for q in 0..=p {
                counts[s][q] =
                    (0..=q.min(n_max as usize)).map(|v| counts[s - 1][q - v]).sum();
            }
        }
        let dim = counts[n_sites][p];
        if dim > budget {
            return Err(EdError::BudgetExceeded { dim, budget });
        }
        let mut states = Vec::with_capacity(dim);
        let mut occ = vec![0u8; n_sites];
        enumerate(&mut states, &mut occ, 0, p, n_max, &counts);
        debug_assert_eq!(states.len(), dim);
        Ok(Self { n_sites, n_particles, n_max, states, counts })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, index: usize) -> &[u8] {
        &self.states[index]
    }

    /// Rank of an occupation vector in lexicographic order.
    pub fn index(&self, occ: &[u8]) -> Result<usize, EdError> {
        if occ.len() != self.n_sites {
            return Err(EdError::NotInBasis);
        }
        let mut remaining = self.n_particles as usize;
        let mut rank = 0usize;
        for (site, &o) in occ.iter().enumerate() {
            if o > self.n_max || (o as usize) > remaining {
                return Err(EdError::NotInBasis);
            }
            let sites_left = self.n_sites - site - 1;
            for v in 0..o {
                rank += self.counts[sites_left][remaining - v as usize];
            }
            remaining -= o as usize;
        }
        if remaining != 0 {
            return Err(EdError::NotInBasis);
        }
        Ok(rank)
    }
}

fn enumerate(
    out: &mut Vec<Vec<u8>>,
    occ: &mut Vec<u8>,
    site: usize,
    remaining: usize,
    n_max: u8,
    counts: &[Vec<usize>],
) {
    if site == occ.len() {
        if remaining == 0 {
            out.push(occ.clone());
        }
        return;
    }
    let sites_left = occ.len() - site - 1;
    for v in 0..=(n_max as usize).min(remaining) {
        // Prune branches that cannot absorb the remaining particles.
        if counts[sites_left][remaining - v] == 0 {
            continue;
        }
        occ[site] = v as u8;
        enumerate(out, occ, site + 1, remaining - v, n_max, counts);
    }
    occ[site] = 0;
}

/// Sparse symmetric Hamiltonian in row-list form.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    pub dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseHamiltonian {
    pub fn matvec(&self, x: &DVector<C64>) -> DVector<C64> {
        let mut y = DVector::zeros(self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = C64::ZERO;
            for &(c, v) in row {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// max|H − H†| over explicit elements (test hook).
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.to_dense();
        (&d - d.transpose()).iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
    }
}

/// Assemble H = Σ_i [−J(b†_i b_{i+1} + h.c.) + U/2·n_i(n_i−1) + V_i n_i]
/// over the fixed-number basis; `Boundary::Ring` adds the wrap-around bond.
pub fn build_hamiltonian(
    lp: &LatticeParams,
    basis: &FockBasis,
    boundary: Boundary,
) -> SparseHamiltonian {
    let mut bonds: Vec<(usize, usize)> = (0..lp.n_sites - 1).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Ring && lp.n_sites > 2 {
        bonds.push((lp.n_sites - 1, 0));
    }
    let rows: Vec<Vec<(usize, f64)>> = (0..basis.dim())
        .into_par_iter()
        .map(|r| {
            let occ = basis.state(r);
            let mut row = Vec::new();
            let diag: f64 = occ
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let nf = n as f64;
                    0.5 * lp.onsite_u * nf * (nf - 1.0) + lp.potential[i] * nf
                })
                .sum();
            row.push((r, diag));
            let mut hop = vec![0u8; occ.len()];
            for &(i, j) in &bonds {
                // b†_j b_i and b†_i b_j out of row r (H is symmetric; both
                // directions are emitted so every row is complete).
                for (from, to) in [(i, j), (j, i)] {
                    if occ[from] == 0 || occ[to] == basis.n_max {
                        continue;
                    }
                    hop.copy_from_slice(occ);
                    hop[from] -= 1;
                    hop[to] += 1;
                    let c = basis.index(&hop).expect("hop stays in the basis");
                    let amp = (occ[from] as f64 * (occ[to] as f64 + 1.0)).sqrt();
                    row.push((c, -lp.hopping * amp));
                }
            }
            row
        })
        .collect();
    SparseHamiltonian { dim: basis.dim(), rows }
}

/// Exact propagator through one dense symmetric eigendecomposition.
pub struct Propagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Propagator {
    pub fn new(h: &SparseHamiltonian) -> Self {
        let eig = SymmetricEigen::new(h.to_dense());
        Self { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors }
    }

    /// ψ(t) = V e^{−iEt} V† ψ(0); norm-preserving to solver precision.
    pub fn evolve(&self, state: &DVector<C64>, t: f64) -> DVector<C64> {
        let vt_psi = self.eigenvectors.map(C64::from).transpose() * state;
        let rotated = DVector::from_iterator(
            vt_psi.len(),
            vt_psi
                .iter()
                .zip(self.eigenvalues.iter())
                .map(|(c, &e)| c * (C64::new(0.0, -e * t)).exp()),
        );
        self.eigenvectors.map(C64::from) * rotated
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }
}

/// Lowest eigenpair of H.
pub fn ground_state(h: &SparseHamiltonian) -> (f64, DVector<C64>) {
    let eig = SymmetricEigen::new(h.to_dense());
    let mut best = 0;
    for k in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[k] < eig.eigenvalues[best] {
            best = k;
        }
    }
    let vec = eig.eigenvectors.column(best).map(C64::from).into_owned();
    (eig.eigenvalues[best], vec)
}

/// ⟨ψ| Π_k diag_k |ψ⟩ for per-site diagonal factors
/// (`ops[k] = (site, f(n))`); mirrors the MPS-side observables exactly.
pub fn expect_diag(
    basis: &FockBasis,
    state: &DVector<C64>,
    ops: &[(usize, &dyn Fn(u8) -> f64)],
) -> Result<f64, EdError> {
    if state.len() != basis.dim() {
        return Err(EdError::DimensionMismatch { expected: basis.dim(), got: state.len() });
    }
    let mut acc = 0.0;
    for (idx, amp) in state.iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let occ = basis.state(idx);
        let mut factor = 1.0;
        for &(site, f) in ops {
            factor *= f(occ[site]);
        }
        acc += w * factor;
    }
    Ok(acc)
}

/// ⟨n_site⟩ on a dense state.
pub fn occupation(basis: &FockBasis, state: &DVector<C64>, site: usize) -> Result<f64, EdError> {
    expect_diag(basis, state, &[(site, &|n| n as f64)])
}

/// g² = ⟨n(n−1)⟩/⟨n⟩² on a dense state.
pub fn g2_local(basis: &FockBasis, state: &DVector<C64>, site: usize) -> Result<f64, EdError> {
    let nn = expect_diag(basis, state, &[(site, &|n| n as f64 * (n as f64 - 1.0))])?;
    let n = occupation(basis, state, site)?;
    Ok(nn / (n * n))
}

/// g³ = ⟨n(n−1)(n−2)⟩/⟨n⟩³ on a dense state.
pub fn g3_local(basis: &FockBasis, state: &DVector<C64>, site: usize) -> Result<f64, EdError> {
    let nnn = expect_diag(
        basis,
        state,
        &[(site, &|n| n as f64 * (n as f64 - 1.0) * (n as f64 - 2.0))],
    )?;
    let n = occupation(basis, state, site)?;
    Ok(nnn / (n * n * n))
}

/// ⟨ψ|H|ψ⟩.
pub fn energy_expectation(h: &SparseHamiltonian, state: &DVector<C64>) -> f64 {
    let hx = h.matvec(state);
    state.iter().zip(hx.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Expand an MPS into the dense amplitude vector over `basis`.
pub fn mps_to_dense(state: &SymmetricMps, basis: &FockBasis) -> Result<DVector<C64>, EdError> {
    if state.total_charge() != basis.n_particles {
        return Err(EdError::ChargeMismatch {
            expected: basis.n_particles,
            got: state.total_charge(),
        });
    }
    let mut out = DVector::zeros(basis.dim());
    for idx in 0..basis.dim() {
        out[idx] = state.amplitude(basis.state(idx)).map_err(|_| EdError::NotInBasis)?;
    }
    Ok(out)
}
