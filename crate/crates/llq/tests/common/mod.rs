//! Shared fixtures for the integration suites.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

use llq::model::LatticeParams;
use llq::mps::{SymmetricMps, TruncationPolicy};
use llq::tebd;

/// Small dense chain assembled directly (test instances sit above the
/// sparse-filling guard of the physical mapping on purpose).
pub fn dense_lattice(n_sites: usize, dx: f64, g: f64, omega: f64, n_max: u8) -> LatticeParams {
    let half = 0.5 * n_sites as f64 * dx;
    LatticeParams {
        n_sites,
        dx,
        hopping: 0.5 / (dx * dx),
        onsite_u: g / dx,
        potential: (0..n_sites)
            .map(|i| {
                let x = (i as f64 + 0.5) * dx - half;
                0.5 * omega * omega * x * x
            })
            .collect(),
        n_max,
    }
}

/// Random occupations with `n_particles` particles under the cutoff.
pub fn random_occupations(rng: &mut impl Rng, n_sites: usize, n_particles: usize, n_max: u8) -> Vec<u8> {
    let mut occs = vec![0u8; n_sites];
    for _ in 0..n_particles {
        loop {
            let site = rng.random_range(0..n_sites);
            if occs[site] < n_max {
                occs[site] += 1;
                break;
            }
        }
    }
    occs
}

/// An entangled test state made by running a short random bond-gate circuit
/// on a random Fock seed. Returns the state and the lattice its gates came
/// from.
pub fn random_circuit_state(
    rng: &mut impl Rng,
    n_sites: usize,
    n_particles: usize,
    n_max: u8,
    depth: usize,
) -> (SymmetricMps, LatticeParams) {
    let lp = dense_lattice(
        n_sites,
        rng.random_range(0.4..1.0),
        rng.random_range(-6.0..6.0),
        rng.random_range(0.0..0.6),
        n_max,
    );
    let occs = random_occupations(rng, n_sites, n_particles, n_max);
    let mut state = SymmetricMps::init_fock(&occs, n_max).expect("valid fock");
    let policy = TruncationPolicy::exact();
    for _ in 0..depth {
        let bond = rng.random_range(0..n_sites - 1);
        let tau = rng.random_range(0.05..0.4) / lp.hopping;
        let gate = tebd::build_bond_gate(&lp, bond, C64::new(tau, 0.0));
        state.apply_two_site(bond, &gate, &policy).expect("gate applies");
    }
    (state, lp)
}

/// Entanglement entropy across `bond` from the dense state vector, via the
/// eigenvalues of the left reduced density matrix. Independent of the MPS
/// code path.
pub fn dense_entropy(
    basis: &llq::ed::FockBasis,
    state: &nalgebra::DVector<C64>,
    bond: usize,
) -> f64 {
    use std::collections::HashMap;
    let cut = bond + 1;
    let mut left_index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut right_index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut entries: Vec<(usize, usize, C64)> = Vec::new();
    for idx in 0..basis.dim() {
        let occ = basis.state(idx);
        let l = occ[..cut].to_vec();
        let r = occ[cut..].to_vec();
        let nl = left_index.len();
        let li = *left_index.entry(l).or_insert(nl);
        let nr = right_index.len();
        let ri = *right_index.entry(r).or_insert(nr);
        entries.push((li, ri, state[idx]));
    }
    let mut psi = DMatrix::<C64>::zeros(left_index.len(), right_index.len());
    for (li, ri, amp) in entries {
        psi[(li, ri)] = amp;
    }
    let rho = &psi * psi.adjoint();
    let eig = nalgebra::SymmetricEigen::new(rho);
    -eig.eigenvalues
        .iter()
        .filter(|&&p| p > 1e-18)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}
