//! Property suites over randomized small instances: charge conservation and
//! canonical structure under arbitrary gate sequences, truncation-weight
//! monotonicity in the bond-dimension cap, reversibility of real-time steps,
//! and Schmidt-spectrum/entropy agreement with dense reduced density
//! matrices.

mod common;

use common::{dense_lattice, dense_entropy, random_occupations};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use llq::ed::{self, FockBasis};
use llq::mps::{SymmetricMps, TruncationPolicy};
use llq::tebd::{self, EvolutionConfig, NullObserver};

#[derive(Debug, Clone)]
struct Instance {
    n_sites: usize,
    n_particles: usize,
    n_max: u8,
    seed: u64,
    dx: f64,
    g: f64,
    omega: f64,
    bonds: Vec<usize>,
    taus: Vec<f64>,
}

fn instances() -> impl Strategy<Value = Instance> {
    (4usize..8, 1usize..4, 2u8..4, any::<u64>(), 0.4f64..1.0, -6.0f64..6.0, 0.0f64..0.6)
        .prop_flat_map(|(n_sites, n_particles, n_max, seed, dx, g, omega)| {
            let gates = proptest::collection::vec(
                ((0..n_sites - 1), 0.02f64..0.25),
                6..10,
            );
            gates.prop_map(move |pairs| Instance {
                n_sites,
                n_particles,
                n_max,
                seed,
                dx,
                g,
                omega,
                bonds: pairs.iter().map(|p| p.0).collect(),
                taus: pairs.iter().map(|p| p.1).collect(),
            })
        })
}

impl Instance {
    fn lattice(&self) -> llq::model::LatticeParams {
        dense_lattice(self.n_sites, self.dx, self.g, self.omega, self.n_max)
    }

    fn seed_state(&self) -> SymmetricMps {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(self.seed);
        let occs = random_occupations(&mut rng, self.n_sites, self.n_particles, self.n_max);
        SymmetricMps::init_fock(&occs, self.n_max).expect("valid occupations")
    }

    fn run_gates(&self, state: &mut SymmetricMps, policy: &TruncationPolicy) -> f64 {
        let lp = self.lattice();
        let mut weight = 0.0;
        for (&bond, &tau) in self.bonds.iter().zip(&self.taus) {
            let gate = tebd::build_bond_gate(&lp, bond, C64::new(tau / lp.hopping, 0.0));
            weight += state
                .apply_two_site(bond, &gate, policy)
                .expect("gate applies")
                .truncation_weight;
        }
        weight
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    /// Charge selection rules, boundary charges, canonical form and the norm
    /// all survive arbitrary number-conserving gate sequences.
    #[test]
    fn charge_and_canonical_form(inst in instances()) {
        let mut state = inst.seed_state();
        let policy = TruncationPolicy::new(16, 1e-12).unwrap();
        let lp = inst.lattice();
        for (&bond, &tau) in inst.bonds.iter().zip(&inst.taus) {
            let gate = tebd::build_bond_gate(&lp, bond, C64::new(tau / lp.hopping, 0.0));
            let stats = state.apply_two_site(bond, &gate, &policy).unwrap();
            // Unitary gate on a normalized canonical state: the norm entering
            // truncation stays within 1e-8 of one.
            prop_assert!((stats.entering_norm - 1.0).abs() < 1e-8);
            state.check_structure().map_err(TestCaseError::fail)?;
        }
        prop_assert_eq!(state.total_charge(), inst.n_particles as u32);
        let total: f64 = state.site_occupations().iter().sum();
        prop_assert!((total - inst.n_particles as f64).abs() < 1e-9);
        prop_assert!((state.norm() - 1.0).abs() < 1e-10);
        for site in 0..state.center() {
            prop_assert!(state.left_ortho_residual(site) < 1e-12);
        }
        for site in state.center() + 1..state.n_sites() {
            prop_assert!(state.right_ortho_residual(site) < 1e-12);
        }
    }

    /// Raising chi_max at fixed cutoff never increases the reported
    /// discarded weight of the same gate sequence.
    #[test]
    fn truncation_weight_monotone(inst in instances()) {
        let mut previous = f64::INFINITY;
        for chi in [1usize, 2, 4, 8, 16] {
            let mut state = inst.seed_state();
            let policy = TruncationPolicy::new(chi, 0.0).unwrap();
            let weight = inst.run_gates(&mut state, &policy);
            prop_assert!(weight <= previous + 1e-12, "chi {} weight {} previous {}", chi, weight, previous);
            previous = weight;
        }
    }

    /// Evolving dt then -dt with truncation disabled returns to the initial
    /// state with fidelity above 1 - 1e-8.
    #[test]
    fn reversibility(inst in instances()) {
        let lp = inst.lattice();
        let mut state = inst.seed_state();
        let reference = state.clone();
        let dt = 0.15 / lp.hopping;
        let policy = TruncationPolicy::exact();
        let fwd = EvolutionConfig { policy, ..EvolutionConfig::new(dt, 2) };
        let bwd = EvolutionConfig { policy, ..EvolutionConfig::new(-dt, 2) };
        tebd::evolve_real(&mut state, &lp, &fwd, &mut NullObserver).unwrap();
        tebd::evolve_real(&mut state, &lp, &bwd, &mut NullObserver).unwrap();
        let fidelity = state.overlap(&reference).unwrap().norm();
        prop_assert!(fidelity > 1.0 - 1e-8, "fidelity {}", fidelity);
    }

    /// Schmidt entropy from the MPS bond spectrum matches the entropy of the
    /// dense reduced density matrix on every bond.
    #[test]
    fn entropy_matches_dense_reduced_density_matrix(inst in instances()) {
        let mut state = inst.seed_state();
        let policy = TruncationPolicy::exact();
        inst.run_gates(&mut state, &policy);
        let basis = FockBasis::new(inst.n_sites, inst.n_particles as u32, inst.n_max).unwrap();
        let dense = ed::mps_to_dense(&state, &basis).unwrap();
        for bond in 0..state.n_bonds() {
            state.move_center_to(bond).unwrap();
            let s_mps = state.entanglement_entropy(bond).unwrap();
            let s_dense = dense_entropy(&basis, &dense, bond);
            prop_assert!((s_mps - s_dense).abs() < 1e-10, "bond {}: {} vs {}", bond, s_mps, s_dense);
        }
    }
}
