// Temporary probe used during development; removed before release.
use llq::experiments::ExperimentConfig;
use llq::mps::TruncationPolicy;
use llq::observables;
use llq::tebd::{self, GroundStateConfig};
use std::time::Instant;

fn main() {
    let cfg = ExperimentConfig::default();
    let r = cfg.resolve().unwrap();
    println!(
        "lattice: M {} dx {:.4} J {:.1} omega-scale from V edge {:.3}",
        r.lp.n_sites,
        r.lp.dx,
        r.lp.hopping,
        r.omega
    );
    for (dtau_scale, stages, tol, chi) in [
        (0.01f64, 2usize, 1e-7f64, 32usize),
        (0.03, 2, 1e-7, 32),
        (0.08, 3, 1e-7, 32),
        (0.03, 3, 1e-8, 32),
    ] {
        let t0 = Instant::now();
        let prep = GroundStateConfig {
            dtau: dtau_scale,
            stages,
            energy_tol: tol,
            policy: TruncationPolicy::new(chi, 1e-10).unwrap(),
            max_sweeps_per_stage: 20000,
        };
        match tebd::prepare_tg_state(&r.lp, 6, &prep) {
            Ok((state, report)) => {
                let density = observables::density_profile(&state, &r.lp);
                let rho_c = density[observables::anchor_site(&density)];
                println!(
                    "dtau {dtau_scale} stages {stages} tol {tol:.0e} chi {chi}: E {:.8} sweeps {} rho_c {:.5} maxbond {} wall {:.1}s",
                    report.energy,
                    report.sweeps,
                    rho_c,
                    state.max_bond_dim(),
                    t0.elapsed().as_secs_f64()
                );
            }
            Err(e) => println!("dtau {dtau_scale}: FAILED {e} after {:.1}s", t0.elapsed().as_secs_f64()),
        }
    }
}
