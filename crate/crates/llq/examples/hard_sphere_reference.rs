//! The hard-sphere Tonks reference for the non-local pair correlation: the
//! stationary post-quench g²(0,x) is approximated by the t = 0 curve scaled
//! by 1 − a₁ᴅρ and shifted outward by the scattering length a₁ᴅ.
//!
//! Run with `cargo run --release --example hard_sphere_reference`.

use llq::bethe2::hs_reference;
use llq::model::{discretize, scattering_length, ContinuumParams};
use llq::mps::TruncationPolicy;
use llq::observables;
use llq::tebd::{self, GroundStateConfig};

fn main() {
    let gamma = -18.7931;
    let n = 4;
    let rho = 1.0;
    let omega = std::f64::consts::PI.powi(2) / (2.0 * n as f64);
    let box_length = 2.4 * 2.0 * n as f64 / (std::f64::consts::PI * rho);
    let cp = ContinuumParams::new(n, gamma * rho, rho, omega, box_length).unwrap();
    let lp = discretize(&cp, 128, 3).unwrap();

    let prep = GroundStateConfig {
        dtau: 0.05,
        policy: TruncationPolicy::new(32, 1e-10).unwrap(),
        ..GroundStateConfig::default()
    };
    let (state, _) = tebd::prepare_tg_state(&lp, n, &prep).expect("converges");
    let density = observables::density_profile(&state, &lp);
    let rho_c = density[observables::anchor_site(&density)];
    let row = observables::g2_row(&state, &lp, None, 0.0).expect("anchor occupied");

    let a_1d = scattering_length(gamma * rho_c).unwrap();
    let hs = hs_reference(&row, a_1d, rho_c).unwrap();
    println!("a_1D = {a_1d:.4}, rho = {rho_c:.4}, scale factor 1 - a_1D*rho = {:.4}", 1.0 - a_1d * rho_c);
    println!("\nTonks-Girardeau t = 0 row and its hard-sphere transform:");
    println!("{:>9} {:>9} | {:>9} {:>9} {:>6}", "x", "g2", "x_hs", "g2_hs", "valid");
    for k in (0..row.xs.len()).step_by(4) {
        if row.xs[k].abs() > 2.0 {
            continue;
        }
        println!(
            "{:9.4} {:9.4} | {:9.4} {:9.4} {:>6}",
            row.xs[k],
            row.g2[k],
            hs.xs[k],
            hs.g2[k],
            if hs.valid[k] { "yes" } else { "no" }
        );
    }
    println!("\n(the transform is meaningful below the inter-particle distance 1/rho = {:.3})", 1.0 / rho_c);
}
