//! Two-particle spectrum on the unit ring against inverse coupling: the
//! bound branch dives to −γ², and the lowest gas branch connects the
//! Tonks-Girardeau and super-Tonks-Girardeau limits through 1/γ = 0.
//!
//! Run with `cargo run --release --example spectrum`.

use llq::bethe2;

fn main() {
    let gammas: Vec<f64> = (-20..=20)
        .map(|k| k as f64 / 50.0)
        .filter(|inv| inv.abs() > 1e-6)
        .map(|inv| 1.0 / inv)
        .collect();
    let points = bethe2::spectrum(&gammas, 2).expect("couplings are valid");
    println!("{:>10} {:>12} {:>12} {:>12}", "1/gamma", "bound", "branch 0", "branch 1");
    let mut rows: Vec<_> = points.iter().collect();
    rows.sort_by(|a, b| a.inv_gamma.partial_cmp(&b.inv_gamma).unwrap());
    for p in rows {
        let find = |b: i32| {
            p.branches
                .iter()
                .find(|(k, _)| *k == b)
                .map(|(_, e)| format!("{e:12.4}"))
                .unwrap_or_else(|| format!("{:>12}", "-"))
        };
        println!("{:10.3} {} {} {}", p.inv_gamma, find(-1), find(0), find(1));
    }
    let stg = bethe2::solve_gas_roots(-1e4, 1).unwrap()[0].energy;
    let tg = bethe2::solve_gas_roots(1e4, 1).unwrap()[0].energy;
    println!("\nbranch-0 energy at gamma = -1e4: {stg:.6} (super-Tonks side)");
    println!("branch-0 energy at gamma = +1e4: {tg:.6} (Tonks side)");
    println!("pi^2 = {:.6}; the spectra meet across 1/gamma = 0", std::f64::consts::PI.powi(2));
}
