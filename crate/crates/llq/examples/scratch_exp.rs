// Temporary probe used during development; removed before release.
use llq::bethe2;
use llq::observables::fit_power_law;
use std::f64::consts::PI;

fn main() {
    // Free quench: expect exponent ~1. No beat, so pick windows by hand.
    for t_hi in [3e-3, 1e-2, 3e-2] {
        let times: Vec<f64> = (1..=600).map(|k| k as f64 * t_hi / 600.0).collect();
        let s = bethe2::g2_exact_quench(0.0, &times, 600).unwrap();
        for frac in [(0.02, 0.3), (0.05, 0.5), (0.1, 1.0)] {
            let p = fit_power_law(&s.times, &s.g2, (frac.0 * t_hi, frac.1 * t_hi));
            print!("  t_hi {t_hi:.0e} win ({:.2},{:.2}): {:?}", frac.0, frac.1, p.map(|v| (v * 1000.0).round() / 1000.0));
        }
        println!();
    }
    // Attractive: window below the first beat maximum at pi/gamma^2.
    for gamma in [-18.7931f64, -40.0, -89.0355, -145.0, -300.0] {
        let t_max = PI / (gamma * gamma);
        let times: Vec<f64> = (1..=800).map(|k| k as f64 * t_max / 800.0).collect();
        let s = bethe2::g2_exact_quench(gamma, &times, 800).unwrap();
        print!("gamma {gamma:9.3}:");
        for win in [(0.02, 0.2), (0.05, 0.4), (0.1, 0.6)] {
            let p = fit_power_law(&s.times, &s.g2, (win.0 * t_max, win.1 * t_max));
            print!("  ({:.2}-{:.2}): {:?}", win.0, win.1, p.map(|v| (v * 1000.0).round() / 1000.0));
        }
        println!();
    }
}
