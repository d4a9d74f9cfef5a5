//! Prints the headline figures of the shipped calibration.
//!
//! cargo run --release -p shotnoise-qrng --example calibrate

use shotnoise_qrng::entropy::{histogram, linearity_fit, min_entropy, noise_stats, qcnr, qcnr_power_db};
use shotnoise_qrng::sim::{current_sweep, simulate_run, sweep_run_seed};
use shotnoise_qrng::Config;

fn main() -> Result<(), shotnoise_qrng::Error> {
    let cfg = Config::default_calibrated();
    let n = 1_000_000;
    let on = simulate_run(&cfg.physics, &cfg.acquisition, n, true, 1)?;
    let off = simulate_run(&cfg.physics, &cfg.acquisition, n, false, 2)?;
    let (s_on, s_off) = (noise_stats(&on)?, noise_stats(&off)?);
    println!("on:  mean {:.2} var {:.2}", s_on.mean, s_on.variance);
    println!("off: mean {:.2} var {:.2}", s_off.mean, s_off.variance);
    println!("var ratio {:.3}", s_on.variance / s_off.variance);
    println!(
        "qcnr {:.3} dB (10log: {:.3} dB)",
        qcnr(&s_on, &s_off)?,
        qcnr_power_db(&s_on, &s_off)?
    );
    println!("min-entropy {:.3} bits", min_entropy(&histogram(&on)?)?);

    for depth in [cfg.physics.classical_mod_depth, 0.2] {
        let mut p = cfg.physics.clone();
        p.classical_mod_depth = depth;
        for run in 0..3 {
            let sweep = current_sweep(&p, &cfg.acquisition, 20, 100_000, sweep_run_seed(7, run))?;
            let fit = linearity_fit(&sweep)?;
            println!(
                "depth {depth}: run {run} r2 {:.5} quad {:.3e} t {:.2}",
                fit.r_squared, fit.quadratic_coeff, fit.quadratic_t_stat
            );
        }
    }
    Ok(())
}
