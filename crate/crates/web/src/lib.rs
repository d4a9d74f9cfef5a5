//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; on bad input
//! the JSON is `{"error": "..."}` so the page never has to catch a throw.
//! The same functions are ordinary Rust and are tested natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use shotnoise_qrng::entropy::{
    extraction_ratio, histogram, linearity_fit, min_entropy, noise_stats, qcnr, QUADRATIC_T_THRESHOLD,
};
use shotnoise_qrng::sim::{current_sweep, simulate_run};
use shotnoise_qrng::stats::{autocorrelation, monobit_test, runs_test};
use shotnoise_qrng::toeplitz::{stream_extract, ToeplitzSeed};
use shotnoise_qrng::{Config, Result};

/// Upper bound on codes per call, to keep the page responsive.
pub const MAX_CODES: usize = 400_000;

fn respond(result: Result<Value>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn config_with(drive_current_ma: f64, mod_depth: f64) -> Config {
    let mut cfg = Config::default_calibrated();
    cfg.physics.drive_current = drive_current_ma;
    cfg.physics.classical_mod_depth = mod_depth;
    cfg
}

fn clamp_codes(n_codes: u32) -> usize {
    (n_codes as usize).clamp(2, MAX_CODES)
}

/// LED-on and LED-off histograms with QCNR, min-entropy and the
/// recommended extraction ratio.
#[wasm_bindgen]
pub fn characterize(drive_current_ma: f64, mod_depth: f64, n_codes: u32, seed: u32) -> String {
    respond((|| {
        let cfg = config_with(drive_current_ma, mod_depth);
        let n = clamp_codes(n_codes);
        let seed = seed as u64;
        let on = simulate_run(&cfg.physics, &cfg.acquisition, n, true, seed)?;
        let off = simulate_run(&cfg.physics, &cfg.acquisition, n, false, seed ^ 0x5A5A)?;
        let (s_on, s_off) = (noise_stats(&on)?, noise_stats(&off)?);
        let h_on = histogram(&on)?;
        let h = min_entropy(&h_on)?;
        Ok(json!({
            "on_histogram": h_on.bin_counts,
            "off_histogram": histogram(&off)?.bin_counts,
            "on_variance": s_on.variance,
            "off_variance": s_off.variance,
            // QCNR is undefined when the LED adds nothing; report null.
            "qcnr_db": qcnr(&s_on, &s_off).ok(),
            "min_entropy": h,
            "extraction_ratio": extraction_ratio(h, cfg.extractor.clearance_bits)?,
        }))
    })())
}

/// Variance against drive current with the linear/quadratic fit.
#[wasm_bindgen]
pub fn sweep(mod_depth: f64, steps: u32, n_codes: u32, seed: u32) -> String {
    respond((|| {
        let cfg = config_with(0.0, mod_depth);
        let points = current_sweep(
            &cfg.physics,
            &cfg.acquisition,
            steps as usize,
            clamp_codes(n_codes),
            seed as u64,
        )?;
        let fit = linearity_fit(&points)?;
        Ok(json!({
            "current_ma": points.iter().map(|p| p.current).collect::<Vec<_>>(),
            "variance": points.iter().map(|p| p.variance).collect::<Vec<_>>(),
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "quadratic_t_stat": fit.quadratic_t_stat,
            "super_poissonian": fit.is_super_poissonian(QUADRATIC_T_THRESHOLD),
        }))
    })())
}

/// Toeplitz-extracts simulated codes and reports the autocorrelation, two
/// quick tests and the first output bytes for a bitmap preview.
#[wasm_bindgen]
pub fn extract(n_codes: u32, seed: u32, max_lag: u32) -> String {
    respond((|| {
        let cfg = Config::default_calibrated();
        let block = simulate_run(
            &cfg.physics,
            &cfg.acquisition,
            clamp_codes(n_codes),
            true,
            seed as u64,
        )?;
        let key = ToeplitzSeed::key_from_u64(seed as u64);
        let toeplitz = ToeplitzSeed::from_key(key, cfg.extractor.n, cfg.extractor.m)?;
        let bits = stream_extract(&[block], &cfg.extractor, &toeplitz)?;
        let ac = autocorrelation(&bits, max_lag as usize)?;
        let preview: Vec<u8> = bits.as_bytes().iter().take(2048).copied().collect();
        Ok(json!({
            "input_bits": clamp_codes(n_codes) * cfg.extractor.bits_per_code,
            "output_bits": bits.len(),
            "autocorrelation": ac.coefficients,
            "bound": ac.three_sigma_bound,
            "exceedances": ac.exceedances().len(),
            "monobit_p": monobit_test(&bits)?,
            "runs_p": runs_test(&bits)?,
            "preview": preview,
        }))
    })())
}
