//! Photon source, beam split, detection and balanced differencing.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};

use crate::config::PhysicsConfig;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stage_rng, Stage};

/// Band-limited common-mode relative intensity modulation `c(t)`.
///
/// First-order Gauss–Markov process (white Gaussian noise through a single
/// pole at `cutoff_hz`), started in its stationary distribution so that
/// `std(c) = depth` from the first sample on.
pub fn classical_modulation(depth: f64, cutoff_hz: f64, rate_hz: f64, n: usize, seed: u64) -> Vec<f64> {
    if depth == 0.0 {
        return vec![0.0; n];
    }
    let mut rng = stage_rng(seed);
    let a = (-2.0 * std::f64::consts::PI * cutoff_hz / rate_hz).exp();
    let drive = depth * (1.0 - a * a).sqrt();
    let mut c = depth * rng.sample::<f64, _>(StandardNormal);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(c);
        c = a * c + drive * rng.sample::<f64, _>(StandardNormal);
    }
    out
}

/// Photon counts per internal sampling interval.
///
/// The per-interval mean is `flux_coefficient * drive_current * (1 + c(t))`
/// with `c(t)` from [`classical_modulation`] sampled at `rate_hz`. Without
/// modulation the draws are i.i.d. Poisson.
pub fn generate_photon_counts(cfg: &PhysicsConfig, n: usize, rate_hz: f64, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::usage("photon count generation needs n >= 1"));
    }
    let lambda = cfg.mean_photons();
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::config(format!(
            "mean photon number must be finite and non-negative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(vec![0; n]);
    }
    if !(cfg.classical_mod_depth >= 0.0) {
        return Err(Error::config("physics.classical_mod_depth must be >= 0"));
    }

    let mut rng = stage_rng(derive_seed(seed, Stage::Photons, 0));
    if cfg.classical_mod_depth == 0.0 {
        let dist = Poisson::new(lambda).map_err(|e| Error::config(e.to_string()))?;
        return Ok((0..n).map(|_| dist.sample(&mut rng) as u64).collect());
    }

    let modulation = classical_modulation(
        cfg.classical_mod_depth,
        cfg.classical_mod_cutoff,
        rate_hz,
        n,
        derive_seed(seed, Stage::ClassicalModulation, 0),
    );
    let counts = modulation
        .into_iter()
        .map(|c| {
            let mean = lambda * (1.0 + c);
            if mean <= 0.0 {
                0
            } else {
                Poisson::new(mean).expect("positive finite mean").sample(&mut rng) as u64
            }
        })
        .collect();
    Ok(counts)
}

/// Routes each photon to PD1 with probability `split_ratio * (1 + epsilon)`
/// (clamped to [0, 1]) and detects each routed photon with probability
/// `quantum_efficiency`. Returns photoelectron counts for (PD1, PD2).
pub fn split_and_detect(counts: &[u64], cfg: &PhysicsConfig, seed: u64) -> Result<(Vec<u64>, Vec<u64>)> {
    if counts.is_empty() {
        return Err(Error::usage("split_and_detect needs a non-empty count sequence"));
    }
    let p1 = cfg.pd1_probability();
    let eta = cfg.quantum_efficiency.clamp(0.0, 1.0);
    let mut rng = stage_rng(derive_seed(seed, Stage::Split, 0));
    let mut pe1 = Vec::with_capacity(counts.len());
    let mut pe2 = Vec::with_capacity(counts.len());
    for &c in counts {
        let routed1 = binomial(&mut rng, c, p1);
        pe1.push(binomial(&mut rng, routed1, eta));
        pe2.push(binomial(&mut rng, c - routed1, eta));
    }
    Ok((pe1, pe2))
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
    }
}

/// Elementwise `pe1 - pe2`.
pub fn balanced_difference(pe1: &[u64], pe2: &[u64]) -> Result<Vec<i64>> {
    if pe1.len() != pe2.len() {
        return Err(Error::usage(format!(
            "balanced_difference: arm lengths differ ({} vs {})",
            pe1.len(),
            pe2.len()
        )));
    }
    Ok(pe1.iter().zip(pe2).map(|(&a, &b)| a as i64 - b as i64).collect())
}
