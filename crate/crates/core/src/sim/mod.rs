//! Monte-Carlo model of the balanced-detection signal chain.
//!
//! ```text
//! LED (Poisson, common-mode c(t)) -> split/detect -> PD1 - PD2
//!     -> TIA + voltage amp + single pole -> ADC (decimate, ENOB noise, quantize)
//! ```
//!
//! The simulation runs at `oversample * adc_sample_rate`; the ADC picks one
//! sample per group.

mod analog;
mod optics;

pub use analog::{adc_noise_rms_codes, adc_sample, analog_chain, SinglePoleLowPass};
pub use optics::{balanced_difference, classical_modulation, generate_photon_counts, split_and_detect};

use crate::config::{config_digest, AcquisitionConfig, PhysicsConfig};
use crate::entropy::noise_stats;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Stage};

/// A block of raw ADC codes with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCodeBlock {
    pub codes: Vec<u16>,
    pub adc_bits: u32,
    /// ADC sample rate in Sa/s.
    pub sample_rate: u32,
    pub led_on: bool,
    pub rng_seed: u64,
    pub config_digest: u64,
}

impl RawCodeBlock {
    /// Builds a block from codes, checking that every code fits in `adc_bits`.
    pub fn new(
        codes: Vec<u16>,
        adc_bits: u32,
        sample_rate: u32,
        led_on: bool,
        rng_seed: u64,
        config_digest: u64,
    ) -> Result<Self> {
        if adc_bits == 0 || adc_bits > 16 {
            return Err(Error::usage(format!("adc_bits {adc_bits} outside 1..=16")));
        }
        let top = ((1u32 << adc_bits) - 1) as u16;
        if let Some(pos) = codes.iter().position(|&c| c > top) {
            return Err(Error::usage(format!(
                "code {} at index {pos} does not fit in {adc_bits} bits",
                codes[pos]
            )));
        }
        Ok(Self {
            codes,
            adc_bits,
            sample_rate,
            led_on,
            rng_seed,
            config_digest,
        })
    }

    /// Synthetic block with zeroed provenance, for tests and tools.
    pub fn from_codes(codes: Vec<u16>, adc_bits: u32) -> Result<Self> {
        Self::new(codes, adc_bits, 0, true, 0, 0)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// Runs the full chain and returns `n_codes` ADC codes.
///
/// With `led_on == false` the drive current is forced to zero, leaving only
/// electronic and converter noise. The digest covers the configs as passed.
pub fn simulate_run(
    phys: &PhysicsConfig,
    acq: &AcquisitionConfig,
    n_codes: usize,
    led_on: bool,
    seed: u64,
) -> Result<RawCodeBlock> {
    if n_codes == 0 {
        return Err(Error::usage("simulate_run needs n_codes >= 1"));
    }
    phys.validate()?;
    acq.validate()?;

    let mut effective = phys.clone();
    if !led_on {
        effective.drive_current = 0.0;
    }
    let n_internal = n_codes * acq.oversample as usize;
    let counts = generate_photon_counts(&effective, n_internal, acq.internal_rate(), seed)?;
    let (pe1, pe2) = split_and_detect(&counts, &effective, seed)?;
    drop(counts);
    let diff = balanced_difference(&pe1, &pe2)?;
    drop((pe1, pe2));
    let volts = analog_chain(&diff, &effective, acq, seed);
    drop(diff);
    let codes = adc_sample(&volts, acq, seed);
    debug_assert_eq!(codes.len(), n_codes);

    RawCodeBlock::new(
        codes,
        acq.adc_bits,
        acq.adc_sample_rate.round() as u32,
        led_on,
        seed,
        config_digest(phys, acq),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// mA.
    pub current: f64,
    /// Output code variance.
    pub variance: f64,
}

/// Drive currents of a sweep: `steps` points evenly spaced over
/// `[0, max_current]`.
pub fn sweep_currents(max_current: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| max_current * k as f64 / (steps - 1) as f64)
        .collect()
}

/// Seed used for step `step` of a sweep started with `seed`.
pub fn sweep_step_seed(seed: u64, step: usize) -> u64 {
    derive_seed(seed, Stage::Sweep, step as u64)
}

/// Steps the drive current from 0 to `phys.sweep_max_current` and records
/// the output code variance at each step. Step 0 is the LED-off floor.
pub fn current_sweep(
    phys: &PhysicsConfig,
    acq: &AcquisitionConfig,
    steps: usize,
    n_codes: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if steps < 3 {
        return Err(Error::usage("current_sweep needs at least 3 steps"));
    }
    if n_codes < 2 {
        return Err(Error::usage("current_sweep needs at least 2 codes per step"));
    }
    phys.validate()?;
    acq.validate()?;
    let currents = sweep_currents(phys.sweep_max_current, steps);

    let run_step = |(k, &current): (usize, &f64)| -> Result<SweepPoint> {
        let mut p = phys.clone();
        p.drive_current = current;
        let block = simulate_run(&p, acq, n_codes, current > 0.0, sweep_step_seed(seed, k))?;
        Ok(SweepPoint {
            current,
            variance: noise_stats(&block)?.variance,
        })
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        currents.par_iter().enumerate().map(run_step).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        currents.iter().enumerate().map(run_step).collect()
    }
}

/// Seed for repetition `run` of a repeated sweep.
pub fn sweep_run_seed(seed: u64, run: usize) -> u64 {
    derive_seed(seed, Stage::Sweep, u64::MAX - run as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    #[test]
    fn silent_chain_sits_at_midscale() {
        let cfg = Config::default_calibrated();
        let mut acq = cfg.acquisition.clone();
        acq.electronic_noise_rms = 0.0;
        acq.adc_noise_enabled = false;
        let block = simulate_run(&cfg.physics, &acq, 1000, false, 1).unwrap();
        assert!(block.codes.iter().all(|&c| c == 2048));
        assert!(!block.led_on);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = Config::default_calibrated();
        let a = simulate_run(&cfg.physics, &cfg.acquisition, 5000, true, 99).unwrap();
        let b = simulate_run(&cfg.physics, &cfg.acquisition, 5000, true, 99).unwrap();
        let c = simulate_run(&cfg.physics, &cfg.acquisition, 5000, true, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.codes, c.codes);
        assert_eq!(a.len(), 5000);
    }

    #[test]
    fn block_rejects_oversized_codes() {
        assert!(RawCodeBlock::from_codes(vec![0, 4095], 12).is_ok());
        assert!(RawCodeBlock::from_codes(vec![4096], 12).is_err());
        assert!(RawCodeBlock::from_codes(vec![1], 0).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cfg = Config::default_calibrated();
        assert!(simulate_run(&cfg.physics, &cfg.acquisition, 0, true, 1).is_err());
        let mut p = cfg.physics.clone();
        p.quantum_efficiency = 1.5;
        assert!(matches!(
            simulate_run(&p, &cfg.acquisition, 10, true, 1),
            Err(Error::Config(_))
        ));
        assert!(current_sweep(&cfg.physics, &cfg.acquisition, 2, 100, 1).is_err());
    }

    #[test]
    fn zero_current_step_is_the_led_off_floor() {
        let cfg = Config::default_calibrated();
        let sweep = current_sweep(&cfg.physics, &cfg.acquisition, 3, 2000, 5).unwrap();
        assert_eq!(sweep[0].current, 0.0);
        let off = simulate_run(&cfg.physics, &cfg.acquisition, 2000, false, sweep_step_seed(5, 0)).unwrap();
        assert_eq!(sweep[0].variance, noise_stats(&off).unwrap().variance);
        assert_eq!(sweep[2].current, cfg.physics.sweep_max_current);
        assert!(sweep[2].variance > 10.0 * sweep[0].variance);
    }
}
