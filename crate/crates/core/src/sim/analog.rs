//! Transimpedance/voltage amplification, photodiode bandwidth and the ADC.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{AcquisitionConfig, PhysicsConfig};
use crate::rng::{derive_seed, stage_rng, Stage};

/// Discrete single-pole low-pass, `y[k] = y[k-1] + alpha (x[k] - y[k-1])`
/// with `alpha = 1 - exp(-2 pi fc / fs)` (impulse-invariant pole).
#[derive(Debug, Clone, Copy)]
pub struct SinglePoleLowPass {
    alpha: f64,
    state: Option<f64>,
}

impl SinglePoleLowPass {
    pub fn new(cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        let alpha = 1.0 - (-2.0 * PI * cutoff_hz / sample_rate_hz).exp();
        Self { alpha, state: None }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Output variance divided by input variance for white input.
    pub fn white_noise_gain(&self) -> f64 {
        let pole = 1.0 - self.alpha;
        (1.0 - pole) / (1.0 + pole)
    }

    /// The first sample initializes the state, so a constant input passes
    /// through without a start-up transient.
    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        let y = match self.state {
            None => x,
            Some(prev) => prev + self.alpha * (x - prev),
        };
        self.state = Some(y);
        y
    }
}

/// Converts differential photoelectron counts per internal interval into
/// voltages at the ADC input, still at the internal rate.
///
/// Counts become current through `electron_charge * internal_rate`, then
/// the transimpedance and voltage gains apply. Electronic noise of
/// `electronic_noise_rms` is added at the filter input, so it is shaped by
/// the photodiode bandwidth like the signal. The offset is added last.
pub fn analog_chain(diff: &[i64], phys: &PhysicsConfig, acq: &AcquisitionConfig, seed: u64) -> Vec<f64> {
    let rate = acq.internal_rate();
    let volts_per_electron = phys.electron_charge * rate * acq.transimpedance_gain * acq.voltage_gain;
    let mut filter = SinglePoleLowPass::new(acq.pd_bandwidth, rate);
    let noise = acq.electronic_noise_rms;
    let mut rng = stage_rng(derive_seed(seed, Stage::Analog, 0));
    diff.iter()
        .map(|&d| {
            let mut v = d as f64 * volts_per_electron;
            if noise > 0.0 {
                v += noise * rng.sample::<f64, _>(StandardNormal);
            }
            filter.step(v) + acq.offset_volts
        })
        .collect()
}

/// RMS converter noise, in codes, that brings a full-scale sine down to
/// `enob` effective bits. Quantization contributes `1/sqrt(12)` codes of the
/// total `FS_rms / 10^((6.02 enob + 1.76) / 20)`.
pub fn adc_noise_rms_codes(bits: u32, enob: f64) -> f64 {
    let full_scale_rms = (1u64 << (bits - 1)) as f64 / SQRT_2;
    let sinad_db = 6.02 * enob + 1.76;
    let total = full_scale_rms / 10f64.powf(sinad_db / 20.0);
    (total * total - 1.0 / 12.0).max(0.0).sqrt()
}

/// Decimates internal-rate voltages to the ADC rate, adds the converter
/// noise and quantizes to `adc_bits` over `[0, full_scale_volts]`.
///
/// The sample-and-hold takes the last internal sample of each group of
/// `oversample`. Out-of-range voltages clamp to code 0 or the top code.
pub fn adc_sample(voltages: &[f64], acq: &AcquisitionConfig, seed: u64) -> Vec<u16> {
    let step = acq.oversample as usize;
    let lsb = acq.volts_per_code();
    let top = acq.max_code() as f64;
    let noise_codes = if acq.adc_noise_enabled {
        adc_noise_rms_codes(acq.adc_bits, acq.adc_enob)
    } else {
        0.0
    };
    let mut rng = stage_rng(derive_seed(seed, Stage::Adc, 0));
    voltages
        .iter()
        .skip(step - 1)
        .step_by(step)
        .map(|&v| {
            let mut code = v / lsb;
            if noise_codes > 0.0 {
                code += noise_codes * rng.sample::<f64, _>(StandardNormal);
            }
            code.floor().clamp(0.0, top) as u16
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn std_dev(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    #[test]
    fn silent_input_gives_offset() {
        let cfg = Config::default_calibrated();
        let mut acq = cfg.acquisition.clone();
        acq.electronic_noise_rms = 0.0;
        let v = analog_chain(&vec![0; 1000], &cfg.physics, &acq, 1);
        assert!(v.iter().all(|&x| x == acq.offset_volts));
    }

    #[test]
    fn sine_at_cutoff_is_attenuated_by_root_two() {
        // Oracle: |H(f)| = 1 / sqrt(1 + (f / fc)^2) = 1/sqrt(2) at f = fc.
        // Run at 10 MSa/s so that 250 kHz is well inside the band.
        let cfg = Config::default_calibrated();
        let mut acq = cfg.acquisition.clone();
        acq.electronic_noise_rms = 0.0;
        acq.offset_volts = 0.0;
        acq.adc_sample_rate = 2.5e6;
        acq.oversample = 4;
        let rate = acq.internal_rate();
        let f = acq.pd_bandwidth;
        let amp_counts = 1.0e6;
        let n = 400_000;
        let diff: Vec<i64> = (0..n)
            .map(|k| (amp_counts * (2.0 * PI * f * k as f64 / rate).sin()).round() as i64)
            .collect();
        let out = analog_chain(&diff, &cfg.physics, &acq, 2);
        let gain = cfg.physics.electron_charge * rate * acq.transimpedance_gain * acq.voltage_gain;
        let settled = &out[1000..];
        let passband_rms = amp_counts * gain / SQRT_2;
        let ratio = std_dev(settled) / passband_rms;
        let oracle = 1.0 / (1.0f64 + 1.0).sqrt();
        assert!((ratio - oracle).abs() / oracle < 0.02, "ratio {ratio}");
    }

    #[test]
    fn electronic_noise_is_shaped_by_the_filter() {
        // Oracle: output variance = sigma^2 * sum_k h[k]^2 over the impulse
        // response, summed numerically here.
        let cfg = Config::default_calibrated();
        let acq = cfg.acquisition.clone();
        let sigma = acq.electronic_noise_rms;
        let alpha = 1.0 - (-2.0 * PI * acq.pd_bandwidth / acq.internal_rate()).exp();
        let energy: f64 = (0..200).map(|k| (alpha * (1.0 - alpha).powi(k)).powi(2)).sum();
        let expected = sigma * energy.sqrt();
        let out = analog_chain(&vec![0; 1_000_000], &cfg.physics, &acq, 3);
        let got = std_dev(&out);
        assert!((got - expected).abs() / expected < 0.03, "{got} vs {expected}");
        let f = SinglePoleLowPass::new(acq.pd_bandwidth, acq.internal_rate());
        assert!((f.white_noise_gain() - energy).abs() < 1e-12);
    }

    #[test]
    fn midscale_and_clamping() {
        let mut acq = Config::default_calibrated().acquisition;
        acq.adc_noise_enabled = false;
        let mid = vec![acq.full_scale_volts / 2.0; 40];
        assert!(adc_sample(&mid, &acq, 1).iter().all(|&c| c == 2048));
        let hi = vec![
            acq.full_scale_volts,
            10.0,
            f64::INFINITY,
            acq.full_scale_volts * 1.5,
        ];
        let codes = adc_sample(&[hi.clone(), hi.clone()].concat(), &acq, 1);
        assert_eq!(codes, vec![4095, 4095]);
        let lo = vec![-1.0; 8];
        assert!(adc_sample(&lo, &acq, 1).iter().all(|&c| c == 0));
    }

    #[test]
    fn decimation_takes_every_oversample_th_sample() {
        let mut acq = Config::default_calibrated().acquisition;
        acq.adc_noise_enabled = false;
        let lsb = acq.volts_per_code();
        let v: Vec<f64> = (0..12).map(|k| (k as f64 + 0.5) * lsb).collect();
        assert_eq!(adc_sample(&v, &acq, 0), vec![3, 7, 11]);
    }

    #[test]
    fn enob_noise_budget() {
        // 8 effective bits on 12: total noise 4.62 codes rms.
        let n = adc_noise_rms_codes(12, 8.0);
        let total = (n * n + 1.0 / 12.0).sqrt();
        assert!((total - 4.6218).abs() < 1e-3, "{total}");
        // A converter asked for its ideal ENOB has (almost) no extra noise.
        assert!(adc_noise_rms_codes(12, 12.0) < 0.05);
    }
}
