//! Configuration types and the flat `key = value` configuration format.
//!
//! Keys are `section.field`, mirroring the struct field names below, e.g.
//! `physics.drive_current = 70.0`. `#` starts a comment. Unknown keys and
//! duplicate keys are errors. A file only needs to list the keys it changes;
//! everything else comes from the shipped calibration in
//! `configs/default.conf`.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The shipped default calibration.
pub const DEFAULT_CONFIG_TEXT: &str = include_str!("../../../configs/default.conf");

/// Optical source, beam split and detection parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsConfig {
    /// LED forward current in mA.
    pub drive_current: f64,
    /// Upper end of the drive-current sweep in mA.
    pub sweep_max_current: f64,
    /// Mean photons per internal sampling interval per mA of drive.
    pub flux_coefficient: f64,
    /// Nominal fraction of photons routed to PD1.
    pub split_ratio: f64,
    /// Relative excess of the PD1 routing probability over `split_ratio`.
    pub split_imbalance_epsilon: f64,
    pub quantum_efficiency: f64,
    /// RMS of the relative common-mode intensity modulation.
    pub classical_mod_depth: f64,
    /// Single-pole cutoff of the common-mode modulation, Hz.
    pub classical_mod_cutoff: f64,
    pub electron_charge: f64,
    /// Photon energy (hbar * omega) in joules.
    pub photon_energy: f64,
}

/// Analog chain and ADC parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionConfig {
    /// V/A.
    pub transimpedance_gain: f64,
    pub voltage_gain: f64,
    /// Ohms; used for noise-power bookkeeping only.
    pub load_resistance: f64,
    /// Photodiode -3 dB bandwidth, Hz.
    pub pd_bandwidth: f64,
    pub offset_volts: f64,
    pub full_scale_volts: f64,
    pub adc_bits: u32,
    pub adc_enob: f64,
    pub adc_sample_rate: f64,
    /// Internal simulation rate as a multiple of `adc_sample_rate`.
    pub oversample: u32,
    /// RMS Gaussian noise added at the filter input, volts per internal sample.
    pub electronic_noise_rms: f64,
    /// Whether the ENOB-calibrated converter noise is applied.
    pub adc_noise_enabled: bool,
}

/// Toeplitz extraction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorConfig {
    /// Input bits per block.
    pub n: usize,
    /// Output bits per block.
    pub m: usize,
    pub bits_per_code: usize,
    /// Statistical distance target is 2^-security_exponent.
    pub security_exponent: u32,
    /// Bits of headroom subtracted from the measured min-entropy.
    pub clearance_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub physics: PhysicsConfig,
    pub acquisition: AcquisitionConfig,
    pub extractor: ExtractorConfig,
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::config(format!(
                "physics.split_ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::config(format!(
                "physics.quantum_efficiency must lie in (0, 1], got {}",
                self.quantum_efficiency
            )));
        }
        if !(self.flux_coefficient > 0.0) {
            return Err(Error::config("physics.flux_coefficient must be > 0"));
        }
        if !(self.drive_current >= 0.0) || !(self.sweep_max_current >= 0.0) {
            return Err(Error::config("drive currents must be >= 0"));
        }
        if !(self.classical_mod_depth >= 0.0) {
            return Err(Error::config("physics.classical_mod_depth must be >= 0"));
        }
        if !(self.classical_mod_cutoff > 0.0) {
            return Err(Error::config("physics.classical_mod_cutoff must be > 0"));
        }
        if !(self.electron_charge > 0.0 && self.photon_energy > 0.0) {
            return Err(Error::config("physical constants must be > 0"));
        }
        if !self.split_imbalance_epsilon.is_finite() {
            return Err(Error::config("physics.split_imbalance_epsilon must be finite"));
        }
        Ok(())
    }

    /// Mean photons per internal interval at the configured drive current.
    pub fn mean_photons(&self) -> f64 {
        self.flux_coefficient * self.drive_current
    }

    /// Probability that a photon is routed to PD1.
    pub fn pd1_probability(&self) -> f64 {
        (self.split_ratio * (1.0 + self.split_imbalance_epsilon)).clamp(0.0, 1.0)
    }

    /// Optical power in watts carried by a photon flux (photons/s).
    pub fn optical_power(&self, photon_flux: f64) -> f64 {
        photon_flux * self.photon_energy
    }

    /// Mean photocurrent i = eta * e * P / (hbar omega) for an optical power.
    pub fn photocurrent(&self, optical_power: f64) -> f64 {
        self.quantum_efficiency * self.electron_charge * optical_power / self.photon_energy
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.full_scale_volts > 0.0) {
            return Err(Error::config("acquisition.full_scale_volts must be > 0"));
        }
        if self.adc_bits == 0 || self.adc_bits > 16 {
            return Err(Error::config("acquisition.adc_bits must lie in 1..=16"));
        }
        if !(self.adc_enob > 0.0 && self.adc_enob <= self.adc_bits as f64) {
            return Err(Error::config("acquisition.adc_enob must be > 0 and <= adc_bits"));
        }
        if !(self.adc_sample_rate > 0.0) || self.oversample == 0 {
            return Err(Error::config(
                "acquisition.adc_sample_rate and oversample must be positive",
            ));
        }
        if !(self.pd_bandwidth > 0.0) {
            return Err(Error::config("acquisition.pd_bandwidth must be > 0"));
        }
        if !(self.electronic_noise_rms >= 0.0) {
            return Err(Error::config("acquisition.electronic_noise_rms must be >= 0"));
        }
        if !(self.transimpedance_gain.is_finite()
            && self.voltage_gain.is_finite()
            && self.load_resistance > 0.0
            && self.offset_volts.is_finite())
        {
            return Err(Error::config("gains, load resistance and offset must be finite"));
        }
        Ok(())
    }

    /// Non-fatal findings about the operating point.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.adc_sample_rate > self.pd_bandwidth {
            out.push(format!(
                "adc_sample_rate {} Sa/s exceeds pd_bandwidth {} Hz; successive samples will be correlated",
                self.adc_sample_rate, self.pd_bandwidth
            ));
        }
        out
    }

    /// Rate of the simulated analog signal before decimation.
    pub fn internal_rate(&self) -> f64 {
        self.adc_sample_rate * self.oversample as f64
    }

    pub fn max_code(&self) -> u16 {
        ((1u32 << self.adc_bits) - 1) as u16
    }

    pub fn volts_per_code(&self) -> f64 {
        self.full_scale_volts / (1u64 << self.adc_bits) as f64
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bits_per_code == 0 || !self.n.is_multiple_of(self.bits_per_code) {
            return Err(Error::config(format!(
                "extractor.n ({}) must be a multiple of extractor.bits_per_code ({})",
                self.n, self.bits_per_code
            )));
        }
        if self.m == 0 || self.m > self.n {
            return Err(Error::config("extractor.m must satisfy 1 <= m <= n"));
        }
        if !(self.clearance_bits >= 0.0) {
            return Err(Error::config("extractor.clearance_bits must be >= 0"));
        }
        Ok(())
    }
}

impl Config {
    /// The shipped calibration (`configs/default.conf`).
    pub fn default_calibrated() -> Self {
        Self::parse_complete(DEFAULT_CONFIG_TEXT).expect("shipped default config is valid")
    }

    /// Parses a file that overrides keys of the default calibration.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default_calibrated();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses text that must set every known key.
    fn parse_complete(text: &str) -> Result<Self> {
        let mut cfg = Self::blank();
        let seen = cfg.apply_text(text)?;
        let missing: Vec<&str> = KEYS.iter().copied().filter(|k| !seen.contains(k)).collect();
        if !missing.is_empty() {
            return Err(Error::config(format!("missing keys: {}", missing.join(", "))));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        self.acquisition.validate()?;
        self.extractor.validate()?;
        if self.extractor.bits_per_code != self.acquisition.adc_bits as usize {
            return Err(Error::config(
                "extractor.bits_per_code must equal acquisition.adc_bits",
            ));
        }
        Ok(())
    }

    fn apply_text(&mut self, text: &str) -> Result<Vec<&'static str>> {
        let mut seen: Vec<&'static str> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let canonical = KEYS
                .iter()
                .copied()
                .find(|k| *k == key)
                .ok_or_else(|| Error::config(format!("line {}: unknown key `{key}`", lineno + 1)))?;
            if seen.contains(&canonical) {
                return Err(Error::config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            self.set(canonical, value)
                .map_err(|e| Error::config(format!("line {}: {e}", lineno + 1)))?;
            seen.push(canonical);
        }
        Ok(seen)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let p = &mut self.physics;
        let a = &mut self.acquisition;
        let x = &mut self.extractor;
        match key {
            "physics.drive_current" => p.drive_current = num(key, value)?,
            "physics.sweep_max_current" => p.sweep_max_current = num(key, value)?,
            "physics.flux_coefficient" => p.flux_coefficient = num(key, value)?,
            "physics.split_ratio" => p.split_ratio = num(key, value)?,
            "physics.split_imbalance_epsilon" => p.split_imbalance_epsilon = num(key, value)?,
            "physics.quantum_efficiency" => p.quantum_efficiency = num(key, value)?,
            "physics.classical_mod_depth" => p.classical_mod_depth = num(key, value)?,
            "physics.classical_mod_cutoff" => p.classical_mod_cutoff = num(key, value)?,
            "physics.electron_charge" => p.electron_charge = num(key, value)?,
            "physics.photon_energy" => p.photon_energy = num(key, value)?,
            "acquisition.transimpedance_gain" => a.transimpedance_gain = num(key, value)?,
            "acquisition.voltage_gain" => a.voltage_gain = num(key, value)?,
            "acquisition.load_resistance" => a.load_resistance = num(key, value)?,
            "acquisition.pd_bandwidth" => a.pd_bandwidth = num(key, value)?,
            "acquisition.offset_volts" => a.offset_volts = num(key, value)?,
            "acquisition.full_scale_volts" => a.full_scale_volts = num(key, value)?,
            "acquisition.adc_bits" => a.adc_bits = num(key, value)?,
            "acquisition.adc_enob" => a.adc_enob = num(key, value)?,
            "acquisition.adc_sample_rate" => a.adc_sample_rate = num(key, value)?,
            "acquisition.oversample" => a.oversample = num(key, value)?,
            "acquisition.electronic_noise_rms" => a.electronic_noise_rms = num(key, value)?,
            "acquisition.adc_noise_enabled" => a.adc_noise_enabled = num(key, value)?,
            "extractor.n" => x.n = num(key, value)?,
            "extractor.m" => x.m = num(key, value)?,
            "extractor.bits_per_code" => x.bits_per_code = num(key, value)?,
            "extractor.security_exponent" => x.security_exponent = num(key, value)?,
            "extractor.clearance_bits" => x.clearance_bits = num(key, value)?,
            _ => unreachable!("key table and setter out of sync: {key}"),
        }
        Ok(())
    }

    fn blank() -> Self {
        Config {
            physics: PhysicsConfig {
                drive_current: 0.0,
                sweep_max_current: 0.0,
                flux_coefficient: 0.0,
                split_ratio: 0.0,
                split_imbalance_epsilon: 0.0,
                quantum_efficiency: 0.0,
                classical_mod_depth: 0.0,
                classical_mod_cutoff: 0.0,
                electron_charge: 0.0,
                photon_energy: 0.0,
            },
            acquisition: AcquisitionConfig {
                transimpedance_gain: 0.0,
                voltage_gain: 0.0,
                load_resistance: 0.0,
                pd_bandwidth: 0.0,
                offset_volts: 0.0,
                full_scale_volts: 0.0,
                adc_bits: 0,
                adc_enob: 0.0,
                adc_sample_rate: 0.0,
                oversample: 0,
                electronic_noise_rms: 0.0,
                adc_noise_enabled: false,
            },
            extractor: ExtractorConfig {
                n: 0,
                m: 0,
                bits_per_code: 0,
                security_exponent: 0,
                clearance_bits: 0.0,
            },
        }
    }

    /// Canonical `key = value` rendering of every key.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.value_of(key));
        }
        out
    }

    fn value_of(&self, key: &str) -> String {
        let p = &self.physics;
        let a = &self.acquisition;
        let x = &self.extractor;
        match key {
            "physics.drive_current" => format!("{:?}", p.drive_current),
            "physics.sweep_max_current" => format!("{:?}", p.sweep_max_current),
            "physics.flux_coefficient" => format!("{:?}", p.flux_coefficient),
            "physics.split_ratio" => format!("{:?}", p.split_ratio),
            "physics.split_imbalance_epsilon" => format!("{:?}", p.split_imbalance_epsilon),
            "physics.quantum_efficiency" => format!("{:?}", p.quantum_efficiency),
            "physics.classical_mod_depth" => format!("{:?}", p.classical_mod_depth),
            "physics.classical_mod_cutoff" => format!("{:?}", p.classical_mod_cutoff),
            "physics.electron_charge" => format!("{:?}", p.electron_charge),
            "physics.photon_energy" => format!("{:?}", p.photon_energy),
            "acquisition.transimpedance_gain" => format!("{:?}", a.transimpedance_gain),
            "acquisition.voltage_gain" => format!("{:?}", a.voltage_gain),
            "acquisition.load_resistance" => format!("{:?}", a.load_resistance),
            "acquisition.pd_bandwidth" => format!("{:?}", a.pd_bandwidth),
            "acquisition.offset_volts" => format!("{:?}", a.offset_volts),
            "acquisition.full_scale_volts" => format!("{:?}", a.full_scale_volts),
            "acquisition.adc_bits" => a.adc_bits.to_string(),
            "acquisition.adc_enob" => format!("{:?}", a.adc_enob),
            "acquisition.adc_sample_rate" => format!("{:?}", a.adc_sample_rate),
            "acquisition.oversample" => a.oversample.to_string(),
            "acquisition.electronic_noise_rms" => format!("{:?}", a.electronic_noise_rms),
            "acquisition.adc_noise_enabled" => a.adc_noise_enabled.to_string(),
            "extractor.n" => x.n.to_string(),
            "extractor.m" => x.m.to_string(),
            "extractor.bits_per_code" => x.bits_per_code.to_string(),
            "extractor.security_exponent" => x.security_exponent.to_string(),
            "extractor.clearance_bits" => format!("{:?}", x.clearance_bits),
            _ => unreachable!(),
        }
    }
}

/// Every recognised configuration key.
pub const KEYS: &[&str] = &[
    "physics.drive_current",
    "physics.sweep_max_current",
    "physics.flux_coefficient",
    "physics.split_ratio",
    "physics.split_imbalance_epsilon",
    "physics.quantum_efficiency",
    "physics.classical_mod_depth",
    "physics.classical_mod_cutoff",
    "physics.electron_charge",
    "physics.photon_energy",
    "acquisition.transimpedance_gain",
    "acquisition.voltage_gain",
    "acquisition.load_resistance",
    "acquisition.pd_bandwidth",
    "acquisition.offset_volts",
    "acquisition.full_scale_volts",
    "acquisition.adc_bits",
    "acquisition.adc_enob",
    "acquisition.adc_sample_rate",
    "acquisition.oversample",
    "acquisition.electronic_noise_rms",
    "acquisition.adc_noise_enabled",
    "extractor.n",
    "extractor.m",
    "extractor.bits_per_code",
    "extractor.security_exponent",
    "extractor.clearance_bits",
];

fn num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

/// 64-bit digest of the simulation-relevant configuration.
pub fn config_digest(physics: &PhysicsConfig, acquisition: &AcquisitionConfig) -> u64 {
    let cfg = Config {
        physics: physics.clone(),
        acquisition: acquisition.clone(),
        extractor: Config::blank().extractor,
    };
    let mut hasher = Sha256::new();
    for key in KEYS.iter().filter(|k| !k.starts_with("extractor.")) {
        hasher.update(key.as_bytes());
        hasher.update(b"=");
        hasher.update(cfg.value_of(key).as_bytes());
        hasher.update(b"\n");
    }
    let out = hasher.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 output is 32 bytes"))
}
