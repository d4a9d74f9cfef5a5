//! The `qrng` pipeline: simulate -> characterize -> extract -> test, plus
//! the current sweep. Each `cmd_*` function is one subcommand; `main.rs`
//! only parses flags.

pub mod manifest;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use shotnoise_qrng::entropy::{
    extraction_ratio, histogram, input_referred_noise, linearity_fit, min_entropy, noise_stats, qcnr,
    qcnr_power_db, LinearFitResult, NoiseStats, QUADRATIC_T_THRESHOLD,
};
use shotnoise_qrng::io::{export_raw, import_raw, read_raw, read_seed_file, write_raw, write_seed_file};
use shotnoise_qrng::sim::{current_sweep, simulate_run, sweep_run_seed, SweepPoint};
use shotnoise_qrng::stats::{autocorrelation, ks_uniformity, run_battery, AutocorrResult, PValueSet};
use shotnoise_qrng::toeplitz::{leftover_hash_check, stream_extract, ToeplitzSeed};
use shotnoise_qrng::{BitStream, Config, RawCodeBlock};

pub use manifest::RunManifest;

/// Loads `path`, or the shipped calibration when no path is given. Config
/// warnings go to standard error.
pub fn load_config(path: Option<&Path>) -> Result<Config> {
    let cfg = match path {
        Some(p) => Config::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => Config::default_calibrated(),
    };
    for w in cfg.acquisition.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn cmd_simulate(
    config: Option<&Path>,
    n_codes: usize,
    led_on: bool,
    seed: u64,
    out: &Path,
) -> Result<RawCodeBlock> {
    let mut manifest = RunManifest::start("simulate", config, seed);
    let cfg = load_config(config)?;
    let block = simulate_run(&cfg.physics, &cfg.acquisition, n_codes, led_on, seed)?;
    write_raw(out, &block).with_context(|| format!("writing {}", out.display()))?;
    manifest.config_digest = Some(format!("{:016x}", block.config_digest));
    manifest.outputs.push(out.display().to_string());
    manifest.finish(&manifest_path(out))?;
    Ok(block)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizeReport {
    pub on: NoiseStats,
    pub off: NoiseStats,
    /// `20 log10`, as defined for the device figure of merit.
    pub qcnr_db: f64,
    /// `10 log10` of the same ratio.
    pub qcnr_power_db: f64,
    pub min_entropy_bits: f64,
    pub clearance_bits: f64,
    pub extraction_ratio: u32,
    pub adc_bits: u32,
    /// Largest Toeplitz output for the configured block at the measured rate.
    pub leftover_m_max: i64,
    pub on_noise_power_w: f64,
}

impl CharacterizeReport {
    pub fn to_csv(&self) -> String {
        let rows: [(&str, String, &str); 14] = [
            ("on_mean", self.on.mean.to_string(), "code"),
            ("on_variance", self.on.variance.to_string(), "code^2"),
            ("off_mean", self.off.mean.to_string(), "code"),
            ("off_variance", self.off.variance.to_string(), "code^2"),
            ("qcnr_db", self.qcnr_db.to_string(), "dB"),
            ("qcnr_power_db", self.qcnr_power_db.to_string(), "dB"),
            ("min_entropy", self.min_entropy_bits.to_string(), "bits/sample"),
            (
                "min_entropy_rate",
                (self.min_entropy_bits / self.adc_bits as f64).to_string(),
                "bits/bit",
            ),
            ("clearance", self.clearance_bits.to_string(), "bits/sample"),
            (
                "extraction_ratio",
                self.extraction_ratio.to_string(),
                "bits/sample",
            ),
            ("adc_bits", self.adc_bits.to_string(), "bits"),
            (
                "leftover_hash_m_max",
                self.leftover_m_max.to_string(),
                "bits/block",
            ),
            ("on_noise_power", self.on_noise_power_w.to_string(), "W"),
            ("samples", self.on.count.to_string(), "count"),
        ];
        let mut out = String::from("metric,value,units\n");
        for (m, v, u) in rows {
            let _ = writeln!(out, "{m},{v},{u}");
        }
        out
    }
}

/// QCNR, min-entropy and extraction ratio from an LED-on and an LED-off file.
pub fn characterize(on: &RawCodeBlock, off: &RawCodeBlock, cfg: &Config) -> Result<CharacterizeReport> {
    if !on.led_on || off.led_on {
        eprintln!(
            "warning: expected an LED-on and an LED-off file, got led_on={} and led_on={}",
            on.led_on, off.led_on
        );
    }
    let s_on = noise_stats(on)?;
    let s_off = noise_stats(off)?;
    let q = qcnr(&s_on, &s_off)?;
    let q10 = qcnr_power_db(&s_on, &s_off)?;
    let h = min_entropy(&histogram(on)?)?;
    let clearance = cfg.extractor.clearance_bits;
    let rate = (h / on.adc_bits as f64).clamp(0.0, 1.0);
    let lhl = leftover_hash_check(&cfg.extractor, rate)?;
    Ok(CharacterizeReport {
        on: s_on,
        off: s_off,
        qcnr_db: q,
        qcnr_power_db: q10,
        min_entropy_bits: h,
        clearance_bits: clearance,
        extraction_ratio: extraction_ratio(h, clearance)?,
        adc_bits: on.adc_bits,
        leftover_m_max: lhl.m_max,
        on_noise_power_w: input_referred_noise(&s_on, &cfg.acquisition).1,
    })
}

pub fn cmd_characterize(
    on_file: &Path,
    off_file: &Path,
    config: Option<&Path>,
    out_csv: &Path,
) -> Result<CharacterizeReport> {
    let mut manifest = RunManifest::start("characterize", config, 0);
    let cfg = load_config(config)?;
    let on = read_raw(on_file).with_context(|| format!("reading {}", on_file.display()))?;
    let off = read_raw(off_file).with_context(|| format!("reading {}", off_file.display()))?;
    let report = characterize(&on, &off, &cfg)?;
    fs::write(out_csv, report.to_csv())?;
    manifest.inputs = vec![on_file.display().to_string(), off_file.display().to_string()];
    manifest.config_digest = Some(format!("{:016x}", on.config_digest));
    manifest.outputs.push(out_csv.display().to_string());
    manifest.finish(&manifest_path(out_csv))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// One sweep per repetition.
    pub runs: Vec<Vec<SweepPoint>>,
    pub fits: Vec<LinearFitResult>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("current_mA,variance,run_index\n");
        for (r, points) in self.runs.iter().enumerate() {
            for p in points {
                let _ = writeln!(out, "{},{},{r}", p.current, p.variance);
            }
        }
        out
    }

    pub fn fits_csv(&self) -> String {
        let mut out = String::from(
            "run_index,slope,intercept,r_squared,quadratic_coeff,quadratic_t_stat,super_poissonian\n",
        );
        for (r, f) in self.fits.iter().enumerate() {
            let _ = writeln!(
                out,
                "{r},{},{},{},{},{},{}",
                f.slope,
                f.intercept,
                f.r_squared,
                f.quadratic_coeff,
                f.quadratic_t_stat,
                f.is_super_poissonian(QUADRATIC_T_THRESHOLD)
            );
        }
        out
    }
}

/// `runs` independent current sweeps, each with its own linear fit.
pub fn sweep(cfg: &Config, steps: usize, n_codes: usize, runs: usize, seed: u64) -> Result<SweepReport> {
    if runs == 0 {
        bail!("--runs must be at least 1");
    }
    let mut report = SweepReport {
        runs: Vec::with_capacity(runs),
        fits: Vec::with_capacity(runs),
    };
    for r in 0..runs {
        let points = current_sweep(
            &cfg.physics,
            &cfg.acquisition,
            steps,
            n_codes,
            sweep_run_seed(seed, r),
        )?;
        report.fits.push(linearity_fit(&points)?);
        report.runs.push(points);
    }
    Ok(report)
}

pub fn cmd_sweep(
    config: Option<&Path>,
    steps: usize,
    n_codes: usize,
    runs: usize,
    seed: u64,
    out_csv: &Path,
) -> Result<SweepReport> {
    let mut manifest = RunManifest::start("sweep", config, seed);
    let cfg = load_config(config)?;
    let report = sweep(&cfg, steps, n_codes, runs, seed)?;
    fs::write(out_csv, report.to_csv())?;
    let fit_path = sibling(out_csv, "fit.csv");
    fs::write(&fit_path, report.fits_csv())?;
    manifest.config_digest = Some(digest_hex(&cfg));
    manifest.outputs = vec![out_csv.display().to_string(), fit_path.display().to_string()];
    manifest.finish(&manifest_path(out_csv))?;
    Ok(report)
}

fn digest_hex(cfg: &Config) -> String {
    format!(
        "{:016x}",
        shotnoise_qrng::config::config_digest(&cfg.physics, &cfg.acquisition)
    )
}

/// `out` with its extension replaced by `suffix` (`sweep.csv` -> `sweep.fit.csv`).
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

pub fn cmd_make_seed(seed: u64, out: &Path) -> Result<[u8; 32]> {
    let key = ToeplitzSeed::key_from_u64(seed);
    write_seed_file(out, &key)?;
    Ok(key)
}

pub fn cmd_extract(
    raw_files: &[PathBuf],
    seed_file: &Path,
    config: Option<&Path>,
    out_bits: &Path,
) -> Result<BitStream> {
    let mut manifest = RunManifest::start("extract", config, 0);
    let cfg = load_config(config)?;
    let key = read_seed_file(seed_file).with_context(|| format!("reading seed {}", seed_file.display()))?;
    let seed = ToeplitzSeed::from_key(key, cfg.extractor.n, cfg.extractor.m)?;
    let blocks = raw_files
        .iter()
        .map(|p| read_raw(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let bits = stream_extract(&blocks, &cfg.extractor, &seed)?;
    export_raw(&bits, out_bits)?;
    manifest.inputs = raw_files.iter().map(|p| p.display().to_string()).collect();
    manifest.inputs.push(seed_file.display().to_string());
    manifest.outputs.push(out_bits.display().to_string());
    manifest.finish(&manifest_path(out_bits))?;
    Ok(bits)
}

/// Significance level for the KS check of each battery test.
pub const KS_ALPHA: f64 = 0.01;
/// Largest tolerated fraction of lags outside the three-sigma band.
pub const AUTOCORR_MAX_EXCEEDANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub pvalues: PValueSet,
    /// (test name, KS D, KS p-value).
    pub ks: Vec<(String, f64, f64)>,
    pub autocorr: AutocorrResult,
}

impl TestReport {
    pub fn ks_pass(&self) -> bool {
        self.ks.iter().all(|(_, _, p)| *p > KS_ALPHA)
    }

    pub fn exceedance_fraction(&self) -> f64 {
        let lags = self.autocorr.coefficients.len().saturating_sub(1).max(1);
        self.autocorr.exceedances().len() as f64 / lags as f64
    }

    pub fn autocorr_pass(&self) -> bool {
        self.autocorr.coefficients[0] == 1.0 && self.exceedance_fraction() <= AUTOCORR_MAX_EXCEEDANCE
    }

    pub fn pass(&self) -> bool {
        self.ks_pass() && self.autocorr_pass()
    }

    pub fn pvalues_csv(&self) -> String {
        let mut out = String::from("test,substream,p_value\n");
        for e in &self.pvalues.entries {
            let _ = writeln!(out, "{},{},{}", e.test, e.substream, e.p_value);
        }
        out
    }

    pub fn autocorr_csv(&self) -> String {
        let mut out = String::from("lag,rho,bound\n");
        for (k, r) in self.autocorr.coefficients.iter().enumerate() {
            let _ = writeln!(out, "{k},{r},{}", self.autocorr.three_sigma_bound);
        }
        out
    }

    pub fn summary(&self) -> String {
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut out = String::new();
        for (name, d, p) in &self.ks {
            let _ = writeln!(out, "{} ks[{name}] D={d:.4} p={p:.4}", verdict(*p > KS_ALPHA));
        }
        let _ = writeln!(
            out,
            "{} autocorrelation rho(0)={} exceedances={}/{} bound={:.3e}",
            verdict(self.autocorr_pass()),
            self.autocorr.coefficients[0],
            self.autocorr.exceedances().len(),
            self.autocorr.coefficients.len() - 1,
            self.autocorr.three_sigma_bound
        );
        let _ = writeln!(out, "{} overall", verdict(self.pass()));
        out
    }
}

/// Battery over `substreams` sub-streams, KS per test, autocorrelation of
/// the whole stream.
pub fn test_bits(bits: &BitStream, substreams: usize, max_lag: usize) -> Result<TestReport> {
    let pvalues = run_battery(bits, substreams)?;
    let mut ks = Vec::new();
    for name in pvalues.test_names() {
        let r = ks_uniformity(&pvalues.values_for(&name))?;
        ks.push((name, r.d_statistic, r.p_value));
    }
    let autocorr = autocorrelation(bits, max_lag)?;
    Ok(TestReport {
        pvalues,
        ks,
        autocorr,
    })
}

pub fn cmd_test(bits_file: &Path, out_csv: &Path, substreams: usize, max_lag: usize) -> Result<TestReport> {
    let mut manifest = RunManifest::start("test", None, 0);
    let bits = import_raw(bits_file).with_context(|| format!("reading {}", bits_file.display()))?;
    let report = test_bits(&bits, substreams, max_lag)?;
    fs::write(out_csv, report.pvalues_csv())?;
    let ac_path = sibling(out_csv, "autocorr.csv");
    fs::write(&ac_path, report.autocorr_csv())?;
    manifest.inputs.push(bits_file.display().to_string());
    manifest.outputs = vec![out_csv.display().to_string(), ac_path.display().to_string()];
    manifest.finish(&manifest_path(out_csv))?;
    Ok(report)
}
