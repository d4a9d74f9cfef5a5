//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Runs without the libtest harness so the
//! lines show up in plain `cargo test` output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use shotnoise_qrng::io::{export_raw, import_raw, read_raw};
use shotnoise_qrng::sim::simulate_run;
use shotnoise_qrng::toeplitz::{
    extract_block, extract_fast, leftover_hash_check, stream_extract, ToeplitzSeed,
};
use shotnoise_qrng::{BitStream, Config};
use shotnoise_qrng_cli::{
    cmd_characterize, cmd_extract, cmd_make_seed, cmd_simulate, cmd_sweep, cmd_test, sweep, test_bits,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Check = fn(&Path) -> anyhow::Result<Outcome>;

fn main() -> ExitCode {
    // The libtest CLI passes filters and flags; none apply here.
    let work = TempDir::new().expect("temp dir");
    let checks: [(&str, Check); 8] = [
        ("1 qcnr", qcnr_reproduction),
        ("2 min-entropy", min_entropy_and_ratio),
        ("3 linearity", linearity),
        ("4 extractor", extractor_correctness),
        ("5 leftover-hash", leftover_hash_margin),
        ("6 statistics", statistical_quality),
        ("7 determinism", determinism),
        ("8 throughput", throughput),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let started = Instant::now();
        let outcome = check(work.path()).unwrap_or_else(|e| Outcome::new(false, format!("error: {e:#}")));
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} [{name}] {} ({:.1} s)",
            outcome.detail,
            started.elapsed().as_secs_f64()
        );
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

const ON_SEED: u64 = 1;
const OFF_SEED: u64 = 2;

/// LED-on and LED-off files of 10^6 codes, simulated once and shared.
fn on_off_files(dir: &Path) -> anyhow::Result<(PathBuf, PathBuf)> {
    let on = dir.join("on.raw");
    let off = dir.join("off.raw");
    if !on.exists() {
        cmd_simulate(None, 1_000_000, true, ON_SEED, &on)?;
        cmd_simulate(None, 1_000_000, false, OFF_SEED, &off)?;
    }
    Ok((on, off))
}

fn qcnr_reproduction(dir: &Path) -> anyhow::Result<Outcome> {
    let started = Instant::now();
    let (on, off) = on_off_files(dir)?;
    let report = cmd_characterize(&on, &off, None, &dir.join("char.csv"))?;
    let elapsed = started.elapsed();
    let pass = (30.0..=34.0).contains(&report.qcnr_db) && elapsed < Duration::from_secs(60);
    Ok(Outcome::new(
        pass,
        format!(
            "QCNR {:.2} dB in [30, 34], {:.1} s < 60 s",
            report.qcnr_db,
            elapsed.as_secs_f64()
        ),
    ))
}

fn min_entropy_and_ratio(dir: &Path) -> anyhow::Result<Outcome> {
    let (on, off) = on_off_files(dir)?;
    let report = cmd_characterize(&on, &off, None, &dir.join("char.csv"))?;
    let pass = report.min_entropy_bits >= 7.0 && report.clearance_bits == 2.0 && report.extraction_ratio == 5;
    Ok(Outcome::new(
        pass,
        format!(
            "H_min {:.3} bits >= 7, ratio {} (clearance {}) == 5",
            report.min_entropy_bits, report.extraction_ratio, report.clearance_bits
        ),
    ))
}

fn linearity(_: &Path) -> anyhow::Result<Outcome> {
    let started = Instant::now();
    let mut cfg = Config::default_calibrated();
    let base = sweep(&cfg, 20, 100_000, 3, 2024)?;
    cfg.physics.classical_mod_depth = 0.2;
    let noisy = sweep(&cfg, 20, 100_000, 3, 2024)?;
    let elapsed = started.elapsed();

    let linear_ok = base
        .fits
        .iter()
        .all(|f| f.r_squared >= 0.995 && f.quadratic_t_stat.abs() < 3.0);
    let flipped = noisy.fits.iter().all(|f| f.quadratic_t_stat > 3.0);
    let fmt = |v: Vec<f64>| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join("/");
    Ok(Outcome::new(
        linear_ok && flipped && elapsed < Duration::from_secs(300),
        format!(
            "r2 {} >= 0.995, |t| {} < 3; depth 0.2 t {} > 3; {:.0} s < 300 s",
            fmt(base.fits.iter().map(|f| f.r_squared).collect()),
            fmt(base.fits.iter().map(|f| f.quadratic_t_stat).collect()),
            fmt(noisy.fits.iter().map(|f| f.quadratic_t_stat).collect()),
            elapsed.as_secs_f64()
        ),
    ))
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitStream {
    BitStream::from_bits((0..n).map(|_| rng.random::<bool>()))
}

/// Row-by-row GF(2) product with an explicitly indexed Toeplitz matrix.
fn dense_product(seed: &ToeplitzSeed, x: &BitStream) -> BitStream {
    BitStream::from_bits(
        (0..seed.m()).map(|i| (0..seed.n()).filter(|&j| seed.entry(i, j) && x.get(j)).count() % 2 == 1),
    )
}

fn extractor_correctness(_: &Path) -> anyhow::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let mut small_bad = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=64);
        let m = rng.random_range(1..=n);
        let seed = ToeplitzSeed::new(random_bits(&mut rng, n + m - 1), n, m)?;
        let x = random_bits(&mut rng, n);
        let fast = extract_fast(&seed, &x)?;
        if fast != extract_block(&seed, &x)? || fast != dense_product(&seed, &x) {
            small_bad += 1;
        }
    }
    let mut big_bad = 0;
    for k in 0..10u64 {
        let seed = ToeplitzSeed::from_key(ToeplitzSeed::key_from_u64(k), 4092, 1705)?;
        let x = random_bits(&mut rng, 4092);
        if extract_fast(&seed, &x)? != extract_block(&seed, &x)? {
            big_bad += 1;
        }
    }
    Ok(Outcome::new(
        small_bad == 0 && big_bad == 0,
        format!("mismatches: {small_bad}/1000 with n <= 64, {big_bad}/10 at 4092x1705"),
    ))
}

fn leftover_hash_margin(_: &Path) -> anyhow::Result<Outcome> {
    let cfg = Config::default_calibrated().extractor;
    // 4092 * 7 / 12 = 2387 exactly; minus 2 * 50.
    let expected = 4092 * 7 / 12 - 2 * 50;
    let report = leftover_hash_check(&cfg, 7.0 / 12.0)?;
    let pass = report.m_max == expected
        && report.m_max == 2287
        && cfg.n == 4092
        && cfg.m == 1705
        && report.pass
        && report.slack_bits > 0;
    Ok(Outcome::new(
        pass,
        format!(
            "m_max {} == 2287, m {} slack {} > 0",
            report.m_max, cfg.m, report.slack_bits
        ),
    ))
}

/// Codes needed for at least 10^7 output bits with the shipped extractor.
fn codes_for_ten_megabits(cfg: &Config) -> usize {
    let blocks = 10_000_000usize.div_ceil(cfg.extractor.m);
    blocks * (cfg.extractor.n / cfg.extractor.bits_per_code)
}

fn statistical_quality(dir: &Path) -> anyhow::Result<Outcome> {
    let cfg = Config::default_calibrated();
    let raw = dir.join("stats.raw");
    cmd_simulate(None, codes_for_ten_megabits(&cfg), true, 606, &raw)?;
    let seed_file = dir.join("stats.seed");
    cmd_make_seed(606, &seed_file)?;
    let out = dir.join("stats.bin");
    let bits = cmd_extract(&[raw], &seed_file, None, &out)?;

    let report = test_bits(&bits, 100, 1000)?;
    let imported = import_raw(&out)?;
    let second = dir.join("stats.copy.bin");
    export_raw(&imported, &second)?;
    let round_trip = imported.slice(0, bits.len()) == bits && fs::read(&out)? == fs::read(&second)?;

    let ks = report
        .ks
        .iter()
        .map(|(n, _, p)| format!("{n} p={p:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome::new(
        bits.len() >= 10_000_000 && report.pass() && round_trip,
        format!(
            "{} bits; KS alpha 0.01: {ks}; rho(0)={} exceedances {}/1000; export round-trip {}",
            bits.len(),
            report.autocorr.coefficients[0],
            report.autocorr.exceedances().len(),
            if round_trip { "bit-exact" } else { "differs" }
        ),
    ))
}

fn determinism(dir: &Path) -> anyhow::Result<Outcome> {
    let mut differing = Vec::new();
    let mut outputs: Vec<Vec<(&str, Vec<u8>)>> = Vec::new();
    for pass in 0..2 {
        let d = dir.join(format!("det{pass}"));
        fs::create_dir_all(&d)?;
        let on = d.join("on.raw");
        let off = d.join("off.raw");
        cmd_simulate(None, 50_000, true, 7, &on)?;
        cmd_simulate(None, 50_000, false, 8, &off)?;
        cmd_characterize(&on, &off, None, &d.join("char.csv"))?;
        cmd_sweep(None, 5, 5_000, 2, 9, &d.join("sweep.csv"))?;
        cmd_make_seed(10, &d.join("seed.bin"))?;
        // The battery wants 10^5 bits per sub-stream, hence the longer run.
        let long = d.join("long.raw");
        cmd_simulate(None, 1_000_000, true, 11, &long)?;
        cmd_extract(
            &[on.clone(), long],
            &d.join("seed.bin"),
            None,
            &d.join("bits.bin"),
        )?;
        cmd_test(&d.join("bits.bin"), &d.join("p.csv"), 10, 100)?;
        let mut files = Vec::new();
        for name in [
            "on.raw",
            "off.raw",
            "char.csv",
            "sweep.csv",
            "sweep.fit.csv",
            "seed.bin",
            "bits.bin",
            "p.csv",
            "p.autocorr.csv",
        ] {
            files.push((name, fs::read(d.join(name))?));
        }
        outputs.push(files);
    }
    for ((name, a), (_, b)) in outputs[0].iter().zip(&outputs[1]) {
        if a != b {
            differing.push(*name);
        }
    }
    // Library-level check of the simulator alone, independent of file I/O.
    let cfg = Config::default_calibrated();
    let a = simulate_run(&cfg.physics, &cfg.acquisition, 10_000, true, 12)?;
    let b = simulate_run(&cfg.physics, &cfg.acquisition, 10_000, true, 12)?;
    if a != b {
        differing.push("simulate_run");
    }
    Ok(Outcome::new(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} outputs byte-identical across two runs", outputs[0].len() + 1)
        } else {
            format!("differ: {}", differing.join(", "))
        },
    ))
}

fn throughput(dir: &Path) -> anyhow::Result<Outcome> {
    let cfg = Config::default_calibrated();
    let raw = dir.join("stats.raw");
    let block = if raw.exists() {
        read_raw(&raw)?
    } else {
        simulate_run(
            &cfg.physics,
            &cfg.acquisition,
            codes_for_ten_megabits(&cfg),
            true,
            606,
        )?
    };
    let seed = ToeplitzSeed::from_key(ToeplitzSeed::key_from_u64(1), cfg.extractor.n, cfg.extractor.m)?;
    let codes_per_block = cfg.extractor.n / cfg.extractor.bits_per_code;
    let input_bits = (block.len() / codes_per_block * cfg.extractor.n) as f64;
    let blocks = [block];
    // Best of three to keep scheduler noise out of the figure.
    let mut best = f64::INFINITY;
    for _ in 0..3 {
        let started = Instant::now();
        let out = stream_extract(&blocks, &cfg.extractor, &seed)?;
        best = best.min(started.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    let rate = input_bits / best / 1e6;
    Ok(Outcome::new(
        rate >= 10.0,
        format!(
            "{rate:.1} Mbit/s of input >= 10 ({:.1} Mbit in {:.3} s)",
            input_bits / 1e6,
            best
        ),
    ))
}
