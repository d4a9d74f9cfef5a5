use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use shotnoise_qrng_cli as qrng;

#[derive(Parser)]
#[command(name = "qrng", version, about = "Balanced-detection shot-noise QRNG twin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LedFlag {
    /// Simulate with the LED driven (default).
    #[arg(long, conflicts_with = "led_off")]
    led_on: bool,
    /// Simulate with the LED off: classical noise only.
    #[arg(long)]
    led_off: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate raw ADC codes into a raw code file.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of ADC codes.
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[command(flatten)]
        led: LedFlag,
        #[arg(long)]
        out: PathBuf,
    },
    /// QCNR, min-entropy and extraction ratio from LED-on / LED-off files.
    Characterize {
        #[arg(long)]
        on: PathBuf,
        #[arg(long)]
        off: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Output variance against LED drive current, with linear fits.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Codes per step.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        runs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a 32-byte Toeplitz seed file derived from --seed.
    MakeSeed {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Toeplitz-hash raw code files into a packed bit file.
    Extract {
        /// Raw code file; repeat to concatenate several.
        #[arg(long = "raw", required = true)]
        raw: Vec<PathBuf>,
        #[arg(long)]
        seed_file: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Statistical battery, KS aggregation and autocorrelation of a bit file.
    Test {
        #[arg(long)]
        bits: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        substreams: usize,
        #[arg(long, default_value_t = 1000)]
        max_lag: usize,
        /// Exit with status 2 when any check fails.
        #[arg(long)]
        strict: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            n,
            led,
            out,
        } => {
            let block = qrng::cmd_simulate(config.as_deref(), n, !led.led_off, seed, &out)?;
            println!("wrote {} codes to {}", block.len(), out.display());
        }
        Command::Characterize { on, off, config, out } => {
            let report = qrng::cmd_characterize(&on, &off, config.as_deref(), &out)?;
            print!("{}", report.to_csv());
        }
        Command::Sweep {
            config,
            seed,
            steps,
            n,
            runs,
            out,
        } => {
            let report = qrng::cmd_sweep(config.as_deref(), steps, n, runs, seed, &out)?;
            print!("{}", report.fits_csv());
        }
        Command::MakeSeed { seed, out } => {
            qrng::cmd_make_seed(seed, &out)?;
            println!("wrote seed {}", out.display());
        }
        Command::Extract {
            raw,
            seed_file,
            config,
            out,
        } => {
            let bits = qrng::cmd_extract(&raw, &seed_file, config.as_deref(), &out)?;
            println!(
                "wrote {} bits ({} bytes) to {}",
                bits.len(),
                bits.as_bytes().len(),
                out.display()
            );
        }
        Command::Test {
            bits,
            out,
            substreams,
            max_lag,
            strict,
        } => {
            let report = qrng::cmd_test(&bits, &out, substreams, max_lag)?;
            print!("{}", report.summary());
            if strict && !report.pass() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
