//! Statistical checks on extracted bitstreams.
//!
//! Bits map to `s = 2b - 1` (0 -> -1, 1 -> +1) wherever a signed series is
//! needed. p-values come from the usual `erfc` and upper incomplete gamma
//! tails.

use std::f64::consts::SQRT_2;

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::bits::BitStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrResult {
    /// Normalized `rho(k)` for `k = 0..=max_lag`.
    pub coefficients: Vec<f64>,
    /// Unnormalized sums `sum_i s_i s_{i+k}`, the zero-padded
    /// cross-correlation of the signed series with itself at lag `k`.
    pub raw: Vec<i64>,
    pub n_bits: usize,
    /// `3 / sqrt(n_bits)`.
    pub three_sigma_bound: f64,
}

impl AutocorrResult {
    /// Lags in `1..=max_lag` whose coefficient lies outside the bound.
    pub fn exceedances(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, r)| r.abs() > self.three_sigma_bound)
            .map(|(k, _)| k)
            .collect()
    }
}

/// `rho(k) = (1 / (n - k)) sum_{i < n - k} s_i s_{i+k}` for `k = 0..=max_lag`.
///
/// Each lag is one XOR-and-popcount pass over packed words: for +-1 values
/// `s_i s_{i+k} = 1 - 2 (b_i xor b_{i+k})`.
pub fn autocorrelation(bits: &BitStream, max_lag: usize) -> Result<AutocorrResult> {
    let n = bits.len();
    if n < max_lag + 1 {
        return Err(Error::usage(format!(
            "autocorrelation up to lag {max_lag} needs at least {} bits, got {n}",
            max_lag + 1
        )));
    }
    let words = bits.to_words();
    let mut coefficients = Vec::with_capacity(max_lag + 1);
    let mut raw = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let overlap = n - k;
        let differing = xor_shifted_popcount(&words, k, overlap);
        let sum = overlap as i64 - 2 * differing as i64;
        raw.push(sum);
        coefficients.push(sum as f64 / overlap as f64);
    }
    Ok(AutocorrResult {
        coefficients,
        raw,
        n_bits: n,
        three_sigma_bound: 3.0 / (n as f64).sqrt(),
    })
}

/// Number of `i < len` with `bit(i) != bit(i + shift)`.
fn xor_shifted_popcount(words: &[u64], shift: usize, len: usize) -> u64 {
    let (ws, bs) = (shift / 64, shift % 64);
    let word_at = |w: usize| words.get(w).copied().unwrap_or(0);
    let full = len / 64;
    let mut total = 0u64;
    for w in 0..=full {
        let lo = word_at(w + ws);
        let shifted = if bs == 0 {
            lo
        } else {
            (lo >> bs) | (word_at(w + ws + 1) << (64 - bs))
        };
        let mut x = word_at(w) ^ shifted;
        if w == full {
            let rem = len % 64;
            if rem == 0 {
                break;
            }
            x &= (1u64 << rem) - 1;
        }
        total += x.count_ones() as u64;
    }
    total
}

/// Full discrete cross-correlation
/// `z[k] = sum_l x[l] y[l - k + N - 1]` for `k = 0..len(x) + len(y) - 1`,
/// with `N = max(len(x), len(y))` and `y` zero outside its range.
pub fn cross_correlation(x: &[f64], y: &[f64]) -> Vec<f64> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    let big_n = x.len().max(y.len()) as i64;
    (0..(x.len() + y.len() - 1) as i64)
        .map(|k| {
            x.iter()
                .enumerate()
                .filter_map(|(l, &xl)| {
                    let j = l as i64 - k + big_n - 1;
                    (0..y.len() as i64).contains(&j).then(|| xl * y[j as usize])
                })
                .sum()
        })
        .collect()
}

fn signed_sum(bits: &BitStream) -> i64 {
    2 * bits.count_ones() as i64 - bits.len() as i64
}

fn require_len(bits: &BitStream, min: usize, test: &str) -> Result<()> {
    if bits.len() < min {
        return Err(Error::usage(format!(
            "{test} needs at least {min} bits, got {}",
            bits.len()
        )));
    }
    Ok(())
}

/// Frequency (monobit) test: `p = erfc(|S| / sqrt(2n))`.
pub fn monobit_test(bits: &BitStream) -> Result<f64> {
    require_len(bits, 100, "monobit test")?;
    let s = signed_sum(bits).abs() as f64;
    Ok(erfc(s / (SQRT_2 * (bits.len() as f64).sqrt())))
}

/// Runs test: total number of runs against its expectation given the
/// observed ones fraction `pi`,
/// `p = erfc(|V - 2 n pi (1 - pi)| / (2 sqrt(2n) pi (1 - pi)))`.
/// Returns 0 when the ones fraction is too far from 1/2 for the test to
/// apply (`|pi - 1/2| >= 2 / sqrt(n)`).
pub fn runs_test(bits: &BitStream) -> Result<f64> {
    require_len(bits, 100, "runs test")?;
    let n = bits.len() as f64;
    let pi = bits.count_ones() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return Ok(0.0);
    }
    let words = bits.to_words();
    let transitions = xor_shifted_popcount(&words, 1, bits.len() - 1);
    let runs = transitions as f64 + 1.0;
    let q = pi * (1.0 - pi);
    let p = erfc((runs - 2.0 * n * q).abs() / (2.0 * (2.0 * n).sqrt() * q));
    Ok(p)
}

/// Pearson chi-square of the 256 byte values (255 degrees of freedom).
/// Only whole bytes are used.
pub fn chi_square_bytes(bits: &BitStream) -> Result<f64> {
    Ok(chi_square_bytes_statistic(bits)?.1)
}

/// (statistic, p-value) of [`chi_square_bytes`].
pub fn chi_square_bytes_statistic(bits: &BitStream) -> Result<(f64, f64)> {
    require_len(bits, 256 * 8, "byte chi-square test")?;
    let whole = bits.len() / 8;
    let mut counts = [0u64; 256];
    for &b in &bits.as_bytes()[..whole] {
        counts[b as usize] += 1;
    }
    let expected = whole as f64 / 256.0;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    Ok((stat, chi_square_tail(stat, 255.0)))
}

/// Block frequency test: `chi2 = 4 M sum (pi_i - 1/2)^2` over the `N`
/// complete blocks of `block_len` bits, `p = Q(N/2, chi2/2)`.
pub fn block_frequency_test(bits: &BitStream, block_len: usize) -> Result<f64> {
    if block_len == 0 {
        return Err(Error::usage("block_len must be >= 1"));
    }
    let blocks = bits.len() / block_len;
    if blocks < 100 {
        return Err(Error::usage(format!(
            "block frequency test needs at least 100 blocks of {block_len} bits, got {blocks}"
        )));
    }
    let m = block_len as f64;
    let words = bits.to_words();
    let stat: f64 = (0..blocks)
        .map(|b| {
            let ones = popcount_range(&words, b * block_len, block_len) as f64;
            (ones / m - 0.5).powi(2)
        })
        .sum::<f64>()
        * 4.0
        * m;
    Ok(chi_square_tail(stat, blocks as f64))
}

fn popcount_range(words: &[u64], start: usize, len: usize) -> u64 {
    let mut total = 0u64;
    let mut pos = start;
    let end = start + len;
    while pos < end {
        let (w, b) = (pos / 64, pos % 64);
        let take = (64 - b).min(end - pos);
        let mask = if take == 64 {
            u64::MAX
        } else {
            ((1u64 << take) - 1) << b
        };
        total += (words[w] & mask).count_ones() as u64;
        pos += take;
    }
    total
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
fn chi_square_tail(stat: f64, dof: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof / 2.0, stat / 2.0).clamp(0.0, 1.0)
}

/// p-values keyed by test name and sub-stream index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PValueSet {
    pub entries: Vec<PValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PValue {
    pub test: String,
    pub substream: usize,
    pub p_value: f64,
}

impl PValueSet {
    pub fn push(&mut self, test: &str, substream: usize, p_value: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p_value) {
            return Err(Error::usage(format!("p-value {p_value} outside [0, 1]")));
        }
        self.entries.push(PValue {
            test: test.to_string(),
            substream,
            p_value,
        });
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.p_value).collect()
    }

    pub fn values_for(&self, test: &str) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.test == test)
            .map(|e| e.p_value)
            .collect()
    }

    pub fn test_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for e in &self.entries {
            if !names.contains(&e.test) {
                names.push(e.test.clone());
            }
        }
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d_statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test of `pvalues` against Uniform(0, 1),
/// with the asymptotic Kolmogorov distribution for the p-value.
pub fn ks_uniformity(pvalues: &[f64]) -> Result<KsResult> {
    if pvalues.len() < 5 {
        return Err(Error::usage(format!(
            "KS uniformity needs at least 5 values, got {}",
            pvalues.len()
        )));
    }
    if let Some(bad) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::usage(format!("value {bad} outside [0, 1]")));
    }
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max);
    Ok(KsResult {
        d_statistic: d,
        p_value: kolmogorov_survival(n.sqrt() * d),
    })
}

/// `P(K > x)` for the Kolmogorov distribution,
/// `2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        // The alternating series converges slowly here and the value is 1
        // to double precision.
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Names used in [`run_battery`] output.
pub const BATTERY_TESTS: [&str; 4] = ["monobit", "block_frequency", "runs", "chi_square_bytes"];

/// Block length of the block frequency test inside [`run_battery`].
pub const BATTERY_BLOCK_LEN: usize = 1000;

/// Splits `bits` into `substreams` equal parts and runs every battery test
/// on each part.
pub fn run_battery(bits: &BitStream, substreams: usize) -> Result<PValueSet> {
    if substreams == 0 {
        return Err(Error::usage("need at least one sub-stream"));
    }
    let len = bits.len() / substreams / 8 * 8;
    let parts: Vec<BitStream> = (0..substreams).map(|s| bits.slice(s * len, len)).collect();
    let run_one = |part: &BitStream| -> Result<[f64; 4]> {
        Ok([
            monobit_test(part)?,
            block_frequency_test(part, BATTERY_BLOCK_LEN)?,
            runs_test(part)?,
            chi_square_bytes(part)?,
        ])
    };

    #[cfg(feature = "parallel")]
    let results: Vec<Result<[f64; 4]>> = {
        use rayon::prelude::*;
        parts.par_iter().map(run_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<[f64; 4]>> = parts.iter().map(run_one).collect();

    let mut set = PValueSet::default();
    for (s, r) in results.into_iter().enumerate() {
        for (name, p) in BATTERY_TESTS.iter().zip(r?) {
            set.push(name, s, p)?;
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn alternating(n: usize) -> BitStream {
        BitStream::from_bits((0..n).map(|i| i % 2 == 1))
    }

    fn uniform_bits(n_bytes: usize, seed: u64) -> BitStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BitStream::from_whole_bytes((0..n_bytes).map(|_| rng.random()).collect())
    }

    #[test]
    fn zero_lag_is_one_and_alternation_is_minus_one() {
        let r = autocorrelation(&alternating(1000), 3).unwrap();
        assert_eq!(r.coefficients[0], 1.0);
        assert_eq!(r.coefficients[1], -1.0);
        assert_eq!(r.coefficients[2], 1.0);
        assert_eq!(r.raw[0], 1000);
        assert!(autocorrelation(&alternating(3), 3).is_err());
    }

    #[test]
    fn autocorrelation_matches_direct_sum() {
        let bits = uniform_bits(37, 4);
        let s: Vec<i64> = bits.iter().map(|b| if b { 1 } else { -1 }).collect();
        let r = autocorrelation(&bits, 150).unwrap();
        for k in 0..=150 {
            let direct: i64 = (0..s.len() - k).map(|i| s[i] * s[i + k]).sum();
            assert_eq!(r.raw[k], direct, "lag {k}");
        }
    }

    #[test]
    fn cross_correlation_full_mode() {
        // Hand-evaluated: x = [1, 2, 3], y = [0, 1, 0.5].
        let z = cross_correlation(&[1.0, 2.0, 3.0], &[0.0, 1.0, 0.5]);
        assert_eq!(z, vec![0.5, 2.0, 3.5, 3.0, 0.0]);
        let s = [1.0, -1.0, -1.0, 1.0];
        let auto = cross_correlation(&s, &s);
        assert_eq!(auto.len(), 7);
        assert_eq!(auto[3], 4.0);
    }

    #[test]
    fn monobit_extremes() {
        assert_eq!(monobit_test(&alternating(100)).unwrap(), 1.0);
        let zeros = BitStream::from_bits(std::iter::repeat_n(false, 100));
        assert!(monobit_test(&zeros).unwrap() < 1e-20);
        assert!(monobit_test(&alternating(99)).is_err());
    }

    #[test]
    fn runs_flags_alternation() {
        assert!(runs_test(&alternating(1000)).unwrap() < 1e-6);
        assert!(runs_test(&uniform_bits(2000, 1)).unwrap() > 1e-4);
    }

    #[test]
    fn cyclic_bytes_have_zero_chi_square() {
        let bytes: Vec<u8> = (0..4096).map(|i| (i % 256) as u8).collect();
        let (stat, p) = chi_square_bytes_statistic(&BitStream::from_whole_bytes(bytes)).unwrap();
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        assert!(chi_square_bytes(&uniform_bits(100, 1)).is_err());
    }

    #[test]
    fn block_frequency_preconditions() {
        assert!(block_frequency_test(&uniform_bits(1250, 2), 100).is_ok());
        assert!(block_frequency_test(&uniform_bits(1000, 2), 1000).is_err());
        let ones = BitStream::from_bits(std::iter::repeat_n(true, 10_000));
        assert!(block_frequency_test(&ones, 100).unwrap() < 1e-10);
    }

    #[test]
    fn ks_degenerate_and_grid() {
        let r = ks_uniformity(&vec![0.5; 100]).unwrap();
        assert_eq!(r.d_statistic, 0.5);
        assert!(r.p_value < 1e-6);

        // Oracle: on the midpoint grid every CDF gap is exactly 1/(2n).
        let n = 200;
        let grid: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let oracle = (0..n)
            .map(|i| {
                let x = grid[i];
                (x - i as f64 / n as f64)
                    .abs()
                    .max(((i + 1) as f64 / n as f64 - x).abs())
            })
            .fold(0.0, f64::max);
        let r = ks_uniformity(&grid).unwrap();
        assert!((r.d_statistic - oracle).abs() < 1e-15);
        assert!((r.d_statistic - 1.0 / (2.0 * n as f64)).abs() < 1e-15);
        assert!(r.p_value > 0.99);

        assert!(ks_uniformity(&[0.1, 0.2, 0.3, 0.4]).is_err());
        assert!(ks_uniformity(&[0.1, 0.2, 0.3, 0.4, 1.5]).is_err());
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        // Tabulated critical values of the Kolmogorov distribution.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_survival(1.2238) - 0.10).abs() < 1e-4);
    }

    #[test]
    fn battery_pvalues_lie_in_unit_interval() {
        let set = run_battery(&uniform_bits(1_250_000, 8), 10).unwrap();
        assert_eq!(set.entries.len(), 40);
        assert!(set.values().iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!(set.test_names(), BATTERY_TESTS.to_vec());
    }
}
