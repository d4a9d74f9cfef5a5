//! Entropy characterization of raw code blocks.

use crate::config::AcquisitionConfig;
use crate::error::{Error, Result};
use crate::sim::{RawCodeBlock, SweepPoint};

/// Per-code occupancy counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub bin_counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn nonzero_bins(&self) -> usize {
        self.bin_counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn max_count(&self) -> u64 {
        self.bin_counts.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStats {
    /// Code units.
    pub mean: f64,
    /// Unbiased sample variance, code units squared.
    pub variance: f64,
    pub count: u64,
}

pub fn histogram(block: &RawCodeBlock) -> Result<Histogram> {
    if block.is_empty() {
        return Err(Error::usage("histogram of an empty block"));
    }
    let mut bin_counts = vec![0u64; 1usize << block.adc_bits];
    for &c in &block.codes {
        bin_counts[c as usize] += 1;
    }
    Ok(Histogram {
        bin_counts,
        total: block.codes.len() as u64,
    })
}

/// Sample mean and unbiased variance.
///
/// Sums are accumulated exactly in integers, so the only rounding is the
/// final conversion to `f64`.
pub fn noise_stats(block: &RawCodeBlock) -> Result<NoiseStats> {
    let n = block.codes.len();
    if n < 2 {
        return Err(Error::usage("noise_stats needs at least 2 codes"));
    }
    let (sum, sum_sq) = block.codes.iter().fold((0u128, 0u128), |(s, q), &c| {
        let c = c as u128;
        (s + c, q + c * c)
    });
    let n128 = n as u128;
    // n * sum_sq - sum^2 >= 0 by Cauchy-Schwarz.
    let centered = n128 * sum_sq - sum * sum;
    let variance = centered as f64 / (n as f64 * (n - 1) as f64);
    Ok(NoiseStats {
        mean: sum as f64 / n as f64,
        variance,
        count: n as u64,
    })
}

fn check_qcnr_inputs(on: &NoiseStats, off: &NoiseStats) -> Result<f64> {
    if !(on.variance > 0.0 && off.variance > 0.0) {
        return Err(Error::usage("QCNR needs strictly positive variances"));
    }
    if on.variance <= off.variance {
        return Err(Error::NoQuantumContribution {
            on: on.variance,
            off: off.variance,
        });
    }
    Ok((on.variance - off.variance) / off.variance)
}

/// Quantum-to-classical noise ratio, `20 log10((var_on - var_off) / var_off)`.
///
/// The ratio is of variances yet uses the amplitude prefactor 20; see
/// [`qcnr_power_db`] for the 10 log10 form.
pub fn qcnr(on: &NoiseStats, off: &NoiseStats) -> Result<f64> {
    Ok(20.0 * check_qcnr_inputs(on, off)?.log10())
}

/// `10 log10((var_on - var_off) / var_off)`.
pub fn qcnr_power_db(on: &NoiseStats, off: &NoiseStats) -> Result<f64> {
    Ok(10.0 * check_qcnr_inputs(on, off)?.log10())
}

/// Plug-in min-entropy `-log2(max_x p(x))`, bits per sample.
pub fn min_entropy(hist: &Histogram) -> Result<f64> {
    if hist.total == 0 {
        return Err(Error::usage("min-entropy of an empty histogram"));
    }
    let p_max = hist.max_count() as f64 / hist.total as f64;
    // -log2(1) is -0.0; report +0.
    Ok((-p_max.log2()).max(0.0))
}

/// Whole output bits per sample after keeping `clearance_bits` of headroom.
pub fn extraction_ratio(min_entropy_bits: f64, clearance_bits: f64) -> Result<u32> {
    if !(clearance_bits >= 0.0) {
        return Err(Error::usage("clearance_bits must be >= 0"));
    }
    Ok((min_entropy_bits - clearance_bits).floor().max(0.0) as u32)
}

/// Variance of the photocurrent at the transimpedance input (A^2) implied by
/// a code variance, and the matching noise power `var * R_L` (W).
pub fn input_referred_noise(stats: &NoiseStats, acq: &AcquisitionConfig) -> (f64, f64) {
    let volts = acq.volts_per_code() / (acq.transimpedance_gain * acq.voltage_gain);
    let current_var = stats.variance * volts * volts;
    (current_var, current_var * acq.load_resistance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Second-order coefficient of the separate quadratic fit.
    pub quadratic_coeff: f64,
    /// `quadratic_coeff / se(quadratic_coeff)`.
    pub quadratic_t_stat: f64,
}

impl LinearFitResult {
    /// Quadratic term significant at `|t| >= threshold`.
    pub fn is_super_poissonian(&self, threshold: f64) -> bool {
        self.quadratic_t_stat.abs() >= threshold
    }
}

/// Default `|t|` threshold for flagging a significant quadratic term.
pub const QUADRATIC_T_THRESHOLD: f64 = 3.0;

/// Ordinary least squares for `variance = slope * current + intercept`, plus
/// a separate quadratic fit reporting the second-order coefficient and its
/// t-statistic.
pub fn linearity_fit(points: &[SweepPoint]) -> Result<LinearFitResult> {
    let n = points.len();
    if n < 3 {
        return Err(Error::usage("linearity_fit needs at least 3 points"));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.current).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.variance).collect();
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    if !(sxx > 0.0) || xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::usage("linearity_fit: all x values are equal"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };

    let (quadratic_coeff, quadratic_t_stat) = quadratic_term(&xs, &ys, x_mean, sxx, ss_tot)?;
    Ok(LinearFitResult {
        slope,
        intercept,
        r_squared,
        quadratic_coeff,
        quadratic_t_stat,
    })
}

/// Fits `y = b0 + b1 u + b2 u^2` on standardized `u = (x - mean) / scale`
/// and maps `b2` back to x units.
fn quadratic_term(xs: &[f64], ys: &[f64], x_mean: f64, sxx: f64, ss_tot: f64) -> Result<(f64, f64)> {
    let n = xs.len();
    let scale = (sxx / n as f64).sqrt();
    let us: Vec<f64> = xs.iter().map(|x| (x - x_mean) / scale).collect();

    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    for (&u, &y) in us.iter().zip(ys) {
        let row = [1.0, u, u * u];
        for i in 0..3 {
            xty[i] += row[i] * y;
            for j in 0..3 {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let inv = invert3(&xtx)
        .ok_or_else(|| Error::usage("linearity_fit: quadratic fit is singular (need 3 distinct x values)"))?;
    let beta: Vec<f64> = (0..3).map(|i| (0..3).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let ss_res: f64 = us
        .iter()
        .zip(ys)
        .map(|(u, y)| (y - (beta[0] + beta[1] * u + beta[2] * u * u)).powi(2))
        .sum();

    let coeff = beta[2] / (scale * scale);
    let dof = n as f64 - 3.0;
    let y_scale = ss_tot
        .max(ys.iter().map(|y| y * y).sum::<f64>())
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let t = if dof <= 0.0 || ss_res <= (1e-12 * y_scale).powi(2) {
        // Exact (or exactly determined) fit: no residual scale to test against.
        if beta[2].abs() <= 1e-9 * y_scale {
            0.0
        } else {
            beta[2].signum() * f64::INFINITY
        }
    } else {
        let se = (ss_res / dof * inv[2][2]).sqrt();
        beta[2] / se
    };
    Ok((coeff, t))
}

#[allow(clippy::needless_range_loop)]
fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let norm: f64 = m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    if !(det.abs() > 1e-12 * norm.powi(3)) {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c0, c1) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[i][j] = sign * minor / det;
        }
    }
    Some(inv)
}
