//! Toeplitz hashing over GF(2).
//!
//! A seed of `n + m - 1` bits `s` defines the `m x n` matrix
//! `T[i][j] = s[i - j + n - 1]`; the output is `y = T x` over GF(2).
//!
//! [`extract_block`] is the literal double loop and serves as the reference.
//! [`ToeplitzExtractor`] is the production path: every row of `T` is a
//! contiguous window of the reversed seed, so rows are read as aligned words
//! out of 64 pre-shifted copies of that reversed seed and reduced by
//! AND, XOR and a final parity.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bits::BitStream;
use crate::config::ExtractorConfig;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, mix64, Stage};
use crate::sim::RawCodeBlock;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzSeed {
    bits: BitStream,
    n: usize,
    m: usize,
}

impl ToeplitzSeed {
    pub fn new(bits: BitStream, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 || m > n {
            return Err(Error::usage(format!(
                "Toeplitz shape needs 1 <= m <= n, got n={n} m={m}"
            )));
        }
        if bits.len() != n + m - 1 {
            return Err(Error::usage(format!(
                "Toeplitz seed needs n + m - 1 = {} bits, got {}",
                n + m - 1,
                bits.len()
            )));
        }
        Ok(Self { bits, n, m })
    }

    /// Expands a 256-bit key into `n + m - 1` seed bits.
    ///
    /// The key seeds ChaCha20 (20 rounds, stream 0); successive `next_u64`
    /// outputs are laid down least significant bit first and truncated.
    pub fn from_key(key: [u8; 32], n: usize, m: usize) -> Result<Self> {
        let len = n + m - 1;
        let mut rng = ChaCha20Rng::from_seed(key);
        let words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
        Self::new(BitStream::from_words_lsb(&words, len), n, m)
    }

    /// 256-bit key derived from a 64-bit seed, for tools that only take one
    /// integer seed.
    pub fn key_from_u64(seed: u64) -> [u8; 32] {
        let mut key = [0u8; 32];
        let mut x = derive_seed(seed, Stage::ToeplitzSeed, 0);
        for chunk in key.chunks_mut(8) {
            x = mix64(x);
            chunk.copy_from_slice(&x.to_le_bytes());
        }
        key
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bits(&self) -> &BitStream {
        &self.bits
    }

    /// Matrix entry `T[i][j]`.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.bits.get(i + self.n - 1 - j)
    }
}

/// Concatenates the `adc_bits` bits of every code, least significant bit
/// first, in sample order.
pub fn codes_to_bits(block: &RawCodeBlock) -> BitStream {
    let mut out = BitStream::with_capacity(block.len() * block.adc_bits as usize);
    for &c in &block.codes {
        out.push_bits(c as u64, block.adc_bits);
    }
    out
}

/// Inverse of [`codes_to_bits`]; trailing bits that do not fill a code are
/// dropped.
pub fn bits_to_codes(bits: &BitStream, width: u32) -> Vec<u16> {
    let w = width as usize;
    (0..bits.len() / w)
        .map(|k| (0..w).fold(0u16, |acc, b| acc | ((bits.get(k * w + b) as u16) << b)))
        .collect()
}

/// Reference GF(2) matrix-vector product, one matrix entry at a time.
pub fn extract_block(seed: &ToeplitzSeed, input: &BitStream) -> Result<BitStream> {
    check_input(seed, input)?;
    Ok(BitStream::from_bits((0..seed.m).map(|i| {
        (0..seed.n).fold(false, |acc, j| acc ^ (seed.entry(i, j) & input.get(j)))
    })))
}

fn check_input(seed: &ToeplitzSeed, input: &BitStream) -> Result<()> {
    if input.len() != seed.n {
        return Err(Error::usage(format!(
            "Toeplitz input must be {} bits, got {}",
            seed.n,
            input.len()
        )));
    }
    Ok(())
}

/// Word-sliced Toeplitz hashing with precomputed row windows.
#[derive(Debug, Clone)]
pub struct ToeplitzExtractor {
    n: usize,
    m: usize,
    in_words: usize,
    /// `shifted[s][w]` holds reversed-seed bits `64 w + s .. 64 w + s + 64`.
    shifted: Vec<Vec<u64>>,
}

impl ToeplitzExtractor {
    pub fn new(seed: &ToeplitzSeed) -> Self {
        let (n, m) = (seed.n, seed.m);
        let len = n + m - 1;
        // r[k] = s[len - 1 - k]; row i of T is r[m - 1 - i .. m - 1 - i + n].
        let reversed = BitStream::from_bits((0..len).map(|k| seed.bits.get(len - 1 - k)));
        let mut words = reversed.to_words();
        let in_words = n.div_ceil(64);
        // Rows read up to word (m - 1) / 64 + in_words; pad so that every
        // read and its successor stay in bounds.
        words.resize((m - 1) / 64 + in_words + 2, 0);
        let shifted = (0..64)
            .map(|s| {
                (0..words.len() - 1)
                    .map(|w| {
                        if s == 0 {
                            words[w]
                        } else {
                            (words[w] >> s) | (words[w + 1] << (64 - s))
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            n,
            m,
            in_words,
            shifted,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Hashes one block given as packed words (`ceil(n / 64)` words, bits
    /// past `n` zero) into `ceil(m / 64)` output words.
    pub fn extract_words(&self, input: &[u64], out: &mut [u64]) {
        debug_assert_eq!(input.len(), self.in_words);
        debug_assert_eq!(out.len(), self.m.div_ceil(64));
        out.fill(0);
        for i in 0..self.m {
            let offset = self.m - 1 - i;
            let row = &self.shifted[offset % 64][offset / 64..offset / 64 + self.in_words];
            let acc = row.iter().zip(input).fold(0u64, |acc, (r, x)| acc ^ (r & x));
            out[i / 64] |= ((acc.count_ones() & 1) as u64) << (i % 64);
        }
    }

    pub fn extract(&self, input: &BitStream) -> Result<BitStream> {
        if input.len() != self.n {
            return Err(Error::usage(format!(
                "Toeplitz input must be {} bits, got {}",
                self.n,
                input.len()
            )));
        }
        let mut out = vec![0u64; self.m.div_ceil(64)];
        self.extract_words(&input.to_words(), &mut out);
        Ok(BitStream::from_words_lsb(&out, self.m))
    }
}

/// Same contract as [`extract_block`], computed by [`ToeplitzExtractor`].
pub fn extract_fast(seed: &ToeplitzSeed, input: &BitStream) -> Result<BitStream> {
    check_input(seed, input)?;
    ToeplitzExtractor::new(seed).extract(input)
}

/// Hashes the concatenated code-bit stream of `blocks` in consecutive
/// `n`-bit blocks with one shared seed. A trailing partial block is dropped.
pub fn stream_extract(
    blocks: &[RawCodeBlock],
    cfg: &ExtractorConfig,
    seed: &ToeplitzSeed,
) -> Result<BitStream> {
    cfg.validate()?;
    if seed.n != cfg.n || seed.m != cfg.m {
        return Err(Error::usage(format!(
            "seed shape {}x{} does not match extractor config {}x{}",
            seed.m, seed.n, cfg.m, cfg.n
        )));
    }
    if let Some(b) = blocks.iter().find(|b| b.adc_bits as usize != cfg.bits_per_code) {
        return Err(Error::usage(format!(
            "block has {}-bit codes but extractor expects {}",
            b.adc_bits, cfg.bits_per_code
        )));
    }
    let codes_per_block = cfg.n / cfg.bits_per_code;
    let codes: Vec<u16> = blocks.iter().flat_map(|b| b.codes.iter().copied()).collect();
    let chunks: Vec<&[u16]> = codes.chunks_exact(codes_per_block).collect();
    let extractor = ToeplitzExtractor::new(seed);
    let width = cfg.bits_per_code;
    let hash = |chunk: &&[u16]| -> Vec<u64> {
        let input = pack_codes(chunk, width, extractor.in_words);
        let mut out = vec![0u64; cfg.m.div_ceil(64)];
        extractor.extract_words(&input, &mut out);
        out
    };

    #[cfg(feature = "parallel")]
    let outputs: Vec<Vec<u64>> = {
        use rayon::prelude::*;
        chunks.par_iter().map(hash).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outputs: Vec<Vec<u64>> = chunks.iter().map(hash).collect();

    let mut writer = WordWriter::with_capacity(outputs.len() * cfg.m);
    for words in &outputs {
        writer.push_bits(words, cfg.m);
    }
    Ok(writer.finish())
}

fn pack_codes(codes: &[u16], width: usize, n_words: usize) -> Vec<u64> {
    let mut words = vec![0u64; n_words];
    let mut pos = 0usize;
    for &c in codes {
        let (w, b) = (pos / 64, pos % 64);
        words[w] |= (c as u64) << b;
        if b + width > 64 {
            words[w + 1] |= (c as u64) >> (64 - b);
        }
        pos += width;
    }
    words
}

/// Appends bit runs given as packed words.
struct WordWriter {
    words: Vec<u64>,
    bits: usize,
}

impl WordWriter {
    fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            bits: 0,
        }
    }

    fn push_bits(&mut self, src: &[u64], count: usize) {
        let mut remaining = count;
        for &word in src {
            if remaining == 0 {
                break;
            }
            let take = remaining.min(64);
            let word = if take == 64 {
                word
            } else {
                word & ((1u64 << take) - 1)
            };
            let b = self.bits % 64;
            if b == 0 {
                self.words.push(word);
            } else {
                *self.words.last_mut().expect("non-empty when b > 0") |= word << b;
                if b + take > 64 {
                    self.words.push(word >> (64 - b));
                }
            }
            self.bits += take;
            remaining -= take;
        }
    }

    fn finish(self) -> BitStream {
        BitStream::from_words_lsb(&self.words, self.bits)
    }
}

/// Outcome of the leftover-hash parameter check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeftoverHashReport {
    /// `floor(n * rate - 2 * security_exponent)`; may be negative.
    pub m_max: i64,
    /// `m_max - m`.
    pub slack_bits: i64,
    pub pass: bool,
}

/// Checks `m <= n * min_entropy_rate - 2 * security_exponent`.
///
/// `min_entropy_rate` is in bits of min-entropy per input bit.
pub fn leftover_hash_check(cfg: &ExtractorConfig, min_entropy_rate: f64) -> Result<LeftoverHashReport> {
    if !(0.0..=1.0).contains(&min_entropy_rate) {
        return Err(Error::usage(format!(
            "min-entropy rate must lie in [0, 1], got {min_entropy_rate}"
        )));
    }
    let bound = cfg.n as f64 * min_entropy_rate - 2.0 * cfg.security_exponent as f64;
    // Absorb rounding in n * (7/12)-style products that are integers exactly.
    let m_max = (bound + 1e-9).floor() as i64;
    Ok(LeftoverHashReport {
        m_max,
        slack_bits: m_max - cfg.m as i64,
        pass: cfg.m as i64 <= m_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn bits(v: &[u8]) -> BitStream {
        BitStream::from_bits(v.iter().map(|&b| b == 1))
    }

    fn seed(v: &[u8], n: usize, m: usize) -> ToeplitzSeed {
        ToeplitzSeed::new(bits(v), n, m).unwrap()
    }

    #[test]
    fn small_instance_matches_hand_product() {
        // s = 1,0,1,1,0; T[i][j] = s[i - j + 3]:
        //   row 0: s3 s2 s1 s0 = 1 1 0 1
        //   row 1: s4 s3 s2 s1 = 0 1 1 0
        // x = 1,1,0,1 -> y0 = 1+1+0+1 = 1, y1 = 0+1+0+0 = 1.
        let s = seed(&[1, 0, 1, 1, 0], 4, 2);
        let x = bits(&[1, 1, 0, 1]);
        assert_eq!(extract_block(&s, &x).unwrap(), bits(&[1, 1]));
        assert_eq!(extract_fast(&s, &x).unwrap(), bits(&[1, 1]));
    }

    #[test]
    fn identity_seed_passes_input_through() {
        let n = 70;
        let mut v = vec![0u8; 2 * n - 1];
        v[n - 1] = 1;
        let s = seed(&v, n, n);
        let x = BitStream::from_bits((0..n).map(|i| i % 3 == 0));
        assert_eq!(extract_block(&s, &x).unwrap(), x);
        assert_eq!(extract_fast(&s, &x).unwrap(), x);
    }

    #[test]
    fn zero_input_and_zero_seed() {
        let s = ToeplitzSeed::from_key([7; 32], 40, 10).unwrap();
        let zero = BitStream::from_bits(std::iter::repeat_n(false, 40));
        assert_eq!(extract_fast(&s, &zero).unwrap().count_ones(), 0);
        let zs = seed(&[0; 49], 40, 10);
        let x = BitStream::from_bits((0..40).map(|i| i % 2 == 0));
        assert_eq!(extract_fast(&zs, &x).unwrap().count_ones(), 0);
    }

    #[test]
    fn shape_and_length_errors() {
        assert!(ToeplitzSeed::new(bits(&[1, 0, 1]), 2, 3).is_err());
        assert!(ToeplitzSeed::new(bits(&[1, 0, 1]), 4, 2).is_err());
        let s = seed(&[1, 0, 1, 1, 0], 4, 2);
        assert!(matches!(extract_block(&s, &bits(&[1, 0])), Err(Error::Usage(_))));
        assert!(matches!(extract_fast(&s, &bits(&[1, 0])), Err(Error::Usage(_))));
    }

    #[test]
    fn code_bits_are_lsb_first() {
        let one = codes_to_bits(&RawCodeBlock::from_codes(vec![1], 12).unwrap());
        assert_eq!(
            one.iter().collect::<Vec<_>>(),
            [vec![true], vec![false; 11]].concat()
        );
        let two = codes_to_bits(&RawCodeBlock::from_codes(vec![0, 4095], 12).unwrap());
        assert_eq!(
            two.iter().collect::<Vec<_>>(),
            [vec![false; 12], vec![true; 12]].concat()
        );
    }

    #[test]
    fn stream_lengths() {
        let cfg = Config::default_calibrated().extractor;
        let s = ToeplitzSeed::from_key([1; 32], cfg.n, cfg.m).unwrap();
        let short = RawCodeBlock::from_codes(vec![5; 340], 12).unwrap();
        assert!(stream_extract(&[short], &cfg, &s).unwrap().is_empty());
        let exact = RawCodeBlock::from_codes(vec![5; 341], 12).unwrap();
        assert_eq!(stream_extract(&[exact], &cfg, &s).unwrap().len(), cfg.m);
        let a = RawCodeBlock::from_codes((0..1000).map(|i| (i * 37 % 4096) as u16).collect(), 12).unwrap();
        let b = RawCodeBlock::from_codes((0..555).map(|i| (i * 11 % 4096) as u16).collect(), 12).unwrap();
        let total_bits = (1000 + 555) * 12;
        assert_eq!(
            stream_extract(&[a, b], &cfg, &s).unwrap().len(),
            total_bits / cfg.n * cfg.m
        );
    }

    #[test]
    fn stream_matches_blockwise_reference() {
        let cfg = ExtractorConfig {
            n: 120,
            m: 50,
            bits_per_code: 12,
            security_exponent: 10,
            clearance_bits: 2.0,
        };
        let s = ToeplitzSeed::from_key([3; 32], cfg.n, cfg.m).unwrap();
        let block =
            RawCodeBlock::from_codes((0..35).map(|i| (i * 1237 % 4096) as u16).collect(), 12).unwrap();
        let all = codes_to_bits(&block);
        let mut expected = BitStream::new();
        for k in 0..all.len() / cfg.n {
            expected.extend_from(&extract_block(&s, &all.slice(k * cfg.n, cfg.n)).unwrap());
        }
        assert_eq!(stream_extract(&[block], &cfg, &s).unwrap(), expected);
    }

    #[test]
    fn stream_rejects_mismatched_seed() {
        let cfg = Config::default_calibrated().extractor;
        let s = ToeplitzSeed::from_key([1; 32], 120, 50).unwrap();
        assert!(stream_extract(&[], &cfg, &s).is_err());
    }

    #[test]
    fn leftover_hash_arithmetic() {
        let mut cfg = Config::default_calibrated().extractor;
        cfg.n = 4096;
        cfg.m = 1706;
        let r = leftover_hash_check(&cfg, 7.0 / 12.0).unwrap();
        assert_eq!(r.m_max, 2289);
        assert_eq!(r.slack_bits, 583);
        assert!(r.pass);

        cfg.m = 1;
        assert!(!leftover_hash_check(&cfg, 0.0).unwrap().pass);
        assert!(leftover_hash_check(&cfg, 1.5).is_err());
    }
}
