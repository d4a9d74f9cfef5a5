//! On-disk formats.
//!
//! Raw code files: a 32-byte header followed by one little-endian `u16` per
//! code (low `adc_bits` significant, the rest zero).
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 8    | magic `QRNGRAW1`                       |
//! | 8      | 1    | adc_bits                               |
//! | 9      | 1    | led_on (0 or 1)                        |
//! | 10     | 2    | reserved, zero                         |
//! | 12     | 4    | sample rate, Sa/s, u32 LE              |
//! | 16     | 8    | rng seed, u64 LE                       |
//! | 24     | 8    | config digest, u64 LE                  |
//!
//! Bit files are the packed bytes of a [`BitStream`] with no header, the
//! raw binary input format of external batteries such as dieharder.
//! Toeplitz seed files are 32 raw key bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::bits::BitStream;
use crate::error::{Error, Result};
use crate::sim::RawCodeBlock;

pub const RAW_MAGIC: &[u8; 8] = b"QRNGRAW1";
pub const RAW_HEADER_LEN: usize = 32;

pub fn encode_raw(block: &RawCodeBlock) -> Vec<u8> {
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + 2 * block.len());
    out.extend_from_slice(RAW_MAGIC);
    out.push(block.adc_bits as u8);
    out.push(block.led_on as u8);
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&block.sample_rate.to_le_bytes());
    out.extend_from_slice(&block.rng_seed.to_le_bytes());
    out.extend_from_slice(&block.config_digest.to_le_bytes());
    for &c in &block.codes {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn decode_raw(bytes: &[u8]) -> Result<RawCodeBlock> {
    if bytes.len() < RAW_HEADER_LEN {
        return Err(Error::Format(format!(
            "raw file is {} bytes, shorter than the {RAW_HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..8] != RAW_MAGIC {
        return Err(Error::Format("bad magic, expected QRNGRAW1".into()));
    }
    let body = &bytes[RAW_HEADER_LEN..];
    if !body.len().is_multiple_of(2) {
        return Err(Error::Format("raw body has an odd number of bytes".into()));
    }
    let adc_bits = bytes[8] as u32;
    let led_on = match bytes[9] {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("invalid led_on flag {other}"))),
    };
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let codes = body
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    RawCodeBlock::new(codes, adc_bits, u32_at(12), led_on, u64_at(16), u64_at(24))
        .map_err(|e| Error::Format(e.to_string()))
}

pub fn write_raw(path: &Path, block: &RawCodeBlock) -> Result<usize> {
    let bytes = encode_raw(block);
    fs::write(path, &bytes)?;
    Ok(bytes.len())
}

pub fn read_raw(path: &Path) -> Result<RawCodeBlock> {
    decode_raw(&fs::read(path)?)
}

/// Writes the packed bytes of `bits`; returns the byte count.
pub fn export_raw(bits: &BitStream, path: &Path) -> Result<usize> {
    let mut file = fs::File::create(path)?;
    file.write_all(bits.as_bytes())?;
    file.flush()?;
    Ok(bits.as_bytes().len())
}

/// Reads a headerless bit file; every byte contributes 8 bits.
pub fn import_raw(path: &Path) -> Result<BitStream> {
    Ok(BitStream::from_whole_bytes(fs::read(path)?))
}

pub fn read_seed_file(path: &Path) -> Result<[u8; 32]> {
    let bytes = fs::read(path)?;
    bytes
        .as_slice()
        .try_into()
        .map_err(|_| Error::Format(format!("seed file must be exactly 32 bytes, got {}", bytes.len())))
}

pub fn write_seed_file(path: &Path, key: &[u8; 32]) -> Result<()> {
    fs::write(path, key)?;
    Ok(())
}
