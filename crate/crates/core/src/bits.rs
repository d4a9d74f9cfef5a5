//! Packed bit sequences.
//!
//! Bit `i` lives in byte `i / 8` at position `i % 8` counted from the least
//! significant bit. Pad bits past `bit_count` are always zero, so the byte
//! form is canonical and can be written to disk as-is.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BitStream {
    bytes: Vec<u8>,
    bit_count: usize,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            bit_count: 0,
        }
    }

    /// Wraps packed bytes holding `bit_count` bits. Pad bits must be zero.
    pub fn from_bytes(bytes: Vec<u8>, bit_count: usize) -> Result<Self> {
        if bytes.len() != bit_count.div_ceil(8) {
            return Err(Error::usage(format!(
                "{} bytes cannot hold exactly {bit_count} bits",
                bytes.len()
            )));
        }
        let rem = bit_count % 8;
        if rem != 0 && bytes[bytes.len() - 1] >> rem != 0 {
            return Err(Error::usage("pad bits past bit_count must be zero"));
        }
        Ok(Self { bytes, bit_count })
    }

    /// Every bit of every byte.
    pub fn from_whole_bytes(bytes: Vec<u8>) -> Self {
        let bit_count = bytes.len() * 8;
        Self { bytes, bit_count }
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut out = Self::new();
        for b in bits {
            out.push(b);
        }
        out
    }

    /// Takes the first `bit_count` bits of little-endian packed words.
    pub fn from_words_lsb(words: &[u64], bit_count: usize) -> Self {
        let mut bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
        bytes.truncate(bit_count.div_ceil(8));
        let rem = bit_count % 8;
        if rem != 0 {
            if let Some(last) = bytes.last_mut() {
                *last &= (1u8 << rem) - 1;
            }
        }
        Self { bytes, bit_count }
    }

    pub fn len(&self) -> usize {
        self.bit_count
    }

    pub fn is_empty(&self) -> bool {
        self.bit_count == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.bit_count,
            "bit index {i} out of range {}",
            self.bit_count
        );
        (self.bytes[i >> 3] >> (i & 7)) & 1 == 1
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.bit_count.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 1 << (self.bit_count % 8);
        }
        self.bit_count += 1;
    }

    /// Appends the low `width` bits of `value`, least significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        for k in 0..width {
            self.push((value >> k) & 1 == 1);
        }
    }

    pub fn extend_from(&mut self, other: &BitStream) {
        if self.bit_count.is_multiple_of(8) {
            self.bytes.extend_from_slice(&other.bytes);
            self.bit_count += other.bit_count;
        } else {
            for b in other.iter() {
                self.push(b);
            }
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.bit_count).map(move |i| self.get(i))
    }

    /// Bits packed into little-endian u64 words (bit i of the stream is bit
    /// `i % 64` of word `i / 64`).
    pub fn to_words(&self) -> Vec<u64> {
        self.bytes
            .chunks(8)
            .map(|chunk| {
                let mut buf = [0u8; 8];
                buf[..chunk.len()].copy_from_slice(chunk);
                u64::from_le_bytes(buf)
            })
            .collect()
    }

    /// Sub-stream of bits `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitStream {
        assert!(start + len <= self.bit_count);
        if start.is_multiple_of(8) {
            let bytes = self.bytes[start / 8..(start + len).div_ceil(8)].to_vec();
            return BitStream::from_words_lsb(
                &bytes
                    .chunks(8)
                    .map(|c| {
                        let mut buf = [0u8; 8];
                        buf[..c.len()].copy_from_slice(c);
                        u64::from_le_bytes(buf)
                    })
                    .collect::<Vec<_>>(),
                len,
            );
        }
        BitStream::from_bits((start..start + len).map(|i| self.get(i)))
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lsb_first_packing() {
        let s = BitStream::from_bits([true, false, false, false, false, false, false, false, true]);
        assert_eq!(s.as_bytes(), &[0x01, 0x01]);
        assert_eq!(s.len(), 9);
    }

    #[test]
    fn pad_bits_must_be_zero() {
        assert!(BitStream::from_bytes(vec![0b0000_0111], 3).is_ok());
        assert!(BitStream::from_bytes(vec![0b0000_1111], 3).is_err());
        assert!(BitStream::from_bytes(vec![0, 0], 3).is_err());
    }

    proptest! {
        #[test]
        fn words_and_slices_agree(bits in prop::collection::vec(any::<bool>(), 0..300), a in 0usize..300, b in 0usize..300) {
            let s = BitStream::from_bits(bits.iter().copied());
            prop_assert_eq!(s.iter().collect::<Vec<_>>(), bits.clone());
            let words = s.to_words();
            let again = BitStream::from_words_lsb(&words, s.len());
            prop_assert_eq!(&again, &s);
            let start = a.min(bits.len());
            let len = b.min(bits.len() - start);
            let sub = s.slice(start, len);
            prop_assert_eq!(sub.iter().collect::<Vec<_>>(), bits[start..start + len].to_vec());
            prop_assert!(sub.len() <= 8 * sub.as_bytes().len());
            prop_assert!(8 * sub.as_bytes().len() < sub.len() + 8);
        }
    }
}
