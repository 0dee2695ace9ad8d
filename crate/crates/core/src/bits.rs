//! MSB-first bit I/O and the Elias gamma code.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bits: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write_bit(&mut self, bit: bool) {
        if self.bits % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.bits % 8);
        }
        self.bits += 1;
    }

    /// The low `count` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, count: u32) {
        for i in (0..count).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    /// Zero-pad to the next byte boundary.
    pub fn align(&mut self) {
        self.bits = self.bytes.len() * 8;
    }

    pub fn bit_len(&self) -> usize {
        self.bits
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        let byte = self.bytes.get(self.pos / 8).ok_or(Error::Truncated)?;
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, count: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..count {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }

    pub fn bit_pos(&self) -> usize {
        self.pos
    }
}

/// Length in bits of the gamma code of `r >= 1`: `2 floor(log2 r) + 1`.
pub fn gamma_len(r: u64) -> u32 {
    assert!(r >= 1, "gamma code is defined for positive integers");
    2 * r.ilog2() + 1
}

/// `floor(log2 r)` zeros followed by the binary expansion of `r`.
pub fn gamma_encode(w: &mut BitWriter, r: u64) {
    let l = gamma_len(r) / 2;
    w.write_bits(0, l);
    w.write_bits(r, l + 1);
}

pub fn gamma_decode(r: &mut BitReader<'_>) -> Result<u64> {
    let mut zeros = 0u32;
    while !r.read_bit()? {
        zeros += 1;
        if zeros > 63 {
            return Err(Error::Stream("gamma prefix longer than 63 bits".into()));
        }
    }
    Ok((1u64 << zeros) | r.read_bits(zeros)?)
}

/// Gamma code as an ASCII bit string.
pub fn gamma_string(r: u64) -> String {
    let mut w = BitWriter::new();
    gamma_encode(&mut w, r);
    let n = w.bit_len();
    let bytes = w.into_bytes();
    let mut rd = BitReader::new(&bytes);
    (0..n).map(|_| if rd.read_bit().unwrap() { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_gamma_codes() {
        assert_eq!(gamma_string(1), "1");
        assert_eq!(gamma_string(2), "010");
        assert_eq!(gamma_string(3), "011");
        assert_eq!(gamma_string(4), "00100");
        assert_eq!(gamma_string(9), "0001001");
    }

    #[test]
    fn gamma_roundtrip_across_range() {
        let mut values: Vec<u64> = (1..=1000).collect();
        for e in 10..=62 {
            values.extend([(1u64 << e) - 1, 1u64 << e, (1u64 << e) + 1]);
        }
        let mut w = BitWriter::new();
        let mut expected_bits = 0;
        for &v in &values {
            gamma_encode(&mut w, v);
            expected_bits += gamma_len(v) as usize;
        }
        assert_eq!(w.bit_len(), expected_bits);
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        for &v in &values {
            assert_eq!(gamma_decode(&mut r).unwrap(), v);
        }
    }

    #[test]
    fn reader_reports_truncation() {
        let mut r = BitReader::new(&[0x00]);
        assert_eq!(gamma_decode(&mut r), Err(Error::Truncated));
    }

    #[test]
    fn align_pads_with_zeros() {
        let mut w = BitWriter::new();
        w.write_bits(0b101, 3);
        w.align();
        w.write_bit(true);
        assert_eq!(w.into_bytes(), vec![0b1010_0000, 0b1000_0000]);
    }
}
