//! Idealized Lempel-Ziv coding with side information.
//!
//! Encoder and decoder share the past of both processes and the present
//! side information `y`. The encoder sends `R_n(x|y)`, the index of the
//! first past occurrence of `y` whose aligned `x` window equals the present
//! one; the decoder finds that occurrence of `y` and copies `x` from it.
//!
//! Each block is one token: a flag bit, then either the Elias gamma code of
//! `R_n(x|y)` (flag 0) or the raw present `x` (flag 1, used when no
//! recurrence exists within the past).

use serde::{Deserialize, Serialize};

use crate::bits::{gamma_decode, gamma_encode, gamma_len, BitReader, BitWriter};
use crate::density::check_symbols;
use crate::error::{Error, Result};
use crate::model::PairModel;
use crate::recurrence::{conditional_scan, SliceTimeline};
use crate::sample::TwoSidedSample;

pub const MAGIC: &[u8; 4] = b"LZSI";
pub const FORMAT_VERSION: u8 = 1;
/// Bytes before the first block.
pub const HEADER_LEN: usize = 37;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LzsiToken {
    Recurrence(u64),
    /// Raw present x, sent when the recurrence is truncated.
    Escape(Vec<u32>),
}

/// `ceil(log2 |X|)`, the width of one raw symbol.
pub fn raw_symbol_bits(x_size: usize) -> u32 {
    if x_size <= 1 {
        0
    } else {
        (x_size - 1).ilog2() + 1
    }
}

impl LzsiToken {
    /// Token size in bits, not counting block padding.
    pub fn bit_len(&self, x_size: usize) -> u64 {
        1 + match self {
            LzsiToken::Recurrence(r) => gamma_len(*r) as u64,
            LzsiToken::Escape(x) => x.len() as u64 * raw_symbol_bits(x_size) as u64,
        }
    }

    pub fn is_escape(&self) -> bool {
        matches!(self, LzsiToken::Escape(_))
    }

    pub fn write(&self, w: &mut BitWriter, x_size: usize) {
        match self {
            LzsiToken::Recurrence(r) => {
                w.write_bit(false);
                gamma_encode(w, *r);
            }
            LzsiToken::Escape(x) => {
                w.write_bit(true);
                let width = raw_symbol_bits(x_size);
                for &v in x {
                    w.write_bits(v as u64, width);
                }
            }
        }
    }

    pub fn read(r: &mut BitReader<'_>, x_size: usize, n: usize) -> Result<Self> {
        if r.read_bit()? {
            let width = raw_symbol_bits(x_size);
            let x = (0..n)
                .map(|_| r.read_bits(width).map(|v| v as u32))
                .collect::<Result<Vec<_>>>()?;
            check_symbols(&x, x_size).map_err(|_| Error::Stream("raw symbol out of range".into()))?;
            Ok(LzsiToken::Escape(x))
        } else {
            Ok(LzsiToken::Recurrence(gamma_decode(r)?))
        }
    }

    /// ASCII bits of the token.
    pub fn bit_string(&self, x_size: usize) -> String {
        let mut w = BitWriter::new();
        self.write(&mut w, x_size);
        let len = w.bit_len();
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        (0..len)
            .map(|_| if r.read_bit().unwrap() { '1' } else { '0' })
            .collect()
    }
}

/// Token for the block starting at `xs[start]`, searching the `start`
/// symbols before it.
fn encode_block(xs: &[u32], ys: &[u32], start: usize, n: usize) -> Result<LzsiToken> {
    let mut tl = SliceTimeline::new(xs, ys, start, n);
    Ok(match conditional_scan(&mut tl)?.0 {
        Some(r) => LzsiToken::Recurrence(r),
        None => LzsiToken::Escape(xs[start..start + n].to_vec()),
    })
}

/// Reconstruct `xs[start..start + n]` in place. `xs` must hold the decoded
/// prefix; `ys` is known through `start + n`.
fn decode_block(xs: &mut Vec<u32>, ys: &[u32], start: usize, n: usize, token: &LzsiToken) -> Result<()> {
    debug_assert_eq!(xs.len(), start);
    match token {
        LzsiToken::Escape(x) => {
            if x.len() != n {
                return Err(Error::Stream(format!(
                    "escape block has {} symbols, expected {n}",
                    x.len()
                )));
            }
            xs.extend_from_slice(x);
        }
        LzsiToken::Recurrence(r) => {
            let present = &ys[start..start + n];
            let mut seen = 0u64;
            let mut shift = None;
            for i in 1..=start {
                if (0..n).all(|j| ys[start - i + j] == present[j]) {
                    seen += 1;
                    if seen == *r {
                        shift = Some(i);
                        break;
                    }
                }
            }
            let i = shift.ok_or(Error::InvalidCodeword)?;
            // copy forward so overlapping windows pick up decoded symbols
            for j in 0..n {
                let v = xs[start + j - i];
                xs.push(v);
            }
        }
    }
    Ok(())
}

/// Encode the present block of a sample.
pub fn lzsi_encode(sample: &TwoSidedSample) -> Result<LzsiToken> {
    if sample.n() == 0 {
        return Err(Error::EmptyString);
    }
    let xs = sample.concat_x();
    let ys = sample.concat_y();
    encode_block(&xs, &ys, sample.past_x.len(), sample.n())
}

/// Decode one block from the shared past and the present side information.
pub fn lzsi_decode(past_x: &[u32], past_y: &[u32], present_y: &[u32], token: &LzsiToken) -> Result<Vec<u32>> {
    if past_x.len() != past_y.len() {
        return Err(Error::LengthMismatch {
            x: past_x.len(),
            y: past_y.len(),
        });
    }
    let ys = [past_y, present_y].concat();
    let mut xs = past_x.to_vec();
    decode_block(&mut xs, &ys, past_x.len(), present_y.len(), token)?;
    Ok(xs.split_off(past_x.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LzsiHeader {
    pub n: u32,
    pub m: u64,
    pub model_hash: [u8; 8],
    pub seed: u64,
    pub blocks: u32,
}

/// A sequence of blocks: block `b` is symbols `m + b n .. m + (b+1) n` of
/// the stream and is matched against the `m` symbols before it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LzsiStream {
    pub header: LzsiHeader,
    pub tokens: Vec<LzsiToken>,
}

fn hash_bytes(hex: &str) -> [u8; 8] {
    let mut out = [0u8; 8];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).expect("model hash is hex");
    }
    out
}

impl LzsiStream {
    /// Encode `xs[m..]` in blocks of `n`, given all of `ys` and `xs[..m]`.
    pub fn encode(model: &PairModel, xs: &[u32], ys: &[u32], m: usize, n: usize, seed: u64) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                x: xs.len(),
                y: ys.len(),
            });
        }
        if n == 0 || xs.len() <= m || (xs.len() - m) % n != 0 {
            return Err(Error::BadArgument(format!(
                "stream of {} symbols is not a past of {m} plus whole blocks of {n}",
                xs.len()
            )));
        }
        check_symbols(xs, model.x_size())?;
        check_symbols(ys, model.y_size())?;
        let blocks = (xs.len() - m) / n;
        let tokens = (0..blocks)
            .map(|b| {
                let start = m + b * n;
                encode_block(&xs[b * n..], &ys[b * n..], start - b * n, n)
            })
            .collect::<Result<Vec<_>>>()?;
        let header = LzsiHeader {
            n: u32::try_from(n).map_err(|_| Error::BadArgument("block length exceeds u32".into()))?,
            m: m as u64,
            model_hash: hash_bytes(model.hash()),
            seed,
            blocks: u32::try_from(blocks).map_err(|_| Error::BadArgument("too many blocks".into()))?,
        };
        Ok(LzsiStream { header, tokens })
    }

    /// Recover `xs[m..]` from `xs[..m]` and all of `ys`.
    pub fn decode(&self, model: &PairModel, past_x: &[u32], ys: &[u32]) -> Result<Vec<u32>> {
        if self.header.model_hash != hash_bytes(model.hash()) {
            return Err(Error::Stream("model hash does not match the stream".into()));
        }
        let (n, m) = (self.header.n as usize, self.header.m as usize);
        if past_x.len() != m || ys.len() != m + n * self.tokens.len() {
            return Err(Error::Stream("side information does not cover the stream".into()));
        }
        let mut xs = past_x.to_vec();
        for (b, token) in self.tokens.iter().enumerate() {
            // each block sees exactly the m symbols before it
            let mut window = xs[b * n..].to_vec();
            decode_block(&mut window, &ys[b * n..], m, n, token)?;
            xs.extend_from_slice(&window[m..]);
        }
        Ok(xs.split_off(m))
    }

    pub fn to_bytes(&self, x_size: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN);
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&self.header.n.to_le_bytes());
        out.extend_from_slice(&self.header.m.to_le_bytes());
        out.extend_from_slice(&self.header.model_hash);
        out.extend_from_slice(&self.header.seed.to_le_bytes());
        out.extend_from_slice(&self.header.blocks.to_le_bytes());
        for token in &self.tokens {
            let mut w = BitWriter::new();
            token.write(&mut w, x_size);
            out.extend(w.into_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], model: &PairModel) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(Error::Stream("not an LZSI stream".into()));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(Error::Stream(format!("unsupported version {}", bytes[4])));
        }
        let le = |range: std::ops::Range<usize>| -> [u8; 8] {
            let mut b = [0u8; 8];
            b[..range.len()].copy_from_slice(&bytes[range]);
            b
        };
        let header = LzsiHeader {
            n: u64::from_le_bytes(le(5..9)) as u32,
            m: u64::from_le_bytes(le(9..17)),
            model_hash: le(17..25),
            seed: u64::from_le_bytes(le(25..33)),
            blocks: u64::from_le_bytes(le(33..37)) as u32,
        };
        if header.model_hash != hash_bytes(model.hash()) {
            return Err(Error::Stream("model hash does not match the stream".into()));
        }
        let mut r = BitReader::new(&bytes[HEADER_LEN..]);
        let mut tokens = Vec::with_capacity(header.blocks as usize);
        for _ in 0..header.blocks {
            tokens.push(LzsiToken::read(&mut r, model.x_size(), header.n as usize)?);
            r.align();
        }
        if r.bit_pos() / 8 != bytes.len() - HEADER_LEN {
            return Err(Error::Stream("trailing bytes after the last block".into()));
        }
        Ok(LzsiStream { header, tokens })
    }

    /// Token bits, excluding header and padding.
    pub fn payload_bits(&self, x_size: usize) -> u64 {
        self.tokens.iter().map(|t| t.bit_len(x_size)).sum()
    }

    pub fn escapes(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_escape()).count()
    }
}
