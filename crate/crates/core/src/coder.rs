//! The optimal one-to-one compressor with side information and its prefix
//! counterpart.
//!
//! Given `y`, every `x` in `X^n` is ranked by decreasing `P(x | y)` (ties in
//! lexicographic order of `x`) and the string of rank `r` is sent as the
//! `r`-th binary string in length-then-lexicographic order:
//! `∅, 0, 1, 00, 01, 10, 11, 000, ...`.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{check_pair_strings, conditional_info_density};
use crate::enumerate::{conditional_table, count_strings, guard, index_of_string, string_from_index};
use crate::error::{Error, Result};
use crate::model::PairModel;

/// Limit on `|X|^n` for building a ranking.
pub const ASSIGNMENT_LIMIT: f64 = 1e7;
/// Limit on `|X|^n |Y|^n` for exact length moments.
pub const MOMENT_LIMIT: f64 = 1e8;
/// Conditional log-probabilities closer than this are treated as ties.
const TIE_GRID: f64 = 1e-10;
/// Densities within this distance of an integer are snapped before `ceil`.
const CEIL_SNAP: f64 = 1e-9;

/// A finite binary string, possibly empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Codeword {
    pub bits: Vec<bool>,
}

impl Codeword {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Position of this string in length-then-lexicographic order, from 1.
    pub fn rank(&self) -> Result<u64> {
        if self.bits.len() > 63 {
            return Err(Error::InvalidCodeword);
        }
        Ok(self.bits.iter().fold(1u64, |acc, &b| (acc << 1) | b as u64))
    }

    /// Human form: the bit string, or `∅` when empty.
    pub fn display(&self) -> String {
        if self.is_empty() {
            "∅".to_string()
        } else {
            self.to_string()
        }
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Codeword {
    type Err = Error;

    /// Accepts `0`/`1` strings; the empty string and `∅` are the empty codeword.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "∅" {
            return Ok(Codeword::default());
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidCodeword),
            })
            .collect::<Result<_>>()?;
        Ok(Codeword { bits })
    }
}

/// Binary expansion of `rank` with the leading 1 removed.
pub fn codeword_for_rank(rank: u64) -> Codeword {
    assert!(rank >= 1, "ranks start at 1");
    let len = rank.ilog2();
    Codeword {
        bits: (0..len).rev().map(|i| (rank >> i) & 1 == 1).collect(),
    }
}

/// `floor(log2 rank)`.
pub fn length_for_rank(rank: u64) -> u32 {
    rank.ilog2()
}

fn tie_key(p: f64) -> i64 {
    if p > 0.0 {
        (p.log2() / TIE_GRID).round() as i64
    } else {
        i64::MIN
    }
}

/// Ranking of `X^n` under `P(. | y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeAssignment {
    pub y_context: Vec<u32>,
    pub x_size: usize,
    /// Lexicographic indices of x-strings, most probable first.
    pub ranking: Vec<usize>,
    /// 1-based rank of each lexicographic index.
    pub rank_of: Vec<u64>,
    /// `P(x | y)` in lexicographic order.
    pub probs: Vec<f64>,
    /// `log2 P(y)`.
    pub log2_p_y: f64,
}

impl CodeAssignment {
    pub fn n(&self) -> usize {
        self.y_context.len()
    }

    pub fn rank(&self, x: &[u32]) -> u64 {
        self.rank_of[index_of_string(x, self.x_size)]
    }

    pub fn string_at(&self, rank: u64) -> Option<Vec<u32>> {
        let i = usize::try_from(rank).ok()?.checked_sub(1)?;
        self.ranking
            .get(i)
            .map(|&idx| string_from_index(idx, self.x_size, self.n()))
    }

    pub fn codeword(&self, x: &[u32]) -> Codeword {
        codeword_for_rank(self.rank(x))
    }

    pub fn probability(&self, x: &[u32]) -> f64 {
        self.probs[index_of_string(x, self.x_size)]
    }

    /// Codeword lengths in lexicographic order of `x`.
    pub fn lengths(&self) -> Vec<u32> {
        self.rank_of.iter().map(|&r| length_for_rank(r)).collect()
    }
}

pub fn build_assignment(model: &PairModel, y: &[u32]) -> Result<CodeAssignment> {
    guard(count_strings(model.x_size(), y.len()), ASSIGNMENT_LIMIT)?;
    let table = conditional_table(model, y, ASSIGNMENT_LIMIT)?;
    let mut ranking: Vec<usize> = (0..table.probs.len()).collect();
    ranking.sort_by_key(|&i| (Reverse(tie_key(table.probs[i])), i));
    let mut rank_of = vec![0u64; ranking.len()];
    for (pos, &idx) in ranking.iter().enumerate() {
        rank_of[idx] = pos as u64 + 1;
    }
    Ok(CodeAssignment {
        y_context: y.to_vec(),
        x_size: model.x_size(),
        ranking,
        rank_of,
        probs: table.probs,
        log2_p_y: table.log2_p_y,
    })
}

pub fn encode_opt(model: &PairModel, x: &[u32], y: &[u32]) -> Result<Codeword> {
    check_pair_strings(model, x, y)?;
    Ok(build_assignment(model, y)?.codeword(x))
}

pub fn decode_opt(model: &PairModel, codeword: &Codeword, y: &[u32]) -> Result<Vec<u32>> {
    let rank = codeword.rank()?;
    build_assignment(model, y)?
        .string_at(rank)
        .ok_or(Error::InvalidCodeword)
}

/// `floor(log2 rank(x))`, counting strings with strictly larger conditional
/// probability plus equally likely strings that precede `x`. Streams over
/// the conditional table without sorting it.
pub fn optimal_codelength(model: &PairModel, x: &[u32], y: &[u32]) -> Result<u32> {
    check_pair_strings(model, x, y)?;
    let table = conditional_table(model, y, ASSIGNMENT_LIMIT)?;
    let target = index_of_string(x, model.x_size());
    let key = tie_key(table.probs[target]);
    let mut rank = 1u64;
    for (i, &p) in table.probs.iter().enumerate() {
        let k = tie_key(p);
        if k > key || (k == key && i < target) {
            rank += 1;
        }
    }
    Ok(length_for_rank(rank))
}

/// `ceil(-log2 P(x | y))`, the length of a Shannon-style prefix code.
pub fn prefix_codelength(model: &PairModel, x: &[u32], y: &[u32]) -> Result<u32> {
    prefix_length_from_density(conditional_info_density(model, x, y)?)
}

pub fn prefix_length_from_density(d: f64) -> Result<u32> {
    if !d.is_finite() {
        return Err(Error::ZeroProbability);
    }
    let nearest = d.round();
    let snapped = if (d - nearest).abs() <= CEIL_SNAP {
        nearest
    } else {
        d.ceil()
    };
    Ok(snapped.max(0.0) as u32)
}

/// Exact moments of optimal lengths and densities under the stationary law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthMoments {
    pub n: usize,
    pub mean_length: f64,
    pub var_length: f64,
    pub mean_density: f64,
    pub var_density: f64,
    /// Largest `l(f*) - d` over pairs of positive probability.
    pub max_excess: f64,
}

/// Sum over every `(x, y)` of positive probability.
pub fn optimal_length_moments(model: &PairModel, n: usize) -> Result<LengthMoments> {
    guard(count_strings(model.pairs(), n), MOMENT_LIMIT)?;
    let (mut l1, mut l2, mut d1, mut d2) = (0.0, 0.0, 0.0, 0.0);
    let mut max_excess = f64::NEG_INFINITY;
    for yi in 0..model.y_size().pow(n as u32) {
        let y = string_from_index(yi, model.y_size(), n);
        let a = match build_assignment(model, &y) {
            Ok(a) => a,
            Err(Error::ConditioningOnNull) => continue,
            Err(e) => return Err(e),
        };
        let py = a.log2_p_y.exp2();
        for (idx, &p) in a.probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let l = length_for_rank(a.rank_of[idx]) as f64;
            let d = -p.log2();
            let w = py * p;
            l1 += w * l;
            l2 += w * l * l;
            d1 += w * d;
            d2 += w * d * d;
            max_excess = max_excess.max(l - d);
        }
    }
    Ok(LengthMoments {
        n,
        mean_length: l1,
        var_length: l2 - l1 * l1,
        mean_density: d1,
        var_density: d2 - d1 * d1,
        max_excess,
    })
}
