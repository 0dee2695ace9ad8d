//! Exhaustive enumeration of conditional laws for small blocklengths.

use crate::density::{check_symbols, FilterState};
use crate::error::{Error, Result};
use crate::model::PairModel;

/// `size^n` as a float (it may not fit in an integer).
pub fn count_strings(size: usize, n: usize) -> f64 {
    (size as f64).powi(n as i32)
}

pub fn guard(count: f64, limit: f64) -> Result<()> {
    if count > limit {
        Err(Error::EnumerationTooLarge { size: count, limit })
    } else {
        Ok(())
    }
}

/// The `index`-th string of `size^n` in lexicographic order (first symbol
/// most significant).
pub fn string_from_index(mut index: usize, size: usize, n: usize) -> Vec<u32> {
    let mut out = vec![0u32; n];
    for slot in out.iter_mut().rev() {
        *slot = (index % size) as u32;
        index /= size;
    }
    out
}

pub fn index_of_string(s: &[u32], size: usize) -> usize {
    s.iter().fold(0usize, |acc, &v| acc * size + v as usize)
}

/// `P(x | y)` for every `x` in `X^n`, in lexicographic order of `x`.
#[derive(Debug, Clone)]
pub struct ConditionalTable {
    /// `log2 P(Y_1^n = y)`.
    pub log2_p_y: f64,
    pub probs: Vec<f64>,
}

/// Enumerate the conditional law of `X_1^n` given `Y_1^n = y`.
///
/// The recursion is scaled by the side-information predictive
/// probabilities at each depth so the leaves are conditional probabilities
/// directly and nothing underflows.
pub fn conditional_table(model: &PairModel, y: &[u32], limit: f64) -> Result<ConditionalTable> {
    check_symbols(y, model.y_size())?;
    let n = y.len();
    guard(count_strings(model.x_size(), n), limit)?;
    let mut filter = FilterState::new(model);
    let mut scale = Vec::with_capacity(n);
    for &b in y {
        let c = filter.step_y(model, b);
        if c == 0.0 {
            return Err(Error::ConditioningOnNull);
        }
        scale.push(c);
    }
    let states = model.states();
    let mut buffers = vec![vec![0.0; states]; n + 1];
    buffers[0].copy_from_slice(model.stationary());
    let mut probs = Vec::with_capacity(model.x_size().pow(n as u32));
    descend(model, y, &scale, 0, &mut buffers, &mut probs);
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(ConditionalTable {
        log2_p_y: filter.log2_total(),
        probs,
    })
}

fn descend(model: &PairModel, y: &[u32], scale: &[f64], t: usize, buffers: &mut [Vec<f64>], out: &mut Vec<f64>) {
    if t == y.len() {
        out.push(buffers[t].iter().sum());
        return;
    }
    for x in 0..model.x_size() as u32 {
        let s = model.pair_index(x, y[t]);
        let (head, tail) = buffers.split_at_mut(t + 1);
        let (current, next) = (&head[t], &mut tail[0]);
        next.iter_mut().for_each(|v| *v = 0.0);
        let mut any = false;
        for (h, &w) in current.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let p = model.kernel(h, s);
            if p > 0.0 {
                next[model.shift(h, s)] += w * p / scale[t];
                any = true;
            }
        }
        if any {
            descend(model, y, scale, t + 1, buffers, out);
        } else {
            let leaves = model.x_size().pow((y.len() - t - 1) as u32);
            out.extend(std::iter::repeat_n(0.0, leaves));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn index_roundtrip() {
        for i in 0..27 {
            let s = string_from_index(i, 3, 3);
            assert_eq!(index_of_string(&s, 3), i);
        }
        assert_eq!(string_from_index(5, 2, 4), vec![0, 1, 0, 1]);
    }

    #[test]
    fn table_sums_to_one_and_respects_zeros() {
        let m = presets::uniform_conditional_memoryless();
        let t = conditional_table(&m, &[0, 1], 1e6).unwrap();
        // x in {0,1} x {1,2}
        let expect = [0.0, 0.25, 0.25, 0.0, 0.25, 0.25, 0.0, 0.0, 0.0];
        assert_eq!(t.probs, expect);
        assert!((t.log2_p_y - (0.25f64 * 0.75).log2()).abs() < 1e-12);
    }

    #[test]
    fn guard_refuses_large_enumeration() {
        let m = presets::uniform_pair(2, 2);
        let y = vec![0; 30];
        assert!(matches!(
            conditional_table(&m, &y, 1e7),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }
}
