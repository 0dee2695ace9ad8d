//! Stationary path sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PairModel;
use crate::rng::{replica_rng, StreamRng};

/// A finite stand-in for a two-sided realization: `m` symbols of past
/// (positions `-m+1..=0`) followed by `n` present symbols (positions `1..=n`),
/// all cut from one stationary forward path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoSidedSample {
    pub past_x: Vec<u32>,
    pub past_y: Vec<u32>,
    pub present_x: Vec<u32>,
    pub present_y: Vec<u32>,
    pub seed: u64,
    pub replica: u64,
    pub m: usize,
}

impl TwoSidedSample {
    pub fn n(&self) -> usize {
        self.present_x.len()
    }

    /// Past followed by present, X coordinate.
    pub fn concat_x(&self) -> Vec<u32> {
        [self.past_x.as_slice(), self.present_x.as_slice()].concat()
    }

    pub fn concat_y(&self) -> Vec<u32> {
        [self.past_y.as_slice(), self.present_y.as_slice()].concat()
    }
}

/// Draw one stationary path of length `m + n` and split it into past and
/// present. Deterministic in `(model, m, n, seed)`.
pub fn sample_two_sided(model: &PairModel, m: usize, n: usize, seed: u64) -> Result<TwoSidedSample> {
    sample_two_sided_replica(model, m, n, seed, 0)
}

/// As [`sample_two_sided`], on RNG stream `replica` of `seed`.
pub fn sample_two_sided_replica(
    model: &PairModel,
    m: usize,
    n: usize,
    seed: u64,
    replica: u64,
) -> Result<TwoSidedSample> {
    if m < model.order() {
        return Err(Error::PastTooShort {
            m,
            order: model.order(),
        });
    }
    if n == 0 {
        return Err(Error::BadArgument("present length must be at least 1".into()));
    }
    let mut rng = replica_rng(seed, replica);
    let mut xs = Vec::with_capacity(m + n);
    let mut ys = Vec::with_capacity(m + n);
    for s in PairStream::new(model, &mut rng).take(m + n) {
        let (x, y) = model.split_pair(s);
        xs.push(x);
        ys.push(y);
    }
    let present_x = xs.split_off(m);
    let present_y = ys.split_off(m);
    Ok(TwoSidedSample {
        past_x: xs,
        past_y: ys,
        present_x,
        present_y,
        seed,
        replica,
        m,
    })
}

/// Stationary stream of pair symbols. The first `k` symbols are the
/// initial history drawn from the stationary law.
pub struct PairStream<'a, R: Rng> {
    model: &'a PairModel,
    rng: &'a mut R,
    history: usize,
    initial: Vec<usize>,
    emitted: usize,
}

impl<'a, R: Rng> PairStream<'a, R> {
    pub fn new(model: &'a PairModel, rng: &'a mut R) -> Self {
        let history = draw(model.stationary_cdf(), model.stationary(), rng);
        let initial = model.history_symbols(history);
        PairStream {
            model,
            rng,
            history,
            initial,
            emitted: 0,
        }
    }
}

impl<R: Rng> Iterator for PairStream<'_, R> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let s = if self.emitted < self.initial.len() {
            self.initial[self.emitted]
        } else {
            let h = self.history;
            let s = draw(self.model.row_cdf(h), self.model.row(h), self.rng);
            self.history = self.model.shift(h, s);
            s
        };
        self.emitted += 1;
        Some(s)
    }
}

/// Inverse-CDF draw, guarded against a cumulative total that rounds below 1.
pub(crate) fn draw<R: Rng>(cdf: &[f64], pmf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    let idx = cdf.partition_point(|&c| c <= u);
    if idx < pmf.len() && pmf[idx] > 0.0 {
        idx
    } else {
        pmf.iter()
            .rposition(|&p| p > 0.0)
            .expect("distribution has positive mass")
    }
}

/// Generates a stationary path backwards in time through the reversed
/// history chain.
pub struct BackwardSampler {
    order: usize,
    pairs: usize,
    // rows indexed by the current oldest history; entries over the preceding symbol
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl BackwardSampler {
    pub fn new(model: &PairModel) -> Self {
        let pairs = model.pairs();
        let states = model.states();
        let pi = model.stationary();
        let mut pmf = vec![0.0; states * pairs];
        if model.order() == 0 {
            pmf.copy_from_slice(model.row(0));
        } else {
            let lead = states / pairs;
            for h in 0..states {
                let newest = h % pairs;
                let rest = h / pairs;
                let row = &mut pmf[h * pairs..(h + 1) * pairs];
                for (sp, slot) in row.iter_mut().enumerate() {
                    let prev = sp * lead + rest;
                    *slot = pi[prev] * model.kernel(prev, newest);
                }
                let total: f64 = row.iter().sum();
                if total > 0.0 {
                    row.iter_mut().for_each(|v| *v /= total);
                }
            }
        }
        let mut cdf = Vec::with_capacity(pmf.len());
        for row in pmf.chunks(pairs) {
            let mut acc = 0.0;
            for &p in row {
                acc += p;
                cdf.push(acc);
            }
        }
        BackwardSampler {
            order: model.order(),
            pairs,
            pmf,
            cdf,
        }
    }

    /// Draw the symbol preceding the oldest history `oldest`; returns the
    /// symbol and the history that now starts one step earlier.
    pub fn step(&self, oldest: usize, rng: &mut StreamRng) -> (usize, usize) {
        let row = if self.order == 0 { 0 } else { oldest };
        let range = row * self.pairs..(row + 1) * self.pairs;
        let s = draw(&self.cdf[range.clone()], &self.pmf[range], rng);
        if self.order == 0 {
            return (s, 0);
        }
        let lead = self.pmf.len() / self.pairs / self.pairs;
        (s, s * lead + oldest / self.pairs)
    }
}
