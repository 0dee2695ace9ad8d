//! Joint, marginal and conditional log-probabilities under a [`PairModel`],
//! and the conditional information density `-log2 P(x_1^n | y_1^n)`.
//!
//! Everything runs through one forward recursion over pair histories. The
//! path is treated as starting from a stationary history just before
//! position 1, so the first `k` symbols are marginalized automatically.
//! Weights are renormalized after each step and the log normalizers are
//! accumulated in nats, which keeps the recursion underflow-free for
//! arbitrarily long strings.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PairModel;
use crate::sample::TwoSidedSample;

/// A base-2 log-probability. Probability zero is `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogProb(pub f64);

impl LogProb {
    pub fn bits(self) -> f64 {
        self.0
    }

    pub fn is_zero_probability(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn probability(self) -> f64 {
        self.0.exp2()
    }
}

/// Forward weights over pair histories given the symbols observed so far.
#[derive(Debug, Clone)]
pub struct FilterState {
    weights: Vec<f64>,
    active: Vec<usize>,
    next: Vec<f64>,
    next_active: Vec<usize>,
    marked: Vec<bool>,
    log_norm: f64,
    dead: bool,
}

impl FilterState {
    /// Start from the stationary history law.
    pub fn new(model: &PairModel) -> Self {
        let weights = model.stationary().to_vec();
        let active = (0..weights.len()).filter(|&h| weights[h] > 0.0).collect();
        let states = weights.len();
        FilterState {
            weights,
            active,
            next: vec![0.0; states],
            next_active: Vec::new(),
            marked: vec![false; states],
            log_norm: 0.0,
            dead: false,
        }
    }

    /// Observe the full pair symbol `s`; returns its predictive probability.
    pub fn step_pair(&mut self, model: &PairModel, s: usize) -> f64 {
        self.step(model, s..s + 1, 1)
    }

    /// Observe only the side information `y`; returns `P(y | past y's)`.
    pub fn step_y(&mut self, model: &PairModel, y: u32) -> f64 {
        let ay = model.y_size();
        let first = y as usize;
        self.step(model, first..first + ay * (model.x_size() - 1) + 1, ay)
    }

    fn step(&mut self, model: &PairModel, symbols: std::ops::Range<usize>, stride: usize) -> f64 {
        if self.dead {
            return 0.0;
        }
        for &h in &self.active {
            let w = self.weights[h];
            let row = model.row(h);
            for s in symbols.clone().step_by(stride) {
                let p = row[s];
                if p == 0.0 {
                    continue;
                }
                let t = model.shift(h, s);
                if !self.marked[t] {
                    self.marked[t] = true;
                    self.next_active.push(t);
                }
                self.next[t] += w * p;
            }
        }
        for &h in &self.active {
            self.weights[h] = 0.0;
        }
        let total: f64 = self.next_active.iter().map(|&t| self.next[t]).sum();
        std::mem::swap(&mut self.active, &mut self.next_active);
        self.next_active.clear();
        for &t in &self.active {
            self.marked[t] = false;
            self.weights[t] = if total > 0.0 { self.next[t] / total } else { 0.0 };
            self.next[t] = 0.0;
        }
        if total > 0.0 {
            self.log_norm += total.ln();
        } else {
            self.dead = true;
            self.active.clear();
            self.log_norm = f64::NEG_INFINITY;
        }
        total
    }

    /// Log-probability (bits) of everything observed so far.
    pub fn log2_total(&self) -> f64 {
        self.log_norm / LN_2
    }

    pub fn weight_sum(&self) -> f64 {
        self.active.iter().map(|&h| self.weights[h]).sum()
    }

    pub fn is_dead(&self) -> bool {
        self.dead
    }
}

pub(crate) fn check_pair_strings(model: &PairModel, x: &[u32], y: &[u32]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { x: x.len(), y: y.len() });
    }
    check_symbols(x, model.x_size())?;
    check_symbols(y, model.y_size())
}

pub(crate) fn check_symbols(s: &[u32], size: usize) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptyString);
    }
    match s.iter().position(|&v| v as usize >= size) {
        Some(position) => Err(Error::SymbolOutOfRange {
            position,
            symbol: s[position],
            size,
        }),
        None => Ok(()),
    }
}

/// `log2 P(X_1^n = x, Y_1^n = y)` under the stationary law.
pub fn joint_log_prob(model: &PairModel, x: &[u32], y: &[u32]) -> Result<LogProb> {
    check_pair_strings(model, x, y)?;
    let mut filter = FilterState::new(model);
    for (&a, &b) in x.iter().zip(y) {
        if filter.step_pair(model, model.pair_index(a, b)) == 0.0 {
            return Ok(LogProb(f64::NEG_INFINITY));
        }
    }
    Ok(LogProb(filter.log2_total()))
}

/// `log2 P(Y_1^n = y)`, summing over the hidden X coordinate.
pub fn y_marginal_log_prob(model: &PairModel, y: &[u32]) -> Result<LogProb> {
    check_symbols(y, model.y_size())?;
    let mut filter = FilterState::new(model);
    for &b in y {
        if filter.step_y(model, b) == 0.0 {
            return Ok(LogProb(f64::NEG_INFINITY));
        }
    }
    Ok(LogProb(filter.log2_total()))
}

/// Streaming evaluation of `d_t = -log2 P(x_1^t | y_1^t)`.
///
/// Each step adds `-log2(P(x_t, y_t | past) / P(y_t | past y))`; the ratio
/// is formed before taking the logarithm so that models with dyadic
/// conditionals give exact densities.
#[derive(Debug, Clone)]
pub struct DensityTracker<'m> {
    model: &'m PairModel,
    joint: FilterState,
    marginal: FilterState,
    density: f64,
    len: usize,
}

impl<'m> DensityTracker<'m> {
    pub fn new(model: &'m PairModel) -> Self {
        DensityTracker {
            model,
            joint: FilterState::new(model),
            marginal: FilterState::new(model),
            density: 0.0,
            len: 0,
        }
    }

    /// Append one pair; returns the updated density in bits.
    pub fn push(&mut self, x: u32, y: u32) -> Result<f64> {
        let c_y = self.marginal.step_y(self.model, y);
        if c_y == 0.0 {
            return Err(Error::ConditioningOnNull);
        }
        let c_joint = self.joint.step_pair(self.model, self.model.pair_index(x, y));
        self.density -= if c_joint == 0.0 {
            f64::NEG_INFINITY
        } else {
            (c_joint / c_y).log2()
        };
        self.len += 1;
        Ok(self.density)
    }

    /// Current `d_t`.
    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn joint_log2(&self) -> f64 {
        self.joint.log2_total()
    }

    pub fn marginal_log2(&self) -> f64 {
        self.marginal.log2_total()
    }
}

/// `-log2 P(x_1^n | y_1^n)` in bits; `+inf` when the joint has probability
/// zero but the side information does not.
pub fn conditional_info_density(model: &PairModel, x: &[u32], y: &[u32]) -> Result<f64> {
    check_pair_strings(model, x, y)?;
    let mut tracker = DensityTracker::new(model);
    for (&a, &b) in x.iter().zip(y) {
        tracker.push(a, b)?;
    }
    Ok(tracker.density())
}

/// Per-prefix densities and the centered path `S(t) = -d_t + t h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTrajectory {
    pub n: usize,
    /// `d_t` for `t = 1..=n`.
    pub density: Vec<f64>,
    /// `S(t)` for `t = 1..=n`.
    pub centered_path: Vec<f64>,
    pub h: f64,
}

impl DensityTrajectory {
    /// `S(t)` for real `t >= 0`; piecewise constant in the log-probability
    /// between integers.
    pub fn centered_at(&self, t: f64) -> f64 {
        let k = t.floor() as usize;
        let d = if k == 0 { 0.0 } else { self.density[k.min(self.n) - 1] };
        -d + t * self.h
    }

    /// CSV with header `t,density_bits,centered_path`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,density_bits,centered_path\n");
        for (i, (d, s)) in self.density.iter().zip(&self.centered_path).enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, fmt_num(*d), fmt_num(*s));
        }
        out
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{}", crate::report::round_sig(v, 12))
    } else {
        format!("{v}")
    }
}

pub fn density_trajectory(model: &PairModel, x: &[u32], y: &[u32], h: f64) -> Result<DensityTrajectory> {
    check_pair_strings(model, x, y)?;
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::BadArgument(format!(
            "centering rate {h} must be finite and non-negative"
        )));
    }
    let mut tracker = DensityTracker::new(model);
    let mut density = Vec::with_capacity(x.len());
    let mut centered_path = Vec::with_capacity(x.len());
    for (t, (&a, &b)) in x.iter().zip(y).enumerate() {
        let d = tracker.push(a, b)?;
        density.push(d);
        centered_path.push(-d + (t + 1) as f64 * h);
    }
    Ok(DensityTrajectory {
        n: x.len(),
        density,
        centered_path,
        h,
    })
}

/// Default look-back window for the per-symbol terms.
pub const DEFAULT_WINDOW: usize = 256;

/// Per-symbol terms `f_j = log2 P(x_j, y_j | pair past) - log2 P(y_j | y past)`
/// for `j = 1..=n` of a two-sided sample. The numerator uses the exact
/// order-`k` history; the denominator conditions on the `w` preceding side
/// information symbols, starting the filter from the stationary law.
pub fn per_symbol_density_terms(model: &PairModel, sample: &TwoSidedSample, window: usize) -> Result<Vec<f64>> {
    let k = model.order();
    if window < k || window > sample.m {
        return Err(Error::WindowTooShort {
            window,
            order: k,
            past: sample.m,
        });
    }
    let xs = sample.concat_x();
    let ys = sample.concat_y();
    let pairs: Vec<usize> = xs.iter().zip(&ys).map(|(&a, &b)| model.pair_index(a, b)).collect();
    let m = sample.m;
    let mut out = Vec::with_capacity(sample.n());
    for idx in m..pairs.len() {
        let history = pairs[idx - k..idx].iter().fold(0usize, |h, &s| h * model.pairs() + s);
        let numerator = model.kernel(history, pairs[idx]);
        let mut filter = FilterState::new(model);
        for &b in &ys[idx - window..idx] {
            if filter.step_y(model, b) == 0.0 {
                return Err(Error::ConditioningOnNull);
            }
        }
        let denominator = filter.step_y(model, ys[idx]);
        if denominator == 0.0 {
            return Err(Error::ConditioningOnNull);
        }
        out.push(if numerator == 0.0 {
            f64::NEG_INFINITY
        } else {
            (numerator / denominator).log2()
        });
    }
    Ok(out)
}

/// Doubling self-check of the window: largest `|f_j(w) - f_j(2w)|`, which
/// requires `2w <= m`.
pub fn window_convergence(model: &PairModel, sample: &TwoSidedSample, window: usize) -> Result<f64> {
    let a = per_symbol_density_terms(model, sample, window)?;
    let b = per_symbol_density_terms(model, sample, 2 * window)?;
    Ok(a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max))
}
