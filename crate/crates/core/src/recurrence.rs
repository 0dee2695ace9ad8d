//! Recurrence times of the present window in the past, and the conditional
//! Kac experiment.
//!
//! Times run `..., -1, 0` (past) and `1..=n` (present). The window at shift
//! `i >= 1` covers times `-i+1..=-i+n`; for `i < n` it overlaps the present.
//! Shifts are scanned for `i = 1..=m`, where `m` is the past length, so that
//! every window starts inside the stored past.

use serde::{Deserialize, Serialize};

use crate::density::{conditional_info_density, joint_log_prob};
use crate::error::{Error, Result};
use crate::mc::replicate;
use crate::model::PairModel;
use crate::report::{num, row, ExperimentReport};
use crate::rng::{replica_rng, StreamRng};
use crate::sample::{draw, BackwardSampler, TwoSidedSample};
use crate::stats;

/// Floor on `P(x, y)` below which a Kac target is refused.
pub const KAC_PROBABILITY_FLOOR: f64 = 1e-6;
/// Minimum past length chosen by the truncation policy.
pub const MIN_PAST: usize = 1 << 16;
/// Default multiplier `K` in `m = max(2^16, ceil(K / P(x|y)))`.
pub const DEFAULT_PAST_FACTOR: f64 = 100.0;

/// Random access to a pair path around the present block.
pub trait Timeline {
    fn n(&self) -> usize;
    /// Largest shift that may be scanned.
    fn max_shift(&self) -> usize;
    /// `(x_t, y_t)` for `-max_shift < t <= n`.
    fn at(&mut self, t: i64) -> (u32, u32);
}

/// A stored path viewed as a timeline: time 1 is `xs[start]` and the
/// `m` symbols before it are the past.
pub struct SliceTimeline<'a> {
    xs: &'a [u32],
    ys: &'a [u32],
    start: usize,
    n: usize,
}

impl<'a> SliceTimeline<'a> {
    pub fn new(xs: &'a [u32], ys: &'a [u32], start: usize, n: usize) -> Self {
        assert!(xs.len() == ys.len() && start + n <= xs.len());
        SliceTimeline { xs, ys, start, n }
    }
}

impl Timeline for SliceTimeline<'_> {
    fn n(&self) -> usize {
        self.n
    }

    fn max_shift(&self) -> usize {
        self.start
    }

    fn at(&mut self, t: i64) -> (u32, u32) {
        let idx = (self.start as i64 - 1 + t) as usize;
        (self.xs[idx], self.ys[idx])
    }
}

fn with_sample<T>(sample: &TwoSidedSample, f: impl FnOnce(&mut SliceTimeline<'_>) -> T) -> T {
    let (xs, ys) = (sample.concat_x(), sample.concat_y());
    f(&mut SliceTimeline::new(&xs, &ys, sample.past_x.len(), sample.n()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrenceObservation {
    pub n: usize,
    pub m: usize,
    /// `R_n(x, y)`: first shift where the pair window recurs.
    pub r_joint: Option<u64>,
    /// `R_n(x | y)`: index among y-recurrences of the first whose x-window
    /// also matches.
    pub r_conditional: Option<u64>,
    /// Shift of the `r_conditional`-th y-recurrence.
    pub conditional_shift: Option<u64>,
    /// Number of y-recurrences seen during the conditional scan.
    pub y_occurrences_scanned: u64,
    pub truncated: bool,
}

impl RecurrenceObservation {
    /// Joint shift equals the shift of the conditional match.
    pub fn is_consistent(&self) -> bool {
        match (self.r_joint, self.conditional_shift) {
            (Some(a), Some(b)) => a == b,
            (None, None) => true,
            _ => false,
        }
    }
}

struct Present {
    x: Vec<u32>,
    y: Vec<u32>,
}

fn present<T: Timeline>(tl: &mut T) -> Present {
    let (x, y) = (1..=tl.n() as i64).map(|t| tl.at(t)).unzip();
    Present { x, y }
}

fn y_matches<T: Timeline>(tl: &mut T, p: &Present, shift: usize) -> bool {
    let base = -(shift as i64);
    p.y.iter().enumerate().all(|(j, &y)| tl.at(base + 1 + j as i64).1 == y)
}

fn x_matches<T: Timeline>(tl: &mut T, p: &Present, shift: usize) -> bool {
    let base = -(shift as i64);
    p.x.iter().enumerate().all(|(j, &x)| tl.at(base + 1 + j as i64).0 == x)
}

fn check_timeline<T: Timeline>(tl: &T) -> Result<()> {
    if tl.n() == 0 {
        return Err(Error::EmptyString);
    }
    Ok(())
}

/// Shift of the `j`-th recurrence of the present y-window, `j >= 1`.
pub fn repeated_recurrence_in<T: Timeline>(tl: &mut T, j: u64) -> Result<u64> {
    check_timeline(tl)?;
    if j == 0 {
        return Err(Error::BadArgument("recurrence index starts at 1".into()));
    }
    let p = present(tl);
    let mut seen = 0;
    for i in 1..=tl.max_shift() {
        if y_matches(tl, &p, i) {
            seen += 1;
            if seen == j {
                return Ok(i as u64);
            }
        }
    }
    Err(Error::Truncated)
}

pub fn repeated_recurrence(sample: &TwoSidedSample, j: u64) -> Result<u64> {
    with_sample(sample, |tl| repeated_recurrence_in(tl, j))
}

/// `R_n(x, y)`, matching the pair window directly.
pub fn joint_recurrence_in<T: Timeline>(tl: &mut T) -> Result<Option<u64>> {
    check_timeline(tl)?;
    let p = present(tl);
    for i in 1..=tl.max_shift() {
        let base = -(i as i64);
        let hit = (0..p.x.len()).all(|j| tl.at(base + 1 + j as i64) == (p.x[j], p.y[j]));
        if hit {
            return Ok(Some(i as u64));
        }
    }
    Ok(None)
}

pub fn joint_recurrence(sample: &TwoSidedSample) -> Result<Option<u64>> {
    with_sample(sample, |tl| joint_recurrence_in(tl))
}

/// Scan y-recurrences until one carries the present x-window. Returns
/// `(R_n(x|y), shift, y-recurrences seen)`.
pub fn conditional_scan<T: Timeline>(tl: &mut T) -> Result<(Option<u64>, Option<u64>, u64)> {
    check_timeline(tl)?;
    let p = present(tl);
    let mut seen = 0u64;
    for i in 1..=tl.max_shift() {
        if y_matches(tl, &p, i) {
            seen += 1;
            if x_matches(tl, &p, i) {
                return Ok((Some(seen), Some(i as u64), seen));
            }
        }
    }
    Ok((None, None, seen))
}

/// Both recurrence times of the present block, cross-checked.
pub fn conditional_recurrence_in<T: Timeline>(tl: &mut T) -> Result<RecurrenceObservation> {
    let (r_conditional, conditional_shift, seen) = conditional_scan(tl)?;
    let r_joint = joint_recurrence_in(tl)?;
    Ok(RecurrenceObservation {
        n: tl.n(),
        m: tl.max_shift(),
        r_joint,
        r_conditional,
        conditional_shift,
        y_occurrences_scanned: seen,
        truncated: r_conditional.is_none(),
    })
}

pub fn conditional_recurrence(sample: &TwoSidedSample) -> Result<RecurrenceObservation> {
    with_sample(sample, |tl| conditional_recurrence_in(tl))
}

/// A present block fixed to a target, with a stationary past generated
/// backwards on demand from the conditional law given the target.
pub struct ConditionedTimeline<'a> {
    x: &'a [u32],
    y: &'a [u32],
    sampler: &'a BackwardSampler,
    model: &'a PairModel,
    rng: StreamRng,
    // past[b] is the pair symbol at time -b
    past: Vec<usize>,
    oldest: usize,
    m: usize,
}

/// Precomputed pieces shared by every replica of one Kac target.
pub struct KacTarget {
    x: Vec<u32>,
    y: Vec<u32>,
    sampler: BackwardSampler,
    // law of the history at time 0 given the target
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl KacTarget {
    pub fn new(model: &PairModel, x: &[u32], y: &[u32]) -> Result<Self> {
        crate::density::check_pair_strings(model, x, y)?;
        let mut pmf: Vec<f64> = model.stationary().to_vec();
        for (h, w) in pmf.iter_mut().enumerate() {
            let mut state = h;
            for (&a, &b) in x.iter().zip(y) {
                let s = model.pair_index(a, b);
                *w *= model.kernel(state, s);
                state = model.shift(state, s);
            }
        }
        let total: f64 = pmf.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        pmf.iter_mut().for_each(|v| *v /= total);
        let cdf = pmf
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Ok(KacTarget {
            x: x.to_vec(),
            y: y.to_vec(),
            sampler: BackwardSampler::new(model),
            pmf,
            cdf,
        })
    }

    pub fn timeline<'a>(&'a self, model: &'a PairModel, m: usize, mut rng: StreamRng) -> ConditionedTimeline<'a> {
        let h0 = draw(&self.cdf, &self.pmf, &mut rng);
        let mut past = model.history_symbols(h0);
        past.reverse();
        ConditionedTimeline {
            x: &self.x,
            y: &self.y,
            sampler: &self.sampler,
            model,
            rng,
            past,
            oldest: h0,
            m,
        }
    }
}

impl Timeline for ConditionedTimeline<'_> {
    fn n(&self) -> usize {
        self.x.len()
    }

    fn max_shift(&self) -> usize {
        self.m
    }

    fn at(&mut self, t: i64) -> (u32, u32) {
        if t >= 1 {
            let i = (t - 1) as usize;
            return (self.x[i], self.y[i]);
        }
        let back = (-t) as usize;
        while self.past.len() <= back {
            let (s, oldest) = self.sampler.step(self.oldest, &mut self.rng);
            self.past.push(s);
            self.oldest = oldest;
        }
        self.model.split_pair(self.past[back])
    }
}

/// `max(2^16, ceil(factor / p_cond))`.
pub fn default_past_length(p_cond: f64, factor: f64) -> usize {
    let want = (factor / p_cond).ceil();
    if want.is_finite() && want < 1e12 {
        (want as usize).max(MIN_PAST)
    } else {
        usize::MAX
    }
}

/// Conditional recurrence times of a fixed target over `replicas`
/// independent stationary pasts. `None` marks a truncated replica.
pub fn kac_recurrences(
    model: &PairModel,
    x: &[u32],
    y: &[u32],
    replicas: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<Option<u64>>> {
    let target = KacTarget::new(model, x, y)?;
    replicate(replicas, |r| {
        let mut tl = target.timeline(model, m, replica_rng(seed, r));
        Ok(conditional_scan(&mut tl)?.0)
    })
}

/// Check `E[R_n(x|y) | present = (x, y)] = 1 / P(x|y)`.
pub fn kac_experiment(
    model: &PairModel,
    x: &[u32],
    y: &[u32],
    replicas: usize,
    m: Option<usize>,
    seed: u64,
) -> Result<ExperimentReport> {
    let joint = joint_log_prob(model, x, y)?.probability();
    if joint < KAC_PROBABILITY_FLOOR {
        return Err(Error::TargetTooRare {
            probability: joint,
            floor: KAC_PROBABILITY_FLOOR,
        });
    }
    if replicas < 2 {
        return Err(Error::BadArgument("at least two replicas are needed".into()));
    }
    let d = conditional_info_density(model, x, y)?;
    let p_cond = (-d).exp2();
    let m = m.unwrap_or_else(|| default_past_length(p_cond, DEFAULT_PAST_FACTOR));
    let rs = kac_recurrences(model, x, y, replicas, m, seed)?;
    let kept: Vec<f64> = rs.iter().flatten().map(|&r| r as f64).collect();
    let truncated = replicas - kept.len();
    let target = 1.0 / p_cond;
    let mean = stats::mean(&kept);
    let se = stats::std_err(&kept);
    let trunc_frac = truncated as f64 / replicas as f64;

    let mut rep = ExperimentReport::new("kac", model.hash(), seed);
    rep.param("n", x.len())
        .param("x", fmt_string(x))
        .param("y", fmt_string(y))
        .param("replicas", replicas)
        .param("m", m)
        .param_f64("p_joint", joint)
        .param_f64("p_conditional", p_cond);
    rep.stat("target_mean", target)
        .stat("mean", mean)
        .stat("stderr", se)
        .stat("relative_error", (mean - target) / target)
        .stat("ci95_low", mean - 1.96 * se)
        .stat("ci95_high", mean + 1.96 * se)
        .stat("truncated", truncated as f64)
        .stat("truncation_fraction", trunc_frac);
    let dev = (mean - target).abs();
    rep.verdict(
        "kac_mean_within_3_stderr",
        dev <= 3.0 * se || (se == 0.0 && dev < 1e-12),
        num(dev),
        num(3.0 * se),
        "|mean R(x|y) - 1/P(x|y)| against three standard errors",
    );
    rep.verdict(
        "kac_truncation_below_0.1pct",
        trunc_frac < 1e-3,
        num(trunc_frac),
        num(1e-3),
        "",
    );
    rep.push_row(
        "grid",
        row([
            ("x", fmt_string(x).into()),
            ("y", fmt_string(y).into()),
            ("target", num(target)),
            ("mean", num(mean)),
            ("stderr", num(se)),
        ]),
    );
    Ok(rep)
}

pub(crate) fn fmt_string(s: &[u32]) -> String {
    s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::sample::sample_two_sided_replica;

    fn sample_from(past: (&[u32], &[u32]), now: (&[u32], &[u32])) -> TwoSidedSample {
        TwoSidedSample {
            past_x: past.0.to_vec(),
            past_y: past.1.to_vec(),
            present_x: now.0.to_vec(),
            present_y: now.1.to_vec(),
            seed: 0,
            replica: 0,
            m: past.0.len(),
        }
    }

    #[test]
    fn constant_process_recurs_at_every_shift() {
        let s = sample_from((&[0; 10], &[0; 10]), (&[0; 3], &[0; 3]));
        for j in 1..=10 {
            assert_eq!(repeated_recurrence(&s, j).unwrap(), j);
        }
        assert_eq!(repeated_recurrence(&s, 11), Err(Error::Truncated));
        assert_eq!(joint_recurrence(&s).unwrap(), Some(1));
        let o = conditional_recurrence(&s).unwrap();
        assert_eq!(o.r_conditional, Some(1));
        assert!(o.is_consistent());
    }

    #[test]
    fn period_two_matches_even_shifts() {
        let y = [0, 1, 0, 1, 0, 1, 0, 1];
        let s = sample_from((&[0; 8], &y), (&[0, 0], &[0, 1]));
        assert_eq!(repeated_recurrence(&s, 1).unwrap(), 2);
        assert_eq!(repeated_recurrence(&s, 2).unwrap(), 4);
    }

    #[test]
    fn conditional_counts_y_occurrences() {
        // y constant, x differs until shift 3
        let s = sample_from((&[1, 0, 0, 1, 1], &[0; 5]), (&[1], &[0]));
        // time 0 -> x=1 at shift 1
        let o = conditional_recurrence(&s).unwrap();
        assert_eq!(o.r_conditional, Some(1));
        let s = sample_from((&[1, 1, 0, 0, 0], &[0; 5]), (&[1], &[0]));
        let o = conditional_recurrence(&s).unwrap();
        assert_eq!(
            (o.r_conditional, o.conditional_shift, o.r_joint),
            (Some(4), Some(4), Some(4))
        );
        let s = sample_from((&[0; 5], &[0; 5]), (&[1], &[0]));
        let o = conditional_recurrence(&s).unwrap();
        assert!(o.truncated && o.r_joint.is_none() && o.is_consistent());
        assert_eq!(o.y_occurrences_scanned, 5);
    }

    #[test]
    fn copy_model_recurs_at_first_y_match() {
        let m = presets::copy_model();
        for r in 0..50 {
            let s = sample_two_sided_replica(&m, 4096, 6, 1, r).unwrap();
            let o = conditional_recurrence(&s).unwrap();
            if let Some(c) = o.r_conditional {
                assert_eq!(c, 1);
                assert_eq!(o.conditional_shift.unwrap(), repeated_recurrence(&s, 1).unwrap());
            }
            assert!(o.is_consistent());
        }
    }

    #[test]
    fn iid_binary_first_recurrence_is_geometric() {
        let m = presets::uniform_pair(2, 2);
        let rs = replicate(20_000, |r| {
            let s = sample_two_sided_replica(&m, 64, 1, 3, r)?;
            repeated_recurrence(&s, 1)
        })
        .unwrap();
        let xs: Vec<f64> = rs.iter().map(|&r| r as f64).collect();
        let (mu, se) = (stats::mean(&xs), stats::std_err(&xs));
        assert!((mu - 2.0).abs() < 3.0 * se + 1e-3, "{mu} ± {se}");
    }

    #[test]
    fn conditioned_timeline_history_matches_target_law() {
        // With n < k is impossible for order 1 except n = 0; check n = 1 on
        // an order-1 model: the time-0 pair is drawn from pi(h) K(h, target).
        let m = presets::feedback_order1();
        let target = KacTarget::new(&m, &[1], &[0]).unwrap();
        let mut counts = [0usize; 4];
        for r in 0..40_000 {
            let mut tl = target.timeline(&m, 10, replica_rng(7, r));
            let (x, y) = tl.at(0);
            counts[m.pair_index(x, y)] += 1;
        }
        let s = m.pair_index(1, 0);
        let w: Vec<f64> = (0..4).map(|h| m.stationary()[h] * m.kernel(h, s)).collect();
        let tot: f64 = w.iter().sum();
        for h in 0..4 {
            let got = counts[h] as f64 / 40_000.0;
            assert!((got - w[h] / tot).abs() < 0.01, "{h}: {got} vs {}", w[h] / tot);
        }
    }

    #[test]
    fn kac_on_small_targets() {
        let m = presets::dsc_memoryless(0.11);
        let rep = kac_experiment(&m, &[0], &[0], 20_000, None, 5).unwrap();
        assert!(rep.passed(), "{}", rep.to_json());
        assert!((rep.stat_f64("target_mean").unwrap() - 1.0 / 0.89).abs() < 1e-9);
        let m = presets::independent_uniform_x(0.2);
        let rep = kac_experiment(&m, &[1, 0], &[0, 0], 20_000, None, 6).unwrap();
        assert!(rep.passed(), "{}", rep.to_json());
        assert!((rep.stat_f64("target_mean").unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rare_targets_are_refused() {
        let m = presets::dsc_memoryless(0.11);
        let x = vec![1u32; 8];
        let y = vec![0u32; 8];
        assert!(matches!(
            kac_experiment(&m, &x, &y, 10, None, 1),
            Err(Error::TargetTooRare { .. })
        ));
    }
}
