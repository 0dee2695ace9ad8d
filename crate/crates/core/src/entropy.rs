//! Conditional entropy and varentropy: exact enumeration, direct Monte
//! Carlo, the autocovariance series of the per-symbol terms, and closed forms.

use serde::{Deserialize, Serialize};

use crate::density::per_symbol_density_terms;
use crate::enumerate::{conditional_table, count_strings, guard, string_from_index};
use crate::error::{Error, Result};
use crate::mc::{replicate, sample_densities};
use crate::model::{ModelKind, PairModel, YMarginal};
use crate::sample::sample_two_sided_replica;
use crate::stats;

/// Limit on `|X|^n |Y|^n` for exhaustive entropy computations.
pub const ENTROPY_ENUMERATION_LIMIT: f64 = 1e7;
/// Default truncation lag of the autocovariance series.
pub const DEFAULT_MAX_LAG: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactEnum,
    McDirect,
    Series,
    AnalyticMemoryless,
    /// Entropy rates of the pair chain and of a Markov Y chain.
    AnalyticMarkov,
    /// Provided by the caller.
    Supplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
    pub n_used: Option<usize>,
    pub samples_used: Option<usize>,
    pub truncation_lag: Option<usize>,
    /// `|c_L|`, the magnitude of the last autocovariance kept by the series.
    pub lag_tail: Option<f64>,
}

impl RateEstimate {
    fn exact(value: f64, method: Method, n: Option<usize>) -> Self {
        RateEstimate {
            value,
            stderr: 0.0,
            method,
            n_used: n,
            samples_used: None,
            truncation_lag: None,
            lag_tail: None,
        }
    }
}

fn entropy_bits(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter().filter(|&v| v > 0.0).map(|v| -v * v.log2()).sum()
}

/// `H(X_1^n | Y_1^n)` in bits by summing over every `(x, y)` pair.
pub fn conditional_entropy_exact(model: &PairModel, n: usize) -> Result<RateEstimate> {
    if n == 0 {
        return Err(Error::BadArgument("n must be at least 1".into()));
    }
    guard(count_strings(model.pairs(), n), ENTROPY_ENUMERATION_LIMIT)?;
    let mut total = 0.0;
    for yi in 0..model.y_size().pow(n as u32) {
        let y = string_from_index(yi, model.y_size(), n);
        let table = match conditional_table(model, &y, f64::INFINITY) {
            Ok(t) => t,
            Err(Error::ConditioningOnNull) => continue,
            Err(e) => return Err(e),
        };
        total += table.log2_p_y.exp2() * entropy_bits(table.probs.iter().copied());
    }
    Ok(RateEstimate::exact(total, Method::ExactEnum, Some(n)))
}

/// Sample mean of `d_n` over `samples` seeded replicas (total bits).
pub fn conditional_entropy_mc(model: &PairModel, n: usize, samples: usize, seed: u64) -> Result<RateEstimate> {
    if samples < 2 {
        return Err(Error::BadArgument("at least two samples are needed".into()));
    }
    let d = sample_densities(model, n, samples, seed)?;
    Ok(RateEstimate {
        value: stats::mean(&d),
        stderr: stats::std_err(&d),
        method: Method::McDirect,
        n_used: Some(n),
        samples_used: Some(samples),
        truncation_lag: None,
        lag_tail: None,
    })
}

/// `Var(d_n) / n` from `samples` seeded replicas.
pub fn varentropy_direct(model: &PairModel, n: usize, samples: usize, seed: u64) -> Result<RateEstimate> {
    if samples < 2 {
        return Err(Error::BadArgument("at least two samples are needed".into()));
    }
    let d = sample_densities(model, n, samples, seed)?;
    Ok(RateEstimate {
        value: stats::variance(&d) / n as f64,
        stderr: stats::variance_std_err(&d) / n as f64,
        method: Method::McDirect,
        n_used: Some(n),
        samples_used: Some(samples),
        truncation_lag: None,
        lag_tail: None,
    })
}

/// `c_0 + 2 sum_{k=1}^{L} c_k` where `c_k` are autocovariances of the
/// per-symbol terms along `samples` stationary paths of length `path_len`.
/// Each path yields one estimate; the value is their mean and the standard
/// error their spread.
pub fn varentropy_series(
    model: &PairModel,
    samples: usize,
    path_len: usize,
    max_lag: usize,
    window: usize,
    seed: u64,
) -> Result<RateEstimate> {
    Ok(series_estimates(model, samples, path_len, max_lag, window, seed)?.1)
}

/// Entropy rate and varentropy from the same per-symbol terms. The rate is
/// minus their pooled mean; its standard error uses the varentropy.
pub fn series_estimates(
    model: &PairModel,
    samples: usize,
    path_len: usize,
    max_lag: usize,
    window: usize,
    seed: u64,
) -> Result<(RateEstimate, RateEstimate)> {
    if window < model.order() {
        return Err(Error::WindowTooShort {
            window,
            order: model.order(),
            past: window,
        });
    }
    if samples < 2 {
        return Err(Error::BadArgument("at least two samples are needed".into()));
    }
    if path_len < 2 * max_lag + window || path_len <= max_lag {
        return Err(Error::BadArgument(format!(
            "path length {path_len} must be at least 2L + w = {}",
            2 * max_lag + window
        )));
    }
    let terms = replicate(samples, |r| {
        let sample = sample_two_sided_replica(model, window, path_len, seed, r)?;
        per_symbol_density_terms(model, &sample, window)
    })?;
    let all: Vec<f64> = terms.iter().flatten().copied().collect();
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::ZeroProbability);
    }
    let h = -stats::mean(&all);
    let mut per_path = Vec::with_capacity(samples);
    let mut tail = 0.0;
    for f in &terms {
        let centered: Vec<f64> = f.iter().map(|v| v + h).collect();
        let cov = |k: usize| {
            let m = centered.len() - k;
            (0..m).map(|j| centered[j] * centered[j + k]).sum::<f64>() / m as f64
        };
        let mut est = cov(0);
        for k in 1..=max_lag {
            est += 2.0 * cov(k);
        }
        tail += cov(max_lag);
        per_path.push(est);
    }
    let sigma2 = RateEstimate {
        value: stats::mean(&per_path),
        stderr: stats::std_err(&per_path),
        method: Method::Series,
        n_used: Some(path_len),
        samples_used: Some(samples),
        truncation_lag: Some(max_lag),
        lag_tail: Some((tail / samples as f64).abs()),
    };
    let rate = RateEstimate {
        value: h,
        stderr: (sigma2.value.max(0.0) / all.len() as f64).sqrt(),
        method: Method::Series,
        n_used: Some(path_len),
        samples_used: Some(samples),
        truncation_lag: None,
        lag_tail: None,
    };
    Ok((rate, sigma2))
}

/// Exact `(H(X_1|Y_1), Var(-log2 P(X_1|Y_1)))` of a memoryless pair.
pub fn memoryless_analytic(model: &PairModel) -> Result<(f64, f64)> {
    if model.kind() != ModelKind::Memoryless {
        return Err(Error::WrongKind);
    }
    let row = model.row(0);
    let mut p_y = vec![0.0; model.y_size()];
    for (s, &p) in row.iter().enumerate() {
        p_y[model.split_pair(s).1 as usize] += p;
    }
    let info = |s: usize| -(row[s] / p_y[model.split_pair(s).1 as usize]).log2();
    let support: Vec<usize> = (0..row.len()).filter(|&s| row[s] > 0.0).collect();
    let h: f64 = support.iter().map(|&s| row[s] * info(s)).sum();
    let var: f64 = support.iter().map(|&s| row[s] * (info(s) - h).powi(2)).sum();
    Ok((h, var))
}

/// Conditional entropy rate when it has a closed form: memoryless pairs,
/// and Markov pairs whose Y-marginal is itself Markov.
pub fn entropy_rate_exact(model: &PairModel) -> Result<Option<RateEstimate>> {
    if model.kind() == ModelKind::Memoryless {
        let (h, _) = memoryless_analytic(model)?;
        return Ok(Some(RateEstimate::exact(h, Method::AnalyticMemoryless, None)));
    }
    match model.marginal_y_model()? {
        YMarginal::Markov(y) => {
            let rate = |m: &PairModel| -> f64 {
                (0..m.states())
                    .map(|h| m.stationary()[h] * entropy_bits(m.row(h).iter().copied()))
                    .sum()
            };
            Ok(Some(RateEstimate::exact(
                rate(model) - rate(&y),
                Method::AnalyticMarkov,
                None,
            )))
        }
        YMarginal::NotMarkov => Ok(None),
    }
}

/// Headline estimate of `H(X|Y)` in bits/symbol.
///
/// Closed form when one exists; otherwise the increment
/// `H(X_1^n|Y_1^n) - H(X_1^{n-1}|Y_1^{n-1})` at the largest enumerable `n`
/// when that is at least `min_exact_n`; otherwise Monte Carlo increments
/// between `n` and `2n` with `n = mc_n`.
pub fn entropy_rate(
    model: &PairModel,
    min_exact_n: usize,
    mc_n: usize,
    samples: usize,
    seed: u64,
) -> Result<RateEstimate> {
    if let Some(exact) = entropy_rate_exact(model)? {
        return Ok(exact);
    }
    let mut n = 1;
    while count_strings(model.pairs(), n + 1) <= ENTROPY_ENUMERATION_LIMIT {
        n += 1;
    }
    if n >= min_exact_n.max(2) {
        let hi = conditional_entropy_exact(model, n)?;
        let lo = conditional_entropy_exact(model, n - 1)?;
        return Ok(RateEstimate::exact(hi.value - lo.value, Method::ExactEnum, Some(n)));
    }
    // Both blocks come from independent streams, so their errors add.
    let lo = conditional_entropy_mc(model, mc_n, samples, crate::rng::derive_seed(seed, "rate-lo"))?;
    let hi = conditional_entropy_mc(model, 2 * mc_n, samples, crate::rng::derive_seed(seed, "rate-hi"))?;
    Ok(RateEstimate {
        value: (hi.value - lo.value) / mc_n as f64,
        stderr: (hi.stderr.powi(2) + lo.stderr.powi(2)).sqrt() / mc_n as f64,
        method: Method::McDirect,
        n_used: Some(2 * mc_n),
        samples_used: Some(samples),
        truncation_lag: None,
        lag_tail: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn binary_entropy(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn uniform_independent_x_has_one_bit_per_symbol() {
        let m = presets::uniform_pair(2, 2);
        assert!((conditional_entropy_exact(&m, 4).unwrap().value - 4.0).abs() < 1e-12);
        let m = presets::independent_uniform_x(0.2);
        assert!((conditional_entropy_exact(&m, 4).unwrap().value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dsc_single_symbol_is_binary_entropy() {
        let m = presets::dsc_memoryless(0.11);
        let h = conditional_entropy_exact(&m, 1).unwrap().value;
        assert!((h - binary_entropy(0.11)).abs() < 1e-12);
        assert!((h - 0.49991).abs() < 1e-5);
        let two = conditional_entropy_exact(&m, 2).unwrap().value;
        assert!((two - 2.0 * h).abs() < 1e-9);
    }

    #[test]
    fn memoryless_closed_forms() {
        let (h, v) = memoryless_analytic(&presets::dsc_memoryless(0.11)).unwrap();
        assert!((h - binary_entropy(0.11)).abs() < 1e-12);
        let expect = 0.11 * 0.89 * (0.89f64 / 0.11).log2().powi(2);
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 0.8907).abs() < 1e-4);

        let (h, v) = memoryless_analytic(&presets::copy_model()).unwrap();
        assert_eq!((h, v), (0.0, 0.0));

        let (h, v) = memoryless_analytic(&presets::uniform_conditional_memoryless()).unwrap();
        assert_eq!((h, v), (1.0, 0.0));

        assert_eq!(memoryless_analytic(&presets::feedback_order1()), Err(Error::WrongKind));
    }

    #[test]
    fn zero_varentropy_iff_equal_size_uniform_supports() {
        let build = |row: Vec<f64>| {
            PairModel::build(crate::model::ModelSpec {
                x_alphabet: 3,
                y_alphabet: 2,
                order: 0,
                kernel: vec![row],
                names: None,
            })
            .unwrap()
        };
        // uniform on {0,1} given y=0 and on {0,2} given y=1
        let equal = build(vec![0.2, 0.3, 0.2, 0.0, 0.0, 0.3]);
        assert!(memoryless_analytic(&equal).unwrap().1.abs() < 1e-15);
        // uniform but sizes 1 and 2
        let unequal = build(vec![0.4, 0.3, 0.0, 0.0, 0.0, 0.3]);
        assert!(memoryless_analytic(&unequal).unwrap().1 > 0.1);
        // equal sizes, non-uniform
        let skewed = build(vec![0.3, 0.1, 0.2, 0.0, 0.0, 0.4]);
        assert!(memoryless_analytic(&skewed).unwrap().1 > 0.01);
    }

    #[test]
    fn mc_agrees_with_exact_on_memoryless_dsc() {
        let m = presets::dsc_memoryless(0.11);
        let exact = conditional_entropy_exact(&m, 8).unwrap().value;
        let mc = conditional_entropy_mc(&m, 8, 100_000, 3).unwrap();
        assert!(
            (mc.value - exact).abs() <= 4.0 * mc.stderr,
            "{} vs {exact} ± {}",
            mc.value,
            mc.stderr
        );
    }

    #[test]
    fn deterministic_density_has_zero_stderr() {
        let m = presets::uniform_pair(2, 2);
        let mc = conditional_entropy_mc(&m, 16, 50, 1).unwrap();
        assert_eq!(mc.value, 16.0);
        assert_eq!(mc.stderr, 0.0);
        let v = varentropy_direct(&m, 16, 50, 1).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn markov_rate_for_dsc_is_the_noise_entropy() {
        let r = entropy_rate_exact(&presets::dsc_markov(0.2, 0.11)).unwrap().unwrap();
        assert_eq!(r.method, Method::AnalyticMarkov);
        assert!((r.value - binary_entropy(0.11)).abs() < 1e-12);
        assert!(entropy_rate_exact(&presets::feedback_order1()).unwrap().is_none());
    }

    #[test]
    fn series_on_memoryless_reduces_to_single_symbol_variance() {
        let m = presets::dsc_memoryless(0.11);
        let (_, s2) = memoryless_analytic(&m).unwrap();
        let est = varentropy_series(&m, 16, 4096, 0, 0, 5).unwrap();
        assert!(
            (est.value - s2).abs() <= 3.0 * est.stderr + 0.01,
            "{} ± {}",
            est.value,
            est.stderr
        );
        assert!(matches!(
            varentropy_series(&m, 16, 10, 8, 0, 5),
            Err(Error::BadArgument(_))
        ));
    }

    #[test]
    fn series_rate_matches_markov_closed_form() {
        let m = presets::dsc_markov(0.2, 0.11);
        let exact = entropy_rate_exact(&m).unwrap().unwrap().value;
        let (h, s2) = series_estimates(&m, 8, 8192, 16, 8, 2).unwrap();
        assert!(
            (h.value - exact).abs() <= 4.0 * h.stderr,
            "{} vs {exact} ± {}",
            h.value,
            h.stderr
        );
        // X given Y is an iid flip sequence, so the varentropy is the flip's
        let (_, memoryless) = memoryless_analytic(&presets::dsc_memoryless(0.11)).unwrap();
        assert!((s2.value - memoryless).abs() <= 4.0 * s2.stderr + 0.01);
    }

    #[test]
    fn enumeration_guard() {
        let m = presets::uniform_pair(2, 2);
        assert!(matches!(
            conditional_entropy_exact(&m, 12),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }
}
