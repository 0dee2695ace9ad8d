//! Central limit behaviour of the density and of codelengths.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::entropy::{conditional_entropy_exact, Method, ENTROPY_ENUMERATION_LIMIT};
use crate::enumerate::count_strings;
use crate::error::{Error, Result};
use crate::mc::sample_densities;
use crate::model::PairModel;
use crate::report::{num, row, ExperimentReport};
use crate::rng::derive_seed;
use crate::stats;

use super::converse::{codelength_samples, optimal_is_tractable, record_converse};
use super::{block_entropy, record_distribution, require_finite, require_samples, Reference};

/// Allowance for finite-n model bias added to the KS critical value.
pub const KS_BIAS_ALLOWANCE: f64 = 0.01;
/// Spread of `d_n` accepted as "deterministic" in bits.
pub const ZERO_SPREAD_TOLERANCE: f64 = 1e-9;

/// What `Z_n` is centered at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// `H(X_1^n | Y_1^n)`.
    #[default]
    Block,
    /// `n h`.
    Rate,
}

pub fn ks_threshold(samples: usize) -> f64 {
    stats::ks_critical_5pct(samples) + KS_BIAS_ALLOWANCE
}

const QUANTILES: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

fn quantile_table(rep: &mut ExperimentReport, z: &[f64], sd: f64) {
    let normal = Normal::new(0.0, sd).ok();
    for q in QUANTILES {
        let expected = normal.map_or(0.0, |d| d.inverse_cdf(q));
        rep.push_row(
            "quantiles",
            row([
                ("q", num(q)),
                ("empirical", num(stats::quantile(z, q))),
                ("normal", num(expected)),
            ]),
        );
    }
}

/// `Z_n = (d_n - c) / sqrt(n)` over `samples` stationary strings, compared
/// with `N(0, sigma^2)` by the Kolmogorov-Smirnov distance. Both centerings
/// are reported; `centering` selects the one the verdict uses.
pub fn clt_density(
    model: &PairModel,
    n: usize,
    samples: usize,
    reference: &Reference,
    centering: Centering,
    seed: u64,
) -> Result<ExperimentReport> {
    require_samples(samples)?;
    if reference.is_degenerate() {
        return Err(Error::DegenerateVariance);
    }
    let d = sample_densities(model, n, samples, seed)?;
    require_finite(&d)?;
    let (hn, hn_se, hn_method) = block_entropy(model, n, reference, samples, derive_seed(seed, "centering"))?;
    let root = (n as f64).sqrt();
    let sd = reference.sigma();
    let z_rate: Vec<f64> = d.iter().map(|v| (v - n as f64 * reference.h) / root).collect();
    let z_block: Vec<f64> = d.iter().map(|v| (v - hn) / root).collect();

    let mut rep = ExperimentReport::new("clt_density", model.hash(), seed);
    rep.param("n", n)
        .param("samples", samples)
        .param("centering", serde_json::to_value(centering).expect("enum serializes"));
    reference.record(&mut rep);
    rep.stat("block_entropy", hn)
        .stat("block_entropy_stderr", hn_se)
        .stat_value(
            "block_entropy_method",
            serde_json::to_value(hn_method).expect("enum serializes"),
        )
        .stat("centering_gap", (hn - n as f64 * reference.h) / root)
        .stat("density_mean", stats::mean(&d));
    record_distribution(&mut rep, "z_rate", &z_rate, sd);
    record_distribution(&mut rep, "z_block", &z_block, sd);
    let z = match centering {
        Centering::Block => &z_block,
        Centering::Rate => &z_rate,
    };
    rep.stat("variance_ratio", stats::variance(z) / reference.sigma2);
    quantile_table(&mut rep, z, sd);

    let ks = stats::ks_normal(z, sd);
    let threshold = ks_threshold(samples);
    rep.verdict(
        "clt_density_ks",
        ks <= threshold,
        num(ks),
        num(threshold),
        "KS distance of Z_n to N(0, sigma^2)",
    );
    if hn_method != Method::McDirect {
        let (m, se) = (stats::mean(&z_block), stats::std_err(&z_block));
        rep.verdict(
            "clt_density_centering",
            m.abs() <= 3.0 * se,
            num(m.abs()),
            num(3.0 * se),
            "|mean Z_n| with exact block-entropy centering",
        );
    }
    Ok(rep)
}

/// For models with zero varentropy: `d_n` must be the same for every
/// sample and equal to `H(X_1^n | Y_1^n)`.
pub fn zero_fluctuation(model: &PairModel, n: usize, samples: usize, seed: u64) -> Result<ExperimentReport> {
    require_samples(samples)?;
    let d = sample_densities(model, n, samples, seed)?;
    require_finite(&d)?;
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let mean = stats::mean(&d);
    let root = (n as f64).sqrt();
    let z_max = d.iter().map(|v| ((v - mean) / root).abs()).fold(0.0, f64::max);

    let mut rep = ExperimentReport::new("zero_fluctuation", model.hash(), seed);
    rep.param("n", n).param("samples", samples);
    rep.stat("density_min", lo)
        .stat("density_max", hi)
        .stat("spread", spread)
        .stat("variance", stats::variance(&d))
        .stat("z_max_abs", z_max);
    rep.verdict(
        "zero_varentropy_deterministic",
        spread <= ZERO_SPREAD_TOLERANCE,
        num(spread),
        num(ZERO_SPREAD_TOLERANCE),
        "max d_n - min d_n over samples",
    );
    if count_strings(model.pairs(), n) <= ENTROPY_ENUMERATION_LIMIT {
        let h = conditional_entropy_exact(model, n)?.value;
        let gap = (mean - h).abs();
        rep.stat("block_entropy", h);
        rep.verdict(
            "zero_varentropy_equals_entropy",
            gap <= ZERO_SPREAD_TOLERANCE,
            num(gap),
            num(ZERO_SPREAD_TOLERANCE),
            "|d_n - H(X_1^n|Y_1^n)|",
        );
    }
    Ok(rep)
}

/// Distribution of `(l - H(X_1^n|Y_1^n)) / sqrt(n)` for the optimal code
/// (when enumerable) or the prefix code, with the pointwise and converse
/// checks relating lengths to the density.
pub fn clt_codelength(
    model: &PairModel,
    n: usize,
    samples: usize,
    reference: &Reference,
    taus: &[f64],
    seed: u64,
) -> Result<ExperimentReport> {
    require_samples(samples)?;
    let exact = optimal_is_tractable(model, n);
    let s = codelength_samples(model, n, samples, exact, seed)?;
    let d: Vec<f64> = s.iter().map(|c| c.density).collect();
    require_finite(&d)?;
    let lengths: Vec<f64> = if exact {
        s.iter().map(|c| c.optimal.expect("computed") as f64).collect()
    } else {
        s.iter().map(|c| c.prefix as f64).collect()
    };
    let (hn, _, hn_method) = block_entropy(model, n, reference, samples, derive_seed(seed, "centering"))?;
    let root = (n as f64).sqrt();
    let z: Vec<f64> = lengths.iter().map(|l| (l - hn) / root).collect();
    let code = if exact { "optimal" } else { "prefix" };

    let mut rep = ExperimentReport::new("clt_codelength", model.hash(), seed);
    rep.param("n", n)
        .param("samples", samples)
        .param("code", code)
        .param("prefix_stand_in", !exact)
        .param("taus", taus.iter().map(|&t| num(t)).collect::<Vec<_>>());
    reference.record(&mut rep);
    rep.stat("block_entropy", hn)
        .stat_value(
            "block_entropy_method",
            serde_json::to_value(hn_method).expect("enum serializes"),
        )
        .stat("length_mean", stats::mean(&lengths))
        .stat("density_mean", stats::mean(&d));
    record_distribution(&mut rep, "z_length", &z, reference.sigma());

    let gaps: Vec<f64> = lengths.iter().zip(&d).map(|(l, v)| l - v).collect();
    let max_gap = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    rep.stat("max_length_minus_density", max_gap)
        .stat("min_length_minus_density", min_gap);
    if exact {
        rep.verdict(
            "codelength_pointwise_achievability",
            max_gap <= 1e-9,
            num(max_gap),
            num(0.0),
            "max over samples of l(f*) - d_n",
        );
    } else {
        let worst = gaps.iter().map(|g| g.abs()).fold(0.0, f64::max) / root;
        rep.verdict(
            "codelength_prefix_within_one_bit",
            min_gap >= -1e-9 && max_gap <= 1.0 + 1e-9,
            num(max_gap),
            num(1.0),
            "0 <= l_p - d_n <= 1",
        );
        rep.stat("max_gap_over_root_n", worst);
    }
    record_converse(&mut rep, code, n, taus, &lengths, &d, model.x_size());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{estimate_reference, SeriesEffort};
    use crate::presets;

    #[test]
    fn dsc_density_is_lattice_valued() {
        // d_n of the memoryless DSC depends only on the number of flips, so
        // Z_n lives on a lattice. Against N(0, sigma^2) the population KS
        // distance is 0.0501 at n = 256 and the mid-point one 0.0103
        // (binomial sums, computed independently).
        let m = presets::dsc_memoryless(0.11);
        let r = estimate_reference(&m, SeriesEffort::default(), 0).unwrap();
        let rep = clt_density(&m, 256, 4000, &r, Centering::Block, 4).unwrap();
        assert_eq!(rep.stat_f64("centering_gap"), Some(0.0));
        let ks = rep.stat_f64("z_block_ks").unwrap();
        assert!((ks - 0.0501).abs() < 0.02, "{ks}");
        let mid = rep.stat_f64("z_block_ks_midpoint").unwrap();
        assert!(mid < 0.0103 + 0.03, "{mid}");
        assert!(rep.verdict_for("clt_density_centering").unwrap().passed);
    }

    #[test]
    fn degenerate_models_are_routed() {
        let m = presets::uniform_conditional_memoryless();
        let r = estimate_reference(&m, SeriesEffort::default(), 0).unwrap();
        assert_eq!(
            clt_density(&m, 16, 10, &r, Centering::Block, 1).unwrap_err(),
            Error::DegenerateVariance
        );
        let rep = zero_fluctuation(&m, 8, 100, 1).unwrap();
        assert!(rep.passed(), "{}", rep.to_json());
        assert_eq!(rep.stat_f64("spread"), Some(0.0));
        assert_eq!(rep.stat_f64("variance"), Some(0.0));
    }

    #[test]
    fn codelength_checks_pass_for_both_codes() {
        let m = presets::feedback_order1();
        let r = Reference::supplied(0.8, 0.5);
        let rep = clt_codelength(&m, 8, 500, &r, &[8.0, 12.0], 2).unwrap();
        assert!(rep.passed(), "{}", rep.to_json());
        assert_eq!(rep.params["code"], "optimal");
        let rep = clt_codelength(&m, 64, 500, &r, &[8.0], 2).unwrap();
        assert!(rep.passed(), "{}", rep.to_json());
        assert_eq!(rep.params["code"], "prefix");
    }
}
