//! Gaussian fluctuations of log conditional recurrence times.

use serde::{Deserialize, Serialize};

use crate::density::conditional_info_density;
use crate::error::{Error, Result};
use crate::mc::{replicate, stationary_strings};
use crate::model::PairModel;
use crate::recurrence::{conditional_scan, KacTarget};
use crate::report::{num, ExperimentReport};
use crate::rng::{derive_seed, replica_rng};
use crate::stats;

use super::clt::ks_threshold;
use super::{block_entropy, record_distribution, require_samples, Reference};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceCltConfig {
    pub n: usize,
    pub samples: usize,
    pub m: usize,
    /// KS threshold; `None` uses the critical value plus the bias allowance.
    pub ks_threshold: Option<f64>,
    /// Largest tolerated fraction of truncated replicas.
    pub max_truncation: f64,
    /// Replicas evaluated between truncation checks.
    pub chunk: usize,
}

impl Default for RecurrenceCltConfig {
    fn default() -> Self {
        RecurrenceCltConfig {
            n: 256,
            samples: 4000,
            m: 1 << 20,
            ks_threshold: Some(0.05),
            max_truncation: 0.01,
            chunk: 64,
        }
    }
}

struct Replica {
    density: f64,
    log_r: Option<f64>,
}

/// For each replica the present is a stationary string and the past is
/// generated backwards given it, so only the part of the past that is
/// actually scanned is ever drawn. The run stops early once more replicas
/// are truncated than the tolerated fraction allows.
pub fn recurrence_clt(
    model: &PairModel,
    cfg: &RecurrenceCltConfig,
    reference: &Reference,
    seed: u64,
) -> Result<ExperimentReport> {
    require_samples(cfg.samples)?;
    if cfg.n == 0 || cfg.m == 0 || cfg.chunk == 0 {
        return Err(Error::BadArgument("n, m and chunk must be positive".into()));
    }
    let allowed = (cfg.max_truncation * cfg.samples as f64).floor() as usize;
    let past_seed = derive_seed(seed, "past");
    let mut done: Vec<Replica> = Vec::with_capacity(cfg.samples);
    let mut truncated = 0usize;
    let mut aborted = false;
    while done.len() < cfg.samples {
        let start = done.len();
        let count = cfg.chunk.min(cfg.samples - start);
        let batch = replicate(count, |i| {
            let r = (start as u64) + i;
            let (x, y) = stationary_strings(model, cfg.n, seed, r);
            let density = conditional_info_density(model, &x, &y)?;
            let target = KacTarget::new(model, &x, &y)?;
            let mut tl = target.timeline(model, cfg.m, replica_rng(past_seed, r));
            let log_r = conditional_scan(&mut tl)?.0.map(|v| (v as f64).log2());
            Ok(Replica { density, log_r })
        })?;
        truncated += batch.iter().filter(|b| b.log_r.is_none()).count();
        done.extend(batch);
        if truncated > allowed {
            aborted = done.len() < cfg.samples;
            break;
        }
    }

    let n = cfg.n as f64;
    let root = n.sqrt();
    let kept: Vec<&Replica> = done.iter().filter(|b| b.log_r.is_some()).collect();
    let log_r: Vec<f64> = kept.iter().map(|b| b.log_r.expect("kept")).collect();
    let dens: Vec<f64> = kept.iter().map(|b| b.density).collect();
    let trunc_frac = truncated as f64 / done.len() as f64;

    let mut rep = ExperimentReport::new("recurrence_clt", model.hash(), seed);
    rep.param("n", cfg.n)
        .param("samples", cfg.samples)
        .param("m", cfg.m)
        .param_f64("max_truncation", cfg.max_truncation)
        .param("chunk", cfg.chunk);
    reference.record(&mut rep);
    rep.stat("replicas_run", done.len() as f64)
        .stat("truncated", truncated as f64)
        .stat("truncation_fraction", trunc_frac)
        .stat_value("aborted", aborted);
    rep.verdict(
        "recurrence_truncation",
        truncated <= allowed,
        num(trunc_frac),
        num(cfg.max_truncation),
        if aborted {
            "run stopped early: too many truncated replicas"
        } else {
            ""
        },
    );

    let threshold = cfg.ks_threshold.unwrap_or_else(|| ks_threshold(cfg.samples));
    if log_r.len() >= 2 {
        let (hn, _, _) = block_entropy(model, cfg.n, reference, cfg.samples, derive_seed(seed, "centering"))?;
        let z: Vec<f64> = log_r.iter().map(|v| (v - hn) / root).collect();
        record_distribution(&mut rep, "z_log_r", &z, reference.sigma());
        rep.stat("block_entropy", hn)
            .stat("correlation_log_r_density", stats::correlation(&log_r, &dens))
            .stat("mean_log_r", stats::mean(&log_r))
            .stat("mean_density", stats::mean(&dens));
        let budget = 2.0 * n.log2();
        let close = log_r
            .iter()
            .zip(&dens)
            .filter(|(l, d)| (**l - **d).abs() <= budget)
            .count();
        let frac_close = close as f64 / log_r.len() as f64;
        rep.stat("fraction_within_2log2n", frac_close);
        rep.verdict(
            "recurrence_tracks_density",
            frac_close >= 0.99,
            num(frac_close),
            num(0.99),
            "fraction with |log2 R + log2 P(x|y)| <= 2 log2 n",
        );
        if !reference.is_degenerate() {
            let ks = stats::ks_normal(&z, reference.sigma());
            rep.verdict(
                "recurrence_clt_ks",
                ks <= threshold && !aborted,
                num(ks),
                num(threshold),
                "KS distance of (log2 R - H) / sqrt(n) to N(0, sigma^2)",
            );
        }
    } else if !reference.is_degenerate() {
        rep.verdict(
            "recurrence_clt_ks",
            false,
            num(f64::NAN),
            num(threshold),
            "too few untruncated replicas to form a distribution",
        );
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn copy_model_recurs_immediately() {
        let m = presets::copy_model();
        let cfg = RecurrenceCltConfig {
            n: 8,
            samples: 200,
            m: 1 << 12,
            ..Default::default()
        };
        let rep = recurrence_clt(&m, &cfg, &Reference::supplied(0.0, 0.0), 1).unwrap();
        assert_eq!(rep.stat_f64("mean_log_r"), Some(0.0));
        assert_eq!(rep.stat_f64("mean_density"), Some(0.0));
        assert!(rep.passed(), "{}", rep.to_json());
    }

    #[test]
    fn heavy_truncation_aborts_early() {
        let m = presets::dsc_memoryless(0.11);
        let cfg = RecurrenceCltConfig {
            n: 64,
            samples: 1000,
            m: 1 << 10,
            chunk: 16,
            ..Default::default()
        };
        let rep = recurrence_clt(&m, &cfg, &Reference::supplied(0.5, 0.89), 1).unwrap();
        assert!(!rep.passed());
        assert!(rep.stat_f64("replicas_run").unwrap() < 1000.0);
        assert!(!rep.verdict_for("recurrence_truncation").unwrap().passed);
    }

    #[test]
    fn low_entropy_model_tracks_density() {
        // Sticky side information and rare flips keep recurrences short.
        let m = presets::dsc_markov(0.02, 0.02);
        let cfg = RecurrenceCltConfig {
            n: 16,
            samples: 400,
            m: 1 << 20,
            ..Default::default()
        };
        let rep = recurrence_clt(&m, &cfg, &Reference::supplied(0.1414, 0.62), 2).unwrap();
        assert!(
            rep.verdict_for("recurrence_truncation").unwrap().passed,
            "{}",
            rep.to_json()
        );
        assert!(
            rep.verdict_for("recurrence_tracks_density").unwrap().passed,
            "{}",
            rep.to_json()
        );
    }
}
