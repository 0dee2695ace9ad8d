//! LZ-SI roundtrip and rate experiment.

use serde::{Deserialize, Serialize};

use crate::density::conditional_info_density;
use crate::error::{Error, Result};
use crate::lzsi::{LzsiStream, LzsiToken};
use crate::mc::replicate;
use crate::model::PairModel;
use crate::report::{num, ExperimentReport};
use crate::sample::sample_two_sided_replica;
use crate::stats;

use super::{require_samples, Reference};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LzsiConfig {
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    /// When set, also require `|mean rate - h| <= tolerance` (bits/symbol).
    pub rate_tolerance: Option<f64>,
}

struct Cycle {
    ok: bool,
    bits: u64,
    density: f64,
    log_r: Option<f64>,
}

/// Encode each sample's present block to bytes, parse and decode it, and
/// compare with the original.
pub fn lzsi_experiment(
    model: &PairModel,
    cfg: &LzsiConfig,
    reference: &Reference,
    seed: u64,
) -> Result<ExperimentReport> {
    require_samples(cfg.samples)?;
    if cfg.m < model.order() || cfg.n == 0 {
        return Err(Error::BadArgument("need n >= 1 and m >= model order".into()));
    }
    let cycles = replicate(cfg.samples, |r| {
        let s = sample_two_sided_replica(model, cfg.m, cfg.n, seed, r)?;
        let (xs, ys) = (s.concat_x(), s.concat_y());
        let stream = LzsiStream::encode(model, &xs, &ys, cfg.m, cfg.n, seed)?;
        let bytes = stream.to_bytes(model.x_size());
        let parsed = LzsiStream::from_bytes(&bytes, model)?;
        let decoded = parsed.decode(model, &s.past_x, &ys)?;
        let token = &stream.tokens[0];
        Ok(Cycle {
            ok: decoded == s.present_x,
            bits: token.bit_len(model.x_size()),
            density: conditional_info_density(model, &s.present_x, &s.present_y)?,
            log_r: match token {
                LzsiToken::Recurrence(v) => Some((*v as f64).log2()),
                LzsiToken::Escape(_) => None,
            },
        })
    })?;
    let n = cfg.n as f64;
    let mismatches = cycles.iter().filter(|c| !c.ok).count();
    let rates: Vec<f64> = cycles.iter().map(|c| c.bits as f64 / n).collect();
    let dens: Vec<f64> = cycles.iter().map(|c| c.density / n).collect();
    let log_r: Vec<f64> = cycles.iter().filter_map(|c| c.log_r).collect();
    let escapes = cycles.len() - log_r.len();
    let mean_rate = stats::mean(&rates);

    let mut rep = ExperimentReport::new("lzsi", model.hash(), seed);
    rep.param("n", cfg.n).param("m", cfg.m).param("samples", cfg.samples);
    if let Some(t) = cfg.rate_tolerance {
        rep.param_f64("rate_tolerance", t);
    }
    reference.record(&mut rep);
    rep.stat("mismatches", mismatches as f64)
        .stat("escape_fraction", escapes as f64 / cycles.len() as f64)
        .stat("mean_rate", mean_rate)
        .stat("rate_stderr", stats::std_err(&rates))
        .stat("mean_density_rate", stats::mean(&dens));
    if !log_r.is_empty() {
        rep.stat("mean_log2_r", stats::mean(&log_r));
    }
    rep.verdict(
        "lzsi_roundtrip",
        mismatches == 0,
        mismatches.into(),
        0.into(),
        "decoded present differs from the original",
    );
    if let Some(tol) = cfg.rate_tolerance {
        let dev = (mean_rate - reference.h).abs();
        rep.verdict(
            "lzsi_rate",
            dev <= tol,
            num(dev),
            num(tol),
            "|mean token bits / n - h|, escapes included",
        );
    }
    Ok(rep)
}
