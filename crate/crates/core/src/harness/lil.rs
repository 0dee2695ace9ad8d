//! Iterated-logarithm envelope of the centered density.

use serde::{Deserialize, Serialize};

use crate::density::DensityTracker;
use crate::error::{Error, Result};
use crate::mc::replicate;
use crate::model::PairModel;
use crate::report::{num, row, ExperimentReport};
use crate::rng::replica_rng;
use crate::sample::PairStream;
use crate::stats;

use super::Reference;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LilConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub paths: usize,
    /// Band `[lo sigma, hi sigma]` for the median supremum (mirrored for
    /// the infimum).
    pub band_lo: f64,
    pub band_hi: f64,
    /// Also test that sup W and -inf W have the same law.
    pub check_symmetry: bool,
    /// Grid points per decade for the envelope table.
    pub grid_per_decade: usize,
}

impl Default for LilConfig {
    fn default() -> Self {
        LilConfig {
            n_min: 1000,
            n_max: 1_000_000,
            paths: 64,
            band_lo: 0.6,
            band_hi: 1.4,
            check_symmetry: false,
            grid_per_decade: 10,
        }
    }
}

struct PathSummary {
    sup: f64,
    inf: f64,
    n_at_sup: usize,
    n_at_inf: usize,
    grid: Vec<f64>,
}

fn grid(n_min: usize, n_max: usize, per_decade: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let step = 10f64.powf(1.0 / per_decade.max(1) as f64);
    let mut v = n_min as f64;
    while (v.round() as usize) < n_max {
        let n = v.round() as usize;
        if out.last() != Some(&n) {
            out.push(n);
        }
        v *= step;
    }
    out.push(n_max);
    out
}

/// `W(n) = (d_n - n h) / sqrt(2 n ln ln n)` along `paths` stationary paths;
/// the supremum and infimum over every `n` in `[n_min, n_max]` are
/// compared with the band around `sigma`.
pub fn lil(model: &PairModel, cfg: &LilConfig, reference: &Reference, seed: u64) -> Result<ExperimentReport> {
    if reference.is_degenerate() {
        return Err(Error::DegenerateVariance);
    }
    if cfg.n_min < 16 || cfg.n_max <= cfg.n_min {
        return Err(Error::BadArgument("need 16 <= n_min < n_max".into()));
    }
    if cfg.paths < 2 {
        return Err(Error::BadArgument("at least two paths are needed".into()));
    }
    let points = grid(cfg.n_min, cfg.n_max, cfg.grid_per_decade);
    let h = reference.h;
    let summaries = replicate(cfg.paths, |r| {
        let mut rng = replica_rng(seed, r);
        let mut tracker = DensityTracker::new(model);
        let mut s = PathSummary {
            sup: f64::NEG_INFINITY,
            inf: f64::INFINITY,
            n_at_sup: 0,
            n_at_inf: 0,
            grid: Vec::with_capacity(points.len()),
        };
        let mut next_point = 0;
        for (i, pair) in PairStream::new(model, &mut rng).take(cfg.n_max).enumerate() {
            let n = i + 1;
            let (x, y) = model.split_pair(pair);
            let d = tracker.push(x, y)?;
            if n < cfg.n_min {
                continue;
            }
            let nf = n as f64;
            let w = (d - nf * h) / (2.0 * nf * nf.ln().ln()).sqrt();
            if !w.is_finite() {
                return Err(Error::ZeroProbability);
            }
            if w > s.sup {
                s.sup = w;
                s.n_at_sup = n;
            }
            if w < s.inf {
                s.inf = w;
                s.n_at_inf = n;
            }
            if next_point < points.len() && points[next_point] == n {
                s.grid.push(w);
                next_point += 1;
            }
        }
        Ok(s)
    })?;

    let sigma = reference.sigma();
    let sups: Vec<f64> = summaries.iter().map(|s| s.sup).collect();
    let infs: Vec<f64> = summaries.iter().map(|s| s.inf).collect();
    let neg_infs: Vec<f64> = infs.iter().map(|v| -v).collect();
    let (med_sup, med_inf) = (stats::median(&sups), stats::median(&infs));

    let mut rep = ExperimentReport::new("lil", model.hash(), seed);
    rep.param("n_min", cfg.n_min)
        .param("n_max", cfg.n_max)
        .param("paths", cfg.paths)
        .param_f64("band_lo", cfg.band_lo)
        .param_f64("band_hi", cfg.band_hi)
        .param("check_symmetry", cfg.check_symmetry);
    reference.record(&mut rep);
    rep.stat("sigma", sigma)
        .stat("median_sup", med_sup)
        .stat("median_inf", med_inf)
        .stat("median_sup_over_sigma", med_sup / sigma)
        .stat("median_inf_over_sigma", med_inf / sigma)
        .stat("mean_sup", stats::mean(&sups))
        .stat("mean_inf", stats::mean(&infs));
    for (i, s) in summaries.iter().enumerate() {
        rep.push_row(
            "paths",
            row([
                ("path", i.into()),
                ("sup", num(s.sup)),
                ("n_at_sup", s.n_at_sup.into()),
                ("inf", num(s.inf)),
                ("n_at_inf", s.n_at_inf.into()),
            ]),
        );
    }
    for (j, &n) in points.iter().enumerate() {
        let w: Vec<f64> = summaries.iter().map(|s| s.grid[j]).collect();
        rep.push_row(
            "envelope",
            row([
                ("n", n.into()),
                ("w_median", num(stats::median(&w))),
                ("w_q10", num(stats::quantile(&w, 0.1))),
                ("w_q90", num(stats::quantile(&w, 0.9))),
                ("w_min", num(stats::quantile(&w, 0.0))),
                ("w_max", num(stats::quantile(&w, 1.0))),
            ]),
        );
    }
    let (lo, hi) = (cfg.band_lo * sigma, cfg.band_hi * sigma);
    rep.verdict(
        "lil_median_sup_in_band",
        (lo..=hi).contains(&med_sup),
        num(med_sup),
        serde_json::json!([num(lo), num(hi)]),
        "qualitative finite-n check",
    );
    rep.verdict(
        "lil_median_inf_in_band",
        (-hi..=-lo).contains(&med_inf),
        num(med_inf),
        serde_json::json!([num(-hi), num(-lo)]),
        "qualitative finite-n check",
    );
    if cfg.check_symmetry {
        let p = stats::mann_whitney_p(&sups, &neg_infs);
        rep.stat("symmetry_p_value", p);
        rep.verdict(
            "lil_sign_symmetry",
            p >= 0.05,
            num(p),
            num(0.05),
            "Mann-Whitney test of sup W against -inf W",
        );
    }
    Ok(rep)
}
