//! First-order convergence of `d_n / n` and LZ-SI token rates.

use serde::{Deserialize, Serialize};

use crate::density::{conditional_info_density, DensityTracker};
use crate::error::{Error, Result};
use crate::lzsi::lzsi_encode;
use crate::mc::replicate;
use crate::model::PairModel;
use crate::report::{num, row, ExperimentReport};
use crate::rng::{derive_seed, replica_rng};
use crate::sample::{sample_two_sided_replica, PairStream};
use crate::stats;

use super::Reference;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstOrderConfig {
    pub n_grid: Vec<usize>,
    pub paths: usize,
    /// `|median(d_n / n) - h|` allowed at the largest `n`.
    pub tolerance: f64,
    /// Block lengths for the LZ-SI rate comparison; empty skips it.
    pub lzsi_n: Vec<usize>,
    pub lzsi_m: usize,
}

impl Default for FirstOrderConfig {
    fn default() -> Self {
        FirstOrderConfig {
            n_grid: vec![64, 256, 1024, 4096],
            paths: 64,
            tolerance: 0.01,
            lzsi_n: vec![4, 8],
            lzsi_m: 1 << 16,
        }
    }
}

/// Rate trajectories along `paths` stationary paths, and for each LZ-SI
/// block length the count of samples whose token rate falls below
/// `(d_n - 2 log2 n) / n`, against the budget `paths / n^2`.
pub fn first_order(
    model: &PairModel,
    cfg: &FirstOrderConfig,
    reference: &Reference,
    seed: u64,
) -> Result<ExperimentReport> {
    let mut grid = cfg.n_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() || grid[0] == 0 || cfg.paths < 2 {
        return Err(Error::BadArgument(
            "need a positive n grid and at least two paths".into(),
        ));
    }
    let n_max = *grid.last().expect("nonempty");
    let h = reference.h;
    let rates = replicate(cfg.paths, |r| {
        let mut rng = replica_rng(seed, r);
        let mut tracker = DensityTracker::new(model);
        let mut out = Vec::with_capacity(grid.len());
        for (i, s) in PairStream::new(model, &mut rng).take(n_max).enumerate() {
            let (x, y) = model.split_pair(s);
            let d = tracker.push(x, y)?;
            if grid.binary_search(&(i + 1)).is_ok() {
                out.push(d / (i + 1) as f64);
            }
        }
        Ok(out)
    })?;

    let mut rep = ExperimentReport::new("first_order", model.hash(), seed);
    rep.param("n_grid", grid.clone())
        .param("paths", cfg.paths)
        .param_f64("tolerance", cfg.tolerance)
        .param("lzsi_n", cfg.lzsi_n.clone())
        .param("lzsi_m", cfg.lzsi_m);
    reference.record(&mut rep);
    let mut last_median = f64::NAN;
    for (j, &n) in grid.iter().enumerate() {
        let v: Vec<f64> = rates.iter().map(|p| p[j]).collect();
        let dev: Vec<f64> = v.iter().map(|r| (r - h).abs()).collect();
        last_median = stats::median(&v);
        rep.push_row(
            "decay",
            row([
                ("n", n.into()),
                ("median_rate", num(last_median)),
                ("median_abs_deviation", num(stats::median(&dev))),
                ("sup_deviation", num(dev.iter().copied().fold(0.0, f64::max))),
            ]),
        );
    }
    let dev = (last_median - h).abs();
    rep.stat("median_rate_at_n_max", last_median);
    rep.verdict(
        "first_order_median_rate",
        dev <= cfg.tolerance,
        num(dev),
        num(cfg.tolerance),
        "|median(d_n/n) - h| at the largest n",
    );

    let lz_seed = derive_seed(seed, "lzsi");
    for &n in &cfg.lzsi_n {
        if n == 0 || cfg.lzsi_m < model.order() {
            return Err(Error::BadArgument("LZ-SI needs n >= 1 and m >= model order".into()));
        }
        let obs = replicate(cfg.paths, |r| {
            let s = sample_two_sided_replica(model, cfg.lzsi_m, n, lz_seed, r)?;
            let token = lzsi_encode(&s)?;
            let d = conditional_info_density(model, &s.present_x, &s.present_y)?;
            Ok((token.bit_len(model.x_size()) as f64, d, token.is_escape()))
        })?;
        let nf = n as f64;
        let slack = 2.0 * nf.log2();
        let kept: Vec<&(f64, f64, bool)> = obs.iter().filter(|o| !o.2).collect();
        let violations = kept.iter().filter(|o| o.0 < o.1 - slack).count();
        let expected = kept.len() as f64 / (nf * nf);
        let budget = (expected + 3.0 * expected.sqrt()).ceil();
        let token_rates: Vec<f64> = obs.iter().map(|o| o.0 / nf).collect();
        rep.push_row(
            "lzsi",
            row([
                ("n", n.into()),
                ("mean_token_rate", num(stats::mean(&token_rates))),
                ("escapes", (obs.len() - kept.len()).into()),
                ("violations", violations.into()),
                ("budget", num(budget)),
            ]),
        );
        rep.verdict(
            &format!("lzsi_rate_lower_bound_n{n}"),
            violations as f64 <= budget,
            violations.into(),
            num(budget),
            "samples with token bits < d_n - 2 log2 n",
        );
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn uniform_rate_is_exactly_one() {
        let m = presets::uniform_pair(2, 2);
        let cfg = FirstOrderConfig {
            n_grid: vec![16, 64],
            paths: 4,
            lzsi_n: vec![],
            ..Default::default()
        };
        let rep = first_order(&m, &cfg, &Reference::supplied(1.0, 0.0), 1).unwrap();
        assert_eq!(rep.stat_f64("median_rate_at_n_max"), Some(1.0));
        assert!(rep.passed());
    }

    #[test]
    fn dsc_rate_converges() {
        let m = presets::dsc_memoryless(0.11);
        let cfg = FirstOrderConfig {
            paths: 32,
            ..Default::default()
        };
        let rep = first_order(&m, &cfg, &Reference::supplied(0.4999159575, 0.8907), 2).unwrap();
        assert!(rep.passed(), "{}", rep.to_json());
    }
}
