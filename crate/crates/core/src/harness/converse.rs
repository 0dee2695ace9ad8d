//! Codelength samples and the converse frequency bound.

use serde::{Deserialize, Serialize};

use crate::coder::{optimal_codelength, prefix_length_from_density};
use crate::density::conditional_info_density;
use crate::enumerate::count_strings;
use crate::error::{Error, Result};
use crate::mc::{replicate, stationary_strings};
use crate::model::PairModel;
use crate::report::{num, row, ExperimentReport};

use super::require_samples;

/// Largest `|X|^n` for which sampled experiments compute exact optimal
/// lengths; each sample enumerates that many conditional probabilities.
pub const SAMPLED_OPTIMAL_LIMIT: f64 = 4096.0;

/// Lengths of one stationary sample under the optimal and prefix codes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodelengthSample {
    pub density: f64,
    pub optimal: Option<u32>,
    pub prefix: u32,
}

pub(crate) fn codelength_samples(
    model: &PairModel,
    n: usize,
    samples: usize,
    with_optimal: bool,
    seed: u64,
) -> Result<Vec<CodelengthSample>> {
    replicate(samples, |r| {
        let (x, y) = stationary_strings(model, n, seed, r);
        let density = conditional_info_density(model, &x, &y)?;
        let optimal = if with_optimal {
            Some(optimal_codelength(model, &x, &y)?)
        } else {
            None
        };
        Ok(CodelengthSample {
            density,
            optimal,
            prefix: prefix_length_from_density(density)?,
        })
    })
}

pub(crate) fn optimal_is_tractable(model: &PairModel, n: usize) -> bool {
    count_strings(model.x_size(), n) <= SAMPLED_OPTIMAL_LIMIT
}

/// `2^(log2 n - tau) (floor(log2 |X|) + 1)`.
pub fn converse_bound(n: usize, tau: f64, x_size: usize) -> f64 {
    ((n as f64).log2() - tau).exp2() * ((x_size as f64).log2().floor() + 1.0)
}

/// Fraction of samples whose length undercuts the density by `tau` bits.
pub(crate) fn undercut_fraction(lengths: &[f64], densities: &[f64], tau: f64) -> f64 {
    let hits = lengths.iter().zip(densities).filter(|(l, d)| **l <= **d - tau).count();
    hits as f64 / lengths.len() as f64
}

pub(crate) fn record_converse(
    rep: &mut ExperimentReport,
    code: &str,
    n: usize,
    taus: &[f64],
    lengths: &[f64],
    densities: &[f64],
    x_size: usize,
) {
    for &tau in taus {
        let frac = undercut_fraction(lengths, densities, tau);
        let bound = converse_bound(n, tau, x_size);
        rep.push_row(
            "converse",
            row([
                ("code", code.into()),
                ("n", n.into()),
                ("tau", num(tau)),
                ("fraction", num(frac)),
                ("bound", num(bound)),
            ]),
        );
        rep.verdict(
            &format!("converse_{code}_n{n}_tau{tau}"),
            frac <= bound,
            num(frac),
            num(bound),
            "fraction of samples with length <= d_n - tau",
        );
    }
}

/// For each `n` and `tau`, compare the fraction of samples with
/// `l <= d_n - tau` to the bound. Prefix lengths are always checked; exact
/// optimal lengths are added where enumeration is cheap.
pub fn converse(model: &PairModel, ns: &[usize], taus: &[f64], samples: usize, seed: u64) -> Result<ExperimentReport> {
    require_samples(samples)?;
    if ns.is_empty() || taus.is_empty() {
        return Err(Error::BadArgument("need at least one n and one tau".into()));
    }
    let mut rep = ExperimentReport::new("converse", model.hash(), seed);
    rep.param("n_grid", ns.to_vec())
        .param("taus", taus.iter().map(|&t| num(t)).collect::<Vec<_>>())
        .param("samples", samples);
    for &n in ns {
        let with_optimal = optimal_is_tractable(model, n);
        let s = codelength_samples(
            model,
            n,
            samples,
            with_optimal,
            crate::rng::derive_seed(seed, &format!("n{n}")),
        )?;
        let d: Vec<f64> = s.iter().map(|c| c.density).collect();
        super::require_finite(&d)?;
        let prefix: Vec<f64> = s.iter().map(|c| c.prefix as f64).collect();
        record_converse(&mut rep, "prefix", n, taus, &prefix, &d, model.x_size());
        if with_optimal {
            let opt: Vec<f64> = s.iter().map(|c| c.optimal.expect("computed") as f64).collect();
            record_converse(&mut rep, "optimal", n, taus, &opt, &d, model.x_size());
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn bound_matches_worked_example() {
        // 2^(3 - 10) * 2
        assert!((converse_bound(8, 10.0, 2) - 0.015625).abs() < 1e-15);
        assert!((converse_bound(64, 8.0, 3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn converse_holds_on_small_run() {
        let rep = converse(&presets::dsc_memoryless(0.11), &[8, 16], &[2.0, 8.0], 2000, 3).unwrap();
        assert!(rep.passed(), "{}", rep.to_json());
        // optimal lengths only at n = 8 (2^16 strings is past the limit)
        assert_eq!(rep.verdicts.len(), 6);
    }
}
