//! Per-symbol variance of codelengths against the varentropy.

use serde::{Deserialize, Serialize};

use crate::coder::{optimal_length_moments, MOMENT_LIMIT};
use crate::enumerate::count_strings;
use crate::error::{Error, Result};
use crate::model::PairModel;
use crate::report::{num, ExperimentReport};
use crate::stats;

use super::converse::{codelength_samples, optimal_is_tractable};
use super::{require_finite, require_samples, Reference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionMode {
    /// Exact moments when enumerable, otherwise sampled prefix lengths.
    #[default]
    Auto,
    /// Exact optimal-length moments over every `(x, y)`.
    Exact,
    /// Sampled optimal lengths.
    Sampled,
    /// Sampled prefix lengths `ceil(d_n)` as a stand-in.
    Prefix,
}

/// `(1/n) Var[l]` against `sigma^2`; passes when within `rel_tol` of it
/// (or exactly zero when `sigma^2` is zero).
pub fn dispersion(
    model: &PairModel,
    n: usize,
    samples: usize,
    mode: DispersionMode,
    rel_tol: f64,
    reference: &Reference,
    seed: u64,
) -> Result<ExperimentReport> {
    let exact_ok = count_strings(model.pairs(), n) <= MOMENT_LIMIT;
    let mode = match mode {
        DispersionMode::Auto if exact_ok => DispersionMode::Exact,
        DispersionMode::Auto => DispersionMode::Prefix,
        DispersionMode::Sampled if !optimal_is_tractable(model, n) => {
            return Err(Error::EnumerationTooLarge {
                size: count_strings(model.x_size(), n),
                limit: super::converse::SAMPLED_OPTIMAL_LIMIT,
            })
        }
        m => m,
    };
    let nf = n as f64;
    let mut rep = ExperimentReport::new("dispersion", model.hash(), seed);
    rep.param("n", n)
        .param("mode", serde_json::to_value(mode).expect("enum serializes"))
        .param("prefix_stand_in", mode == DispersionMode::Prefix)
        .param_f64("rel_tol", rel_tol);
    reference.record(&mut rep);

    let (value, stderr) = match mode {
        DispersionMode::Exact => {
            let mo = optimal_length_moments(model, n)?;
            rep.stat("mean_length", mo.mean_length)
                .stat("mean_density", mo.mean_density)
                .stat("density_variance_per_symbol", mo.var_density / nf)
                .stat("max_length_minus_density", mo.max_excess);
            (mo.var_length / nf, 0.0)
        }
        DispersionMode::Sampled | DispersionMode::Prefix => {
            require_samples(samples)?;
            rep.param("samples", samples);
            let optimal = mode == DispersionMode::Sampled;
            let s = codelength_samples(model, n, samples, optimal, seed)?;
            let d: Vec<f64> = s.iter().map(|c| c.density).collect();
            require_finite(&d)?;
            let l: Vec<f64> = s
                .iter()
                .map(|c| if optimal { c.optimal.expect("computed") } else { c.prefix } as f64)
                .collect();
            rep.stat("mean_length", stats::mean(&l))
                .stat("mean_density", stats::mean(&d))
                .stat("density_variance_per_symbol", stats::variance(&d) / nf);
            (stats::variance(&l) / nf, stats::variance_std_err(&l) / nf)
        }
        DispersionMode::Auto => unreachable!("resolved above"),
    };
    rep.stat("dispersion", value)
        .stat("dispersion_stderr", stderr)
        .stat("ci95_low", value - 1.96 * stderr)
        .stat("ci95_high", value + 1.96 * stderr)
        .stat(
            "relative_error",
            if reference.sigma2 > 0.0 {
                (value - reference.sigma2) / reference.sigma2
            } else {
                f64::NAN
            },
        );
    if reference.is_degenerate() {
        rep.verdict(
            "dispersion_zero",
            value.abs() <= 1e-12,
            num(value),
            num(0.0),
            "(1/n) Var[l] for a zero-varentropy model",
        );
    } else {
        let dev = (value - reference.sigma2).abs();
        let tol = rel_tol * reference.sigma2;
        rep.verdict(
            "dispersion_matches_varentropy",
            dev <= tol,
            num(dev),
            num(tol),
            "|(1/n) Var[l] - sigma^2|",
        );
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn uniform_model_has_zero_dispersion() {
        let m = presets::uniform_pair(2, 2);
        let rep = dispersion(&m, 6, 0, DispersionMode::Auto, 0.05, &Reference::supplied(1.0, 0.0), 1).unwrap();
        assert_eq!(rep.params["mode"], "exact");
        // lengths of a one-to-one code over 64 equally likely strings still vary
        assert!(rep.stat_f64("dispersion").unwrap() > 0.0);
        let rep = dispersion(
            &m,
            64,
            100,
            DispersionMode::Prefix,
            0.05,
            &Reference::supplied(1.0, 0.0),
            1,
        )
        .unwrap();
        assert!(rep.passed(), "{}", rep.to_json());
        assert_eq!(rep.stat_f64("dispersion"), Some(0.0));
    }

    #[test]
    fn sampled_mode_refuses_large_alphabets() {
        let m = presets::dsc_memoryless(0.11);
        let err = dispersion(
            &m,
            64,
            10,
            DispersionMode::Sampled,
            0.05,
            &Reference::supplied(0.5, 0.89),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EnumerationTooLarge { .. }));
    }
}
