//! Seeded Monte Carlo experiments producing [`ExperimentReport`]s.
//!
//! Every experiment takes the entropy rate `h` and varentropy `sigma^2` as
//! an explicit [`Reference`], records it in the report parameters, and is
//! deterministic in its inputs and seed.

mod clt;
mod converse;
mod dispersion;
mod first_order;
mod lil;
mod lzsi_rate;
mod recurrence_clt;

pub use clt::{clt_codelength, clt_density, ks_threshold, zero_fluctuation, Centering};
pub use converse::{converse, converse_bound, CodelengthSample};
pub use dispersion::{dispersion, DispersionMode};
pub use first_order::{first_order, FirstOrderConfig};
pub use lil::{lil, LilConfig};
pub use lzsi_rate::{lzsi_experiment, LzsiConfig};
pub use recurrence_clt::{recurrence_clt, RecurrenceCltConfig};

use serde::{Deserialize, Serialize};

use crate::entropy::{
    conditional_entropy_exact, conditional_entropy_mc, entropy_rate_exact, memoryless_analytic, series_estimates,
    Method, ENTROPY_ENUMERATION_LIMIT,
};
use crate::enumerate::count_strings;
use crate::error::{Error, Result};
use crate::model::{ModelKind, PairModel};
use crate::report::{num, ExperimentReport};

/// Variances at or below this are treated as zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Entropy rate and varentropy used by an experiment, with their origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub h: f64,
    pub h_stderr: f64,
    pub h_method: Method,
    pub sigma2: f64,
    pub sigma2_stderr: f64,
    pub sigma2_method: Method,
}

/// Effort of the Monte Carlo route in [`estimate_reference`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesEffort {
    pub paths: usize,
    pub path_len: usize,
    pub max_lag: usize,
    pub window: usize,
}

impl Default for SeriesEffort {
    fn default() -> Self {
        SeriesEffort {
            paths: 64,
            path_len: 1 << 15,
            max_lag: 64,
            window: 64,
        }
    }
}

impl Reference {
    pub fn supplied(h: f64, sigma2: f64) -> Self {
        Reference {
            h,
            h_stderr: 0.0,
            h_method: Method::Supplied,
            sigma2,
            sigma2_stderr: 0.0,
            sigma2_method: Method::Supplied,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.max(0.0).sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma2 <= DEGENERATE_VARIANCE
    }

    pub fn record(&self, rep: &mut ExperimentReport) {
        rep.param_f64("h", self.h)
            .param_f64("h_stderr", self.h_stderr)
            .param(
                "h_method",
                serde_json::to_value(self.h_method).expect("enum serializes"),
            )
            .param_f64("sigma2", self.sigma2)
            .param_f64("sigma2_stderr", self.sigma2_stderr)
            .param(
                "sigma2_method",
                serde_json::to_value(self.sigma2_method).expect("enum serializes"),
            );
    }
}

/// Closed forms where available, otherwise the autocovariance series.
pub fn estimate_reference(model: &PairModel, effort: SeriesEffort, seed: u64) -> Result<Reference> {
    if model.kind() == ModelKind::Memoryless {
        let (h, sigma2) = memoryless_analytic(model)?;
        return Ok(Reference {
            h,
            h_stderr: 0.0,
            h_method: Method::AnalyticMemoryless,
            sigma2,
            sigma2_stderr: 0.0,
            sigma2_method: Method::AnalyticMemoryless,
        });
    }
    let window = effort.window.max(model.order());
    let (h, s2) = series_estimates(model, effort.paths, effort.path_len, effort.max_lag, window, seed)?;
    let mut reference = Reference {
        h: h.value,
        h_stderr: h.stderr,
        h_method: Method::Series,
        sigma2: s2.value,
        sigma2_stderr: s2.stderr,
        sigma2_method: Method::Series,
    };
    if let Some(exact) = entropy_rate_exact(model)? {
        reference.h = exact.value;
        reference.h_stderr = 0.0;
        reference.h_method = exact.method;
    }
    Ok(reference)
}

/// `H(X_1^n | Y_1^n)` for centering: `n h` for memoryless models, exact
/// enumeration when small enough, otherwise a Monte Carlo mean on its own
/// seed. Returns `(value, stderr, method)`.
pub fn block_entropy(
    model: &PairModel,
    n: usize,
    reference: &Reference,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64, Method)> {
    if model.kind() == ModelKind::Memoryless && reference.h_method == Method::AnalyticMemoryless {
        return Ok((n as f64 * reference.h, 0.0, Method::AnalyticMemoryless));
    }
    if count_strings(model.pairs(), n) <= ENTROPY_ENUMERATION_LIMIT {
        let e = conditional_entropy_exact(model, n)?;
        return Ok((e.value, 0.0, Method::ExactEnum));
    }
    let e = conditional_entropy_mc(model, n, samples.max(2), seed)?;
    Ok((e.value, e.stderr, Method::McDirect))
}

pub(crate) fn require_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::ZeroProbability)
    }
}

pub(crate) fn require_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        Err(Error::BadArgument("at least two samples are needed".into()))
    } else {
        Ok(())
    }
}

pub(crate) fn record_distribution(rep: &mut ExperimentReport, prefix: &str, z: &[f64], sd: f64) {
    use crate::stats;
    rep.stat(&format!("{prefix}_mean"), stats::mean(z))
        .stat(&format!("{prefix}_stderr"), stats::std_err(z))
        .stat(&format!("{prefix}_variance"), stats::variance(z))
        .stat(&format!("{prefix}_skewness"), stats::skewness(z));
    if sd > 0.0 {
        rep.stat(&format!("{prefix}_ks"), stats::ks_normal(z, sd))
            .stat(&format!("{prefix}_ks_midpoint"), stats::ks_normal_midpoint(z, sd));
    } else {
        rep.stat_value(&format!("{prefix}_ks"), num(f64::NAN));
    }
}
