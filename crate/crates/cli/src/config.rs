//! Reproducible run configurations. Every report produced by `verify`,
//! `stats` and `lzsi rate` embeds the [`RunConfig`] that made it, and
//! `replay` feeds it back through [`execute`].

use serde::{Deserialize, Serialize};
use serde_json::Value;

use sideinfo_core::entropy::{
    conditional_entropy_exact, conditional_entropy_mc, entropy_rate, memoryless_analytic, varentropy_direct,
    varentropy_series, DEFAULT_MAX_LAG,
};
use sideinfo_core::harness::{
    clt_codelength, clt_density, converse, dispersion, estimate_reference, first_order, lil, lzsi_experiment,
    recurrence_clt, zero_fluctuation, Centering, DispersionMode, FirstOrderConfig, LilConfig, LzsiConfig,
    RecurrenceCltConfig, Reference, SeriesEffort,
};
use sideinfo_core::recurrence::kac_experiment;
use sideinfo_core::report::{num, row};
use sideinfo_core::rng::derive_seed;
use sideinfo_core::{ExperimentReport, PairModel, RateEstimate};

use crate::error::{CliError, CliResult};
use crate::io::load_model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Experiment,
    /// Model file path or `preset:NAME`.
    pub model: String,
    pub model_hash: String,
    pub seed: u64,
    pub reference: ReferenceConfig,
}

/// Either supplied values or the effort used to estimate them. Missing
/// values are estimated on the seed derived with label `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    pub effort: SeriesEffort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyMethod {
    /// Exact enumeration of `H(X_1^n | Y_1^n)`.
    Exact,
    /// Monte Carlo mean of the density.
    Mc,
    /// Headline entropy rate in bits per symbol.
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VarentropyMethod {
    /// `Var(d_n) / n` over independent strings.
    Direct,
    /// Autocovariance series along long paths.
    Series,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Kac {
        x: Vec<u32>,
        y: Vec<u32>,
        replicas: usize,
        m: Option<usize>,
    },
    CltDensity {
        n: usize,
        samples: usize,
        centering: Centering,
    },
    CltCodelength {
        n: usize,
        samples: usize,
        taus: Vec<f64>,
    },
    ZeroFluctuation {
        n: usize,
        samples: usize,
    },
    Lil(LilConfig),
    RecurrenceClt(RecurrenceCltConfig),
    Dispersion {
        n: usize,
        samples: usize,
        mode: DispersionMode,
        rel_tol: f64,
    },
    Converse {
        n_grid: Vec<usize>,
        taus: Vec<f64>,
        samples: usize,
    },
    FirstOrder(FirstOrderConfig),
    LzsiRate(LzsiConfig),
    Entropy {
        n: usize,
        samples: usize,
        method: EntropyMethod,
    },
    Varentropy {
        n: usize,
        samples: usize,
        method: VarentropyMethod,
        path_len: usize,
        max_lag: Option<usize>,
        window: usize,
    },
}

impl Experiment {
    fn needs_reference(&self) -> bool {
        !matches!(
            self,
            Experiment::Kac { .. }
                | Experiment::ZeroFluctuation { .. }
                | Experiment::Converse { .. }
                | Experiment::Entropy { .. }
                | Experiment::Varentropy { .. }
        )
    }
}

impl RunConfig {
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_value(v: Value) -> CliResult<Self> {
        serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
    }

    /// A config file, or a report carrying one under `config`.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        match v.get("config") {
            Some(inner) if v.get("schema_version").is_some() => Self::from_value(inner.clone()),
            _ => Self::from_value(v),
        }
    }

    /// Load the model and confirm it still has the recorded hash.
    pub fn load_model(&self) -> CliResult<PairModel> {
        let model = load_model(&self.model)?;
        if model.hash() != self.model_hash {
            return Err(CliError::Config(format!(
                "model {} has hash {} but the config records {}",
                self.model,
                model.hash(),
                self.model_hash
            )));
        }
        Ok(model)
    }
}

fn resolve_reference(model: &PairModel, cfg: &ReferenceConfig, seed: u64) -> CliResult<Reference> {
    if let (Some(h), Some(s2)) = (cfg.h, cfg.sigma2) {
        return Ok(Reference::supplied(h, s2));
    }
    let mut r = estimate_reference(model, cfg.effort, derive_seed(seed, "reference"))
        .map_err(CliError::core("estimating h and sigma^2"))?;
    if let Some(h) = cfg.h {
        r = Reference {
            h,
            h_stderr: 0.0,
            h_method: sideinfo_core::Method::Supplied,
            ..r
        };
    }
    if let Some(s2) = cfg.sigma2 {
        r = Reference {
            sigma2: s2,
            sigma2_stderr: 0.0,
            sigma2_method: sideinfo_core::Method::Supplied,
            ..r
        };
    }
    Ok(r)
}

fn estimate_row(e: &RateEstimate) -> std::collections::BTreeMap<String, Value> {
    let opt = |v: Option<usize>| v.map_or(Value::Null, Value::from);
    row([
        ("method", serde_json::to_value(e.method).expect("enum serializes")),
        ("n", opt(e.n_used)),
        ("samples", opt(e.samples_used)),
        ("value_bits", num(e.value)),
        ("stderr", num(e.stderr)),
        ("lag", opt(e.truncation_lag)),
    ])
}

fn estimate_report(
    kind: &str,
    model: &PairModel,
    seed: u64,
    main: &RateEstimate,
    extra: &[RateEstimate],
) -> ExperimentReport {
    let mut rep = ExperimentReport::new(kind, model.hash(), seed);
    rep.stat("value_bits", main.value).stat("stderr", main.stderr);
    if let Some(tail) = main.lag_tail {
        rep.stat("lag_tail", tail);
    }
    for e in std::iter::once(main).chain(extra) {
        rep.push_row("estimates", estimate_row(e));
    }
    rep
}

fn entropy(
    model: &PairModel,
    n: usize,
    samples: usize,
    method: EntropyMethod,
    seed: u64,
) -> sideinfo_core::Result<ExperimentReport> {
    let main = match method {
        EntropyMethod::Exact => conditional_entropy_exact(model, n)?,
        EntropyMethod::Mc => conditional_entropy_mc(model, n, samples, seed)?,
        EntropyMethod::Rate => entropy_rate(model, 8, n, samples, seed)?,
    };
    let mut rep = estimate_report("entropy", model, seed, &main, &[]);
    rep.param("n", n)
        .param("samples", samples)
        .param("method", serde_json::to_value(method).expect("enum serializes"));
    if method != EntropyMethod::Rate {
        rep.stat("per_symbol_bits", main.value / n as f64);
    }
    Ok(rep)
}

fn varentropy(
    model: &PairModel,
    n: usize,
    samples: usize,
    method: VarentropyMethod,
    path_len: usize,
    max_lag: Option<usize>,
    window: usize,
    seed: u64,
) -> sideinfo_core::Result<ExperimentReport> {
    let lag = max_lag.unwrap_or(DEFAULT_MAX_LAG);
    let main = match method {
        VarentropyMethod::Direct => varentropy_direct(model, n, samples, seed)?,
        VarentropyMethod::Series => varentropy_series(model, samples, path_len, lag, window.max(model.order()), seed)?,
    };
    let analytic: Vec<RateEstimate> = match memoryless_analytic(model) {
        Ok((_, s2)) => vec![RateEstimate {
            value: s2,
            stderr: 0.0,
            method: sideinfo_core::Method::AnalyticMemoryless,
            n_used: None,
            samples_used: None,
            truncation_lag: None,
            lag_tail: None,
        }],
        Err(_) => Vec::new(),
    };
    let mut rep = estimate_report("varentropy", model, seed, &main, &analytic);
    rep.param("method", serde_json::to_value(method).expect("enum serializes"))
        .param("samples", samples);
    match method {
        VarentropyMethod::Direct => rep.param("n", n),
        VarentropyMethod::Series => rep
            .param("path_len", path_len)
            .param("max_lag", lag)
            .param("window", window),
    };
    Ok(rep)
}

/// Run the experiment a config describes and embed the config in the
/// report.
pub fn execute(cfg: &RunConfig) -> CliResult<ExperimentReport> {
    let model = cfg.load_model()?;
    let seed = cfg.seed;
    let reference = if cfg.command.needs_reference() {
        Some(resolve_reference(&model, &cfg.reference, seed)?)
    } else {
        None
    };
    let r = || reference.as_ref().expect("resolved above");
    let result = match &cfg.command {
        Experiment::Kac { x, y, replicas, m } => kac_experiment(&model, x, y, *replicas, *m, seed),
        Experiment::CltDensity { n, samples, centering } => clt_density(&model, *n, *samples, r(), *centering, seed),
        Experiment::CltCodelength { n, samples, taus } => clt_codelength(&model, *n, *samples, r(), taus, seed),
        Experiment::ZeroFluctuation { n, samples } => zero_fluctuation(&model, *n, *samples, seed),
        Experiment::Lil(c) => lil(&model, c, r(), seed),
        Experiment::RecurrenceClt(c) => recurrence_clt(&model, c, r(), seed),
        Experiment::Dispersion {
            n,
            samples,
            mode,
            rel_tol,
        } => dispersion(&model, *n, *samples, *mode, *rel_tol, r(), seed),
        Experiment::Converse { n_grid, taus, samples } => converse(&model, n_grid, taus, *samples, seed),
        Experiment::FirstOrder(c) => first_order(&model, c, r(), seed),
        Experiment::LzsiRate(c) => lzsi_experiment(&model, c, r(), seed),
        Experiment::Entropy { n, samples, method } => entropy(&model, *n, *samples, *method, seed),
        Experiment::Varentropy {
            n,
            samples,
            method,
            path_len,
            max_lag,
            window,
        } => varentropy(&model, *n, *samples, *method, *path_len, *max_lag, *window, seed),
    };
    let mut rep = result.map_err(|e| match e {
        sideinfo_core::Error::DegenerateVariance => CliError::Usage(format!(
            "varentropy is zero for this model; run `sideinfo verify zero-fluctuation --model {}` instead",
            cfg.model
        )),
        other => CliError::Core {
            context: "experiment failed".into(),
            source: other,
        },
    })?;
    rep.config = Some(cfg.to_value());
    Ok(rep)
}
