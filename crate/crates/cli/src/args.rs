use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use sideinfo_core::harness::{Centering, DispersionMode, SeriesEffort};

use crate::config::{EntropyMethod, VarentropyMethod};

/// Conditional information density, optimal coding with side information
/// and recurrence-time experiments on finite-order pair models.
///
/// Models are given as a JSON file path or `preset:NAME`. Symbol strings
/// may be written `0110`, `0 1 1 0` or `0,1,1,0`.
#[derive(Debug, Parser)]
#[command(name = "sideinfo", version, about)]
pub struct Cli {
    /// Worker threads for replica loops (results do not depend on it).
    #[arg(long, short = 'j', global = true, value_name = "J")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate, describe or print models.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Draw a stationary two-sided sample.
    Sample(SampleArgs),
    /// Conditional information density of a pair of strings.
    Density(DensityArgs),
    /// Optimal one-to-one code with side information.
    #[command(subcommand)]
    Code(CodeCmd),
    /// Idealized LZ coder with side information.
    #[command(subcommand)]
    Lzsi(LzsiCmd),
    /// Conditional entropy and varentropy estimates.
    #[command(subcommand)]
    Stats(StatsCmd),
    /// Seeded verification experiments with pass/fail verdicts.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Re-run the config embedded in a report (or a bare config file).
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand)]
pub enum ModelCmd {
    /// Check a model file; exit 2 with the reason when it is invalid.
    Validate {
        /// Model file or `preset:NAME`.
        model: String,
    },
    /// Validity flags, stationary law and entropy rate.
    Info {
        model: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print a preset as model JSON.
    Preset { name: String },
}

#[derive(Debug, Args, Clone)]
pub struct OutArgs {
    /// Report file (default: `$SIDEINFO_OUT_DIR/<kind>-<seed>.json`, else stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also write each report table as `<kind>-<table>.csv` in this directory.
    #[arg(long, value_name = "DIR")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: String,
    /// Present length.
    #[arg(long)]
    pub n: usize,
    /// Past length.
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    /// Centering rate for the trajectory `S(t) = -d_t + t h` (default: the
    /// model's entropy rate when it has a closed form, else 0).
    #[arg(long)]
    pub h: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Subcommand)]
pub enum CodeCmd {
    /// Codeword of x given y.
    OptEncode {
        #[arg(long)]
        model: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// String of X^n with the given codeword under y (`∅` or `""` is empty).
    OptDecode {
        #[arg(long)]
        model: String,
        #[arg(long, allow_hyphen_values = true)]
        codeword: String,
        #[arg(long)]
        y: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Full codebook for y: every x with rank, codeword and probability.
    Lengths {
        #[arg(long)]
        model: String,
        #[arg(long)]
        y: String,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum LzsiCmd {
    /// Encode a seeded stationary stream to a token file.
    Encode {
        #[arg(long)]
        model: String,
        /// Block length.
        #[arg(long)]
        n: usize,
        /// Past (window) length.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        blocks: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Token stream file to write.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Decode a token file against the stream regenerated from its seed and
    /// compare; exit 1 on mismatch.
    Decode {
        #[arg(long)]
        model: String,
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
    },
    /// Roundtrip and rate experiment.
    Rate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1 << 16)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Also require |rate - h| <= this many bits/symbol.
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum StatsCmd {
    /// H(X_1^n | Y_1^n) or the entropy rate.
    Entropy {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = EntropyMethod::Exact)]
        method: EntropyMethod,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Varentropy sigma^2 in bits^2 per symbol.
    Varentropy {
        /// String length for the direct method.
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Strings (direct) or paths (series).
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = VarentropyMethod::Direct)]
        method: VarentropyMethod,
        #[arg(long, default_value_t = 1 << 15)]
        path_len: usize,
        #[arg(long)]
        max_lag: Option<usize>,
        #[arg(long, default_value_t = 64)]
        window: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Options shared by every report-producing experiment.
#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    #[arg(long)]
    pub model: String,
    /// Master seed; drawn and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Supplied entropy rate in bits/symbol (skips estimation).
    #[arg(long)]
    pub h: Option<f64>,
    /// Supplied varentropy in bits^2/symbol (skips estimation).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Paths for estimating sigma^2 when not supplied.
    #[arg(long, default_value_t = SeriesEffort::default().paths)]
    pub ref_paths: usize,
    #[arg(long, default_value_t = SeriesEffort::default().path_len)]
    pub ref_path_len: usize,
    #[arg(long, default_value_t = SeriesEffort::default().max_lag)]
    pub ref_max_lag: usize,
    #[arg(long, default_value_t = SeriesEffort::default().window)]
    pub ref_window: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

impl CommonArgs {
    pub fn effort(&self) -> SeriesEffort {
        SeriesEffort {
            paths: self.ref_paths,
            path_len: self.ref_path_len,
            max_lag: self.ref_max_lag,
            window: self.ref_window,
        }
    }
}

/// Parse a value through the serde names of a core enum.
fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Mean conditional recurrence time against 1/P(x|y).
    Kac {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 100_000)]
        replicas: usize,
        /// Past length (default max(2^16, 100 / P(x|y))).
        #[arg(long)]
        m: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// KS distance of the centered, scaled density to N(0, sigma^2).
    CltDensity {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// `block` centers at H(X_1^n|Y_1^n), `rate` at n h.
        #[arg(long, value_parser = serde_enum::<Centering>, default_value = "block")]
        centering: Centering,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// CLT for the optimal (or prefix stand-in) codelength.
    CltCodelength {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Comma-separated tau list for the undercut table.
        #[arg(long, value_delimiter = ',', default_values_t = [8.0, 12.0, 16.0])]
        taus: Vec<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Zero-varentropy check: the density is exactly constant.
    ZeroFluctuation {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Law of the iterated logarithm band along long paths.
    Lil {
        #[arg(long, default_value_t = 1000)]
        n_min: usize,
        #[arg(long, default_value_t = 1_000_000)]
        n_max: usize,
        #[arg(long, default_value_t = 64)]
        paths: usize,
        #[arg(long, default_value_t = 0.6)]
        band_lo: f64,
        #[arg(long, default_value_t = 1.4)]
        band_hi: f64,
        #[arg(long)]
        check_symmetry: bool,
        #[arg(long, default_value_t = 10)]
        grid_per_decade: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// CLT for log recurrence times.
    RecurrenceClt {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4000)]
        samples: usize,
        #[arg(long, default_value_t = 1 << 20)]
        m: usize,
        #[arg(long)]
        ks: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        max_truncation: f64,
        #[arg(long, default_value_t = 64)]
        chunk: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// (1/n) Var of the optimal length against sigma^2.
    Dispersion {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, value_parser = serde_enum::<DispersionMode>, default_value = "auto")]
        mode: DispersionMode,
        #[arg(long, default_value_t = 0.15)]
        rel_tol: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Frequency of lengths undercutting the density by tau bits.
    Converse {
        #[arg(long, value_delimiter = ',', default_values_t = [8usize, 64, 256])]
        n_grid: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [8.0, 12.0, 16.0])]
        taus: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// d_n / n (and LZ-SI rates) converging to h.
    FirstOrder {
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 256, 1024, 4096])]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 64)]
        paths: usize,
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
        /// Block lengths for the LZ-SI comparison.
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8])]
        lzsi_n: Vec<usize>,
        /// Skip the LZ-SI comparison.
        #[arg(long)]
        no_lzsi: bool,
        #[arg(long, default_value_t = 1 << 16)]
        lzsi_m: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Report or config JSON.
    pub file: PathBuf,
    /// Compare the regenerated report with `file` byte for byte; exit 1 on
    /// any difference.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub out: OutArgs,
}
