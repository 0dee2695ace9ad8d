//! Conditional information density of pair processes: exact and Monte Carlo
//! entropy/varentropy, optimal one-to-one codes with side information,
//! conditional recurrence times, and asymptotic verification experiments.

pub mod bits;
pub mod coder;
pub mod density;
pub mod entropy;
pub mod enumerate;
pub mod error;
pub mod harness;
pub mod lzsi;
pub mod mc;
pub mod model;
pub mod presets;
pub mod recurrence;
pub mod report;
pub mod rng;
pub mod sample;
pub mod stats;

pub use coder::{build_assignment, decode_opt, encode_opt, CodeAssignment, Codeword};
pub use density::{conditional_info_density, DensityTracker, FilterState, LogProb};
pub use entropy::{Method, RateEstimate};
pub use error::{Error, Result};
pub use model::{build_model, check_validity, marginal_y_model, AssumptionCase, ModelSpec, ModelValidity, PairModel};
pub use report::{ExperimentReport, Verdict};
pub use sample::{sample_two_sided, TwoSidedSample};
