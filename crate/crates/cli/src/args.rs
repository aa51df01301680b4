use std::path::PathBuf;

use clap::{Args, ValueEnum};
use osup_core::orlicz::{Measure, OrliczFunction, DEFAULT_TOL};
use osup_core::paths::Covariance;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn parse_json<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

fn parse_orlicz(s: &str) -> Result<OrliczFunction, String> {
    parse_json(s)
}

fn parse_covariance(s: &str) -> Result<Covariance, String> {
    parse_json(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureArg {
    Probability,
    SigmaFinite,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Probability => Measure::Probability,
            MeasureArg::SigmaFinite => Measure::SigmaFinite,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    Brownian,
    Gaussian,
    Theta,
}

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    /// Grid intervals; paths hold N + 1 values.
    #[arg(long)]
    pub n: usize,
    /// Number of paths.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Covariance for `--kind gaussian`, e.g. '{"kind":"brownian_bridge"}'.
    #[arg(long, value_parser = parse_covariance)]
    pub covariance: Option<Covariance>,
    /// Exponent in (1, 2) for `--kind theta`.
    #[arg(long)]
    pub p: Option<f64>,
    /// Half-width L of the θ domain [-L, L].
    #[arg(long = "half-width", visible_alias = "L")]
    pub half_width: Option<f64>,
    /// Orlicz function recorded in the manifest as controlling the sup norm.
    #[arg(long, value_parser = parse_orlicz)]
    pub phi: Option<OrliczFunction>,
    /// Ensemble file (.csv or .bin); the manifest goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct McurveArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long, value_parser = parse_orlicz)]
    pub psi: OrliczFunction,
    /// Decreasing δ values; default 1, 1/2, 1/4, ... down to one grid step.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Every grid δ = k/N instead of the dyadic default.
    #[arg(long, conflicts_with = "deltas")]
    pub full: bool,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct BuildSupportArgs {
    /// Ensemble file; repeat for a family with a common schedule.
    #[arg(long, required = true)]
    pub ensemble: Vec<PathBuf>,
    #[arg(long, value_parser = parse_orlicz)]
    pub psi: OrliczFunction,
    /// Number of levels requested.
    #[arg(long = "n-max", default_value_t = 8)]
    pub n_max: usize,
    /// Tabulated m(δ) (an mcurve report) used instead of measuring.
    #[arg(long = "m-oracle")]
    pub m_oracle: Option<PathBuf>,
    /// Orlicz function of the process, for the advisory check; defaults to the manifest's.
    #[arg(long, value_parser = parse_orlicz)]
    pub phi: Option<OrliczFunction>,
    #[arg(long, value_enum, default_value_t = MeasureArg::Probability)]
    pub measure: MeasureArg,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Also write the bare schedule JSON here.
    #[arg(long = "schedule-out")]
    pub schedule_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct EnhancedNormArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    /// Schedule JSON or a build-support report.
    #[arg(long)]
    pub schedule: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyBoundArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
    /// Defaults to the schedule's Ψ.
    #[arg(long, value_parser = parse_orlicz)]
    pub psi: Option<OrliczFunction>,
    #[arg(long)]
    pub holdout: Option<PathBuf>,
    /// Adds the Φ-side bound; defaults to the manifest's Φ.
    #[arg(long, value_parser = parse_orlicz)]
    pub phi: Option<OrliczFunction>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CompactnessArgs {
    #[arg(long)]
    pub schedule: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    /// Unit-ball samples for the empirical checks; 0 skips them.
    #[arg(long, default_value_t = 0)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CounterexampleArgs {
    /// Explicit τ values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub tau: Option<Vec<f64>>,
    /// Draw this many τ ~ N(0, 1) instead.
    #[arg(long, conflicts_with = "tau")]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.5)]
    pub p: f64,
    #[arg(long = "half-width", visible_alias = "L", default_value_t = 8.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStatistic {
    /// `|τ|^q / q`.
    ThetaSup,
    /// `|τ|`.
    AbsTau,
}

#[derive(Args, Debug, Serialize)]
pub struct TailArgs {
    /// Sample file, one positive number per line.
    #[arg(long, conflicts_with = "statistic")]
    pub samples: Option<PathBuf>,
    /// Generate the sample from τ ~ N(0, 1) instead.
    #[arg(long, value_enum)]
    pub statistic: Option<TailStatistic>,
    #[arg(long, default_value_t = 100_000)]
    pub k: usize,
    #[arg(long, default_value_t = 1.5)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quantile window `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.90, 0.999])]
    pub window: Vec<f64>,
    /// Exponent to compare against; defaults to the exact one for a generated statistic, else 2.
    #[arg(long)]
    pub reference: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct DhProbeArgs {
    #[arg(long, default_value_t = 1.5)]
    pub p: f64,
    #[arg(long, value_parser = parse_orlicz)]
    pub psi: OrliczFunction,
    /// Increasing half-widths L.
    #[arg(
        long = "half-widths",
        visible_alias = "L",
        value_delimiter = ',',
        required = true
    )]
    pub half_widths: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    pub k: usize,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    #[arg(long, value_parser = parse_orlicz)]
    pub psi: OrliczFunction,
    #[arg(long, value_parser = parse_orlicz)]
    pub phi: OrliczFunction,
    #[arg(long, value_enum, default_value_t = MeasureArg::Probability)]
    pub measure: MeasureArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
