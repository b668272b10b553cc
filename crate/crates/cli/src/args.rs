use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use re_are_core::efficiency::MeanRate;
use re_are_core::BuiltinDetector;

#[derive(Debug, Clone, Parser)]
#[command(
    name = "re-are",
    version,
    about = "Random-signal detection: thresholds, efficacy, ARE, relative efficiency and Monte Carlo checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Detection probability against false-alarm probability.
    Roc(RocArgs),
    /// Threshold for a target false-alarm probability.
    Threshold(ThresholdArgs),
    /// Derivative order and efficacy of one detector.
    Efficacy(EfficacyArgs),
    /// Pitman asymptotic relative efficiency of two detectors.
    Are(AreArgs),
    /// Finite-sample relative efficiency of two detectors.
    Re(ReArgs),
    /// RE against the ARE bridge formula along a shrinking-signal schedule.
    Converge(ConvergeArgs),
    /// Closed-form false-alarm and detection probabilities against simulation.
    McValidate(McValidateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Roc(_) => "roc",
            Command::Threshold(_) => "threshold",
            Command::Efficacy(_) => "efficacy",
            Command::Are(_) => "are",
            Command::Re(_) => "re",
            Command::Converge(_) => "converge",
            Command::McValidate(_) => "mc-validate",
        }
    }

    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Roc(a) => &a.output,
            Command::Threshold(a) => &a.output,
            Command::Efficacy(a) => &a.output,
            Command::Are(a) => &a.output,
            Command::Re(a) => &a.output,
            Command::Converge(a) => &a.output,
            Command::McValidate(a) => &a.output,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Noise mean under H0.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu0: f64,
    /// Noise variance.
    #[arg(long = "sigma0-sq", default_value_t = 1.0)]
    pub sigma0_sq: f64,
    /// Signal mean under H1.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu1: f64,
    /// Signal variance under H1.
    #[arg(long = "sigma1-sq", default_value_t = 1.0)]
    pub sigma1_sq: f64,
}

#[derive(Debug, Clone, Args)]
pub struct NullModelArgs {
    /// Noise mean under H0.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu0: f64,
    /// Noise variance.
    #[arg(long = "sigma0-sq", default_value_t = 1.0)]
    pub sigma0_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; `-` writes to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Directory for `<command>.<format>` when --output is not given.
    #[arg(long = "out-dir", env = "RE_ARE_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Output format; defaults to csv for roc and converge, json otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(format!("{p} is not in (0, 1)"))
    }
}

fn positive_int(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(n) if n >= 1 => Ok(n),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(format!("{e}")),
    }
}

fn mean_rate(s: &str) -> Result<MeanRate, String> {
    if s == "per-order" {
        return Ok(MeanRate::PerOrder);
    }
    match s.parse::<f64>() {
        Ok(r) if r.is_finite() && r >= 0.0 => Ok(MeanRate::Fixed(r)),
        _ => Err(format!(
            "'{s}' is neither 'per-order' nor a nonnegative exponent"
        )),
    }
}

#[derive(Debug, Clone, Args)]
pub struct RocArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "np")]
    pub detector: BuiltinDetector,
    /// Number of samples.
    #[arg(long, default_value_t = 100, value_parser = positive_int)]
    pub n: u64,
    /// Number of false-alarm levels, evenly spaced in (0, 1).
    #[arg(long, default_value_t = 99, value_parser = positive_int)]
    pub points: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "np")]
    pub detector: BuiltinDetector,
    #[arg(long, default_value_t = 100, value_parser = positive_int)]
    pub n: u64,
    #[arg(long, default_value_t = 0.1, value_parser = probability)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EfficacyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "np")]
    pub detector: BuiltinDetector,
    /// Sample size at which the efficacy limit is evaluated.
    #[arg(long, default_value_t = 1000, value_parser = positive_int)]
    pub n: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AreArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "np")]
    pub a: BuiltinDetector,
    #[arg(long, default_value = "energy")]
    pub b: BuiltinDetector,
    #[arg(long, default_value_t = 1000, value_parser = positive_int)]
    pub n: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "np")]
    pub a: BuiltinDetector,
    #[arg(long, default_value = "energy")]
    pub b: BuiltinDetector,
    #[arg(long, default_value_t = 0.1, value_parser = probability)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.9, value_parser = probability)]
    pub beta: f64,
    /// Upper bound for the sample-size search.
    #[arg(long = "n-max", default_value_t = 1 << 40, value_parser = positive_int)]
    pub n_max: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub model: NullModelArgs,
    #[arg(long, default_value = "np")]
    pub a: BuiltinDetector,
    #[arg(long, default_value = "energy")]
    pub b: BuiltinDetector,
    #[arg(long, default_value_t = 0.1, value_parser = probability)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.9, value_parser = probability)]
    pub beta: f64,
    /// Strictly increasing comma-separated grid of N.
    #[arg(long = "n-grid", value_delimiter = ',', default_value = "100,1000,10000,100000", value_parser = positive_int)]
    pub n_grid: Vec<u64>,
    /// Signal mean scale: mu1 = c_mu * N^(-rate).
    #[arg(long = "c-mu", default_value_t = 0.5)]
    pub c_mu: f64,
    /// Mean rate: `per-order` (1/(2 nu)) or a fixed exponent.
    #[arg(long = "mean-rate", default_value = "per-order", value_parser = mean_rate)]
    pub mean_rate: MeanRate,
    /// Signal variance scale: sigma1² = c_var * N^(-var_exponent).
    #[arg(long = "c-var", default_value_t = 1.0)]
    pub c_var: f64,
    #[arg(
        long = "var-exponent",
        default_value_t = 0.0,
        allow_negative_numbers = true
    )]
    pub var_exponent: f64,
    #[arg(long = "n-max", default_value_t = 1 << 40, value_parser = positive_int)]
    pub n_max: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct McValidateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "np")]
    pub detector: BuiltinDetector,
    #[arg(long, default_value_t = 1000, value_parser = positive_int)]
    pub n: u64,
    #[arg(long, default_value_t = 0.1, value_parser = probability)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100_000, value_parser = positive_int)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Trials per parallel batch; results do not depend on it.
    #[arg(long = "batch-size", value_parser = positive_int)]
    pub batch_size: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}
