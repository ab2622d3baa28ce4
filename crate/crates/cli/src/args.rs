use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use privmax::MechanismKind;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "privmax",
    version,
    about = "Differentially private selection of a near-maximal item"
)]
pub struct Cli {
    #[command(flatten)]
    pub run: RunConfig,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. The whole struct is echoed into the
/// header of each output so runs can be reproduced from their results.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunConfig {
    /// Privacy parameter alpha.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub alpha: f64,

    /// Privacy parameter delta (ignored by pure mechanisms).
    #[arg(long, global = true, default_value_t = 0.05)]
    pub delta: f64,

    /// Utility failure probability used in reported bounds.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub eta: f64,

    #[arg(long, global = true, env = "PRIVMAX_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Monte Carlo trials (command-specific default).
    #[arg(long, global = true)]
    pub trials: Option<u64>,

    /// Mechanism name; bench-range accepts a comma-separated list.
    #[arg(long, global = true, value_delimiter = ',', default_value = "lmm")]
    pub mechanism: Vec<MechanismKind>,

    /// Rank cap for the large margin search.
    #[arg(long, global = true)]
    pub cap: Option<u64>,

    /// NON-PRIVATE: replace every noise draw by its median, for
    /// deterministic traces.
    #[arg(long, global = true)]
    pub zero_noise: bool,

    #[arg(long = "in", global = true, value_name = "PATH")]
    pub input: Option<PathBuf>,

    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Run one mechanism once on a universe file.
    Select,
    /// Success rate on the all-ones instance across universe sizes.
    BenchRange(BenchRangeArgs),
    /// Empirical privacy audit of a mechanism on a neighbor pair.
    Audit(AuditArgs),
    /// Select a frequent itemset from a basket file.
    Fim(FimArgs),
    /// Select a hypothesis from a synthetic class.
    Pac(PacArgs),
}

#[derive(Debug, Args)]
pub struct BenchRangeArgs {
    /// Universe sizes to sweep.
    #[arg(long = "k", value_delimiter = ',', required = true)]
    pub k_values: Vec<u64>,

    /// Dataset size.
    #[arg(long, default_value_t = 500)]
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    ThresholdExample,
    Lb2Family,
    BasketNeighbor,
    MarginBoundary,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Left universe file of an explicit pair.
    #[arg(long, requires = "right", conflicts_with = "generator")]
    pub left: Option<PathBuf>,

    #[arg(long, requires = "left")]
    pub right: Option<PathBuf>,

    /// Note recorded in the report for an explicit pair.
    #[arg(long, default_value = "user-supplied pair")]
    pub provenance: String,

    /// Built-in neighbor-pair construction.
    #[arg(long, value_enum)]
    pub generator: Option<Generator>,

    /// Universe size for generators.
    #[arg(long)]
    pub k: Option<u64>,

    /// Dataset size for generators.
    #[arg(long)]
    pub n: Option<u64>,

    /// Dataset entries for threshold-example.
    #[arg(long, value_delimiter = ',')]
    pub entries: Vec<u64>,

    /// Index of the changed entry or basket.
    #[arg(long, default_value_t = 0)]
    pub index: usize,

    /// Replacement entry (threshold-example) or space-separated basket
    /// (basket-neighbor).
    #[arg(long)]
    pub replacement: Option<String>,

    /// Family size for lb2-family.
    #[arg(long)]
    pub ell: Option<u64>,

    /// Itemset size for basket-neighbor.
    #[arg(long, default_value_t = 2)]
    pub r: u64,

    /// Which member pair of a multi-pair generator to audit (all when
    /// omitted).
    #[arg(long)]
    pub pair: Option<usize>,

    /// Claimed alpha to audit against (defaults to --alpha).
    #[arg(long)]
    pub claimed_alpha: Option<f64>,

    /// Claimed delta to audit against (defaults to the mechanism's delta).
    #[arg(long)]
    pub claimed_delta: Option<f64>,

    /// Joint confidence of the Hoeffding slacks.
    #[arg(long, default_value_t = 0.99)]
    pub confidence: f64,

    /// Use closed-form distributions instead of sampling (em, st13 only).
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct FimArgs {
    /// Itemset size.
    #[arg(long, default_value_t = 2)]
    pub r: u64,

    /// Tokens added to the vocabulary that occur in no basket.
    #[arg(long, default_value_t = 0)]
    pub unused_tokens: usize,

    /// Vocabulary file (one token per line) fixed before seeing the data.
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PacArgs {
    /// Shell width constant.
    #[arg(long, default_value_t = privmax::applications::DEFAULT_C0)]
    pub c0: f64,

    /// Confidence parameter of the shell width.
    #[arg(long, default_value_t = privmax::applications::DEFAULT_DELTA0)]
    pub delta0: f64,

    /// Constant of the shell criterion; derived from the large margin
    /// bound when omitted.
    #[arg(long)]
    pub c: Option<f64>,

    /// Build shells from empirical rather than true errors.
    #[arg(long)]
    pub empirical_shells: bool,
}
