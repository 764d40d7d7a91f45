use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use defectkit_core::stream::GroupFilter;
use defectkit_core::{Fraction, ModalityId, Rect};

#[derive(Debug, Parser)]
#[command(name = "defectkit", version, about = "Defect synthesis, training streams and anomaly-detection metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow synthetic defects on fault-free patches.
    Synth(SynthArgs),
    /// Cut patches out of full-frame images.
    Extract(ExtractArgs),
    /// Pack patch folders into a supervised container.
    Pack(PackArgs),
    /// Materialize an epoch of the mixed training stream.
    Sample(SampleArgs),
    /// Score predictions against ground-truth folders.
    Evaluate(EvaluateArgs),
    /// Tabulate previously written evaluation reports.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Extract(_) => "extract",
            Command::Pack(_) => "pack",
            Command::Sample(_) => "sample",
            Command::Evaluate(_) => "evaluate",
            Command::Report(_) => "report",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Synth(a) => &a.common,
            Command::Extract(a) => &a.common,
            Command::Pack(a) => &a.common,
            Command::Sample(a) => &a.common,
            Command::Evaluate(a) => &a.common,
            Command::Report(a) => &a.common,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Pipeline configuration (TOML). Built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed. Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long)]
    pub modality: ModalityId,

    /// Directory of fault-free patch PNGs.
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExtractMode {
    Grid,
    Random,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long)]
    pub modality: ModalityId,

    /// Full-frame PNG, or a directory of them. Repeatable.
    #[arg(long, value_name = "PATH", required = true)]
    pub input: Vec<PathBuf>,

    /// Region of interest `x,y,width,height`. Whole frame when omitted.
    #[arg(long)]
    pub roi: Option<Rect>,

    #[arg(long, value_enum, default_value_t = ExtractMode::Grid)]
    pub mode: ExtractMode,

    /// Patches per frame in random mode.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PackArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long)]
    pub modality: ModalityId,

    /// Patch folder: either `images/` + `masks/` (as written by `synth`) or
    /// bare fault-free PNGs. Repeatable; packed in the order given.
    #[arg(long, value_name = "DIR", required = true)]
    pub input: Vec<PathBuf>,

    /// Per-chunk deflate level.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=9))]
    pub deflate: Option<u8>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: Common,

    #[arg(long)]
    pub modality: ModalityId,

    /// Directory of fault-free patch PNGs.
    #[arg(long, value_name = "DIR")]
    pub good: PathBuf,

    /// Real defect pool with `points/` and `area/` subfolders of raw crops.
    #[arg(long, value_name = "DIR")]
    pub real: Option<PathBuf>,

    /// Active real-defect fraction.
    #[arg(long, default_value = "1")]
    pub fraction: Fraction,

    #[arg(long, default_value = "mixed")]
    pub group: GroupFilter,

    /// Injection probability. Overrides the configured value.
    #[arg(long)]
    pub p_inject: Option<Fraction>,

    /// Number of stream items to write.
    #[arg(long)]
    pub n: usize,

    /// Per-chunk deflate level.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=9))]
    pub deflate: Option<u8>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,

    /// Predictions CSV: id, image_score (or score), optional map_path.
    #[arg(long, value_name = "CSV")]
    pub predictions: PathBuf,

    /// Ground-truth root with `test/` and `ground_truth/`.
    #[arg(long, value_name = "DIR")]
    pub truth: PathBuf,

    /// Selects the configured border crop and names the table row.
    #[arg(long)]
    pub modality: Option<ModalityId>,

    /// Pixels dropped from each map edge before pixel metrics.
    #[arg(long)]
    pub border_crop: Option<u32>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,

    /// Report JSON, optionally as `name=path`. Repeatable; rows keep this order.
    #[arg(long, value_name = "[NAME=]PATH", required = true)]
    pub input: Vec<String>,
}
