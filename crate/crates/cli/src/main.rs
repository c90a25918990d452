//! `sarcoast` batch driver.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "sarcoast",
    version,
    about = "Coastline extraction from SAR intensity images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene: image, class map, coast mask and evaluation points.
    Synth(SynthArgs),
    /// Normalize a 16-bit PGM into a float raster.
    Preprocess(PreprocessArgs),
    /// Write augmented training samples and their provenance.
    Augment(AugmentArgs),
    /// Run one configured predictor over an image with floating-window inference.
    Infer(InferArgs),
    /// Extract a coastline from a probability raster.
    Extract(ExtractArgs),
    /// Fuse coastline CSVs by weighted average.
    Ensemble(EnsembleArgs),
    /// Gap-fill a coastline CSV into a mask and a densified CSV.
    Postprocess(PostprocessArgs),
    /// Score a coastline mask against evaluation points.
    Evaluate(EvaluateArgs),
    /// Run inference, extraction, ensembling, gap filling and scoring from one config.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Scene config (TOML with the `[scene]` keys at top level).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    width: Option<usize>,
    /// Without `--config`, the default curve is rescaled to this height.
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    looks: Option<f64>,
    #[arg(long, short = 'o', default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Linear,
    Log,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[arg(long, value_enum, default_value = "linear")]
    mode: ModeArg,
    #[arg(long, allow_hyphen_values = true)]
    noise_coefficient: Option<f64>,
    #[arg(long)]
    log_floor: Option<f64>,
    /// Decibel range mapped onto [0, 1], as `LO,HI`.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    log_range: Option<Vec<f64>>,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    /// Augmentation config (TOML, keys of the augment section).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Source image PGM; repeat once per source.
    #[arg(long = "image", required = true)]
    images: Vec<PathBuf>,
    /// Class PGM matching each `--image`.
    #[arg(long = "classes", required = true)]
    classes: Vec<PathBuf>,
    /// Coast mask PGM matching each `--image`; adds a smoothed coast label channel.
    #[arg(long = "coast")]
    coasts: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "linear")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    first: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short = 'o', default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct InferArgs {
    /// Pipeline config holding the predictor, preprocessing and tiling settings.
    #[arg(long)]
    config: PathBuf,
    /// Predictor id; defaults to the first `[[predictor]]`.
    #[arg(long)]
    predictor: Option<String>,
    /// Image to run on instead of the config's input.
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short = 'o')]
    output: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HeadArg {
    #[value(alias = "softmax")]
    Softmax3,
    #[value(alias = "sigmoid")]
    Sigmoid1,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrientationArg {
    Auto,
    Landscape,
    Portrait,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long, value_enum)]
    head: HeadArg,
    #[arg(long, value_enum, default_value = "auto")]
    orientation: OrientationArg,
    /// Also write the coastline mask as a PGM.
    #[arg(long)]
    mask: Option<PathBuf>,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    /// One weight per input, comma separated; defaults to equal weights.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    #[arg(long, short = 'o')]
    output: PathBuf,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct PostprocessArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    /// Leave absent runs unfilled.
    #[arg(long)]
    no_interpolate: bool,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    miss_penalty: Option<f64>,
    #[arg(long)]
    miss_radius: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
