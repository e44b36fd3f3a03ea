mod commands;
mod errors;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ulw",
    version,
    about = "Ultra-lightweight sleep-stage scoring: preprocess, train, evaluate, predict"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an epoch cache from a Sleep-EDF style directory.
    Preprocess(PreprocessArgs),
    /// Print parameter and FLOPs counts for a model configuration.
    Count(CountArgs),
    /// Subject-wise cross-validated training.
    Train(TrainArgs),
    /// Pool prediction files into one metrics report.
    Evaluate(EvaluateArgs),
    /// Score every epoch of a cache with a checkpoint.
    Predict(PredictArgs),
}

#[derive(Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "EEG Fpz-Cz,EEG Pz-Oz,EOG horizontal,EMG submental"
    )]
    pub channels: Vec<String>,
    /// Band-pass every channel, not only EEG.
    #[arg(long)]
    pub filter_all_channels: bool,
    /// Manifest file (default: `<out>.manifest.jsonl`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct CountArgs {
    /// Model configuration JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named ablation variant, used when no --config is given.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub conv_type: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub filters: Option<Vec<usize>>,
    #[arg(long)]
    pub kernel_size: Option<usize>,
    #[arg(long)]
    pub pool_size: Option<usize>,
    #[arg(long)]
    pub pool_stride: Option<usize>,
    #[arg(long)]
    pub input_channels: Option<usize>,
    #[arg(long)]
    pub input_length: Option<usize>,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Fold index or `all`.
    #[arg(long, default_value = "all")]
    pub fold: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Prediction CSV files or directories holding `fold*.predictions.csv`.
    #[arg(long, num_args = 1.., required = true)]
    pub predictions: Vec<PathBuf>,
    /// Fail unless every fold `0..folds` has a prediction file.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Model configuration for the Params/FLOPs columns.
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Preprocess(a) => commands::preprocess::run(&a),
        Command::Count(a) => commands::count::run(&a),
        Command::Train(a) => commands::train::run(&a),
        Command::Evaluate(a) => commands::evaluate::run(&a),
        Command::Predict(a) => commands::predict::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", errors::render(&e));
            ExitCode::FAILURE
        }
    }
}
