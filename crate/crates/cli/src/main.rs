//! `morphseg`: train, evaluate and apply character-level segmentation models.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "morphseg", version, about = "Neural morphological segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one or more replicate models and keep the best checkpoint of each.
    Train(TrainArgs),
    /// Score a checkpoint on a labeled file.
    Eval(EvalArgs),
    /// Segment words with a checkpoint.
    Segment(SegmentArgs),
    /// Corpus statistics of a labeled file.
    Stats(StatsArgs),
    /// Write random strings over a dataset's alphabet and word lengths.
    MakeAux(MakeAuxArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// File of key=value settings; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Labeled training file, optionally prefixed with a language tag (`wix:path`).
    #[arg(long, required = true)]
    pub train: Vec<String>,
    /// Labeled dev file(s), tagged like `--train`.
    #[arg(long, required = true)]
    pub dev: Vec<String>,
    /// Labeled test file(s) scored with every replicate's best checkpoint.
    #[arg(long)]
    pub test: Vec<String>,
    /// Language tags for untagged `--train`/`--dev`/`--test` files, in order.
    #[arg(long = "lang-tag")]
    pub lang_tag: Vec<String>,
    /// s2s, mtt-u, mtt-r, da-u, da-r or xling.
    #[arg(long)]
    pub mode: Option<String>,
    /// Unlabeled word list for the *-u modes, one word per line.
    #[arg(long)]
    pub aux: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long = "max-epochs")]
    pub max_epochs: Option<usize>,
    #[arg(long = "eval-every")]
    pub eval_every: Option<usize>,
    #[arg(long = "batch-size")]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub embed: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub attention: Option<usize>,
    /// Stop a replicate once its dev set is decoded perfectly.
    #[arg(long = "stop-on-perfect-dev")]
    pub stop_on_perfect_dev: bool,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Language of the test file; required for cross-lingual models.
    #[arg(long)]
    pub lang: Option<String>,
    /// Also write the key=value report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the full report, with per-word records, as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, conflicts_with = "input_file", required_unless_present = "input_file")]
    pub word: Vec<String>,
    /// One word per line.
    #[arg(long = "input-file")]
    pub input_file: Option<PathBuf>,
    /// Language of the words; required for cross-lingual models.
    #[arg(long)]
    pub lang: Option<String>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Labeled file(s); several are pooled.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long = "top-k", default_value_t = 10)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct MakeAuxArgs {
    #[arg(long = "alphabet-from")]
    pub alphabet_from: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Segment(a) => commands::segment(a),
        Command::Stats(a) => commands::stats(a),
        Command::MakeAux(a) => commands::make_aux(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

impl From<clap::Error> for CliError {
    fn from(e: clap::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
