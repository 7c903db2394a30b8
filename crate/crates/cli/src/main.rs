//! `srlcomb`: batch front end for pooling, training, inference and
//! evaluation of semantic role labeling system combinations.

mod commands;
mod inputs;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use srlcomb::calibrate::DEFAULT_GAMMA;
use srlcomb::infer_cs::DEFAULT_MAX_NODES;

/// Exit status for failures the caller can act on.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_FORMAT: u8 = 2;
pub const EXIT_MISMATCH: u8 = 3;
pub const EXIT_TIMEOUT: u8 = 4;

impl Failure {
    pub fn err(code: u8, message: impl Into<String>) -> anyhow::Error {
        anyhow::Error::new(Failure { code, message: message.into() })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

#[derive(Parser, Debug)]
#[command(name = "srlcomb", version, about = "Combine the outputs of several semantic role labelers")]
pub struct Cli {
    /// Worker threads for corpus-level parallelism
    #[arg(long, global = true, env = "SRLCOMB_JOBS", default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a seeded synthetic corpus with gold, syntax and system outputs
    Synth(SynthArgs),
    /// Pool the candidate arguments of all systems and report agreement
    Pool(PoolArgs),
    /// Train a learned candidate scorer
    Train(TrainArgs),
    /// Combine system outputs into one consistent prediction
    Infer(InferArgs),
    /// Precision/recall sweep over the bias O
    Sweep(SweepArgs),
    /// Rejection curves of the calibrated per-system probabilities
    Curves(CurvesArgs),
    /// Oracle upper bounds and voting baselines
    Oracle(OracleArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Inputs {
    /// System output in props format as ID=PATH; repeat in priority order
    #[arg(long = "system", value_name = "ID=PATH", required = true)]
    pub systems: Vec<String>,
    /// Raw score sidecar of a system as ID=PATH
    #[arg(long = "scores", value_name = "ID=PATH")]
    pub scores: Vec<String>,
    /// Gold props file
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Syntax column file (tokens, POS, chunks, clauses, entities, parse)
    #[arg(long)]
    pub syntax: Option<PathBuf>,
    /// Softmax temperature applied to raw scores
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub sentences: usize,
    /// Number of simulated systems
    #[arg(long, default_value_t = 3)]
    pub systems: usize,
    /// Target argument precision of every system
    #[arg(long, default_value_t = 0.8)]
    pub precision: f64,
    /// Target argument recall of every system
    #[arg(long, default_value_t = 0.75)]
    pub recall: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PoolArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Pool dump (JSON)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerArg {
    Probsum,
    Svm,
    PerceptronLocal,
    PerceptronGlobal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineArg {
    Cs,
    Dp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeArg {
    Pred,
    Sentence,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, value_enum, default_value_t = ScorerArg::Svm)]
    pub scorer: ScorerArg,
    /// Inference scope used inside global training
    #[arg(long, value_enum, default_value_t = ScopeArg::Pred)]
    pub scope: ScopeArg,
    /// Feature groups, e.g. "FS1..FS4" or "FS1,FS3"
    #[arg(long, default_value = "FS1..FS6")]
    pub features: String,
    /// Perceptron epochs T
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    /// Polynomial kernel degree d
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    /// SVM soft-margin constant C
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
    /// Fraction of training sentences (taken from the end) held out for
    /// epoch selection in global training
    #[arg(long, default_value_t = 0.0)]
    pub holdout: f64,
    /// Shuffle training order each epoch with this seed; corpus order if absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model file; the vocabulary is written to <MODEL>.vocab
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct InferArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, value_enum, default_value_t = EngineArg::Cs)]
    pub engine: EngineArg,
    #[arg(long, value_enum, default_value_t = ScorerArg::Probsum)]
    pub scorer: ScorerArg,
    /// Scope [default: sentence for cs, pred for dp]
    #[arg(long, value_enum)]
    pub scope: Option<ScopeArg>,
    /// Constraints for the cs engine, e.g. "1+2+5+6" or "1+2+3:soft=0.5"
    #[arg(long, default_value = "1+2+5+6")]
    pub constraints: String,
    /// Score of leaving a candidate out (cs engine)
    #[arg(long = "o", default_value = "0.30")]
    pub o: f64,
    /// Trained model (required unless --scorer probsum)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Vocabulary file [default: <MODEL>.vocab]
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Bootstrap resamples B for the F1 interval (0 disables)
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Bootstrap seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Search nodes per optimization before giving up
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    pub max_nodes: u64,
    /// Predicted props file
    #[arg(long)]
    pub out: PathBuf,
    /// Per-label score report (CSV), when gold is supplied
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, default_value = "1+2+5+6")]
    pub constraints: String,
    #[arg(long, value_enum, default_value_t = ScopeArg::Sentence)]
    pub scope: ScopeArg,
    /// Comma-separated O values [default: 0, 0.05, ..., 1]
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    pub max_nodes: u64,
    /// CSV output; stdout if absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// CSV output; stdout if absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Sort key of the voting baselines, most significant first
    #[arg(long, default_value = "votes,length,priority")]
    pub baseline_key: String,
    /// Report output; stdout if absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.max(1))
        .build()
        .map_err(anyhow::Error::from)
        .and_then(|pool| pool.install(|| commands::run(&cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("srlcomb: {e:#}");
            match e.downcast_ref::<Failure>() {
                Some(f) => ExitCode::from(f.code),
                None => ExitCode::FAILURE,
            }
        }
    }
}
