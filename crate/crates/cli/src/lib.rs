//! `cfshap` command-line interface.
//!
//! Exit codes: 0 on success, 1 for malformed inputs (files, flags, config),
//! 2 when the inputs are well-formed but a domain precondition fails. Every
//! failure prints `{"code", "message", "location"}` as JSON on stderr.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "cfshap",
    version,
    about = "Counterfactual SHAP explanations and recourse evaluation for tree ensembles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explain queries and print one JSON object per (query, method).
    Explain(ExplainArgs),
    /// Run the counterfactual-ability benchmark and write report files.
    Eval(EvalArgs),
    /// Measure per-explanation latency for each method.
    Bench(BenchArgs),
    /// Select the decision threshold from the ROC curve of the training set.
    Threshold(ThresholdArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model file (native JSON or an XGBoost JSON dump).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Training CSV.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Name of the label column.
    #[arg(long)]
    pub label: Option<String>,
    /// Background spec, e.g. "knn:K=100", "train:n=100", "knn-proj:K=100". Repeatable.
    #[arg(long = "method")]
    pub methods: Vec<String>,
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "CFSHAP_THREADS")]
    pub threads: Option<usize>,
    /// Override the model's base score (margin space).
    #[arg(long)]
    pub base_score: Option<f64>,
    /// Override the model's decision threshold (margin space).
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Explain this row (0-based) of the training CSV.
    #[arg(long, conflicts_with = "csv")]
    pub row: Option<usize>,
    /// Explain every row of this CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write JSON lines here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Test CSV; rejected rows are sampled from it.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Top-feature budgets, comma separated.
    #[arg(long = "k", value_delimiter = ',')]
    pub k_values: Vec<usize>,
    /// Action kinds: proportional, random.
    #[arg(long = "action", value_delimiter = ',')]
    pub actions: Vec<String>,
    /// Cost norms: l1, l2.
    #[arg(long = "cost", value_delimiter = ',')]
    pub costs: Vec<String>,
    /// Maximum number of rejected samples to evaluate.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Action sign convention: trend_aligned or negated.
    #[arg(long)]
    pub convention: Option<String>,
    /// Also measure per-method latency into timing.json.
    #[arg(long)]
    pub timing: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Queries are rejected rows of this CSV (training CSV if absent).
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Number of queries.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the timing JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// ROC objective: youden (TPR - FPR) or literal (TPR + FPR).
    #[arg(long, default_value = "youden")]
    pub mode: String,
    /// Write the model with the selected threshold to this path.
    #[arg(long)]
    pub write_model: Option<PathBuf>,
}

/// A failed command, as printed on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub code: String,
    pub message: String,
    pub location: Option<String>,
    #[serde(skip)]
    pub exit_code: i32,
}

impl From<cfshap::Error> for Failure {
    fn from(e: cfshap::Error) -> Self {
        Self {
            code: e.code().to_string(),
            message: e.to_string(),
            location: e.location(),
            exit_code: if e.is_input_error() { 1 } else { 2 },
        }
    }
}

impl Failure {
    pub fn at(mut self, location: String) -> Self {
        self.location = Some(match self.location.take() {
            Some(inner) => format!("{location}: {inner}"),
            None => location,
        });
        self
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let failure = Failure {
                code: "UsageError".into(),
                message: e.to_string().trim().to_string(),
                location: None,
                exit_code: 1,
            };
            return report(&failure, stderr);
        }
    };
    match commands::execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(failure) => report(&failure, stderr),
    }
}

fn report(failure: &Failure, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(
        stderr,
        "{}",
        serde_json::to_string(failure).expect("failure serializes")
    );
    failure.exit_code
}
