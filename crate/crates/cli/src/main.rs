//! `segpost`: change-point posteriors, MAP segmentations, posterior
//! samples, model selection, simulation and timing from the command line.
//!
//! Exit status is 0 on success, 2 on input errors and 3 when the data are
//! numerically degenerate under the model.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "segpost", version)]
#[command(about = "Exact posterior inference for change-point locations")]
struct Cli {
    /// Worker threads; defaults to the number of CPUs
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Change-point marginals and confidence intervals around an initial segmentation
    Posterior(PosteriorArgs),
    /// Most probable segmentation
    Viterbi(ModelArgs),
    /// Segmentations drawn from the posterior, one per line
    Sample(SampleArgs),
    /// Choose the number of segments by BIC
    Select(SelectArgs),
    /// Loss of posterior means on simulated step designs
    Simulate(SimulateArgs),
    /// Time forward-backward and all posteriors on synthetic data
    Bench(BenchArgs),
}

/// Data, initial segmentation and prior shared by the posterior commands.
#[derive(Args, Debug)]
struct ModelArgs {
    /// Observations: one value per line, optional header and label column
    #[arg(long, required_unless_present = "logdens")]
    data: Option<PathBuf>,

    /// Last index (1-based) of every segment but the final one, comma-separated
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    seg: Vec<usize>,

    /// Emission family used to fit segment parameters
    #[arg(long, default_value = "gaussian-homoscedastic")]
    family: String,

    /// Tab-separated n x K table of log-densities replacing the fitted model
    #[arg(long)]
    logdens: Option<PathBuf>,

    /// The log-density table starts with a header row
    #[arg(long, requires = "logdens")]
    header: bool,

    /// Tab-separated K x n table of jump probabilities
    #[arg(long, conflicts_with = "eta")]
    prior: Option<PathBuf>,

    /// Constant jump probability
    #[arg(long, default_value_t = segpost::prior::DEFAULT_ETA)]
    eta: f64,

    /// Write output here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PosteriorArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Confidence levels, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "0.95")]
    ci: Vec<f64>,

    /// Per-position segment probabilities and posterior mean as TSV
    #[arg(long)]
    tracks: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,

    #[arg(long, default_value_t = 100)]
    nsamples: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// One or more observation files; each is processed independently
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,

    #[arg(long, default_value_t = 20)]
    kmax: usize,

    #[arg(long, default_value = "gaussian-homoscedastic")]
    family: String,

    /// Write `<stem>.select.json` and `<stem>.bic.tsv` per input here
    /// instead of JSON lines on stdout
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Design {
    /// 500 observations, change-points after 22, 65, 108, 219, 252, 435
    Short,
    /// 10 000 observations, 39 random change-points
    Long,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// gaussian-homoscedastic or poisson
    #[arg(long, default_value = "gaussian-homoscedastic")]
    family: String,

    #[arg(long, value_enum, default_value_t = Design::Short)]
    design: Design,

    /// Mean of odd segments; 0 for gaussian, 1 for poisson by default
    #[arg(long)]
    theta0: Option<f64>,

    /// Means of even segments, comma-separated
    #[arg(long, value_delimiter = ',')]
    theta1: Vec<f64>,

    #[arg(long, default_value_t = 200)]
    replicates: usize,

    #[arg(long, default_value_t = 15)]
    kmax: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 14_241)]
    n: usize,

    #[arg(long, default_value_t = 11)]
    k: usize,

    #[arg(long, default_value_t = 5)]
    repeats: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Input(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Posterior(a) => commands::posterior(&a),
        Command::Viterbi(a) => commands::viterbi(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Select(a) => commands::select(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Bench(a) => commands::bench(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("segpost: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
