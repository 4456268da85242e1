mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netavg::independence::CiTest;
use netavg::{Algorithm, LearnerConfig, Method};

#[derive(Parser)]
#[command(name = "netavg", version, about = "Bootstrap model averaging for discrete Bayesian networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a categorical sample from a network file and write it as CSV.
    Sample(SampleArgs),
    /// Learn one network from a CSV file and print it as JSON.
    Learn(LearnArgs),
    /// Estimate edge confidences, pick a threshold and build the averaged network.
    Avgnet(AvgnetArgs),
    /// Run a simulation study from a TOML config and write TSV tables.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Network definition (JSON).
    #[arg(long)]
    network: PathBuf,
    /// Number of rows, at least 1.
    #[arg(long)]
    n: usize,
    /// Master seed; falls back to NETAVG_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct LearnerArgs {
    #[arg(long, default_value = "hc")]
    algorithm: Algorithm,
    /// Significance level of the independence tests.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// BDeu equivalent sample size.
    #[arg(long, default_value_t = 10.0)]
    ess: f64,
    /// Independence test: mi-sh (shrinkage) or mi (G2).
    #[arg(long, default_value = "mi-sh")]
    test: CiTest,
    /// Random restarts for hill climbing.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Tabu list length for hill climbing (0 disables tabu search).
    #[arg(long, default_value_t = 0)]
    tabu: usize,
    #[arg(long)]
    max_parents: Option<usize>,
    /// Network file whose level sets fix the CSV columns.
    #[arg(long)]
    network: Option<PathBuf>,
}

impl LearnerArgs {
    fn config(&self) -> LearnerConfig {
        LearnerConfig {
            algorithm: self.algorithm,
            alpha: self.alpha,
            ess: self.ess,
            test: self.test,
            restarts: self.restarts,
            tabu: self.tabu,
            max_parents: self.max_parents,
            ..LearnerConfig::default()
        }
    }
}

#[derive(Args)]
struct LearnArgs {
    /// Input CSV.
    data: PathBuf,
    #[command(flatten)]
    learner: LearnerArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AvgnetArgs {
    /// Input CSV (omit when using --confidences-file).
    data: Option<PathBuf>,
    #[command(flatten)]
    learner: LearnerArgs,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 200)]
    m: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted. Output does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// l1, adhoc:<t> or noisefloor.
    #[arg(long, default_value = "l1")]
    method: Method,
    /// Use a confidence profile (JSON) instead of bootstrapping data.
    #[arg(long, conflicts_with = "data")]
    confidences_file: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors; 2 is reserved for bad data here
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = run(cli.command);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.kind.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> error::CliResult<()> {
    match command {
        Command::Sample(a) => commands::sample(&a.network, a.n, commands::seed(a.seed)?, a.out.as_deref()),
        Command::Learn(a) => commands::learn(
            &a.data,
            &a.learner.config(),
            a.learner.network.as_deref(),
            commands::seed(a.seed)?,
            a.out.as_deref(),
        ),
        Command::Avgnet(a) => commands::avgnet(commands::AvgnetRequest {
            data: a.data.as_deref(),
            confidences: a.confidences_file.as_deref(),
            learner: a.learner.config(),
            levels_from: a.learner.network.as_deref(),
            replicates: a.m,
            seed: commands::seed(a.seed)?,
            jobs: a.jobs.unwrap_or(0),
            method: a.method,
            out: a.out.as_deref(),
        }),
        Command::Experiment(a) => commands::experiment(&a.config, a.jobs.unwrap_or(0)),
    }
}
