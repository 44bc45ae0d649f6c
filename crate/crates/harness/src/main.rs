use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dyadic_sketch::bandit::{BetaMode, PolicyKind};

use dbs_harness::{emit_csv, run_experiment, ExperimentConfig, ExperimentKind, Result};

#[derive(Parser)]
#[command(name = "dbs-bench", version, about = "Dyadic block sketching experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its metrics as CSV.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON or TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment preset (ignored when --config is given).
    #[arg(long, value_enum)]
    experiment: Option<ExperimentKind>,
    #[arg(long)]
    d: Option<usize>,
    /// Number of rounds (rows for approx).
    #[arg(long = "T")]
    rounds: Option<usize>,
    /// Arms per round.
    #[arg(long = "K")]
    arms: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    l0: Option<usize>,
    /// Sketch size of the single-sketch baselines.
    #[arg(long)]
    sketch_size: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Fixed confidence radius.
    #[arg(long)]
    beta: Option<f64>,
    /// Failure probability of the theoretical confidence radius.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Labeled dataset for classification.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// IDX label file when --dataset is an IDX image file.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    target_label: Option<i64>,
    /// Run every policy over the default β/λ grid.
    #[arg(long)]
    sweep: bool,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, args.experiment) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(kind)) => ExperimentConfig::preset(kind),
        (None, None) => {
            return Err(dbs_harness::HarnessError::Config(
                "either --config or --experiment is required".into(),
            ))
        }
    };
    if let Some(v) = args.d {
        cfg.d = v;
    }
    if let Some(v) = args.rounds {
        cfg.rounds = v;
    }
    if let Some(v) = args.arms {
        cfg.arms = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.reps {
        cfg.repetitions = v;
    }
    if let Some(v) = &args.out {
        cfg.output = Some(v.clone());
    }
    if let Some(v) = &args.dataset {
        cfg.dataset = Some(v.clone());
    }
    if let Some(v) = &args.labels {
        cfg.labels = Some(v.clone());
    }
    if let Some(v) = args.target_label {
        cfg.target_label = v;
    }
    if args.sweep && cfg.sweep.is_none() {
        cfg.sweep = Some(Default::default());
    }
    if let Some(v) = args.epsilon {
        cfg.approx.epsilon = v;
    }
    if let Some(v) = args.l0 {
        cfg.approx.l0 = v;
    }
    if let Some(v) = args.sketch_size {
        cfg.approx.fd_sketch_size = v;
    }
    for p in &mut cfg.policies {
        match &mut p.kind {
            PolicyKind::Soful { l } | PolicyKind::Cbscfd { l } => {
                if let Some(v) = args.sketch_size {
                    *l = v;
                }
            }
            PolicyKind::DbsFd { l0, epsilon } | PolicyKind::DbsRfd { l0, epsilon } => {
                if let Some(v) = args.l0 {
                    *l0 = v;
                }
                if let Some(v) = args.epsilon {
                    *epsilon = v;
                }
            }
            PolicyKind::Oful => {}
        }
        if let Some(v) = args.lambda {
            p.lambda = v;
        }
        if let Some(v) = args.beta {
            p.beta.mode = BetaMode::Fixed;
            p.beta.fixed_value = v;
        }
        if let Some(v) = args.delta {
            p.beta.delta = v;
        }
    }
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = build_config(args)?;
    let table = run_experiment(&cfg)?;
    match &cfg.output {
        Some(path) => emit_csv(&table, path),
        None => {
            print!("{}", table.to_csv_string());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
