use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use empowerd::{cmd_agent, cmd_capacity, cmd_heatmap, cmd_train, init_threads, CliError, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "empowerd", version, about = "Empowerment experiments on grid worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Print values in bits instead of nats. Files always hold nats.
    #[arg(long, global = true)]
    bits: bool,

    /// No progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Capacity at the start state, or of a channel file.
    Capacity,
    /// Empowerment of every reachable state.
    Heatmap,
    /// Train the variational model.
    Train,
    /// Run the greedy empowerment agent.
    Agent,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    init_threads()?;
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::from_toml(&text)?.with_seed(cli.seed);
    let opts = RunOptions {
        out: cli
            .out
            .clone()
            .or_else(|| cfg.output.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        bits: cli.bits,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Capacity => cmd_capacity(&cfg, &opts).map(drop),
        Command::Heatmap => cmd_heatmap(&cfg, &opts).map(drop),
        Command::Train => cmd_train(&cfg, &opts).map(drop),
        Command::Agent => cmd_agent(&cfg, &opts).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("empowerd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
