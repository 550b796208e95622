use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hessketch_cli::config::parse_seed;
use hessketch_cli::run::{cmd_compare, cmd_solve, cmd_sweep, summary_text, Options};
use hessketch_cli::{ConfigError, ExperimentConfig, RunError, SweepParam};

/// Run inner-product-free and sketched Krylov solvers on synthetic inverse problems.
#[derive(Parser)]
#[command(name = "hessketch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file.
    config: PathBuf,
    /// Record residuals, oracle bounds and conditioning in the traces.
    #[arg(long)]
    diagnostics: bool,
    /// Record wall-clock milliseconds per iteration (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
    /// Override `output_dir` from the configuration.
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured solver.
    Solve(Common),
    /// Run at least two solvers and write compare.csv and summary.txt.
    Compare(Common),
    /// Repeat the applicable solvers over a list of parameter values.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// lambda, seed, sketch_rows or sample_size.
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values; sample_size also accepts `full`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, Options), RunError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Ok(raw) = std::env::var("HESSKETCH_SEED") {
        let seed = parse_seed(raw.trim()).map_err(|m| ConfigError::new(None, "HESSKETCH_SEED", m))?;
        cfg.override_seeds(seed);
    }
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    let opts = Options {
        diagnostics: common.diagnostics || cfg.diagnostics,
        timing: common.timing,
    };
    Ok((cfg, opts))
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Solve(common) => {
            let (cfg, opts) = load(&common)?;
            print!("{}", summary_text(&cmd_solve(&cfg, opts)?));
        }
        Command::Compare(common) => {
            let (cfg, opts) = load(&common)?;
            print!("{}", summary_text(&cmd_compare(&cfg, opts)?));
        }
        Command::Sweep { common, param, values } => {
            let (cfg, opts) = load(&common)?;
            let rows = cmd_sweep(&cfg, param, &values, opts)?;
            println!("{} runs written to {}", rows.len(), cfg.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
