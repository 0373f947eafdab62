//! `plutus`: deterministic backtests, parameter search, and repository
//! compliance checks from one binary.
//!
//! Every run command reads a flat `key = value` config, writes its result
//! files plus a manifest into `--out`, and prints a short summary. Exit
//! codes: 0 success, 2 config error, 3 data error, 4 runtime error,
//! 5 compliance failure. Errors print a single machine-parsable line to
//! stderr: `error: <category>: <detail>`.

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};

use plutus_core::config::load_config;
use plutus_core::pipeline::{
    run_backtest_market_maker, run_backtest_smart_beta, run_check, run_metrics,
    run_optimize_market_maker, run_optimize_smart_beta, RunError, RunOutcome,
};

#[derive(Parser)]
#[command(
    name = "plutus",
    version,
    about = "Deterministic backtesting, optimization, and README compliance checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the monthly value-screen strategy over a fundamentals table
    BacktestSmartBeta(RunArgs),
    /// Replay the inventory-aware quoting engine over a tick series
    BacktestMarketMaker(RunArgs),
    /// Random-search the screen bounds for the best Sharpe ratio
    OptimizeSmartBeta(OptimizeArgs),
    /// Random-search the quote step for the best Sharpe ratio
    OptimizeMarketMaker(OptimizeArgs),
    /// Compute performance metrics for a stored NAV series
    Metrics(RunArgs),
    /// Score a repository's README against the section standard
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file (flat `key = value` lines)
    #[arg(long)]
    config: PathBuf,
    /// Directory for result files (created if absent)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Override optimizer.seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Override optimizer.n_trials from the config
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    /// Repository directory to score
    #[arg(long)]
    repo: PathBuf,
    /// Ruleset CSV (`name,required,aliases,step_tag`); defaults to the
    /// built-in standard
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Also write the report as machine-readable key-value lines
    #[arg(long)]
    out: Option<PathBuf>,
}

fn prepare_out_dir(args: &RunArgs) -> Result<(), RunError> {
    std::fs::create_dir_all(&args.out)
        .map_err(|e| RunError::Runtime(format!("creating {}: {e}", args.out.display())))
}

fn run_command(
    args: &RunArgs,
    overrides: Option<(&Option<u64>, &Option<usize>)>,
    f: impl FnOnce(&plutus_core::config::RunConfig, &std::path::Path) -> Result<RunOutcome, RunError>,
) -> Result<RunOutcome, RunError> {
    let mut cfg = load_config(&args.config)?;
    if let Some((seed, trials)) = overrides {
        if let Some(seed) = seed {
            cfg.optimizer.seed = *seed;
        }
        if let Some(trials) = trials {
            if *trials == 0 {
                return Err(RunError::Config("--trials must be >= 1".into()));
            }
            cfg.optimizer.n_trials = *trials;
        }
    }
    prepare_out_dir(args)?;
    f(&cfg, &args.out)
}

fn dispatch(cli: Cli) -> Result<String, RunError> {
    let started_at = Utc::now();
    match cli.command {
        Command::BacktestSmartBeta(args) => {
            run_command(&args, None, |cfg, out| run_backtest_smart_beta(cfg, out, started_at))
                .map(|o| o.summary)
        }
        Command::BacktestMarketMaker(args) => {
            run_command(&args, None, |cfg, out| run_backtest_market_maker(cfg, out, started_at))
                .map(|o| o.summary)
        }
        Command::OptimizeSmartBeta(args) => run_command(
            &args.run,
            Some((&args.seed, &args.trials)),
            |cfg, out| run_optimize_smart_beta(cfg, out, started_at),
        )
        .map(|o| o.summary),
        Command::OptimizeMarketMaker(args) => run_command(
            &args.run,
            Some((&args.seed, &args.trials)),
            |cfg, out| run_optimize_market_maker(cfg, out, started_at),
        )
        .map(|o| o.summary),
        Command::Metrics(args) => {
            run_command(&args, None, |cfg, out| run_metrics(cfg, out, started_at))
                .map(|o| o.summary)
        }
        Command::Check(args) => {
            let report = run_check(&args.repo, args.rules.as_deref(), args.out.as_deref())?;
            if report.all_required_present() {
                Ok(report.to_text())
            } else {
                // The report still goes to stdout so the caller sees what
                // was missing; the exit status signals the failure.
                print!("{}", report.to_text());
                Err(RunError::Compliance(format!(
                    "score {} ({} of {} required sections missing)",
                    report.score, report.required_missing, report.required_total
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {}", e.category(), e.detail());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
