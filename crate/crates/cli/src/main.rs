use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use surro_cli::config::ExperimentConfig;
use surro_cli::error::{io_error, CliError, CliResult, Context};
use surro_cli::run::{run_experiment, summary_line, write_bundle};
use surro_cli::suite;
use surro_cli::sweep::{run_sweep, write_sweep, SweepConfig};

/// Convergence-rate experiments for surrogate-minimization algorithms.
#[derive(Parser)]
#[command(name = "surro", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write trace.csv and rates.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write plot.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Run the acceptance experiments and write suite.json.
    Suite {
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of experiment ids, e.g. E1,E4.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Randomized checks of the matrix lemmas.
    Lemmas {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Sample-size sweep of the empirical rate.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Status {
    Pass,
    Fail,
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SURRO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("SURRO_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn cmd_run(config: &Path, out: &Path, plot: bool) -> CliResult<Status> {
    let cfg = ExperimentConfig::load(config)?;
    let outcome = run_experiment(&cfg)?;
    write_bundle(&outcome, out, plot)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", summary_line(&outcome));
    Ok(if outcome.all_pass() { Status::Pass } else { Status::Fail })
}

fn cmd_suite(out: &Path, only: &[String]) -> CliResult<Status> {
    let known = suite::ids();
    let unknown: Vec<&String> = only.iter().filter(|id| !known.contains(&id.as_str())).collect();
    if !unknown.is_empty() {
        return Err(CliError::Usage(format!("unknown experiment ids: {unknown:?}")));
    }
    let results = if only.is_empty() {
        suite::run_suite()
    } else {
        let ids: Vec<&str> = only.iter().map(String::as_str).collect();
        suite::run_selected(&ids)
    };
    std::fs::create_dir_all(out).map_err(io_error(out))?;
    let path = out.join("suite.json");
    std::fs::write(&path, suite::suite_text(&results)).map_err(io_error(&path))?;
    for r in &results {
        println!("{}", r.line());
    }
    Ok(if results.iter().all(|r| r.pass()) { Status::Pass } else { Status::Fail })
}

fn cmd_lemmas(trials: usize, seed: u64) -> CliResult<Status> {
    let outcomes = surro_core::lemmas::run_all(trials, seed).context(|| "lemma suites".into())?;
    let mut ok = true;
    for o in &outcomes {
        println!(
            "{}: {} trials, {} counterexamples, worst {:.3e}",
            o.name, o.trials, o.counterexamples, o.worst
        );
        for s in &o.shown {
            println!("  {s}");
        }
        ok &= o.passed();
    }
    Ok(if ok { Status::Pass } else { Status::Fail })
}

fn cmd_sweep(config: &Path, out: &Path) -> CliResult<Status> {
    let cfg = SweepConfig::load(config)?;
    let outcome = run_sweep(&cfg)?;
    write_sweep(&outcome, out)?;
    for s in &outcome.summary {
        println!(
            "k={}: median |dev| {:.3e}, q90 |dev| {:.3e}",
            s.k, s.median_abs_dev, s.q90_abs_dev
        );
    }
    Ok(Status::Pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Run { config, out, plot } => cmd_run(config, out, *plot),
        Command::Suite { out, only } => cmd_suite(out, only),
        Command::Lemmas { trials, seed } => cmd_lemmas(*trials, *seed),
        Command::Sweep { config, out } => cmd_sweep(config, out),
    });
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
