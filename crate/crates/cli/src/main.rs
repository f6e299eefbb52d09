//! `bertrand-lab` command-line tool.
//!
//! Exit codes: 0 success, 1 some experiment cells failed, 2 configuration
//! error, 3 budget or solver error.

mod plot;
mod solve;
mod svg;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bertrand_lab::config::{read_document, RunFile};
use bertrand_lab::experiments::{compute_references, run_manifest, Manifest, TAIL_WINDOW};
use bertrand_lab::metrics::{ci_price, ci_profit, TailStats};
use bertrand_lab::output::{write_history, write_result};
use bertrand_lab::sim::run_with_observer;
use bertrand_lab::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bertrand-lab", version, about = "Price competition among learning agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute equilibria and other reference objects of a market or matrix game.
    Solve(solve::SolveArgs),
    /// Run one simulation and write its history and final metrics.
    Simulate {
        config: PathBuf,
        #[arg(long, env = "BERTRAND_LAB_OUT", default_value = "results")]
        out: PathBuf,
    },
    /// Run every cell of an experiment manifest.
    Sweep {
        manifest: PathBuf,
        /// Worker threads; 1 runs sequentially. Defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, env = "BERTRAND_LAB_OUT", default_value = "results")]
        out: PathBuf,
        /// Skip SVG generation.
        #[arg(long)]
        no_plots: bool,
    },
    /// Draw SVG charts from the CSV files of a results directory.
    Plot { dir: PathBuf },
}

/// Outcome of a command that ran to completion.
enum Done {
    Ok,
    PartialFailure(usize),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve::run(&args).map(|()| Done::Ok),
        Command::Simulate { config, out } => simulate(&config, &out).map(|()| Done::Ok),
        Command::Sweep { manifest, jobs, out, no_plots } => sweep(&manifest, jobs, &out, no_plots),
        Command::Plot { dir } => plot::plot_dir(&dir).map(|_| Done::Ok),
    };
    match result {
        Ok(Done::Ok) => ExitCode::SUCCESS,
        Ok(Done::PartialFailure(n)) => {
            eprintln!("{n} run(s) failed; see the status column of rows.csv");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } | Error::Infeasible(_) | Error::Numerical(_) | Error::Undefined(_) => 3,
        _ => 2,
    }
}

fn simulate(path: &Path, out: &Path) -> bertrand_lab::Result<()> {
    let config = read_document(path, RunFile::from_toml)?.run_config()?;
    let mut tail = TailStats::new(&config.spec, TAIL_WINDOW);
    let history = run_with_observer(&config, &mut tail)?;
    std::fs::create_dir_all(out)?;
    write_history(BufWriter::new(File::create(out.join("history.csv"))?), &history)?;

    let refs = compute_references(&config.spec).ok();
    let prices = tail.median_prices();
    let profits = tail.mean_profits();
    let profit_index = refs.as_ref().and_then(|r| ci_profit(&profits, &r.prices).ok()).unwrap_or(f64::NAN);
    let mut w = BufWriter::new(File::create(out.join("metrics.csv"))?);
    use std::io::Write;
    writeln!(w, "#schema=bertrand-lab.metrics/v1")?;
    writeln!(w, "player,median_price,ci_price,mean_profit,ci_profit,clamp_events")?;
    for i in 0..prices.len() {
        let ci = refs.as_ref().and_then(|r| ci_price(prices[i], &r.prices, i).ok()).unwrap_or(f64::NAN);
        writeln!(w, "{i},{},{ci},{},{profit_index},{}", prices[i], profits[i], history.clamp_events[i])?;
    }
    w.flush()?;
    println!("{} steps, {} history rows written to {}", config.horizon, history.len(), out.display());
    Ok(())
}

fn sweep(path: &Path, jobs: Option<usize>, out: &Path, no_plots: bool) -> bertrand_lab::Result<Done> {
    if jobs == Some(0) {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let manifest = Manifest::load(path)?;
    let result = run_manifest(&manifest, jobs)?;
    write_result(out, &result)?;
    if !no_plots {
        let n = plot::plot_dir(out)?;
        println!("{n} plot(s) written");
    }
    for (study, seed, msg) in &result.study_failures {
        eprintln!("{study} seed {seed}: {msg}");
    }
    println!("{} rows, {} cells written to {}", result.rows.len(), result.aggregate.len(), out.display());
    match result.failed() {
        0 => Ok(Done::Ok),
        n => Ok(Done::PartialFailure(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::InvalidSpec("x".into())), 2);
        assert_eq!(exit_code(&Error::BudgetExceeded { cells: 2, budget: 1 }), 3);
        assert_eq!(exit_code(&Error::Infeasible("x".into())), 3);
    }
}
