//! `leafdeg`: enumerate, solve, fit, simulate and compare leaf-degree queue
//! models.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 unconverged fit,
//! 3 numerical failure.

mod commands;
mod error;
mod io;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leafdeg::QueueModel;

#[derive(Debug, Parser)]
#[command(
    name = "leafdeg",
    version,
    about = "Leaf-degree queue models of Gnutella ultrapeers"
)]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "LEAFDEG_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct CapsArgs {
    /// Maximum leaf connections.
    #[arg(long)]
    pub cm: Option<u32>,
    /// Good-leaf threshold.
    #[arg(long)]
    pub cg: Option<u32>,
    /// Non-LimeWire reserve.
    #[arg(long)]
    pub cn: Option<u32>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Rates file with one `key=value` per line.
    #[arg(long)]
    pub rates: Option<PathBuf>,
    /// Inline rate, e.g. `-r lambda_g=11.0926`; overrides the file.
    #[arg(short = 'r', long = "rate", value_name = "KEY=VALUE")]
    pub rate: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count (and optionally list) the states of a model.
    States {
        model: QueueModel,
        #[command(flatten)]
        caps: CapsArgs,
        /// Write the listing as CSV to this path.
        #[arg(long)]
        list: Option<PathBuf>,
    },
    /// Solve for the equilibrium distribution and its marginals.
    Solve {
        model: QueueModel,
        #[command(flatten)]
        caps: CapsArgs,
        #[command(flatten)]
        rates: RateArgs,
        /// Also write a plot (SVG) and its series CSV.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Fit model rates to an empirical degree histogram.
    Fit {
        model: QueueModel,
        /// CSV with header `degree,count` or `degree,probability`.
        #[arg(long)]
        histogram: PathBuf,
        #[command(flatten)]
        caps: CapsArgs,
        /// Initial rates (defaults to the published fit for the model).
        #[command(flatten)]
        rates: RateArgs,
        /// LNL only: start from the mapping of these GBN rates.
        #[arg(long, value_name = "GBN_RATES_FILE")]
        init_from_gbn: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        /// Initial simplex edge in log-rate units.
        #[arg(long, default_value_t = 0.25)]
        scale: f64,
        /// Log-normal sigma of restart jitter.
        #[arg(long, default_value_t = 0.25)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Estimate the degree distribution by stochastic simulation.
    Simulate {
        model: QueueModel,
        #[command(flatten)]
        caps: CapsArgs,
        #[command(flatten)]
        rates: RateArgs,
        /// Number of simulated ultrapeer lives.
        #[arg(long, default_value_t = 100_000)]
        lives: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Event cap per life (or for the whole run with --time).
        #[arg(long, default_value_t = 10_000_000)]
        max_events: u64,
        /// Simulate one infinite-life trajectory of this length instead.
        #[arg(long)]
        time: Option<f64>,
        /// Estimate CSV path (default: <out-dir>/estimate.csv).
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// L1 distance between two distribution CSVs.
    Compare { a: PathBuf, b: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let out = cli.out_dir;
    let result = match cli.command {
        Command::States { model, caps, list } => commands::states(model, &caps, list.as_deref()),
        Command::Solve {
            model,
            caps,
            rates,
            plot,
        } => commands::solve(model, &caps, &rates, &out, plot.as_deref()),
        Command::Fit {
            model,
            histogram,
            caps,
            rates,
            init_from_gbn,
            max_iter,
            tol,
            restarts,
            scale,
            jitter,
            seed,
            plot,
        } => {
            let opts = leafdeg::fitting::FitOptions {
                max_iterations: max_iter,
                tolerance: tol,
                restarts,
                initial_scale: scale,
                jitter,
                seed,
            };
            commands::fit(commands::FitRequest {
                model,
                histogram: &histogram,
                caps: &caps,
                rates: &rates,
                init_from_gbn: init_from_gbn.as_deref(),
                opts,
                out_dir: &out,
                plot: plot.as_deref(),
            })
        }
        Command::Simulate {
            model,
            caps,
            rates,
            lives,
            seed,
            max_events,
            time,
            output,
            plot,
        } => {
            let output = output.unwrap_or_else(|| io::out_path(&out, "estimate.csv"));
            commands::simulate(commands::SimRequest {
                model,
                caps: &caps,
                rates: &rates,
                lives,
                seed,
                max_events,
                time,
                output: &output,
                plot: plot.as_deref(),
            })
        }
        Command::Compare { a, b } => commands::compare(&a, &b),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
