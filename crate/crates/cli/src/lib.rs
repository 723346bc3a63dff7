//! `monlab`: bench, fit, derive, simulate and report from one command line.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 runtime abort.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use monlab_core::dist::Family;

pub mod cmd;
pub mod error;
pub mod manifest;
pub mod output;

pub use error::CliError;
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "monlab", version, about = "Monitoring performance lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run a manager/agent benchmark described by a plan file.
    Bench {
        /// Flat `key = value` plan.
        #[arg(long)]
        plan: PathBuf,
        /// Overrides the plan's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $MONLAB_OUT/<run_id>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit delay distributions and select the best by KS distance.
    Fit {
        /// One delay per line, or a CSV with a `delay_s` column.
        #[arg(long)]
        delays: PathBuf,
        /// Restrict to these families (repeatable); all three by default.
        #[arg(long = "family")]
        families: Vec<Family>,
        /// Accepted for uniformity; fitting is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derived metrics over a sweep of run directories.
    Derive {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Factor value of the baseline run.
        #[arg(long)]
        baseline: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a centralized aggregation monitor under random delays.
    Simulate {
        #[arg(long)]
        agents: usize,
        /// Poll interval in seconds.
        #[arg(long)]
        interval: f64,
        /// Seconds.
        #[arg(long)]
        duration: f64,
        /// `weibull:shape,scale`, `lognormal:mu,sigma`, `normal:mu,sigma` or `const:S`.
        #[arg(long)]
        delay: String,
        /// `rate:R` or `walk:STEP`.
        #[arg(long, default_value = "rate:1")]
        process: String,
        /// `sum` or `mean`.
        #[arg(long, default_value = "sum")]
        agg: String,
        /// Seconds of manager processing per response (0 = none).
        #[arg(long, default_value_t = 0.0)]
        manager_service: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot-ready data and a markdown summary from run, derive and simulate outputs.
    Report {
        dirs: Vec<PathBuf>,
        /// Accepted for uniformity; reporting is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs a parsed command, returning its output directory.
pub fn execute(cli: &Cli) -> Result<PathBuf, CliError> {
    match &cli.command {
        Cmd::Bench { plan, seed, out } => cmd::bench::run(plan, *seed, out.as_deref()),
        Cmd::Fit {
            delays,
            families,
            out,
            ..
        } => cmd::fit::run(delays, families, out.as_deref()),
        Cmd::Derive { runs, baseline, out } => cmd::derive::run(runs, *baseline, out.as_deref()),
        Cmd::Simulate {
            agents,
            interval,
            duration,
            delay,
            process,
            agg,
            manager_service,
            seed,
            out,
        } => cmd::simulate::run(&cmd::simulate::SimArgs {
            agents: *agents,
            interval: *interval,
            duration: *duration,
            delay,
            process,
            aggregation: agg,
            manager_service: *manager_service,
            seed: *seed,
            out: out.as_deref(),
        }),
        Cmd::Report { dirs, out, .. } => cmd::report::run(dirs, out.as_deref()),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Never panics.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(dir)) => {
            println!("{}", dir.display());
            0
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal failure");
            3
        }
    }
}
