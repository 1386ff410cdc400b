//! Command-line front end: calibration fitting, solving, simulation, sweeps
//! and reporting, each writing its outputs plus a manifest to `--out-dir`.

mod commands;
mod manifest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "h2-storage", version, about = "Hydrogen storage dispatch under grid capacity limits")]
struct Cli {
    /// Worker threads (default: available parallelism). Outputs do not
    /// depend on this value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory receiving all outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

/// System, calibration and grid selection shared by several commands.
#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    /// System configuration JSON (default: the base case).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Calibration JSON written by `fit` (default: synthetic calibration).
    #[arg(long, conflicts_with = "synthetic")]
    pub calibration: Option<PathBuf>,
    /// Use the packaged synthetic calibration.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dc: Option<f64>,
    #[arg(long)]
    pub c_max: Option<f64>,
    #[arg(long)]
    pub dj: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct SolveArgs {
    /// Span tolerance of the yearly value increment.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Upper bound on yearly sweeps.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Run exactly this many yearly sweeps instead of testing the span.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Exit with status 3 when the span criterion is not met.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args, Clone)]
pub struct SimArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated years including the warmup.
    #[arg(long)]
    pub years: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Measured years per replication block.
    #[arg(long)]
    pub block: Option<usize>,
    /// Measured years recorded day by day in trace.csv.
    #[arg(long)]
    pub trace_years: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit price, production and demand models from daily CSV files.
    Fit {
        /// CSV with columns `date,price_eur_mwh`.
        #[arg(long, required_unless_present = "synthetic")]
        prices: Option<PathBuf>,
        /// CSV with columns `date,mwh`.
        #[arg(long, required_unless_present = "synthetic")]
        production: Option<PathBuf>,
        /// CSV with columns `date,mwh`.
        #[arg(long, required_unless_present = "synthetic")]
        consumption: Option<PathBuf>,
        /// Peak capacity (MWp) of the park behind the production series.
        #[arg(long, default_value_t = 5.0)]
        reference_capacity: f64,
        /// Upper end of the production support; defaults to the observed maximum.
        #[arg(long)]
        theoretical_max: Option<f64>,
        /// Write the packaged synthetic calibration instead of fitting.
        #[arg(long)]
        synthetic: bool,
    },
    /// Solve for the periodic optimal policy.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Solve against the seasonality-averaged net production.
        #[arg(long)]
        stationary: bool,
        /// Policy slices, e.g. "day=1,180 percentiles=25,75".
        #[arg(long)]
        export_policy_slices: Option<String>,
        /// Also write the full policy and value table as CSV.
        #[arg(long)]
        export_policy: bool,
    },
    /// Simulate a solved policy.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// policy.bin written by `solve`.
        #[arg(long)]
        policy: PathBuf,
    },
    /// Run a sweep plan, a preset sweep, or the benchmark comparison.
    Sweep {
        /// Plan JSON.
        #[arg(long, conflicts_with_all = ["preset", "benchmarks"])]
        plan: Option<PathBuf>,
        /// Preset sweep name, or `all`.
        #[arg(long, conflicts_with = "benchmarks")]
        preset: Option<String>,
        /// Base case against no storage and against a policy ignoring seasonality.
        #[arg(long)]
        benchmarks: bool,
        /// Give every row the same seed.
        #[arg(long)]
        common_seed: bool,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Summarize existing KPI, benchmark and sweep files.
    Report {
        /// `NAME=PATH` or `PATH`; KPI JSON, benchmark JSON or sweep CSV.
        #[arg(long = "input", required = true, num_args = 1..)]
        inputs: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out_dir) {
        eprintln!("error: cannot create {}: {e}", cli.out_dir.display());
        return ExitCode::from(2);
    }

    let out = cli.out_dir.as_path();
    let result = match cli.command {
        Command::Fit {
            prices,
            production,
            consumption,
            reference_capacity,
            theoretical_max,
            synthetic,
        } => commands::fit(
            out,
            commands::FitInputs {
                prices,
                production,
                consumption,
                reference_capacity,
                theoretical_max,
                synthetic,
            },
        ),
        Command::Solve {
            model,
            solve,
            stationary,
            export_policy_slices,
            export_policy,
        } => commands::solve(out, &model, &solve, stationary, export_policy_slices.as_deref(), export_policy),
        Command::Simulate { model, sim, policy } => commands::simulate(out, &model, &sim, &policy),
        Command::Sweep {
            plan,
            preset,
            benchmarks,
            common_seed,
            model,
            solve,
            sim,
        } => {
            if benchmarks {
                commands::benchmarks(out, &model, &solve, &sim)
            } else {
                commands::sweep(out, plan.as_deref(), preset.as_deref(), common_seed, &model, &solve, &sim)
            }
        }
        Command::Report { inputs } => report::run(out, &inputs),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
