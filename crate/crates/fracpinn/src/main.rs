use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracpinn::compare::{compare, CompareOptions};
use fracpinn::experiment::thread_count;
use fracpinn::{
    replay, run, selftest, AppError, ExperimentConfig, Forcing, Layout, Overrides, RunOptions,
};
use fracpinn_core::ProblemId;

#[derive(Parser)]
#[command(
    name = "fracpinn",
    version,
    about = "PINN solver for fractional differential equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a benchmark problem and write MAE tables and plots.
    Run(RunArgs),
    /// Re-run the configuration stored in a run manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory [default: <manifest dir>/replay]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare an MAE table against reference values.
    Compare {
        ours: PathBuf,
        reference: PathBuf,
        /// Column of our table [default: columns shared by both tables]
        #[arg(long)]
        ours_col: Option<String>,
        /// Column of the reference table
        #[arg(long)]
        ref_col: Option<String>,
        /// Side-by-side CSV [default: <ours>_vs_<reference>.csv next to ours]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the quadrature, L1 and gradient self-checks.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// ex1, ex2 or ex3
    problem: String,
    /// Fractional orders, comma separated
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    epochs: Option<usize>,
    /// L1 grid intervals, comma separated
    #[arg(long, value_delimiter = ',')]
    l1_points: Option<Vec<usize>>,
    #[arg(long)]
    quad_order: Option<usize>,
    /// Collocation points per epoch
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hidden layer widths, comma separated
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Forcing coefficient of ex2
    #[arg(long, value_enum)]
    forcing: Option<Forcing>,
    #[arg(long, value_enum)]
    layout: Option<Layout>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn options() -> Result<RunOptions, AppError> {
    Ok(RunOptions {
        threads: thread_count()?,
        verbose: true,
    })
}

fn run_command(args: RunArgs) -> Result<(), AppError> {
    let problem: ProblemId = args.problem.parse()?;
    let cfg = ExperimentConfig::resolve(
        problem,
        Overrides {
            alphas: args.alpha,
            l1_points: args.l1_points,
            epochs: args.epochs,
            quad_order: args.quad_order,
            batch: args.batch,
            learning_rate: args.lr,
            seed: args.seed,
            hidden: args.hidden,
            forcing: args.forcing,
            layout: args.layout,
            out_dir: Some(args.out),
        },
    )?;
    let out = run(&cfg, options()?)?;
    println!("wrote {}", out.out_dir.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<bool, AppError> {
    match cli.command {
        Command::Run(args) => run_command(args).map(|_| true),
        Command::Replay { manifest, out } => {
            let out = out.unwrap_or_else(|| {
                manifest
                    .parent()
                    .unwrap_or_else(|| std::path::Path::new("."))
                    .join("replay")
            });
            let r = replay(&manifest, &out, options()?)?;
            println!("wrote {}", r.out_dir.display());
            Ok(true)
        }
        Command::Compare {
            ours,
            reference,
            ours_col,
            ref_col,
            out,
        } => {
            let summary = compare(
                &ours,
                &reference,
                &CompareOptions {
                    ours_col,
                    ref_col,
                    out,
                },
            )?;
            println!("{summary}");
            Ok(true)
        }
        Command::Selftest => {
            let checks = selftest::all_checks()?;
            for c in &checks {
                println!("{}", c.line());
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
