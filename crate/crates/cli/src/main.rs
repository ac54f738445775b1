//! `simcorr`: robust similarity-based correlation from the command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

mod commands;
mod document;
mod error;
mod panel;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{LawArg, ModeArg, TableFormat, TargetArg};
use error::CliError;
use panel::HeaderMode;

#[derive(Parser)]
#[command(name = "simcorr", version, about = "Robust similarity-based correlation estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// CSV panel: one column per series, one row per date.
    file: PathBuf,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[arg(long, value_enum, default_value_t = HeaderMode::Auto)]
    header: HeaderMode,
}

#[derive(Subcommand)]
enum Command {
    /// Similarity estimate of the correlation, optionally with benchmarks.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
        /// Subtract column means first.
        #[arg(long)]
        demean: bool,
        /// none, sample, or scales=s1,s2,...
        #[arg(long, default_value = "none")]
        standardize: String,
        /// Add ω_n to the mean similarity (relevant for more than two columns).
        #[arg(long)]
        bias_correct: bool,
        /// Also report sample, Fisher, Kendall, Greiner and quadrant estimates.
        #[arg(long)]
        benchmarks: bool,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Confidence interval for the correlation.
    Ci {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Defaults to exact for T ≤ 100 and asymptotic above.
        #[arg(long, value_enum)]
        law: Option<LawArg>,
        #[arg(long, value_enum, default_value_t = TargetArg::Rho)]
        target: TargetArg,
        #[arg(long)]
        demean: bool,
        #[arg(long, default_value = "none")]
        standardize: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Critical values of the standardized estimator.
    Quantiles {
        /// Sample sizes, e.g. 1-25,30,100.
        #[arg(long = "T-list")]
        t_list: Option<String>,
        /// Probabilities, e.g. 0.9,0.95.
        #[arg(long = "p-list")]
        p_list: Option<String>,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo sampling study on an elliptical family.
    Simulate {
        /// gaussian, t:<nu> or cauchy.
        #[arg(long)]
        family: String,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long = "T")]
        t: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        /// Comma list of similarity, sample, fisher-sample, kendall, kendall-greiner, quadrant; or all.
        #[arg(long, default_value = "similarity")]
        estimators: String,
        /// Histogram CSV; defaults to <out>.histogram.csv when --out is given.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Two-step fit of the EGARCH and similarity-driven correlation model.
    Garch {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Write per-date h, z, φ and ρ to CSV.
        #[arg(long)]
        emit_paths: bool,
        /// Path CSV; defaults to <out>.paths.csv.
        #[arg(long)]
        paths_file: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn input(a: &InputArgs) -> Result<commands::Input<'_>, CliError> {
    if !a.delimiter.is_ascii() {
        return Err(CliError::Usage(format!("--delimiter must be a single ASCII character, got {:?}", a.delimiter)));
    }
    Ok(commands::Input {
        file: &a.file,
        delimiter: a.delimiter as u8,
        header: a.header,
    })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Estimate { input: i, demean, standardize, bias_correct, benchmarks, out } => {
            commands::estimate(&commands::EstimateArgs {
                input: input(i)?,
                demean: *demean,
                standardize,
                bias_correct: *bias_correct,
                benchmarks: *benchmarks,
                out: out.as_deref(),
            })
        }
        Command::Ci { input: i, level, law, target, demean, standardize, out } => commands::ci(&commands::CiArgs {
            input: input(i)?,
            level: *level,
            law: *law,
            target: *target,
            demean: *demean,
            standardize,
            out: out.as_deref(),
        }),
        Command::Quantiles { t_list, p_list, format, out } => commands::quantiles(&commands::QuantileArgs {
            t_list: t_list.as_deref(),
            p_list: p_list.as_deref(),
            format: *format,
            out: out.as_deref(),
        }),
        Command::Simulate { family, rho, n, t, reps, seed, estimators, histogram, out } => {
            commands::simulate(&commands::SimulateArgs {
                family,
                rho: *rho,
                n: *n,
                t: *t,
                reps: *reps,
                seed: *seed,
                estimators,
                histogram: histogram.as_deref(),
                out: out.as_deref(),
            })
        }
        Command::Garch { input: i, mode, emit_paths, paths_file, out } => commands::garch(&commands::GarchArgs {
            input: input(i)?,
            mode: *mode,
            emit_paths: *emit_paths,
            paths_file: paths_file.as_deref(),
            out: out.as_deref(),
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simcorr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
