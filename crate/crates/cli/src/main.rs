//! `porous-renewal` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use porous_renewal::Error;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "porous-renewal",
    version,
    about = "Reflectivity of homogenized porous slabs: closed-form estimates, Monte Carlo oracles and fits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command; a `--config` file fills in whatever is not given.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Dissipation factor (1/length)
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Free-path rate (1/length)
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Incidence angle from the slab normal, degrees
    #[arg(long, allow_hyphen_values = true)]
    pub theta_deg: Option<f64>,
    /// Slab height; selects the two-sided model
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<f64>,
    /// Number of rays
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Finite step of the overshoot correction
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub bed_radius: Option<f64>,
    /// Covered area fraction of the disc bed
    #[arg(long)]
    pub bed_vf: Option<f64>,
    #[arg(long)]
    pub bed_width: Option<f64>,
    #[arg(long)]
    pub bed_depth: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scatter {
    Hemispheric,
    Lambertian,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Eta,
    Hmu,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutateArg {
    FlipTwoSidedSign,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form reflectivity: one-sided (--beta --mu) or two-sided (--mu --h)
    Estimate {
        #[command(flatten)]
        common: Common,
    },
    /// Pack-free 1-D Monte Carlo
    #[command(name = "simulate-1d")]
    Simulate1d {
        #[command(flatten)]
        common: Common,
        /// Hyperexponential mixture weights (one-sided only), e.g. 0.5,0.5
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
        /// Hyperexponential rates matching --weights
        #[arg(long, value_delimiter = ',')]
        rates: Vec<f64>,
    },
    /// Geometric ray tracing over a random bed of opaque discs
    #[command(name = "simulate-2d")]
    Simulate2d {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "hemispheric")]
        scatter: Scatter,
        /// Load the bed from a file written by a previous run
        #[arg(long)]
        bed_file: Option<PathBuf>,
        /// Close the side walls instead of wrapping
        #[arg(long)]
        no_wrap: bool,
    },
    /// Exponential fits of a one-value-per-line sample file
    Fit {
        #[command(flatten)]
        common: Common,
        /// Whitespace- or newline-separated free-path samples
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = porous_renewal::fitting::DEFAULT_BINS)]
        bins: usize,
    },
    /// CSV table of estimates (and optional Monte Carlo) over eta or h*mu
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        var: SweepVar,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
        /// Add a Monte Carlo column
        #[arg(long)]
        mc: bool,
    },
    /// Bed, ray tracing, fit and estimates in one run
    #[command(name = "pipeline-2d")]
    Pipeline2d {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "hemispheric")]
        scatter: Scatter,
    },
    /// Run the acceptance grid; exit 3 on any failure
    Validate {
        #[command(flatten)]
        common: Common,
        /// Criteria to run, e.g. 1,9 (default: all)
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        /// Multiply every sample size by this factor
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, value_enum, hide = true)]
        mutate: Option<MutateArg>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) | Error::SingularSystem { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Estimate { common } => commands::estimate(&common),
        Command::Simulate1d { common, weights, rates } => commands::simulate_1d(&common, &weights, &rates),
        Command::Simulate2d {
            common,
            scatter,
            bed_file,
            no_wrap,
        } => commands::simulate_2d(&common, scatter, bed_file.as_deref(), no_wrap),
        Command::Fit { common, input, bins } => commands::fit(&common, &input, bins),
        Command::Sweep {
            common,
            var,
            from,
            to,
            step,
            mc,
        } => commands::sweep(&common, var, from, to, step, mc),
        Command::Pipeline2d { common, scatter } => commands::pipeline_2d(&common, scatter),
        Command::Validate {
            common,
            only,
            scale,
            mutate,
        } => commands::validate(&common, &only, scale, mutate),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
