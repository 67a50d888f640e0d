//! `maximin`: generate, evaluate and compare space-filling designs.

mod commands;
mod compare;
mod error;
mod generate;
mod options;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::options::{Method, MethodOptions};

#[derive(Parser, Debug)]
#[command(name = "maximin", version, about = "Maximin space-filling designs on bounded domains")]
struct Cli {
    /// Directory for output files [default: the current directory]
    #[arg(long, global = true, env = "MAXIMIN_OUT_DIR")]
    out_dir: Option<PathBuf>,

    /// Worker threads for replicate jobs (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

const DEFAULT_DOMAIN: &str = "hypercube";

impl Cli {
    fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate one design and write it as CSV plus JSON metadata
    Gen(GenArgs),
    /// Maximin distance and covering radius of a design file
    Eval(EvalArgs),
    /// Run an experiment file: several methods, many replicates, summary statistics
    Compare(CompareArgs),
    /// Fit a kernel interpolator on a design and score it against a synthetic black box
    Surrogate(SurrogateArgs),
    /// Suggest the initial temperature and proposal variance for a domain
    Tune(TuneArgs),
}

#[derive(clap::Args, Debug)]
struct DomainArgs {
    /// Built-in domain (triangle2d, hypercube, ball, annulus) or a JSON domain spec file [default: hypercube]
    #[arg(long)]
    domain: Option<String>,
    /// Dimension of built-in hypercube, ball and annulus domains [default: 2]
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(clap::Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[command(flatten)]
    domain: DomainArgs,
    /// Number of design points (the target for truncated-lhs)
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random stream of the run
    #[arg(long)]
    stream: Option<u64>,
    /// Base name of the output files [default: the method name]
    #[arg(long)]
    name: Option<String>,
    /// JSON or TOML file with the same keys as the flags; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    options: MethodOptions,
}

#[derive(clap::Args, Debug)]
struct EvalArgs {
    /// Design CSV file
    #[arg(long)]
    design: PathBuf,
    #[command(flatten)]
    domain: DomainArgs,
    /// Uniform samples for the covering-radius estimate
    #[arg(long, value_parser = options::parse_count, default_value = "100000")]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the metrics to this file
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct CompareArgs {
    /// Experiment file (JSON or TOML)
    spec: PathBuf,
}

#[derive(clap::Args, Debug)]
struct SurrogateArgs {
    /// Design CSV file
    #[arg(long)]
    design: PathBuf,
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, value_enum, default_value = "smooth-ridge")]
    blackbox: commands::BlackBoxArg,
    /// Seed of the synthetic black box
    #[arg(long, default_value_t = 0)]
    blackbox_seed: u64,
    /// Number of uniform test points
    #[arg(long, default_value_t = 1000)]
    test_points: usize,
    #[arg(long, default_value_t = 0)]
    test_seed: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    kernel: commands::KernelArg,
    /// Kernel scale; without it the scale is fitted by maximum likelihood
    #[arg(long)]
    theta: Option<f64>,
    /// Exponent of the generalized exponential kernel
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, value_enum, default_value = "constant")]
    trend: commands::TrendArg,
    /// Fit the kernel parameters by maximum likelihood even when --theta is given
    #[arg(long)]
    mle: bool,
    /// Likelihood evaluations for the fit
    #[arg(long, default_value_t = 200)]
    mle_budget: usize,
    #[arg(long, default_value_t = maximin_core::kernel::DEFAULT_NUGGET)]
    nugget: f64,
    /// Base name of the output files
    #[arg(long, default_value = "surrogate")]
    name: String,
}

#[derive(clap::Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long)]
    n: usize,
    /// Uniform designs drawn for the median distance
    #[arg(long, default_value_t = maximin_core::annealer::DEFAULT_T0_REPLICATES)]
    replicates: usize,
    /// T0 as a fraction of the median distance
    #[arg(long, default_value_t = maximin_core::annealer::DEFAULT_T0_FRACTION)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(&cli, a),
        Command::Eval(a) => commands::eval(&cli, a),
        Command::Compare(a) => compare::compare(&a.spec, cli.out_dir.as_deref(), cli.threads),
        Command::Surrogate(a) => commands::surrogate(&cli, a),
        Command::Tune(a) => commands::tune(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
