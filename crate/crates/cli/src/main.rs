mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use helio2d::forward::SolverKind;
use helio2d::hodlr::HodlrOptions;

/// Acoustic scattering and inverse obstacle reconstruction in two dimensions.
#[derive(Parser, Debug)]
#[command(name = "helio2d", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "HELIO2D_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Far field of a sound-soft obstacle for one incident plane wave.
    Forward(ForwardArgs),
    /// Synthetic noisy far-field data set for a known obstacle.
    Synth(SynthArgs),
    /// Multi-frequency reconstruction from a data set.
    Invert(InvertArgs),
    /// Low-pass filter a curve and reparametrize it by arclength.
    Filter(FilterArgs),
    /// Point-source benchmark on the star-shaped curve.
    Table1(Table1Args),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Dense,
    Hodlr,
    Auto,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Cfie,
    Green,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = SolverChoice::Auto)]
    solver: SolverChoice,
    /// Compression tolerance of the hierarchical solver.
    #[arg(long, default_value_t = 1e-10)]
    hodlr_tol: f64,
}

impl SolverArgs {
    pub fn kind(&self) -> SolverKind {
        let hodlr = SolverKind::Hodlr(HodlrOptions { tol: self.hodlr_tol, ..HodlrOptions::default() });
        match self.solver {
            SolverChoice::Dense => SolverKind::Dense,
            SolverChoice::Hodlr => hodlr,
            SolverChoice::Auto => SolverKind::Auto,
        }
    }
}

#[derive(Args, Debug)]
pub struct ForwardArgs {
    /// Curve file; the seven-lobed star if omitted.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    k: f64,
    /// Incident direction angle in radians.
    #[arg(long, default_value_t = 0.0)]
    direction: f64,
    /// Number of far-field angles.
    #[arg(long, default_value_t = 64)]
    angles: usize,
    /// Quadrature nodes; `ceil(factor k |Gamma|)` if omitted.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value_t = 20.0)]
    factor: f64,
    #[arg(long, value_enum, default_value_t = Formulation::Cfie)]
    formulation: Formulation,
    #[command(flatten)]
    solver: SolverArgs,
    /// Run the point-source benchmark at this `k` instead.
    #[arg(long)]
    table1: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// True curve file; the seven-lobed star if omitted.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Reconstruction config; replaces the sweep flags below.
    #[arg(long, conflicts_with_all = ["k0", "dk", "stages", "directions", "angles"])]
    config: Option<PathBuf>,
    #[arg(long)]
    k0: Option<f64>,
    #[arg(long)]
    dk: Option<f64>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    angles: Option<usize>,
    /// Relative noise level.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct InvertArgs {
    /// Data set directory written by `synth`.
    #[arg(long)]
    data: PathBuf,
    /// Reconstruction config; replaces the sweep flags below.
    #[arg(long, conflicts_with_all = ["k0", "dk", "stages", "directions", "angles", "max_iters"])]
    config: Option<PathBuf>,
    #[arg(long)]
    k0: Option<f64>,
    #[arg(long)]
    dk: Option<f64>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    angles: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long)]
    curve: PathBuf,
    /// First filtered frequency.
    #[arg(long)]
    b: usize,
    /// Width of the roll-off.
    #[arg(long, default_value_t = 50)]
    nb: usize,
    /// Number of modes of the output curve.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Table1Args {
    #[arg(long, num_args = 1.., default_values_t = [1.0, 2.0, 4.0, 8.0])]
    k: Vec<f64>,
    /// Nodes per unit of `k |Gamma|`.
    #[arg(long, default_value_t = 100.0)]
    factor: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Error bound; 1e-10 for the dense solver and 1e-9 otherwise.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return commands::report_error("threads", &e.to_string());
        }
    }
    let result = match cli.command {
        Command::Forward(a) => commands::forward(a),
        Command::Synth(a) => commands::synth(a),
        Command::Invert(a) => commands::invert(a),
        Command::Filter(a) => commands::filter(a),
        Command::Table1(a) => commands::table1(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => commands::report_error(e.kind(), &e.to_string()),
    }
}
