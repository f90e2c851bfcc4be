use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::{ExperimentConfig, Kind};
use super::{io, run, Status, Summary};

#[derive(Debug, Parser)]
#[command(name = "carlson", version, about = "Atomic line measures and Carlson mean-value experiments")]
pub struct Cli {
    /// Seed for every random choice made by the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Artifact path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON file with default values for any flag; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form Lebesgue means on Re s = σ against Σ|a_n|² n^{-2σ}.
    VerifySigma(VerifySigmaArgs),
    /// Build λ for a point-mass μ and write the atom file.
    BuildMeasure(BuildArgs),
    /// Atomic time means at each level boundary against Σ c_j |F(ω_j)|².
    VerifyBoundary(VerifyBoundaryArgs),
    /// Windowed construction for a sequence of point-mass approximants.
    NestedBuild(NestedArgs),
    /// Torus moments seen through an atom file or the Lebesgue line.
    Moments(MomentsArgs),
    /// Solve one simultaneous approximation problem.
    Kronecker(KroneckerArgs),
}

#[derive(Debug, Args)]
pub struct VerifySigmaArgs {
    #[arg(long)]
    pub poly: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Comma-separated increasing T values.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    /// Largest accepted error on the last row.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also estimate the target by Monte Carlo with this many torus samples.
    #[arg(long)]
    pub mc_samples: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[arg(long)]
    pub levels: Option<u32>,
    /// `default` (2^k) or `const:N`.
    #[arg(long)]
    pub growth: Option<String>,
    /// Grid steps allowed per Kronecker solve.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyBoundaryArgs {
    #[arg(long)]
    pub poly: Option<PathBuf>,
    #[arg(long)]
    pub atoms: Option<PathBuf>,
    #[arg(long)]
    pub mu: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NestedArgs {
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub levels: Option<u32>,
    #[arg(long)]
    pub growth: Option<String>,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Write the accepted windows as CSV.
    #[arg(long)]
    pub windows: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long, conflicts_with = "lebesgue")]
    pub atoms: Option<PathBuf>,
    #[arg(long)]
    pub lebesgue: bool,
    /// `alpha:beta` pairs separated by `;`, e.g. "1,0:0,0;0,1:1,0".
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Source measure for reference moments.
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct KroneckerArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated target angles.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub budget: Option<u64>,
}

impl Cli {
    /// Flags as a config layer; unset flags stay `None`.
    pub fn flags(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig {
            seed: self.seed,
            threads: self.threads,
            out: self.out.clone(),
            ..Default::default()
        };
        match &self.command {
            None => {}
            Some(Command::VerifySigma(a)) => {
                c.kind = Some(Kind::VerifySigma);
                c.poly = a.poly.clone();
                c.sigma = a.sigma;
                c.t_grid = a.t_grid.clone();
                c.tol = a.tol;
                c.mc_samples = a.mc_samples;
            }
            Some(Command::BuildMeasure(a)) => {
                c.kind = Some(Kind::BuildMeasure);
                c.mu = a.mu.clone();
                c.levels = a.levels;
                c.growth = a.growth.clone();
                c.budget = a.budget;
            }
            Some(Command::VerifyBoundary(a)) => {
                c.kind = Some(Kind::VerifyBoundary);
                c.poly = a.poly.clone();
                c.atoms = a.atoms.clone();
                c.mu = a.mu.clone();
            }
            Some(Command::NestedBuild(a)) => {
                c.kind = Some(Kind::NestedBuild);
                c.plan = a.plan.clone();
                c.levels = a.levels;
                c.growth = a.growth.clone();
                c.budget = a.budget;
                c.windows = a.windows.clone();
            }
            Some(Command::Moments(a)) => {
                c.kind = Some(Kind::Moments);
                c.atoms = a.atoms.clone();
                c.lebesgue = a.lebesgue.then_some(true);
                c.pairs = a.pairs.clone();
                c.t_max = a.t_max;
                c.mu = a.mu.clone();
                c.tol = a.tol;
            }
            Some(Command::Kronecker(a)) => {
                c.kind = Some(Kind::Kronecker);
                c.dim = a.dim;
                c.theta = a.theta.clone();
                c.eps = a.eps;
                c.t_min = a.t_min;
                c.budget = a.budget;
            }
        }
        c
    }
}

fn usage_failure(message: String) -> i32 {
    eprintln!("error: {message}");
    let summary = Summary {
        kind: "none".into(),
        wall_time: 0.0,
        key_metrics: Default::default(),
        pass: false,
        error: Some(message),
        extra: Default::default(),
    };
    println!("{}", summary.to_line());
    Status::Usage.code()
}

/// Entry point of the `carlson` binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::Usage.code() } else { 0 };
        }
    };
    let base = match &cli.config {
        None => ExperimentConfig::default(),
        Some(path) => match io::read_to_string(path).and_then(|t| ExperimentConfig::from_json(&t)) {
            Ok(c) => c,
            Err(e) => return usage_failure(e.to_string()),
        },
    };
    let config = base.overlay(cli.flags());
    let outcome = run(&config);
    if let Some(err) = &outcome.summary.error {
        eprintln!("error: {err}");
    }
    println!("{}", outcome.summary.to_line());
    outcome.status.code()
}
