//! Command-line surface: simulation, orbit finding, stability sweeps,
//! boundary location, raw-vs-regularized comparison, and plot-data emission.
//!
//! Exit codes: 0 success, 2 usage or validation, 3 numerical failure,
//! 4 solver non-convergence.

mod commands;
mod config;
mod dto;
mod output;

use clap::{Args, Parser, Subcommand};
use config::Resolver;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(schubart_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn usage(msg: String) -> Self {
        CliError::Usage(msg)
    }

    pub fn exit_code(&self) -> i32 {
        use schubart_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                E::NoConvergence { .. } | E::ContinuationStalled { .. } => 4,
                E::StepUnderflow { .. }
                | E::StepLimit { .. }
                | E::TripleCollisionChart { .. }
                | E::IllConditionedSpectrum(_) => 3,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<schubart_core::Error> for CliError {
    fn from(e: schubart_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Flags shared across commands; each command registers the subset it
/// understands, and anything else is rejected as a usage error.
#[derive(Args, Debug, Default)]
pub struct CliArgs {
    /// Problem or orbit family tag.
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated masses.
    #[arg(long)]
    masses: Option<String>,
    /// Mass parameter of the symmetric 4-body families.
    #[arg(long)]
    m: Option<f64>,
    /// Energy level (negative for orbit work).
    #[arg(long, allow_hyphen_values = true)]
    energy: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Unit-circle band half-width for classification.
    #[arg(long)]
    modulus_tol: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: json (canonical) or csv (sweep tables).
    #[arg(long)]
    format: Option<String>,
    /// Worker threads for sweeps; 1 forces sequential rows.
    #[arg(long)]
    jobs: Option<usize>,
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Integrate the unregularized equations of motion.
    #[arg(long)]
    raw: bool,
    /// Stop after this many collisions (col2bp).
    #[arg(long)]
    collisions: Option<usize>,
    /// Fictitious-time span `0,end`.
    #[arg(long)]
    s_span: Option<String>,
    /// Physical-time horizon.
    #[arg(long)]
    t_final: Option<f64>,
    /// Initial physical state: positions then velocities, flat.
    #[arg(long, allow_hyphen_values = true)]
    ic: Option<String>,
    /// Trajectory thinning cap.
    #[arg(long)]
    max_samples: Option<usize>,

    /// Mass range `lo,hi` for sweeps.
    #[arg(long)]
    m_range: Option<String>,
    /// Sweep grid step.
    #[arg(long)]
    step: Option<f64>,
    /// Bisection bracket `lo,hi`.
    #[arg(long)]
    bracket: Option<String>,

    /// Closest-approach distances for compare.
    #[arg(long)]
    approaches: Option<String>,
    /// Include wall-clock columns (breaks byte reproducibility).
    #[arg(long)]
    timings: bool,
}

impl CliArgs {
    fn try_flag<T: ToString>(
        &self,
        r: &mut Resolver,
        key: &str,
        value: &Option<T>,
    ) -> Result<(), CliError> {
        if let Some(v) = value {
            if !r.has(key) {
                return Err(CliError::usage(format!("--{key} is not supported by this command")));
            }
            r.set_flag(key, Some(v.to_string()));
        }
        Ok(())
    }

    /// Merge the config file and explicit flags over the defaults.
    pub fn resolve(&self, r: &mut Resolver) -> Result<(), CliError> {
        if let Some(path) = &self.config {
            r.apply_file(path)?;
        }
        self.try_flag(r, "problem", &self.problem)?;
        self.try_flag(r, "masses", &self.masses)?;
        self.try_flag(r, "m", &self.m)?;
        self.try_flag(r, "energy", &self.energy)?;
        self.try_flag(r, "rel-tol", &self.rel_tol)?;
        self.try_flag(r, "abs-tol", &self.abs_tol)?;
        self.try_flag(r, "modulus-tol", &self.modulus_tol)?;
        self.try_flag(r, "out", &self.out.as_ref().map(|p| p.display().to_string()))?;
        self.try_flag(r, "format", &self.format)?;
        self.try_flag(r, "jobs", &self.jobs)?;
        self.try_flag(r, "collisions", &self.collisions)?;
        self.try_flag(r, "s-span", &self.s_span)?;
        self.try_flag(r, "t-final", &self.t_final)?;
        self.try_flag(r, "ic", &self.ic)?;
        self.try_flag(r, "max-samples", &self.max_samples)?;
        self.try_flag(r, "m-range", &self.m_range)?;
        self.try_flag(r, "step", &self.step)?;
        self.try_flag(r, "bracket", &self.bracket)?;
        self.try_flag(r, "approaches", &self.approaches)?;
        if self.raw {
            self.try_flag(r, "raw", &Some(true))?;
        }
        if self.timings {
            self.try_flag(r, "timings", &Some(true))?;
        }
        Ok(())
    }
}

#[derive(Parser)]
#[command(
    name = "schubart",
    version,
    about = "Collision regularization, collision periodic orbits, and their linear stability"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate a problem and write the sampled trajectory.
    Simulate(CliArgs),
    /// Find a collision periodic orbit by shooting.
    FindOrbit(CliArgs),
    /// Classify the linear stability of a stored orbit.
    Stability {
        /// Orbit file produced by find-orbit.
        #[arg(long)]
        orbit: PathBuf,
        #[command(flatten)]
        args: CliArgs,
    },
    /// Classify an orbit family over a mass grid.
    Sweep(CliArgs),
    /// Bisect a stability boundary inside a mass bracket.
    Boundary(CliArgs),
    /// Benchmark raw vs regularized integration near collision.
    Compare(CliArgs),
    /// Closed form vs numerics for the regularized two-body flow.
    DemoCol2bp(CliArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate(args) => commands::cmd_simulate(args),
        Cmd::FindOrbit(args) => commands::cmd_find_orbit(args),
        Cmd::Stability { orbit, args } => commands::cmd_stability(args, orbit),
        Cmd::Sweep(args) => commands::cmd_sweep(args),
        Cmd::Boundary(args) => commands::cmd_boundary(args),
        Cmd::Compare(args) => commands::cmd_compare(args),
        Cmd::DemoCol2bp(args) => commands::cmd_demo_col2bp(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
