use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptmathieu::eig::{SolverSettings, DEFAULT_LEVELS, DEFAULT_TOL_IM, MAX_TRUNCATION};
use ptmathieu::model::DEFAULT_TRUNCATION;
use ptmathieu::phase::PhaseSettings;
use ptmathieu::BoundaryCondition;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "ptmathieu", version, about = "Spectra and exceptional lines of the PT-symmetric deformed Mathieu operator")]
pub struct Cli {
    /// Flat `key = value` file; keys are long flag names, plus `command`.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Lowest levels at one parameter point.
    #[command(args_override_self = true)]
    Spectrum(SpectrumArgs),
    /// Level branches along a grid in q or delta.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Lowest levels over a (q, delta) grid.
    #[command(args_override_self = true)]
    Surface(SurfaceArgs),
    /// Exceptional line over a delta grid, on both sides of q = 0.
    #[command(args_override_self = true)]
    Trace(TraceArgs),
    /// Power-law fit of the large-delta tail of exceptional lines.
    #[command(args_override_self = true)]
    Fit(FitArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Sweep(_) => "sweep",
            Command::Surface(_) => "surface",
            Command::Trace(_) => "trace",
            Command::Fit(_) => "fit",
        }
    }

    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Spectrum(a) => &a.output,
            Command::Sweep(a) => &a.output,
            Command::Surface(a) => &a.output,
            Command::Trace(a) => &a.output,
            Command::Fit(a) => &a.output,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParamArg {
    Q,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Positive,
    Negative,
}

fn parse_bc(s: &str) -> Result<BoundaryCondition, String> {
    s.parse().map_err(|e: ptmathieu::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file (written atomically); stdout when absent.
    #[arg(short, long, value_name = "PATH")]
    #[serde(skip)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub j: u32,

    #[arg(long, default_value = "neumann", value_parser = parse_bc)]
    pub bc: BoundaryCondition,

    /// Number of lowest levels.
    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    pub k: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// Realness tolerance, relative to max(1, |Re a|).
    #[arg(long, default_value_t = DEFAULT_TOL_IM)]
    pub tol_im: f64,

    /// Allowed level movement between truncations.
    #[arg(long, default_value_t = SolverSettings::default().tol)]
    pub tol: f64,

    #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
    pub n_start: usize,

    #[arg(long, default_value_t = MAX_TRUNCATION)]
    pub n_max: usize,
}

impl SolverArgs {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            n_start: self.n_start,
            n_max: self.n_max,
            tol: self.tol,
            tol_im: self.tol_im,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,

    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub sweep_param: SweepParamArg,

    /// `lo:hi:step` or a comma-separated ascending list.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,

    /// Fixed q when sweeping delta.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub q: f64,

    /// Fixed delta when sweeping q.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SurfaceArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q_grid: String,

    #[arg(long, allow_hyphen_values = true)]
    pub delta_grid: String,

    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhaseArgs {
    #[arg(long, default_value_t = PhaseSettings::default().q_max)]
    pub q_max: f64,

    #[arg(long, default_value_t = PhaseSettings::default().tol_q)]
    pub tol_q: f64,

    #[arg(long, default_value_t = PhaseSettings::default().scan_step)]
    pub scan_step: f64,

    /// Relative change of q_crit between grid points flagged as a jump.
    #[arg(long, default_value_t = PhaseSettings::default().jump_threshold)]
    pub jump_threshold: f64,

    /// Galerkin truncation of the scan.
    #[arg(long, default_value_t = PhaseSettings::default().n_trunc)]
    pub n_trunc: usize,

    #[arg(long, default_value_t = DEFAULT_TOL_IM)]
    pub tol_im: f64,
}

impl PhaseArgs {
    pub fn settings(&self, k: usize) -> PhaseSettings {
        PhaseSettings {
            k,
            q_max: self.q_max,
            tol_q: self.tol_q,
            scan_step: self.scan_step,
            jump_threshold: self.jump_threshold,
            n_trunc: self.n_trunc,
            n_max: PhaseSettings::default().n_max.max(self.n_trunc),
            tol_im: self.tol_im,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TraceArgs {
    /// Non-negative ascending delta grid, `lo:hi:step` or a list.
    #[arg(long)]
    pub delta_grid: String,

    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub phase: PhaseArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// Comma-separated values of j to fit.
    #[arg(long, default_value = "1")]
    pub js: String,

    #[arg(long, default_value = "neumann", value_parser = parse_bc)]
    pub bc: BoundaryCondition,

    #[arg(long, default_value_t = DEFAULT_LEVELS)]
    pub k: usize,

    #[arg(long, value_enum, default_value_t = SideArg::Positive)]
    pub side: SideArg,

    #[arg(long, default_value_t = ptmathieu::fit::DEFAULT_FIT_RANGE.0)]
    pub fit_lo: f64,

    #[arg(long, default_value_t = ptmathieu::fit::DEFAULT_FIT_RANGE.1)]
    pub fit_hi: f64,

    /// Log-spaced delta samples traced in the fit range.
    #[arg(long, default_value_t = 25)]
    pub points: usize,

    /// Fit an existing trace CSV instead of tracing (single j only).
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub phase: PhaseArgs,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}
