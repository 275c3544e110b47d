use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "qmetric", version, about = "Quantum geometric tensors, metric signatures and curvature scans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantum geometric tensor of a state family at given points.
    Metric(MetricArgs),
    /// Riemann curvature scan of a metric field.
    Curvature(CurvatureArgs),
    /// Observables over a 1- or 2-axis grid, as plot data.
    Grid(GridArgs),
    /// Replay the Minkowski reformulation as residual checks.
    VerifyPaper(VerifyArgs),
    /// Lint a family or chart definition file.
    Parse(ParseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Projective,
    Raw,
}

impl From<ConventionArg> for qmetric::metric::Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Projective => qmetric::metric::Convention::Projective,
            ConventionArg::Raw => qmetric::metric::Convention::Raw,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    /// Fixed finite-difference step (default: relative step for states, 1e-3 for curvature).
    #[arg(long = "h", value_name = "STEP")]
    pub h: Option<f64>,
    /// Central-difference order: 2 or 4.
    #[arg(long, default_value_t = 4)]
    pub order: u8,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct FamilySource {
    /// Built-in family name.
    #[arg(long)]
    pub family: Option<String>,
    /// Family definition file.
    #[arg(long, value_name = "PATH")]
    pub family_file: Option<PathBuf>,
    /// Constant override `name=value`; repeatable.
    #[arg(long = "const", value_name = "NAME=VALUE")]
    pub constants: Vec<String>,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[command(flatten)]
    pub source: FamilySource,
    /// Comma-separated coordinates in radians; repeatable.
    #[arg(long = "point", required = true, allow_hyphen_values = true, value_name = "X1,X2,..")]
    pub points: Vec<String>,
    #[arg(long, value_enum, default_value = "projective")]
    pub convention: ConventionArg,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    /// Constant field `diag(g11, g11, g22, -c²·g22)` from `g11,g22,c`.
    #[arg(long, value_name = "G11,G22,C", allow_hyphen_values = true)]
    pub assemble: Option<String>,
    /// Built-in field: sphere2, polar, sphere3, minkowski.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Flat target pulled back through a chart: hopf or wick.
    #[arg(long)]
    pub pullback: Option<String>,
    /// Chart definition file whose map pulls back the flat metric.
    #[arg(long, value_name = "PATH")]
    pub chart_file: Option<PathBuf>,
    /// Quantum metric of a state family as the field.
    #[command(flatten)]
    pub source: FamilySource,
    #[arg(long, value_enum, default_value = "projective")]
    pub convention: ConventionArg,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub source: FamilySource,
    /// Free axis `name=min:max:count`; at most two.
    #[arg(long = "axis", required = true, allow_hyphen_values = true, value_name = "NAME=MIN:MAX:COUNT")]
    pub axes: Vec<String>,
    /// Pinned axis `name=value`; unpinned fixed axes sit at their bound midpoints.
    #[arg(long = "at", allow_hyphen_values = true, value_name = "NAME=VALUE")]
    pub at: Vec<String>,
    /// Column: re_q_<a>_<b>, im_q_<a>_<b>, n_plus, n_minus, n_zero, scalar_curvature.
    #[arg(long = "observable", value_name = "NAME")]
    pub observables: Vec<String>,
    #[arg(long, value_enum, default_value = "projective")]
    pub convention: ConventionArg,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Speed of light used by the identity, assembly and flatness checks.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturb the assembled G₂₂ by 1e-3 before the η check.
    #[arg(long, hide = true)]
    pub break_eta: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    pub file: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}
