use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "steerkit", version, about = "EPR steering certification with MUB measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steering weight of one state.
    Sw(SwArgs),
    /// Critical mixing weight of a state family.
    Pstar(PstarArgs),
    /// Two-qutrit threshold surface over (theta, phi), written as CSV.
    Surface(SurfaceArgs),
    /// Closed-form MUB quantities.
    Analytic(AnalyticArgs),
    /// Isotropic thresholds against heralding efficiency, written as CSV.
    Losscurve(LosscurveArgs),
    /// Builds and verifies the canonical MUB set.
    Mub(MubArgs),
    /// Solves a problem in the JSON debug format.
    SolveSdp(SolveSdpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateKind {
    Pes,
    Iso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    A2b,
    B2a,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionsArg {
    A2b,
    B2a,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Sw,
    General,
}

/// State family and measurement selection shared by `sw` and `pstar`.
#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub state: StateKind,
    #[arg(long)]
    pub dim: usize,
    /// Two-qutrit angle in [0, pi/4] (pes, dim 3).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Two-qutrit angle in [0, pi/2] (pes, dim 3).
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Schmidt amplitudes (pes, any dimension).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub amps: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub direction: DirectionArg,
    /// Number of MUB settings; defaults to all d + 1.
    #[arg(long)]
    pub settings: Option<usize>,
    /// Indices into the canonical MUB list selecting the settings used.
    #[arg(long, value_delimiter = ',')]
    pub setting_order: Option<Vec<usize>>,
    /// Heralding efficiency of the measuring party.
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SwArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long)]
    pub p: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PstarArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Sw)]
    pub mode: ModeArg,
    /// Shrinking factor for general mode; defaults to the MUB value.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Check monotonicity on K evenly spaced points before bisecting.
    #[arg(long)]
    pub scan: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SurfaceArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 21)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 21)]
    pub n_phi: usize,
    /// Distance kept from the boundary of the angle ranges, in radians.
    #[arg(long, default_value_t = 0.02)]
    pub margin: f64,
    #[arg(long, default_value_t = 4)]
    pub settings: usize,
    #[arg(long, value_delimiter = ',')]
    pub setting_order: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    #[arg(long, value_enum, default_value_t = DirectionsArg::Both)]
    pub directions: DirectionsArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Sw)]
    pub mode: ModeArg,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub dim: usize,
}

#[derive(Debug, Clone, Args)]
pub struct LosscurveArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub settings: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,0.95,0.9,0.85,0.8,0.75,0.7,0.65,0.6,0.55,0.5")]
    pub eps_grid: Vec<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MubArgs {
    #[arg(long)]
    pub dim: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolveSdpArgs {
    #[arg(long)]
    pub problem: PathBuf,
}
