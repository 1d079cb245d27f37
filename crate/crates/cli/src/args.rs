use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::output::Format;
use crate::plot::PlotKind;

#[derive(Debug, Parser, Serialize)]
#[command(name = "plateau", version, about = "Random walk and weakly self-avoiding walk numerics on Z^d and the torus")]
pub struct Cli {
    /// TOML file of defaults; top-level keys and keys under [<subcommand>].
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Simple random walk Green function on Z^d.
    Srw(SrwArgs),
    /// Simple random walk Green function on the torus.
    TorusSrw(TorusArgs),
    /// Exact enumeration of the weakly self-avoiding walk.
    Wsaw(WsawArgs),
    /// Monte Carlo two-point function on the torus.
    WsawMc(WsawMcArgs),
    /// Lace kernel and the decomposition G = lambda C + f.
    Lace(LaceArgs),
    /// Render an SVG plot from a CSV file.
    Plot(PlotArgs),
    /// Repeat a run from its manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn out_args(&self) -> Option<&OutArgs> {
        match self {
            Command::Srw(a) => Some(&a.out),
            Command::TorusSrw(a) => Some(&a.out),
            Command::Wsaw(a) => Some(&a.out),
            Command::WsawMc(a) => Some(&a.out),
            Command::Lace(a) => Some(&a.out),
            Command::Plot(_) | Command::Rerun(_) => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Srw(_) => "srw",
            Command::TorusSrw(_) => "torus-srw",
            Command::Wsaw(_) => "wsaw",
            Command::WsawMc(_) => "wsaw-mc",
            Command::Lace(_) => "lace",
            Command::Plot(_) => "plot",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Output directory [env: PLATEAU_OUT_DIR, default: plateau-out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Also write SVG plots of the results (needs `--format csv`).
    #[arg(long)]
    pub plot: bool,

    /// Format of the numeric tables.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Exactly one way of fixing the fugacity.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Fugacity {
    #[arg(long, conflicts_with_all = ["z_omega"])]
    pub z: Option<f64>,

    /// `z Omega`, with `Omega = 2d`.
    #[arg(long)]
    pub z_omega: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SrwRoute {
    Series,
    Fourier,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct SrwArgs {
    #[arg(long)]
    pub dim: usize,

    #[arg(long, conflicts_with = "mu_omega")]
    pub mu: Option<f64>,

    /// `mu Omega`; 1 is critical.
    #[arg(long)]
    pub mu_omega: Option<f64>,

    /// Box half-width.
    #[arg(long = "box", default_value_t = 10)]
    pub radius: usize,

    /// Series cutoff.
    #[arg(long, default_value_t = 200)]
    pub nmax: usize,

    /// Quadrature points per axis (even); chosen from the error bound when absent.
    #[arg(long)]
    pub grid: Option<usize>,

    /// Decay fit along the first axis over `a:b`.
    #[arg(long, value_name = "A:B")]
    pub fit_window: Option<String>,

    #[arg(long, value_enum, default_value_t = SrwRoute::Both)]
    pub route: SrwRoute,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TorusRoute {
    Fourier,
    Solve,
    Unfold,
    Mc,
}

#[derive(Debug, Args, Serialize)]
pub struct TorusArgs {
    #[arg(long)]
    pub dim: usize,

    #[arg(long)]
    pub period: usize,

    #[command(flatten)]
    pub fugacity: Fugacity,

    /// `z = 1/Omega - rho r^{-p}`.
    #[arg(long, conflicts_with_all = ["z", "z_omega"])]
    pub rho: Option<f64>,

    #[arg(long, requires = "rho", default_value_t = 0.0)]
    pub p: f64,

    #[arg(long, value_enum, default_value_t = TorusRoute::Fourier)]
    pub route: TorusRoute,

    /// Image shells for the unfold route.
    #[arg(long, default_value_t = 2)]
    pub shells: usize,

    /// Quadrature points per axis for the unfold route.
    #[arg(long)]
    pub grid: Option<usize>,

    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, default_value_t = 8)]
    pub shards: usize,

    /// Compare with Z^d on the whole torus and assert the plateau bounds.
    #[arg(long)]
    pub check_plateau: bool,

    /// Constant in the hypothesis `1/Omega - z <= c3 r^{-2}`.
    #[arg(long, default_value_t = 1.0)]
    pub c3: f64,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Series,
    Chi,
    Bubble,
    Mass,
    Zc,
    UnfoldCheck,
}

#[derive(Debug, Args, Serialize)]
pub struct WsawArgs {
    #[arg(long)]
    pub dim: usize,

    #[arg(long)]
    pub beta: f64,

    #[arg(long)]
    pub nmax: usize,

    /// `zd` or `torus:<period>`.
    #[arg(long, default_value = "zd")]
    pub geometry: String,

    #[arg(long, value_enum)]
    pub observable: Observable,

    #[command(flatten)]
    pub fugacity: Fugacity,

    /// Tilt for the bubble.
    #[arg(long, default_value_t = 0.0)]
    pub m: f64,

    /// Fit window `a:b` for the mass.
    #[arg(long, value_name = "A:B")]
    pub window: Option<String>,

    /// Run past the enumeration budget.
    #[arg(long)]
    pub override_budget: bool,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct WsawMcArgs {
    #[arg(long)]
    pub dim: usize,

    #[arg(long, required_unless_present = "periods")]
    pub period: Option<usize>,

    /// Comma-separated periods for the window scan.
    #[arg(long, conflicts_with = "period", requires = "window")]
    pub periods: Option<String>,

    #[arg(long)]
    pub beta: f64,

    #[command(flatten)]
    pub fugacity: Fugacity,

    /// Window constant `c4`: `z = zc - c4 beta^{1/2} r^{-d/2}`.
    #[arg(long, conflicts_with_all = ["z", "z_omega"])]
    pub window: Option<f64>,

    /// Critical point for the window rule; estimated by enumeration when absent.
    #[arg(long)]
    pub zc: Option<f64>,

    /// Enumeration depth for the critical point and the Z^d susceptibility.
    #[arg(long, default_value_t = 10)]
    pub zc_nmax: usize,

    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,

    #[arg(long, default_value_t = 8)]
    pub shards: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// `geometric` or `fixed:<nmax>`.
    #[arg(long, default_value = "geometric")]
    pub estimator: String,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LaceArgs {
    #[arg(long)]
    pub dim: usize,

    #[arg(long)]
    pub beta: f64,

    #[command(flatten)]
    pub fugacity: Fugacity,

    #[arg(long)]
    pub nmax: usize,

    /// Torus period for the transforms; at least `2 nmax + 1`.
    #[arg(long)]
    pub grid: Option<usize>,

    /// Exponential tilt along the first axis.
    #[arg(long, default_value_t = 0.0)]
    pub tilt: f64,

    /// Exit with status 4 unless the identities hold.
    #[arg(long)]
    pub check: bool,

    /// Allowed residual in the identities checked by `--check`.
    #[arg(long, default_value_t = 1e-8)]
    pub check_tolerance: f64,

    #[arg(long)]
    pub override_budget: bool,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,

    #[arg(long)]
    pub input: PathBuf,

    /// SVG file to write.
    #[arg(long)]
    pub output: PathBuf,

    /// JSON file whose `residual` or `fit.residual` is annotated.
    #[arg(long)]
    pub fit: Option<PathBuf>,

    #[arg(long)]
    pub reference_slope: Option<f64>,

    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,

    /// Output directory for the repeated run.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
