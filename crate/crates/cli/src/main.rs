//! `kllab`: build and verify the counterexample, run flows and algorithm
//! suites, and emit level profiles, check reports and SVG overlays.
//!
//! Exit codes: 0 when every check passes (or the command only produces
//! data), 1 when at least one verdict is FAIL, 2 on usage or configuration
//! errors. `--expect-fail` swaps 0 and 1.

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Pair;

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "kllab", version, about = "Kurdyka-Lojasiewicz laboratory in the plane")]
pub struct Cli {
    /// Plain-text `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for sampled checks (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Exit 0 iff some verdict is FAIL.
    #[arg(long, global = true)]
    pub expect_fail: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Built-in fields.
    Zoo {
        #[command(subcommand)]
        command: ZooCommand,
    },
    /// Subgradient flow from a point.
    Flow(FlowArgs),
    /// Proximal point iterations with length certificates.
    Prox(ProxArgs),
    /// Explicit gradient steps with descent and length checks.
    Gd(GdArgs),
    /// Slope profile and desingularization on a level grid.
    Profile(ProfileArgs),
    /// Finite-sample checks.
    Check {
        #[command(subcommand)]
        command: CheckCommand,
    },
    /// The nested-body counterexample.
    Cex {
        #[command(subcommand)]
        command: CexCommand,
    },
}

#[derive(Subcommand, Debug)]
pub enum ZooCommand {
    /// Print every field spec with its closed forms.
    List,
}

#[derive(Args, Debug, Clone, Default)]
pub struct FieldArg {
    /// Field spec, e.g. `power:2`, `quad:1,100`, `norm`, `flat:0.5`, `cex:12`.
    #[arg(long)]
    pub field: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    /// Top level of the grid.
    #[arg(long)]
    pub r0: Option<f64>,
    /// Number of levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Ratio between consecutive levels.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Points per traced level curve.
    #[arg(long)]
    pub dirs: Option<usize>,
    /// Tail model below the grid: auto, power, log-power or none.
    #[arg(long)]
    pub tail: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PhiArg {
    /// Desingularization: auto, oracle, profile or power:<theta>.
    #[arg(long)]
    pub phi: Option<String>,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    pub field: FieldArg,
    /// Start point `a,b`.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<Pair>,
    /// Final time.
    #[arg(long = "T")]
    pub t_end: Option<f64>,
    /// Stop on reaching this excess level.
    #[arg(long)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Points per level curve in the SVG.
    #[arg(long)]
    pub dirs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ProxArgs {
    #[command(flatten)]
    pub field: FieldArg,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<Pair>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub phi: PhiArg,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct GdArgs {
    #[command(flatten)]
    pub field: FieldArg,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<Pair>,
    /// Fixed step, or `backtracking`.
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub phi: PhiArg,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub field: FieldArg,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Subcommand, Debug)]
pub enum CheckCommand {
    /// `φ′(f − min f)·‖∂⁰f‖ ≥ 1` on sampled level points.
    Kl(KlArgs),
    /// `φ`-Lipschitz continuity of the sublevel or level mapping.
    Sublevel(SublevelArgs),
    /// `dist(x, [f ≤ r]) ≤ k·(f(x) − r)` on sampled points.
    Errorbound(ErrorBoundArgs),
    /// Talweg through the valleys of the level grid.
    Talweg(TalwegArgs),
    /// Integrability of the measured slope profile.
    Integrability(ProfileArgs),
}

#[derive(Args, Debug)]
pub struct KlArgs {
    #[command(flatten)]
    pub field: FieldArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub phi: PhiArg,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Level band `lo,hi` for the samples (default: the grid's range).
    #[arg(long)]
    pub band: Option<Pair>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SublevelArgs {
    #[command(flatten)]
    pub field: FieldArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub phi: PhiArg,
    /// sublevel or level.
    #[arg(long)]
    pub mode: Option<String>,
    /// Level pairs: `grid` (consecutive grid levels) or `bodies`
    /// (consecutive prescribed levels of the counterexample).
    #[arg(long)]
    pub pairs: Option<String>,
    /// Lipschitz constant.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ErrorBoundArgs {
    #[command(flatten)]
    pub field: FieldArg,
    #[arg(long)]
    pub k: Option<f64>,
    /// Excess level of the sublevel set.
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub band: Option<Pair>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Check `φ ∘ (f − min f)` instead of `f`: none, oracle or power:<theta>.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub dirs: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct TalwegArgs {
    #[command(flatten)]
    pub field: FieldArg,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Valley factor `R > 1`.
    #[arg(long)]
    pub factor: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum CexCommand {
    /// Build the construction and persist it as `cex.txt`.
    Build(CexBuildArgs),
    /// Reload a persisted construction and verify it.
    Verify(CexVerifyArgs),
    /// Partial Hausdorff sums over complete generations.
    Witness(CexWitnessArgs),
}

#[derive(Args, Debug)]
pub struct CexBuildArgs {
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub dirs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CexVerifyArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Rays per reconstructed body.
    #[arg(long)]
    pub dirs: Option<usize>,
    /// Random pairs for the midpoint convexity check.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CexWitnessArgs {
    /// Number of complete generations.
    #[arg(long)]
    pub gens: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    ExitCode::from(commands::run(cli))
}
