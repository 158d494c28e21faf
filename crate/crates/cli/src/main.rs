mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

/// Rotated-box recovery laboratory: constraint analysis, recovery runs,
/// ablations, evaluation and self-checks.
///
/// Angles on the command line are in degrees; every file written uses radians.
/// Exit codes: 0 ok, 1 check failure, 2 configuration or input error,
/// 3 no solution, 4 diverged.
#[derive(Debug, Parser)]
#[command(name = "h2rbox", version)]
pub struct Cli {
    /// Seed for scene generation, optimization and checks [default: config seed or 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for reports.
    #[arg(long, global = true, default_value = "h2rbox-out")]
    pub out_dir: PathBuf,
    /// JSON run configuration (unknown keys are rejected).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the feasible set of the circumscribed-rectangle equations.
    Constraints(ConstraintsArgs),
    /// Recover rotated boxes of a scene from horizontal labels.
    Recover(RecoverArgs),
    /// Cross-product of recovery settings on one scene.
    Ablate(AblateArgs),
    /// Score detections against a scene.
    Eval(EvalArgs),
    /// Run the oracle suites.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct ConstraintsArgs {
    /// Ground-truth width.
    #[arg(long, requires_all = ["h", "theta", "dtheta"], conflicts_with = "problem")]
    pub w: Option<f64>,
    /// Ground-truth height.
    #[arg(long)]
    pub h: Option<f64>,
    /// Ground-truth angle (degrees).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// View rotation (degrees).
    #[arg(long, allow_hyphen_values = true)]
    pub dtheta: Option<f64>,
    /// Problem as JSON: {"view1_dims": [W, H], "view2_dims": [W, H], "delta_theta": rad}.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Comma-separated constraint sets.
    #[arg(long, default_value = "hcrc,hcrc+sc,hcrc+sc+ac")]
    pub sets: String,
    /// Sweep step (degrees) [default: config or 0.25].
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Also write the residual-vs-angle curve as SVG.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Standard,
    Dense,
    Circular,
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Read the scene from a JSON file instead of generating it.
    #[arg(long, conflicts_with_all = ["preset", "objects", "circular", "theta_min", "theta_max"])]
    pub scene: Option<PathBuf>,
    /// Generator preset (overrides the config's scene section).
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Number of regular objects.
    #[arg(long)]
    pub objects: Option<usize>,
    /// Number of circular objects.
    #[arg(long)]
    pub circular: Option<usize>,
    /// Smallest |theta| of generated objects (degrees).
    #[arg(long)]
    pub theta_min: Option<f64>,
    /// Largest |theta| of generated objects (degrees).
    #[arg(long)]
    pub theta_max: Option<f64>,
    /// Save the scene used by this run as JSON.
    #[arg(long)]
    pub write_scene: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Horizontal,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AssignerArg {
    O2o,
    O2m,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BorderArg {
    Crop,
    Pad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Gd,
    Rms,
}

#[derive(Debug, Args)]
pub struct RecoveryArgs {
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    /// View slots per step (K).
    #[arg(long)]
    pub views: Option<usize>,
    /// Self-supervised consistency term on/off.
    #[arg(long)]
    pub ss: Option<bool>,
    /// Circumscribed-box term on the rotated view on/off.
    #[arg(long)]
    pub ws_view2: Option<bool>,
    #[arg(long, value_enum)]
    pub assigner: Option<AssignerArg>,
    #[arg(long, value_enum)]
    pub border: Option<BorderArg>,
    /// Mask the consistency term for circular objects.
    #[arg(long)]
    pub s1: Option<bool>,
    /// Report circular objects by their circumscribed box.
    #[arg(long)]
    pub s2: Option<bool>,
    /// Stop gradients through the transformed target.
    #[arg(long)]
    pub stop_grad: Option<bool>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub recovery: RecoveryArgs,
    /// Also write a ground-truth vs predicted angle scatter as SVG.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub recovery: RecoveryArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Scene with the ground truth.
    #[arg(long)]
    pub scene: PathBuf,
    /// Detections: a JSON list of detections or a recovery report.
    #[arg(long)]
    pub detections: PathBuf,
    /// Replace circular-class detections by their circumscribed box.
    #[arg(long)]
    pub s2: Option<bool>,
    /// Flip threshold (degrees).
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Roundtrip,
    Constraints,
    Iou,
    Loss,
    Gradient,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Suites to run (comma-separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    pub suite: Vec<Suite>,
    /// Number of random box pairs for the IoU suite.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Samples per pair for the IoU oracle.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Small case counts for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
    /// Negative control: check a deliberately broken IoU, which must fail.
    #[arg(long)]
    pub inject_iou_bug: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let cfg = config::RunConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let ctx = commands::Context { cfg, seed, out_dir: cli.out_dir };
    match cli.command {
        Command::Constraints(a) => commands::constraints(&ctx, &a),
        Command::Recover(a) => commands::recover(&ctx, &a),
        Command::Ablate(a) => commands::ablate(&ctx, &a),
        Command::Eval(a) => commands::eval(&ctx, &a),
        Command::Check(a) => commands::check(&ctx, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
