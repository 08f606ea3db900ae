use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "pfc", version, about = "Stable feedback + parallel feedforward compensators for the cart pendulum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a compensator pair and the plant's strong stabilizability.
    Verify(Common),
    /// Genetic search for a new stable stabilizing pair.
    Synthesize(SynthArgs),
    /// Closed-loop position step response.
    Step(StepArgs),
    /// Pendulum angle response under position feedback.
    Angle(AngleArgs),
    /// Bode magnitudes of the six noise channels.
    Bode(BodeArgs),
    /// Time response of the six noise channels to a random multi-sine.
    Noise(NoiseArgs),
    /// Monte Carlo over plant parameter perturbations.
    Robustness(McArgs),
    /// Monte Carlo over compensator coefficient perturbations.
    Fragility(McArgs),
    /// Observer-based state feedback and its single-loop equivalents.
    Modern(ModernArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// pendulum-position, pendulum-angle, or file:<path> holding {"num": [...], "den": [...]}
    #[arg(long, default_value = "pendulum-position")]
    pub plant: String,
    /// Cart-to-bob mass ratio for the built-in pendulum plants.
    #[arg(long, default_value_t = 0.3)]
    pub mass: f64,
    /// Built-in pair: a, b, angle-baseline or none. Defaults to b (angle-baseline for the angle plant).
    #[arg(long, conflicts_with = "pair_file")]
    pub pair: Option<String>,
    /// JSON file holding {"label": ..., "c": {...}, "p": {...}}.
    #[arg(long)]
    pub pair_file: Option<PathBuf>,
    /// Output directory for data files.
    #[arg(long, env = "PFC_OUT_DIR", default_value = "pfc-out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Compensator order.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub generations: usize,
    #[arg(long, default_value_t = 200)]
    pub population: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 60.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub enum Model {
    /// Transfer-function response to a unit step.
    Transfer,
    /// Linearized pendulum in the loop.
    Linear,
    /// Full nonlinear pendulum in the loop.
    Nonlinear,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AngleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 60.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = Model::Transfer)]
    pub model: Model,
    /// Initial angle for the linear and nonlinear models.
    #[arg(long, default_value_t = 0.0)]
    pub theta0: f64,
    /// Reference step height for the linear and nonlinear models.
    #[arg(long, default_value_t = 1.0)]
    pub u_step: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BodeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1e-2)]
    pub w_min: f64,
    #[arg(long, default_value_t = 1e2)]
    pub w_max: f64,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 4000)]
    pub count: usize,
    #[arg(long, default_value_t = 0.01)]
    pub amp_norm: f64,
    #[arg(long, default_value_t = 0.5)]
    pub freq_lo: f64,
    #[arg(long, default_value_t = 1.5)]
    pub freq_hi: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 60.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct McArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModernArgs {
    #[arg(long, default_value_t = 0.3)]
    pub mass: f64,
    #[arg(long, env = "PFC_OUT_DIR", default_value = "pfc-out")]
    pub out: PathBuf,
}
