//! `lesrom` command line: offline pipeline, online replay, comparison
//! tables, and mesh generation.
//!
//! Exit codes: 0 success, 1 general failure (missing artifacts, I/O),
//! 2 configuration errors, 3 numerical failures (diverged or singular
//! solves, non-finite fields).

mod config;
mod manifest;
mod pipeline;
mod tables;

use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};

use lesrom_core::{CoreError, StabilizationMode};

use crate::config::{ConfigError, RunConfig};

const PRESET_CI: &str = include_str!("../presets/ci.toml");
const PRESET_PAPER: &str = include_str!("../presets/paper.toml");

#[derive(Parser)]
#[command(
    name = "lesrom",
    version,
    about = "Pressure-stabilized reduced-order models for filtered channel flow past a cylinder"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the run configuration comes from: a TOML file or a built-in
/// preset.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConfigSource {
    /// Path to a TOML run configuration.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Built-in configuration: `ci` (coarse, minutes) or `paper`
    /// (benchmark resolution, about an hour offline).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

impl ConfigSource {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        if let Some(path) = &self.config {
            return RunConfig::load(path);
        }
        let name = self.preset.as_deref().unwrap_or_default();
        let text = match name {
            "ci" => PRESET_CI,
            "paper" => PRESET_PAPER,
            other => {
                return Err(anyhow!(ConfigError(format!(
                    "unknown preset `{other}`; available: ci, paper"
                ))))
            }
        };
        RunConfig::parse(text)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the offline pipeline: mesh, lifting, full-order solve, POD,
    /// supremizers, reduced operators. Stages already up to date are
    /// skipped.
    Offline {
        #[command(flatten)]
        source: ConfigSource,
    },
    /// Time-step one reduced closure and write its trajectory,
    /// reconstructions, and coefficients.
    Online {
        #[command(flatten)]
        source: ConfigSource,
        /// Closure to run: nos, ppe, sup1, or sup2.
        #[arg(long, value_name = "MODE")]
        mode: String,
    },
    /// Run every configured closure and tabulate errors and speed-ups
    /// against the stored full-order solution.
    Compare {
        #[command(flatten)]
        source: ConfigSource,
    },
    /// Generate the channel-with-cylinder mesh and write it as text.
    MeshGen {
        /// Approximate cell count to aim for.
        #[arg(long, value_name = "N")]
        target_cells: usize,
        /// Near-cylinder refinement factor (1 = uniform).
        #[arg(long, value_name = "X", default_value_t = 2.0)]
        refinement_bias: f64,
        /// Output path for the mesh file.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Parse and validate a configuration, then print the effective
    /// settings.
    ValidateConfig {
        #[command(flatten)]
        source: ConfigSource,
    },
}

fn parse_mode(tag: &str) -> anyhow::Result<StabilizationMode> {
    tag.parse::<StabilizationMode>()
        .map_err(|e: CoreError| anyhow!(ConfigError(e.to_string())))
}

fn is_numerical(err: &CoreError) -> bool {
    match err {
        CoreError::SolverDiverged { .. }
        | CoreError::SingularCoupling(_)
        | CoreError::BlowUp { .. }
        | CoreError::ReducedSolve { .. } => true,
        CoreError::Step { source, .. } => is_numerical(source),
        _ => false,
    }
}

fn exit_code_for(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if let Some(core) = err.downcast_ref::<CoreError>() {
        if is_numerical(core) {
            return 3;
        }
    }
    1
}

fn summarize(cfg: &RunConfig) -> String {
    let core = cfg.physics.to_core();
    let modes: Vec<&str> = cfg
        .stabilization_modes()
        .iter()
        .map(|m| m.tag())
        .collect();
    format!(
        "mesh: {:?}\nrho = {}, mu = {}, alpha = {}, dt = {}, t in [{}, {}]\n\
         {} snapshots at interval {}\nenergy target {}  modes {:?}\noutput dir `{}`",
        cfg.mesh,
        core.rho,
        core.mu,
        core.alpha,
        core.dt,
        core.t0,
        core.t_end,
        cfg.n_samples(),
        cfg.sampling.interval,
        cfg.pod.energy,
        modes,
        cfg.output.dir.display()
    )
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Offline { source } => {
            pipeline::cmd_offline(&source.resolve()?)?;
            Ok(0)
        }
        Command::Online { source, mode } => {
            let cfg = source.resolve()?;
            let outcome = pipeline::cmd_online(&cfg, parse_mode(&mode)?)?;
            Ok(if outcome.diverged_at.is_some() { 3 } else { 0 })
        }
        Command::Compare { source } => {
            pipeline::cmd_compare(&source.resolve()?)?;
            Ok(0)
        }
        Command::MeshGen {
            target_cells,
            refinement_bias,
            out,
        } => {
            pipeline::cmd_mesh_gen(target_cells, refinement_bias, &out)?;
            Ok(0)
        }
        Command::ValidateConfig { source } => {
            let cfg = source.resolve()?;
            println!("configuration is valid");
            println!("{}", summarize(&cfg));
            Ok(0)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(exit_code_for(&err));
        }
    }
}
