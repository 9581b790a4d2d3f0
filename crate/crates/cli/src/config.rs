//! Run configuration: TOML schema, defaults, and cross-field validation.
//!
//! - One file drives the whole pipeline; every section has benchmark-scale
//!   defaults so a config may specify only what it changes.
//! - `LESROM_OUTPUT_DIR` overrides the output directory at load time.
//! - All cross-field constraints are checked up front, before any stage
//!   does work: time-grid alignment, mode-count budgets, mode tags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use lesrom_core::snapshots::SamplingSchedule;
use lesrom_core::{PhysicsConfig, SolverParams, StabilizationMode};

/// Environment variable that overrides `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "LESROM_OUTPUT_DIR";

/// A configuration or usage problem; mapped to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(ConfigError(message.into()))
}

/// Top-level run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub pod: PodSection,
    #[serde(default)]
    pub rom: RomSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub solver: SolverSection,
}

/// Mesh source: generate the benchmark channel-with-cylinder mesh, or load
/// a mesh file in the documented text format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum MeshConfig {
    Generate {
        target_cells: usize,
        refinement_bias: f64,
    },
    File {
        path: PathBuf,
    },
}

/// Physical and time-stepping parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub rho: f64,
    pub mu: f64,
    pub alpha: f64,
    pub dt: f64,
    pub t0: f64,
    pub t_end: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        let cfg = PhysicsConfig::benchmark();
        PhysicsSection {
            rho: cfg.rho,
            mu: cfg.mu,
            alpha: cfg.alpha,
            dt: cfg.dt,
            t0: cfg.t0,
            t_end: cfg.t_end,
        }
    }
}

impl PhysicsSection {
    pub fn to_core(&self) -> PhysicsConfig {
        PhysicsConfig {
            rho: self.rho,
            mu: self.mu,
            alpha: self.alpha,
            dt: self.dt,
            t0: self.t0,
            t_end: self.t_end,
        }
    }
}

/// Snapshot sampling; the first sample lands one interval after `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub interval: f64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection { interval: 0.1 }
    }
}

/// POD truncation targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PodSection {
    /// Cumulative-energy target used for every field without an explicit
    /// count.
    pub energy: f64,
    /// Explicit per-field mode counts; each overrides the energy rule.
    pub counts: FieldCounts,
    /// Supremizer modes appended by the single-family enrichment.
    pub sup1: SupCounts,
    /// Supremizer modes appended by the two-family enrichment.
    pub sup2: SupCounts,
}

impl Default for PodSection {
    fn default() -> Self {
        PodSection {
            energy: 0.99,
            counts: FieldCounts::default(),
            sup1: SupCounts { s: 4, s_bar: 3 },
            sup2: SupCounts { s: 2, s_bar: 1 },
        }
    }
}

/// Optional explicit mode counts per snapshot family.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldCounts {
    pub v: Option<usize>,
    pub q: Option<usize>,
    pub u: Option<usize>,
    pub q_bar: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupCounts {
    pub s: usize,
    pub s_bar: usize,
}

/// Which reduced closures the online and compare commands cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RomSection {
    pub modes: Vec<String>,
}

impl Default for RomSection {
    fn default() -> Self {
        RomSection {
            modes: vec![
                "nos".to_string(),
                "ppe".to_string(),
                "sup1".to_string(),
                "sup2".to_string(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("runs/out"),
        }
    }
}

/// Full-order solver tolerances; defaults match the solver's own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol_momentum: f64,
    pub tol_pressure: f64,
    pub tol_simplec: f64,
    pub max_momentum: usize,
    pub max_pressure: usize,
    pub max_outer: usize,
    pub n_piso_correctors: usize,
    pub n_nonorth: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let p = SolverParams::default();
        SolverSection {
            tol_momentum: p.tol_momentum,
            tol_pressure: p.tol_pressure,
            tol_simplec: p.tol_simplec,
            max_momentum: p.max_momentum,
            max_pressure: p.max_pressure,
            max_outer: p.max_outer,
            n_piso_correctors: p.n_piso_correctors,
            n_nonorth: p.n_nonorth,
        }
    }
}

impl SolverSection {
    pub fn to_core(&self) -> SolverParams {
        SolverParams {
            tol_momentum: self.tol_momentum,
            tol_pressure: self.tol_pressure,
            tol_simplec: self.tol_simplec,
            max_momentum: self.max_momentum,
            max_pressure: self.max_pressure,
            max_outer: self.max_outer,
            n_piso_correctors: self.n_piso_correctors,
            n_nonorth: self.n_nonorth,
        }
    }
}

impl RunConfig {
    /// Parse a config file, apply environment overrides, and validate.
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config `{}`", path.display()))?;
        Self::parse(&text).map_err(|e| config_err(format!("config `{}`: {e:#}", path.display())))
    }

    /// Parse config text, apply environment overrides, and validate.
    pub fn parse(text: &str) -> anyhow::Result<RunConfig> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.output.dir = PathBuf::from(dir);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check every cross-field constraint; nothing downstream re-validates.
    pub fn validate(&self) -> anyhow::Result<()> {
        match &self.mesh {
            MeshConfig::Generate {
                target_cells,
                refinement_bias,
            } => {
                if *target_cells < 100 {
                    bail!("mesh.target_cells = {target_cells} below minimum 100");
                }
                if !(0.25..=16.0).contains(refinement_bias) {
                    bail!("mesh.refinement_bias = {refinement_bias} outside [0.25, 16]");
                }
            }
            MeshConfig::File { path } => {
                if !path.exists() {
                    bail!("mesh.path `{}` does not exist", path.display());
                }
            }
        }

        let core = self.physics.to_core();
        core.validate()
            .map_err(|e| anyhow::anyhow!(e.to_string()))?;
        let schedule = SamplingSchedule::new(self.sampling.interval);
        let per_sample = schedule
            .steps_per_sample(core.dt)
            .map_err(|e| anyhow::anyhow!(e.to_string()))?;
        let n_samples = core.n_steps().map_err(|e| anyhow::anyhow!(e.to_string()))? / per_sample;
        if n_samples == 0 {
            bail!(
                "sampling.interval = {} leaves no samples in [{}, {}]",
                self.sampling.interval,
                core.t0,
                core.t_end
            );
        }

        if !(self.pod.energy > 0.0 && self.pod.energy <= 1.0) {
            bail!("pod.energy = {} outside (0, 1]", self.pod.energy);
        }
        let counts = [
            ("v", self.pod.counts.v),
            ("q", self.pod.counts.q),
            ("u", self.pod.counts.u),
            ("q_bar", self.pod.counts.q_bar),
        ];
        for (name, count) in counts {
            if let Some(k) = count {
                if k == 0 || k > n_samples {
                    bail!("pod.counts.{name} = {k} outside 1..={n_samples} (snapshot budget)");
                }
            }
        }
        for (name, sup) in [("sup1", &self.pod.sup1), ("sup2", &self.pod.sup2)] {
            for (field, k) in [("s", sup.s), ("s_bar", sup.s_bar)] {
                if k == 0 || k > n_samples {
                    bail!("pod.{name}.{field} = {k} outside 1..={n_samples} (snapshot budget)");
                }
            }
        }

        if self.rom.modes.is_empty() {
            bail!("rom.modes must name at least one closure");
        }
        let mut seen = Vec::new();
        for tag in &self.rom.modes {
            let mode: StabilizationMode = tag
                .parse()
                .map_err(|e: lesrom_core::CoreError| anyhow::anyhow!(e.to_string()))?;
            if seen.contains(&mode) {
                bail!("rom.modes lists `{tag}` twice");
            }
            seen.push(mode);
        }
        Ok(())
    }

    /// The validated stabilization-mode list.
    pub fn stabilization_modes(&self) -> Vec<StabilizationMode> {
        self.rom
            .modes
            .iter()
            .map(|tag| tag.parse().expect("validated at load"))
            .collect()
    }

    /// Samples per run implied by the time grid.
    pub fn n_samples(&self) -> usize {
        let core = self.physics.to_core();
        let per = SamplingSchedule::new(self.sampling.interval)
            .steps_per_sample(core.dt)
            .expect("validated at load");
        core.n_steps().expect("validated at load") / per
    }

    pub fn schedule(&self) -> SamplingSchedule {
        SamplingSchedule::new(self.sampling.interval)
    }
}
