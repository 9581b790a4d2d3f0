//! Galerkin reduced-order models of the Evolve-Filter solver.
//!
//! - `assembly`: offline projection of the FV operators onto the reduced
//!   spaces (matrices, convection tensors, lifting interaction vectors).
//! - `online`: dense reduced time stepping mirroring the full-order
//!   evolve/filter splitting, plus trajectory recording.
//! - `io`: binary persistence for assembled operator sets and CSV export.
//!
//! Four variants share one code path and differ only in how the reduced
//! momentum systems are closed:
//! - `Nos`: plain POD spaces with the reduced continuity equation. Offered
//!   for comparison; the saddle systems are singular or near singular and
//!   runs are expected to flag divergence.
//! - `Ppe`: plain POD spaces; pressure comes from a projected pressure
//!   Poisson equation with rot-rot and time-derivative boundary terms.
//! - `Sup1`: velocity spaces widened with the supremizers of the matching
//!   pressure family, continuity closure.
//! - `Sup2`: velocity spaces widened with both supremizer families,
//!   continuity closure.
//!
//! Everything here is deliberately sequential: operator assembly is a few
//! dozen linear passes over the mesh for a handful of modes, and the online
//! recursion cannot be parallelized. Keeping one thread also keeps
//! floating-point reduction order, and therefore output bytes, fixed.

pub mod assembly;
pub mod io;
pub mod online;

#[cfg(test)]
pub(crate) mod testutil;

use std::fmt;
use std::str::FromStr;

use crate::error::{CoreError, Result};
use crate::fom::CaseBcs;
use crate::mesh::Mesh;
use crate::pod::PodBasis;
use crate::snapshots::LiftingFunction;
use crate::supremizer::EnrichedSpace;

pub use assembly::{
    assemble, contract_convecting, tensor_contract, ConvectionTensor, PpeOperators,
    ReducedOperators,
};
pub use online::{run_rom, RomRun, RomState, RomTrajectory, TrajectoryRow};

/// How the reduced pressure is closed and whether velocity spaces carry
/// supremizer enrichment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilizationMode {
    /// No stabilization: POD spaces with reduced continuity.
    Nos,
    /// Pressure Poisson closure on plain POD spaces.
    Ppe,
    /// One supremizer block per velocity space, continuity closure.
    Sup1,
    /// Both supremizer blocks in each velocity space, continuity closure.
    Sup2,
}

impl StabilizationMode {
    /// Stable lowercase tag used in file names and CSV headers.
    pub fn tag(self) -> &'static str {
        match self {
            StabilizationMode::Nos => "nos",
            StabilizationMode::Ppe => "ppe",
            StabilizationMode::Sup1 => "sup1",
            StabilizationMode::Sup2 => "sup2",
        }
    }

    /// True when the reduced pressure equation is the projected Poisson
    /// system instead of reduced continuity.
    pub fn uses_pressure_poisson(self) -> bool {
        matches!(self, StabilizationMode::Ppe)
    }
}

impl fmt::Display for StabilizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for StabilizationMode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nos" => Ok(StabilizationMode::Nos),
            "ppe" => Ok(StabilizationMode::Ppe),
            "sup1" => Ok(StabilizationMode::Sup1),
            "sup2" => Ok(StabilizationMode::Sup2),
            other => Err(CoreError::Contract(format!(
                "unknown stabilization mode `{other}` (expected nos, ppe, sup1 or sup2)"
            ))),
        }
    }
}

/// The four reduced spaces plus the lifting function, ready for projection.
///
/// `v`/`q` close the evolve step, `u`/`q_bar` the filter step. Velocity
/// spaces are enriched according to the stabilization mode; pressure spaces
/// are always the plain POD bases.
#[derive(Debug, Clone)]
pub struct RomSpaces {
    pub mode: StabilizationMode,
    pub v: EnrichedSpace,
    pub u: EnrichedSpace,
    pub q: PodBasis,
    pub q_bar: PodBasis,
    pub lifting: LiftingFunction,
}

impl RomSpaces {
    /// Bundle the spaces after consistency checks: one mesh fingerprint
    /// everywhere, scalar pressure spaces, vector velocity spaces, and an
    /// enrichment layout that matches the stabilization mode.
    pub fn build(
        mode: StabilizationMode,
        v: EnrichedSpace,
        u: EnrichedSpace,
        q: PodBasis,
        q_bar: PodBasis,
        lifting: LiftingFunction,
        mesh: &Mesh,
    ) -> Result<RomSpaces> {
        lifting.check_mesh(mesh)?;
        for set in [&v.modes, &u.modes] {
            set.check_mesh(mesh)?;
            if set.components != 2 {
                return Err(CoreError::Contract(format!(
                    "velocity space `{}` must hold vector modes",
                    set.field
                )));
            }
        }
        for set in [&q.modes, &q_bar.modes] {
            if !set.is_empty() {
                set.check_mesh(mesh)?;
            }
            if set.components != 1 {
                return Err(CoreError::Contract(format!(
                    "pressure space `{}` must hold scalar modes",
                    set.field
                )));
            }
        }
        let expected_blocks = match mode {
            StabilizationMode::Nos | StabilizationMode::Ppe => 1,
            StabilizationMode::Sup1 => 2,
            StabilizationMode::Sup2 => 3,
        };
        for space in [&v, &u] {
            if space.blocks.len() != expected_blocks {
                return Err(CoreError::Contract(format!(
                    "{mode} velocity spaces need {expected_blocks} mode blocks, `{}` has {}",
                    space.modes.field,
                    space.blocks.len()
                )));
            }
        }
        Ok(RomSpaces {
            mode,
            v,
            u,
            q,
            q_bar,
            lifting,
        })
    }

    pub fn n_evolve(&self) -> usize {
        self.v.n_modes()
    }

    pub fn n_filter(&self) -> usize {
        self.u.n_modes()
    }

    pub fn n_pressure(&self) -> usize {
        self.q.n_modes()
    }

    pub fn n_pressure_bar(&self) -> usize {
        self.q_bar.n_modes()
    }
}

/// Case boundary conditions with every Dirichlet value zeroed: the family
/// reduced velocity modes carry when full-order operators act on them.
pub fn homogenized_velocity_bcs(
    mesh: &Mesh,
    bcs: &CaseBcs,
    t: f64,
) -> Vec<crate::fv::BoundaryCondition<crate::geom::Vec2>> {
    use crate::fv::BoundaryCondition;
    use crate::geom::Vec2;
    bcs.velocity_at(mesh, t)
        .into_iter()
        .map(|bc| match bc {
            BoundaryCondition::FixedValue(vals) => {
                BoundaryCondition::FixedValue(vec![Vec2::ZERO; vals.len()])
            }
            other => other,
        })
        .collect()
}

/// Case pressure conditions with every Dirichlet value zeroed: the family
/// reduced pressure modes carry.
pub fn homogenized_pressure_bcs(
    case_pressure: &[crate::fv::BoundaryCondition<f64>],
) -> Vec<crate::fv::BoundaryCondition<f64>> {
    use crate::fv::BoundaryCondition;
    case_pressure
        .iter()
        .map(|bc| match bc {
            BoundaryCondition::FixedValue(vals) => {
                BoundaryCondition::FixedValue(vec![0.0; vals.len()])
            }
            other => other.clone(),
        })
        .collect()
}

/// All-patch zero Dirichlet velocity conditions (supremizer mode family).
pub fn zero_dirichlet_velocity_bcs(
    mesh: &Mesh,
) -> Vec<crate::fv::BoundaryCondition<crate::geom::Vec2>> {
    use crate::fv::BoundaryCondition;
    use crate::geom::Vec2;
    mesh.patches
        .iter()
        .map(|p| BoundaryCondition::FixedValue(vec![Vec2::ZERO; p.count]))
        .collect()
}
