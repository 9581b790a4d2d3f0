//! Divergence-free inlet lifting and snapshot homogenization.
//!
//! The lifting field `chi` carries the parabolic inlet profile into the
//! domain so that homogenized velocity snapshots (and hence all velocity
//! modes) satisfy zero Dirichlet data. No closed form exists around the
//! cylinder, so `chi` is computed once as a generalized-Stokes solve with the
//! inlet profile as boundary data, which makes it divergence-free to solver
//! tolerance by construction. Scaled by the inlet law, it reproduces the
//! full-order Dirichlet data at any time.

use crate::error::{CoreError, Result};
use crate::fom::{generalized_stokes, inlet_law, inlet_parabola, CaseBcs, SolverParams};
use crate::fv::VectorField;
use crate::geom::Vec2;
use crate::linalg::CellPattern;
use crate::mesh::Mesh;
use crate::snapshots::SnapshotSet;

/// The inlet lifting field.
#[derive(Debug, Clone)]
pub struct LiftingFunction {
    pub chi: VectorField,
    /// Conservative face flux of `chi`.
    pub flux: Vec<f64>,
    pub mesh_fingerprint: u64,
}

impl LiftingFunction {
    /// Smoothing radius of the construction solve.
    pub const RADIUS: f64 = 0.05;

    /// Solve for the lifting on the given mesh.
    pub fn build(mesh: &Mesh, params: &SolverParams) -> Result<LiftingFunction> {
        // Source: the x-directed parabola continued through the domain. It is
        // solenoidal but ignores interior walls; the Stokes solve projects it
        // onto the divergence-free fields matching all Dirichlet data.
        let source: Vec<Vec2> = mesh
            .cells
            .iter()
            .map(|c| Vec2::new(inlet_parabola(c.centroid.y), 0.0))
            .collect();
        let case = CaseBcs::steady_channel(mesh);
        let mut tight = *params;
        tight.tol_simplec = params.tol_simplec.min(1e-10);
        tight.tol_pressure = params.tol_pressure.min(1e-12);
        tight.tol_momentum = params.tol_momentum.min(1e-10);
        tight.max_outer = params.max_outer.max(200);
        let pattern = CellPattern::build(mesh);
        let sol = generalized_stokes(
            mesh,
            &pattern,
            1.0,
            Self::RADIUS * Self::RADIUS,
            &source,
            case.velocity_at(mesh, 0.0),
            case.pressure.clone(),
            Some((&source, &vec![0.0; mesh.n_cells()])),
            &tight,
            "lifting",
        )?;
        Ok(LiftingFunction {
            chi: sol.u,
            flux: sol.flux,
            mesh_fingerprint: mesh.fingerprint(),
        })
    }

    /// Inlet Dirichlet coefficient at time `t` (shared by both velocities).
    pub fn coefficient(&self, t: f64) -> f64 {
        inlet_law(t)
    }

    /// Largest normalized per-cell divergence of the lifting flux.
    pub fn max_divergence(&self, mesh: &Mesh) -> f64 {
        let mut div = vec![0.0; mesh.n_cells()];
        for (j, f) in mesh.faces.iter().enumerate() {
            div[f.owner] += self.flux[j];
            if let Some(nb) = f.neighbour {
                div[nb] -= self.flux[j];
            }
        }
        let scale = self
            .flux
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        div.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh_fingerprint != mesh.fingerprint() {
            return Err(CoreError::FingerprintMismatch {
                expected: self.mesh_fingerprint,
                got: mesh.fingerprint(),
            });
        }
        Ok(())
    }
}

/// Subtract the scaled lifting from one interleaved velocity column.
pub fn homogenize(column: &mut [f64], lifting: &LiftingFunction, t: f64) {
    let coef = lifting.coefficient(t);
    for (i, v) in lifting.chi.values.iter().enumerate() {
        column[2 * i] -= coef * v.x;
        column[2 * i + 1] -= coef * v.y;
    }
}

/// Add the scaled lifting back onto one interleaved velocity column.
pub fn dehomogenize(column: &mut [f64], lifting: &LiftingFunction, t: f64) {
    let coef = lifting.coefficient(t);
    for (i, v) in lifting.chi.values.iter().enumerate() {
        column[2 * i] += coef * v.x;
        column[2 * i + 1] += coef * v.y;
    }
}

/// Homogenize every column of a velocity snapshot set.
pub fn homogenize_set(set: &SnapshotSet, lifting: &LiftingFunction) -> Result<SnapshotSet> {
    if set.components != 2 {
        return Err(CoreError::Contract(format!(
            "homogenization applies to velocity sets, got `{}`",
            set.field
        )));
    }
    if set.mesh_fingerprint != lifting.mesh_fingerprint {
        return Err(CoreError::FingerprintMismatch {
            expected: set.mesh_fingerprint,
            got: lifting.mesh_fingerprint,
        });
    }
    let mut out = set.clone();
    for k in 0..out.n_snapshots() {
        let t = out.times[k];
        homogenize(out.column_mut(k), lifting, t);
    }
    Ok(out)
}
