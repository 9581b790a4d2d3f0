//! Finite-volume Evolve-Filter LES solver and POD-Galerkin reduced order models.
//!
//! Layout:
//! - `geom`: 2-D vector/matrix value types.
//! - `mesh`: quad-dominant FV mesh, channel-with-cylinder generator, text IO.
//! - `fv`: cell-centered fields, boundary conditions, discrete operators.
//! - `linalg`: sparse matrix and Krylov solvers used by the full-order solver.
//! - `fom`: Evolve-Filter time stepper (BDF2 Navier-Stokes + differential filter).
//! - `snapshots`: snapshot collection, lifting/homogenization, binary persistence.
//! - `pod`: method-of-snapshots proper orthogonal decomposition.
//! - `supremizer`: pressure-gradient Poisson solves and enriched velocity spaces.
//! - `rom`: Galerkin projection (offline assembly) and reduced time stepping (online).
//! - `postproc`: error metrics, drag/lift coefficients, comparison tables.

pub mod error;
pub mod fom;
pub mod fv;
pub mod geom;
pub mod linalg;
pub mod mesh;
pub mod pod;
pub mod postproc;
pub mod rom;
pub mod snapshots;
pub mod supremizer;

pub use error::{CoreError, Result};
pub use fom::{CaseBcs, FomState, PhysicsConfig, SolverParams};
pub use fv::{BoundaryCondition, Field, ScalarField, SparseOperator, VectorField};
pub use geom::{Mat2, Vec2};
pub use mesh::{Mesh, QualityReport};
pub use pod::{ModeSelection, PodBasis};
pub use rom::{ReducedOperators, RomRun, RomSpaces, RomState, StabilizationMode};
pub use snapshots::{LiftingFunction, SamplingSchedule, SnapshotSet};
pub use supremizer::{EnrichedSpace, SpaceVariant};
