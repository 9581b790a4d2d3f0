//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("mesh generation failed: {0}")]
    MeshGeneration(String),

    #[error("mesh validation failed: {0}")]
    MeshValidation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("mesh fingerprint mismatch: expected {expected:016x}, got {got:016x}")]
    FingerprintMismatch { expected: u64, got: u64 },

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error("snapshot format version {0} unsupported (expected {1})")]
    SnapshotVersion(u32, u32),

    #[error("operator container error: {0}")]
    OperatorFormat(String),

    #[error("operator container version {0} unsupported (expected {1})")]
    OperatorVersion(u32, u32),

    #[error("linear solver `{solver}` failed to converge for `{system}`: residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged {
        solver: &'static str,
        system: String,
        residual: f64,
        iterations: usize,
    },

    #[error("singular pressure-velocity coupling: zero momentum diagonal in cell {0}")]
    SingularCoupling(usize),

    #[error("non-finite {field} detected at t = {time}")]
    BlowUp { field: String, time: f64 },

    #[error("step failed at t = {time}: {source}")]
    Step {
        time: f64,
        #[source]
        source: Box<CoreError>,
    },

    #[error("POD error: {0}")]
    Pod(String),

    #[error("enrichment failed: {0}")]
    Enrichment(String),

    #[error("operator assembly error: {0}")]
    Assembly(String),

    #[error("reduced solve failed at t = {time}: {message}")]
    ReducedSolve { time: f64, message: String },

    #[error("post-processing error: {0}")]
    Postproc(String),
}

impl CoreError {
    pub fn at_time(self, time: f64) -> CoreError {
        CoreError::Step {
            time,
            source: Box::new(self),
        }
    }
}
