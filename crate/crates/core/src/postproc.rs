//! Error metrics and aerodynamic coefficients.
//!
//! - `relative_error`: weighted L2 relative error, falling back to absolute
//!   error (flagged) when the reference norm vanishes.
//! - `error_series`: per-snapshot errors between two snapshot sets.
//! - `aero_coefficients`: drag/lift from the traction `(2 mu grad(u) - q I) n`
//!   integrated over the cylinder patch, reported both as x/y force
//!   projections and as the tangential/normal projections.
//! - `coefficient_errors`: relative L2-in-time coefficient errors on the
//!   step grid via trapezoidal quadrature.

use crate::error::{CoreError, Result};
use crate::fv::{gauss_gradient, ScalarField, VectorField};
use crate::mesh::Mesh;
use crate::snapshots::{l2_norm, SnapshotSet};

/// Reference velocity for coefficient scaling.
pub const REF_VELOCITY: f64 = 1.0;
/// Reference length (cylinder diameter) for coefficient scaling.
pub const REF_LENGTH: f64 = 0.1;

/// One relative-error sample; `absolute` marks values reported as absolute
/// errors because the reference norm was below 1e-14.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeError {
    pub value: f64,
    pub absolute: bool,
}

/// Weighted L2 relative error between two dof vectors.
pub fn relative_error(
    reference: &[f64],
    candidate: &[f64],
    weights: &[f64],
    components: usize,
) -> RelativeError {
    let diff: Vec<f64> = reference
        .iter()
        .zip(candidate)
        .map(|(a, b)| a - b)
        .collect();
    let err = l2_norm(&diff, weights, components);
    let norm = l2_norm(reference, weights, components);
    if norm <= 1e-14 {
        RelativeError {
            value: err,
            absolute: true,
        }
    } else {
        RelativeError {
            value: err / norm,
            absolute: false,
        }
    }
}

/// Per-snapshot error series for one field.
#[derive(Debug, Clone)]
pub struct ErrorSeries {
    pub field: String,
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub absolute: Vec<bool>,
}

impl ErrorSeries {
    pub fn min(&self) -> f64 {
        self.errors.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn avg(&self) -> f64 {
        if self.errors.is_empty() {
            0.0
        } else {
            self.errors.iter().sum::<f64>() / self.errors.len() as f64
        }
    }
}

/// Compare two snapshot sets column by column.
pub fn error_series(reference: &SnapshotSet, candidate: &SnapshotSet) -> Result<ErrorSeries> {
    if reference.mesh_fingerprint != candidate.mesh_fingerprint {
        return Err(CoreError::FingerprintMismatch {
            expected: reference.mesh_fingerprint,
            got: candidate.mesh_fingerprint,
        });
    }
    if reference.n_snapshots() != candidate.n_snapshots()
        || reference.components != candidate.components
    {
        return Err(CoreError::Postproc(format!(
            "snapshot sets disagree: {}x{} vs {}x{}",
            reference.n_dof(),
            reference.n_snapshots(),
            candidate.n_dof(),
            candidate.n_snapshots()
        )));
    }
    let mut errors = Vec::with_capacity(reference.n_snapshots());
    let mut absolute = Vec::with_capacity(reference.n_snapshots());
    for k in 0..reference.n_snapshots() {
        let e = relative_error(
            reference.column(k),
            candidate.column(k),
            &reference.weights,
            reference.components,
        );
        errors.push(e.value);
        absolute.push(e.absolute);
    }
    Ok(ErrorSeries {
        field: reference.field.clone(),
        times: reference.times.clone(),
        errors,
        absolute,
    })
}

/// Drag/lift coefficients in both projection conventions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AeroCoefficients {
    /// x-projection of the force (standard drag).
    pub cd: f64,
    /// y-projection of the force (standard lift).
    pub cl: f64,
    /// Tangential projection of the traction.
    pub cd_tangent: f64,
    /// Normal projection of the traction.
    pub cl_normal: f64,
}

/// Integrate the traction over the named wall patch and scale by
/// `2 / (rho L_r U_r^2)`.
pub fn aero_coefficients(
    mesh: &Mesh,
    velocity: &VectorField,
    pressure: &ScalarField,
    rho: f64,
    mu: f64,
    patch: &str,
) -> Result<AeroCoefficients> {
    let pid = mesh
        .patch_id(patch)
        .ok_or_else(|| CoreError::Postproc(format!("no `{patch}` patch on this mesh")))?;
    let grads = gauss_gradient(mesh, velocity);
    let scale = 2.0 / (rho * REF_LENGTH * REF_VELOCITY * REF_VELOCITY);
    let mut out = AeroCoefficients::default();
    for j in mesh.patches[pid].faces() {
        let f = &mesh.faces[j];
        let d = f.centroid - mesh.cells[f.owner].centroid;
        let u_b = velocity.boundary_value(mesh, j);
        let u_p = velocity.values[f.owner];
        // Snap the face gradient so its projection along d matches the
        // boundary value exactly; tangential parts come from the cell.
        let defect = (u_b - u_p - grads[f.owner].mul_vec(d)) / d.norm_squared();
        let g = grads[f.owner] + defect.outer(d);
        let q_b = pressure.boundary_value(mesh, j);
        // Face force: (2 mu grad(u) - q I) . A, with A pointing out of the
        // fluid, i.e. the force the fluid exerts on the wall.
        let force = g.mul_vec(f.area) * (2.0 * mu) - f.area * q_b;
        let n = f.area.normalized();
        let t = n.perp();
        out.cd += scale * force.x;
        out.cl += scale * force.y;
        out.cd_tangent += scale * force.dot(t);
        out.cl_normal += scale * force.dot(n);
    }
    Ok(out)
}

/// Coefficient time series on the step grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefficientSeries {
    pub times: Vec<f64>,
    pub cd: Vec<f64>,
    pub cl: Vec<f64>,
    pub cd_tangent: Vec<f64>,
    pub cl_normal: Vec<f64>,
}

impl CoefficientSeries {
    pub fn push(&mut self, t: f64, c: AeroCoefficients) {
        self.times.push(t);
        self.cd.push(c.cd);
        self.cl.push(c.cl);
        self.cd_tangent.push(c.cd_tangent);
        self.cl_normal.push(c.cl_normal);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Relative L2-in-time coefficient errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientErrors {
    pub e_cd: f64,
    pub e_cl: f64,
    pub e_cd_tangent: f64,
    pub e_cl_normal: f64,
}

fn trapezoid_l2(times: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        acc += 0.5 * dt * (values[i] * values[i] + values[i - 1] * values[i - 1]);
    }
    acc.sqrt()
}

fn series_error(times: &[f64], reference: &[f64], candidate: &[f64]) -> f64 {
    let diff: Vec<f64> = reference
        .iter()
        .zip(candidate)
        .map(|(a, b)| a - b)
        .collect();
    let norm = trapezoid_l2(times, reference);
    let err = trapezoid_l2(times, &diff);
    if norm <= 1e-14 {
        err
    } else {
        err / norm
    }
}

/// Compare coefficient series of a full-order and a reduced run.
pub fn coefficient_errors(
    reference: &CoefficientSeries,
    candidate: &CoefficientSeries,
) -> Result<CoefficientErrors> {
    if reference.times.len() != candidate.times.len()
        || reference
            .times
            .iter()
            .zip(&candidate.times)
            .any(|(a, b)| (a - b).abs() > 1e-10)
    {
        return Err(CoreError::Postproc(
            "coefficient series are on different time grids".into(),
        ));
    }
    Ok(CoefficientErrors {
        e_cd: series_error(&reference.times, &reference.cd, &candidate.cd),
        e_cl: series_error(&reference.times, &reference.cl, &candidate.cl),
        e_cd_tangent: series_error(
            &reference.times,
            &reference.cd_tangent,
            &candidate.cd_tangent,
        ),
        e_cl_normal: series_error(&reference.times, &reference.cl_normal, &candidate.cl_normal),
    })
}
