//! Snapshot collection and persistence.
//!
//! - `SnapshotSet`: one field's snapshot matrix (dof x samples) with time
//!   stamps, cell-area weights, and the mesh fingerprint it was taken on.
//! - `l2_inner`: area-weighted inner product matching the continuous L2(Omega)
//!   pairing on cell-constant fields.
//! - `SamplingSchedule`: uniform sampling interval aligned to the time step.
//! - `lifting`: divergence-free inlet lifting and snapshot homogenization.
//!
//! Degrees of freedom are stored cell-major: for vector fields the x and y
//! components of one cell are adjacent (`dof = cell * components + comp`).

pub mod io;
pub mod lifting;

pub use io::{load_lifting, load_snapshots, save_lifting, save_snapshots};
pub use lifting::{homogenize_set, LiftingFunction};

use crate::error::{CoreError, Result};
use crate::fv::{ScalarField, VectorField};
use crate::geom::Vec2;
use crate::mesh::Mesh;

/// Area-weighted inner product of two dof vectors laid out cell-major with
/// `components` entries per cell.
pub fn l2_inner(a: &[f64], b: &[f64], weights: &[f64], components: usize) -> f64 {
    debug_assert_eq!(a.len(), weights.len() * components);
    debug_assert_eq!(b.len(), a.len());
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        let mut cell = 0.0;
        for c in 0..components {
            cell += a[i * components + c] * b[i * components + c];
        }
        acc += w * cell;
    }
    acc
}

/// L2 norm induced by `l2_inner`.
pub fn l2_norm(a: &[f64], weights: &[f64], components: usize) -> f64 {
    l2_inner(a, a, weights, components).sqrt()
}

/// Snapshot matrix for one field.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    /// Field tag: one of "v", "u", "q", "q_bar", "s", "s_bar".
    pub field: String,
    /// Scalar (1) or vector (2) entries per cell.
    pub components: usize,
    pub n_cells: usize,
    /// Column-major dof matrix, one column per snapshot.
    pub data: Vec<f64>,
    pub times: Vec<f64>,
    pub mesh_fingerprint: u64,
    /// Cell areas, the L2 quadrature weights.
    pub weights: Vec<f64>,
}

impl SnapshotSet {
    pub fn new(mesh: &Mesh, field: impl Into<String>, components: usize) -> Self {
        assert!(components == 1 || components == 2);
        Self {
            field: field.into(),
            components,
            n_cells: mesh.n_cells(),
            data: Vec::new(),
            times: Vec::new(),
            mesh_fingerprint: mesh.fingerprint(),
            weights: mesh.cells.iter().map(|c| c.area).collect(),
        }
    }

    /// Empty set sharing another set's mesh metadata and quadrature weights.
    pub fn like(other: &SnapshotSet, field: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            components: other.components,
            n_cells: other.n_cells,
            data: Vec::new(),
            times: Vec::new(),
            mesh_fingerprint: other.mesh_fingerprint,
            weights: other.weights.clone(),
        }
    }

    pub fn n_dof(&self) -> usize {
        self.n_cells * self.components
    }

    pub fn n_snapshots(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        let n = self.n_dof();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn column_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.n_dof();
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn push_column(&mut self, column: &[f64], t: f64) {
        assert_eq!(column.len(), self.n_dof());
        self.data.extend_from_slice(column);
        self.times.push(t);
    }

    pub fn push_scalar(&mut self, field: &ScalarField, t: f64) {
        assert_eq!(self.components, 1);
        self.push_column(&field.values, t);
    }

    pub fn push_vector(&mut self, field: &VectorField, t: f64) {
        assert_eq!(self.components, 2);
        let mut col = Vec::with_capacity(self.n_dof());
        for v in &field.values {
            col.push(v.x);
            col.push(v.y);
        }
        self.data.extend_from_slice(&col);
        self.times.push(t);
    }

    /// Interpret snapshot `k` as cell vectors (vector sets only).
    pub fn vector_column(&self, k: usize) -> Vec<Vec2> {
        assert_eq!(self.components, 2);
        self.column(k)
            .chunks_exact(2)
            .map(|p| Vec2::new(p[0], p[1]))
            .collect()
    }

    /// L2 inner product of snapshots `i` and `j`.
    pub fn inner(&self, i: usize, j: usize) -> f64 {
        l2_inner(self.column(i), self.column(j), &self.weights, self.components)
    }

    pub fn norm(&self, k: usize) -> f64 {
        self.inner(k, k).sqrt()
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

/// Uniform snapshot sampling interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSchedule {
    pub interval: f64,
}

impl SamplingSchedule {
    pub fn new(interval: f64) -> Self {
        Self { interval }
    }

    /// Number of time steps between samples; the step must divide the
    /// interval exactly (to rounding).
    pub fn steps_per_sample(&self, dt: f64) -> Result<usize> {
        if !(self.interval > 0.0) || !(dt > 0.0) {
            return Err(CoreError::Contract(format!(
                "sampling interval {} and time step {dt} must be positive",
                self.interval
            )));
        }
        let ratio = self.interval / dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-8 * steps {
            return Err(CoreError::Contract(format!(
                "time step {dt} does not divide the sampling interval {}",
                self.interval
            )));
        }
        Ok(steps as usize)
    }

    /// Sample times in (t0, t_end].
    pub fn times(&self, t0: f64, t_end: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 1usize;
        loop {
            let t = t0 + k as f64 * self.interval;
            if t > t_end + 1e-9 * self.interval {
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cylinder_mesh, generate_rect_mesh, RectMeshSpec};
    use approx::assert_relative_eq;

    #[test]
    fn inner_product_of_ones_is_domain_area() {
        let m = generate_cylinder_mesh(2000, 3.0).unwrap();
        let ones = ScalarField::constant(&m, 1.0);
        let mut set = SnapshotSet::new(&m, "q", 1);
        set.push_scalar(&ones, 0.1);
        let expect = 0.41 * 2.2 - std::f64::consts::PI * 0.05 * 0.05;
        // The polygonal cylinder under-resolves the circle slightly.
        assert_relative_eq!(set.inner(0, 0), expect, max_relative = 2e-3);
    }

    #[test]
    fn checkerboard_pair_is_orthogonal() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(4, 4)).unwrap();
        let a = ScalarField::from_fn(&m, |c| {
            if (c.x * 4.0) as usize % 2 == 0 { 1.0 } else { -1.0 }
        });
        let b = ScalarField::constant(&m, 1.0);
        let mut set = SnapshotSet::new(&m, "q", 1);
        set.push_scalar(&a, 0.0);
        set.push_scalar(&b, 1.0);
        assert_relative_eq!(set.inner(0, 1), 0.0, epsilon = 1e-14);
        assert!(set.inner(0, 0) > 0.0);
    }

    #[test]
    fn vector_layout_round_trips() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(3, 2)).unwrap();
        let f = VectorField::from_fn(&m, |c| Vec2::new(c.x, -c.y));
        let mut set = SnapshotSet::new(&m, "v", 2);
        set.push_vector(&f, 0.5);
        assert_eq!(set.vector_column(0), f.values);
        // Vector inner product sums both components.
        let norm2: f64 = f
            .values
            .iter()
            .zip(&m.cells)
            .map(|(v, c)| v.norm_squared() * c.area)
            .sum();
        assert_relative_eq!(set.inner(0, 0), norm2, epsilon = 1e-14);
    }

    #[test]
    fn schedule_counts_benchmark_samples() {
        let s = SamplingSchedule::new(0.1);
        assert_eq!(s.steps_per_sample(4e-4).unwrap(), 250);
        assert_eq!(s.times(0.0, 8.0).len(), 80);
        let ci = SamplingSchedule::new(0.2);
        assert_eq!(ci.steps_per_sample(1e-3).unwrap(), 200);
        assert_eq!(ci.times(0.0, 8.0).len(), 40);
    }

    #[test]
    fn misaligned_step_rejected() {
        let s = SamplingSchedule::new(0.1);
        assert!(s.steps_per_sample(3e-4).is_err());
        assert!(s.steps_per_sample(-1.0).is_err());
    }

    #[test]
    fn empty_interval_has_no_samples() {
        let s = SamplingSchedule::new(0.1);
        assert!(s.times(2.0, 2.0).is_empty());
    }
}
