//! Cell-centered fields, boundary conditions, and discrete FV operators.
//!
//! Fields are generic over the stored value (`f64` or `Vec2`); every operator
//! assembles one scalar CSR matrix that acts component-wise, with the
//! boundary and deferred-correction contributions collected in a per-cell
//! explicit vector, so `L(phi) ~ matrix * values + rhs` in integrated
//! (volume-weighted) form.

pub mod ops;

use crate::error::{CoreError, Result};
use crate::geom::{Mat2, Vec2};
use crate::linalg::Csr;
use crate::mesh::Mesh;

pub use ops::{
    convective, div_grad_transpose, face_flux, face_values, gauss_divergence, gauss_gradient,
    laplacian, laplacian_face_flux, laplacian_per_face, rhie_chow_flux,
};

/// Value stored per cell: scalar or 2-D vector.
pub trait FieldValue:
    Copy
    + Default
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
{
    /// Green-Gauss gradient per cell: `Vec2` for scalars, `Mat2` for vectors.
    type Gradient: Copy
        + Default
        + std::ops::Add<Output = Self::Gradient>
        + std::ops::Sub<Output = Self::Gradient>
        + std::ops::AddAssign
        + std::ops::Mul<f64, Output = Self::Gradient>;

    const N_COMPONENTS: usize;

    fn zero() -> Self;
    fn finite(&self) -> bool;
    fn dot(self, other: Self) -> f64;
    fn component(self, k: usize) -> f64;
    fn with_component(self, k: usize, v: f64) -> Self;
    /// Flux contribution to the Green-Gauss gradient: `phi (x) A`.
    fn flux_outer(self, a: Vec2) -> Self::Gradient;
    /// Directional evaluation of a gradient: `(grad phi) . d`.
    fn grad_dot(g: Self::Gradient, d: Vec2) -> Self;
}

impl FieldValue for f64 {
    type Gradient = Vec2;
    const N_COMPONENTS: usize = 1;

    fn zero() -> Self {
        0.0
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn dot(self, other: Self) -> f64 {
        self * other
    }
    fn component(self, _k: usize) -> f64 {
        self
    }
    fn with_component(self, _k: usize, v: f64) -> Self {
        v
    }
    fn flux_outer(self, a: Vec2) -> Vec2 {
        a * self
    }
    fn grad_dot(g: Vec2, d: Vec2) -> f64 {
        g.dot(d)
    }
}

impl FieldValue for Vec2 {
    type Gradient = Mat2;
    const N_COMPONENTS: usize = 2;

    fn zero() -> Self {
        Vec2::ZERO
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn dot(self, other: Self) -> f64 {
        Vec2::dot(self, other)
    }
    fn component(self, k: usize) -> f64 {
        match k {
            0 => self.x,
            _ => self.y,
        }
    }
    fn with_component(mut self, k: usize, v: f64) -> Self {
        match k {
            0 => self.x = v,
            _ => self.y = v,
        }
        self
    }
    fn flux_outer(self, a: Vec2) -> Mat2 {
        // (grad v)_ab = d v_a / d x_b ~ sum v_a A_b.
        self.outer(a)
    }
    fn grad_dot(g: Mat2, d: Vec2) -> Vec2 {
        g.mul_vec(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition<T> {
    /// Dirichlet; one value per face of the patch, in patch face order.
    FixedValue(Vec<T>),
    /// Homogeneous Neumann.
    ZeroGradient,
    /// Prescribed normal gradient; one value per face of the patch.
    FixedGradient(Vec<T>),
}

impl<T: FieldValue> BoundaryCondition<T> {
    /// Dirichlet with the same value on every face of the patch.
    pub fn uniform_fixed(mesh: &Mesh, patch: usize, value: T) -> Self {
        BoundaryCondition::FixedValue(vec![value; mesh.patches[patch].count])
    }

    /// Dirichlet from a profile evaluated at each face centroid.
    pub fn fixed_profile(mesh: &Mesh, patch: usize, profile: impl Fn(Vec2) -> T) -> Self {
        BoundaryCondition::FixedValue(
            mesh.patches[patch]
                .faces()
                .map(|j| profile(mesh.faces[j].centroid))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: FieldValue> {
    pub values: Vec<T>,
    /// One boundary condition per patch, indexed by patch id.
    pub bcs: Vec<BoundaryCondition<T>>,
    pub mesh_fingerprint: u64,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<Vec2>;

impl<T: FieldValue> Field<T> {
    /// Uniform field with zero-gradient conditions everywhere.
    pub fn constant(mesh: &Mesh, value: T) -> Self {
        Field {
            values: vec![value; mesh.n_cells()],
            bcs: vec![BoundaryCondition::ZeroGradient; mesh.patches.len()],
            mesh_fingerprint: mesh.fingerprint(),
        }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self::constant(mesh, T::zero())
    }

    /// Field sampled from a function of the cell centroid; zero-gradient BCs.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(Vec2) -> T) -> Self {
        Field {
            values: mesh.cells.iter().map(|c| f(c.centroid)).collect(),
            bcs: vec![BoundaryCondition::ZeroGradient; mesh.patches.len()],
            mesh_fingerprint: mesh.fingerprint(),
        }
    }

    /// Replaces the cell values, keeping boundary conditions.
    pub fn with_values(&self, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Field {
            values,
            bcs: self.bcs.clone(),
            mesh_fingerprint: self.mesh_fingerprint,
        }
    }

    pub fn set_bc(&mut self, patch: usize, bc: BoundaryCondition<T>) {
        self.bcs[patch] = bc;
    }

    pub fn ensure_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.mesh_fingerprint != mesh.fingerprint() {
            return Err(CoreError::FingerprintMismatch {
                expected: mesh.fingerprint(),
                got: self.mesh_fingerprint,
            });
        }
        if self.values.len() != mesh.n_cells() || self.bcs.len() != mesh.patches.len() {
            return Err(CoreError::Contract(
                "field size does not match mesh".into(),
            ));
        }
        Ok(())
    }

    /// Boundary-condition value at a boundary face.
    pub fn boundary_value(&self, mesh: &Mesh, face: usize) -> T {
        let patch = mesh
            .face_patch(face)
            .expect("boundary_value on internal face");
        let f = &mesh.faces[face];
        let local = face - mesh.patches[patch].start;
        match &self.bcs[patch] {
            BoundaryCondition::FixedValue(vals) => vals[local],
            BoundaryCondition::ZeroGradient => self.values[f.owner],
            BoundaryCondition::FixedGradient(grads) => {
                let d = f.centroid - mesh.cells[f.owner].centroid;
                let n = f.area.normalized();
                self.values[f.owner] + grads[local] * d.dot(n)
            }
        }
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.finite())
    }
}

/// Discrete linear operator in integrated form:
/// `L(phi) ~ matrix * values + rhs`, each entry being the operator integral
/// over the cell. The matrix acts component-wise on vector fields; boundary
/// conditions and deferred corrections live in `rhs`.
#[derive(Debug, Clone)]
pub struct SparseOperator<T: FieldValue> {
    pub matrix: Csr,
    pub rhs: Vec<T>,
}

impl<T: FieldValue> SparseOperator<T> {
    pub fn apply(&self, values: &[T]) -> Vec<T> {
        let n = self.matrix.n();
        debug_assert_eq!(values.len(), n);
        let mut out = self.rhs.clone();
        let s = &self.matrix.structure;
        for i in 0..n {
            let mut acc = T::zero();
            for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                acc += values[s.col_idx[k]] * self.matrix.vals[k];
            }
            out[i] += acc;
        }
        out
    }

    /// Operator value per unit volume (divides the integrated form by the
    /// cell area), i.e. the pointwise stencil evaluation.
    pub fn apply_per_volume(&self, mesh: &Mesh, values: &[T]) -> Vec<T> {
        let mut out = self.apply(values);
        for (i, v) in out.iter_mut().enumerate() {
            *v = *v * (1.0 / mesh.cells[i].area);
        }
        out
    }
}
