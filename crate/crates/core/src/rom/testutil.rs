//! Shared fixtures for the reduced-model test suites: tiny channel meshes,
//! smooth random snapshot families, POD spaces, and dense-operator helpers
//! for projection oracles.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fom::{CaseBcs, SolverParams};
use crate::fv::VectorField;
use crate::geom::Vec2;
use crate::mesh::generator::{generate_rect_mesh, RectMeshSpec};
use crate::mesh::Mesh;
use crate::pod::{compute_basis, correlation_matrix, ModeSelection, PodBasis};
use crate::snapshots::{LiftingFunction, SnapshotSet};
use crate::supremizer::EnrichedSpace;

use super::{RomSpaces, StabilizationMode};

/// Small uniform channel mesh (orthogonal cells, patches inlet/outlet/walls).
pub(crate) fn channel_mesh(nx: usize, ny: usize) -> Mesh {
    generate_rect_mesh(&RectMeshSpec::channel(nx, ny, 2.2, 0.41)).unwrap()
}

/// Smooth pseudo-random vector snapshots: sums of a few random plane waves,
/// deterministic per seed.
pub(crate) fn smooth_vector_set(mesh: &Mesh, tag: &str, count: usize, seed: u64) -> SnapshotSet {
    let mut set = SnapshotSet::new(mesh, tag, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 0..count {
        let mut col = Vec::with_capacity(mesh.n_cells() * 2);
        let waves: Vec<[f64; 5]> = (0..3)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.5..4.0),
                    rng.gen_range(0.5..8.0),
                    rng.gen_range(0.0..6.28),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        for c in &mesh.cells {
            let (x, y) = (c.centroid.x, c.centroid.y);
            let mut vx = 0.0;
            let mut vy = 0.0;
            for wv in &waves {
                vx += wv[0] * (wv[1] * x + wv[2] * y + wv[3]).sin();
                vy += wv[4] * (wv[2] * x - wv[1] * y + wv[3]).cos();
            }
            col.push(vx);
            col.push(vy);
        }
        set.push_column(&col, s as f64);
    }
    set
}

/// Smooth pseudo-random scalar snapshots.
pub(crate) fn smooth_scalar_set(mesh: &Mesh, tag: &str, count: usize, seed: u64) -> SnapshotSet {
    let mut set = SnapshotSet::new(mesh, tag, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 0..count {
        let waves: Vec<[f64; 4]> = (0..3)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.5..4.0),
                    rng.gen_range(0.5..8.0),
                    rng.gen_range(0.0..6.28),
                ]
            })
            .collect();
        let col: Vec<f64> = mesh
            .cells
            .iter()
            .map(|c| {
                waves
                    .iter()
                    .map(|wv| wv[0] * (wv[1] * c.centroid.x + wv[2] * c.centroid.y + wv[3]).sin())
                    .sum()
            })
            .collect();
        set.push_column(&col, s as f64);
    }
    set
}

pub(crate) fn pod_basis(set: &SnapshotSet, count: usize) -> PodBasis {
    let c = correlation_matrix(set).unwrap();
    compute_basis(&c, set, ModeSelection::Count(count)).unwrap()
}

/// Lifting function that is identically zero (zero-valued Dirichlet data,
/// zero conservative flux); projections of it vanish, so runs built on it
/// exercise the homogeneous parts of the reduced systems only.
pub(crate) fn zero_lifting(mesh: &Mesh) -> LiftingFunction {
    let case = CaseBcs::zero_inflow(mesh);
    LiftingFunction {
        chi: VectorField {
            values: vec![Vec2::ZERO; mesh.n_cells()],
            bcs: case.velocity_at(mesh, 0.0),
            mesh_fingerprint: mesh.fingerprint(),
        },
        flux: vec![0.0; mesh.n_faces()],
        mesh_fingerprint: mesh.fingerprint(),
    }
}

/// POD spaces over smooth random snapshot families, with either the real
/// channel lifting (solved) or the zero lifting.
pub(crate) fn random_spaces(
    mesh: &Mesh,
    mode: StabilizationMode,
    dims: (usize, usize, usize, usize),
    seed: u64,
    real_lifting: bool,
) -> (RomSpaces, CaseBcs) {
    let (nv, nu, nq, nqb) = dims;
    let case = CaseBcs::channel_cylinder(mesh);
    let v = EnrichedSpace::from_basis(&pod_basis(
        &smooth_vector_set(mesh, "v", nv + 2, seed),
        nv,
    ));
    let u = EnrichedSpace::from_basis(&pod_basis(
        &smooth_vector_set(mesh, "u", nu + 2, seed + 1),
        nu,
    ));
    let q = pod_basis(&smooth_scalar_set(mesh, "q", nq + 2, seed + 2), nq);
    let q_bar = pod_basis(&smooth_scalar_set(mesh, "q_bar", nqb + 2, seed + 3), nqb);
    let lifting = if real_lifting {
        LiftingFunction::build(mesh, &SolverParams::default()).unwrap()
    } else {
        zero_lifting(mesh)
    };
    let spaces = RomSpaces::build(mode, v, u, q, q_bar, lifting, mesh).unwrap();
    (spaces, case)
}

pub(crate) fn flatten_vec2(values: &[Vec2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() * 2);
    for v in values {
        out.push(v.x);
        out.push(v.y);
    }
    out
}

pub(crate) fn unflatten_vec2(column: &[f64]) -> Vec<Vec2> {
    column
        .chunks_exact(2)
        .map(|p| Vec2::new(p[0], p[1]))
        .collect()
}

/// Dense affine representation of an operator from its action: returns
/// (linear part, offset) with `apply(x) = linear * x + offset`. The offset
/// captures fixed boundary data, so operators on the lifting function are
/// covered too.
pub(crate) fn dense_affine(
    dim_in: usize,
    apply: impl Fn(&[f64]) -> Vec<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let offset = DVector::from_vec(apply(&vec![0.0; dim_in]));
    let mut linear = DMatrix::zeros(offset.len(), dim_in);
    for d in 0..dim_in {
        let mut e = vec![0.0; dim_in];
        e[d] = 1.0;
        let col = DVector::from_vec(apply(&e)) - &offset;
        linear.set_column(d, &col);
    }
    (linear, offset)
}

/// Columns of a snapshot family as a dense matrix.
pub(crate) fn basis_matrix(columns: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = columns.first().map_or(0, Vec::len);
    let mut m = DMatrix::zeros(rows, columns.len());
    for (k, col) in columns.iter().enumerate() {
        m.set_column(k, &DVector::from_vec(col.clone()));
    }
    m
}

/// Max absolute difference between two matrices.
pub(crate) fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).amax()
}
