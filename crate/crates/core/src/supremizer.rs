//! Supremizer solves and enriched velocity spaces.
//!
//! - `solve_supremizers` turns each pressure snapshot into a vector field by
//!   solving a Poisson problem per Cartesian component, `lap(s) = -grad(q)`,
//!   with homogeneous Dirichlet conditions on every boundary patch.
//! - `enrich` concatenates velocity POD modes with supremizer POD modes into
//!   the widened spaces used by the stabilized reduced models, checking the
//!   blocks stay linearly independent.
//!
//! Supremizer systems reuse the FV Laplacian of the flow solver, so one
//! discretization drives both the full-order and reduced-order operators.

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};
use crate::fom::SolverParams;
use crate::fom::coupling::solve_pressure;
use crate::fv::{gauss_gradient, BoundaryCondition, FieldValue, ScalarField};
use crate::geom::Vec2;
use crate::linalg::CellPattern;
use crate::mesh::Mesh;
use crate::pod::PodBasis;
use crate::snapshots::{l2_inner, SnapshotSet};

/// Boundary-condition family a mode block carries when full-order operators
/// are applied to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeBc {
    /// Homogenized velocity conditions: zero on every Dirichlet patch, free
    /// outflow untouched.
    Homogenized,
    /// Zero Dirichlet trace on every patch (supremizer fields).
    ZeroDirichlet,
}

/// Velocity space, possibly widened by supremizer blocks.
#[derive(Debug, Clone)]
pub struct EnrichedSpace {
    /// Columns of all blocks in order; `times` keeps the source eigenvalues.
    pub modes: SnapshotSet,
    /// Block layout: `(mode count, boundary family)` per block.
    pub blocks: Vec<(usize, ModeBc)>,
}

/// Which widened space to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceVariant {
    /// POD modes only.
    Plain,
    /// POD modes plus the supremizers of the matching pressure family.
    Sup1,
    /// POD modes plus the supremizers of both pressure families.
    Sup2,
}

impl EnrichedSpace {
    /// Plain space out of one velocity basis.
    pub fn from_basis(basis: &PodBasis) -> Self {
        EnrichedSpace {
            modes: basis.modes.clone(),
            blocks: vec![(basis.n_modes(), ModeBc::Homogenized)],
        }
    }

    pub fn n_modes(&self) -> usize {
        self.modes.n_snapshots()
    }

    pub fn mode(&self, k: usize) -> &[f64] {
        self.modes.column(k)
    }

    pub fn vector_mode(&self, k: usize) -> Vec<Vec2> {
        self.modes.vector_column(k)
    }

    /// Boundary family of mode `k`.
    pub fn mode_bc(&self, k: usize) -> ModeBc {
        let mut rest = k;
        for (count, bc) in &self.blocks {
            if rest < *count {
                return *bc;
            }
            rest -= count;
        }
        panic!("mode index {k} outside the space");
    }

    /// Pairwise L2 inner products of all columns.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.n_modes();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.modes.inner(i, j);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// L2 projection coefficients onto the (possibly non-orthonormal) space:
    /// solves the Gram system for the best approximation.
    pub fn project_l2(&self, column: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_modes();
        let mut b = DMatrix::zeros(n, 1);
        for k in 0..n {
            b[(k, 0)] = l2_inner(
                column,
                self.mode(k),
                &self.modes.weights,
                self.modes.components,
            );
        }
        let sol = self
            .gram()
            .lu()
            .solve(&b)
            .ok_or_else(|| CoreError::Enrichment("singular Gram matrix in projection".into()))?;
        Ok(sol.column(0).iter().copied().collect())
    }

    /// Linear combination of the modes.
    pub fn reconstruct(&self, coefficients: &[f64]) -> Vec<f64> {
        assert_eq!(coefficients.len(), self.n_modes());
        let mut out = vec![0.0; self.modes.n_dof()];
        for (k, c) in coefficients.iter().enumerate() {
            for (o, m) in out.iter_mut().zip(self.mode(k)) {
                *o += c * m;
            }
        }
        out
    }
}

/// Zero-Dirichlet scalar conditions on every patch.
fn zero_dirichlet(mesh: &Mesh) -> Vec<BoundaryCondition<f64>> {
    mesh.patches
        .iter()
        .map(|p| BoundaryCondition::FixedValue(vec![0.0; p.count]))
        .collect()
}

/// Solve one Poisson problem per pressure snapshot and component:
/// `lap(s_c) = -(grad q)_c` with `s = 0` on the whole boundary.
///
/// `pressure_bcs` are the conditions the snapshots were computed with; they
/// only enter the gradient evaluation. The output set is tagged `s` for a
/// `q` input and `s_bar` for a `q_bar` input.
pub fn solve_supremizers(
    mesh: &Mesh,
    pressures: &SnapshotSet,
    pressure_bcs: &[BoundaryCondition<f64>],
    params: &SolverParams,
) -> Result<SnapshotSet> {
    pressures.check_mesh(mesh)?;
    if pressures.components != 1 {
        return Err(CoreError::Contract(format!(
            "supremizers need scalar snapshots, `{}` has {} components",
            pressures.field, pressures.components
        )));
    }
    let tag = match pressures.field.as_str() {
        "q" => "s".to_string(),
        "q_bar" => "s_bar".to_string(),
        other => format!("s[{other}]"),
    };

    let mut tight = params.clone();
    tight.tol_pressure = tight.tol_pressure.min(1e-10);
    tight.max_pressure = tight.max_pressure.max(4000);

    let pattern = CellPattern::build(mesh);
    let gamma_face = vec![1.0; mesh.faces.len()];
    let s_bcs = zero_dirichlet(mesh);
    let n = mesh.n_cells();

    let mut out = SnapshotSet {
        field: tag,
        components: 2,
        n_cells: n,
        data: Vec::new(),
        times: Vec::new(),
        mesh_fingerprint: pressures.mesh_fingerprint,
        weights: pressures.weights.clone(),
    };

    for i in 0..pressures.n_snapshots() {
        let q = ScalarField {
            values: pressures.column(i).to_vec(),
            bcs: pressure_bcs.to_vec(),
            mesh_fingerprint: mesh.fingerprint(),
        };
        let gq = gauss_gradient(mesh, &q);
        let mut column = vec![0.0; 2 * n];
        for comp in 0..2 {
            let div: Vec<f64> = (0..n)
                .map(|c| -gq[c].component(comp) * mesh.cells[c].area)
                .collect();
            let mut s = ScalarField {
                values: vec![0.0; n],
                bcs: s_bcs.clone(),
                mesh_fingerprint: mesh.fingerprint(),
            };
            solve_pressure(
                mesh,
                &pattern,
                &gamma_face,
                &mut s,
                &div,
                &tight,
                false,
                "supremizer",
            )?;
            for c in 0..n {
                column[2 * c + comp] = s.values[c];
            }
        }
        out.push_column(&column, pressures.times[i]);
    }
    Ok(out)
}

/// Concatenate a velocity basis with supremizer bases into one space.
///
/// `sup` must carry zero blocks for `Plain`, one for `Sup1` (the matching
/// pressure family), two for `Sup2` (matching family first). A Gram-matrix
/// rank check rejects nearly dependent columns.
pub fn enrich(
    velocity: &PodBasis,
    sup: &[&PodBasis],
    variant: SpaceVariant,
) -> Result<EnrichedSpace> {
    let expected = match variant {
        SpaceVariant::Plain => 0,
        SpaceVariant::Sup1 => 1,
        SpaceVariant::Sup2 => 2,
    };
    if sup.len() != expected {
        return Err(CoreError::Enrichment(format!(
            "{variant:?} expects {expected} supremizer blocks, got {}",
            sup.len()
        )));
    }

    let mut modes = SnapshotSet::like(&velocity.modes, &velocity.modes.field);
    let mut blocks = vec![(velocity.n_modes(), ModeBc::Homogenized)];
    for k in 0..velocity.n_modes() {
        modes.push_column(velocity.mode(k), velocity.eigenvalues[k]);
    }
    for basis in sup {
        if basis.modes.components != 2
            || basis.modes.n_cells != modes.n_cells
            || basis.modes.mesh_fingerprint != modes.mesh_fingerprint
        {
            return Err(CoreError::Enrichment(format!(
                "supremizer basis `{}` does not match the velocity space mesh",
                basis.modes.field
            )));
        }
        for k in 0..basis.n_modes() {
            modes.push_column(basis.mode(k), basis.eigenvalues[k]);
        }
        blocks.push((basis.n_modes(), ModeBc::ZeroDirichlet));
    }

    let space = EnrichedSpace { modes, blocks };
    if space.n_modes() > 0 {
        let gram = space.gram();
        let min_eig = gram
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, b| a.min(*b));
        if min_eig <= 1e-10 {
            return Err(CoreError::Enrichment(format!(
                "enriched space is nearly dependent (smallest Gram eigenvalue \
                 {min_eig:.3e}); retry with fewer supremizer modes"
            )));
        }
    }
    Ok(space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, RectMeshSpec};
    use crate::pod::{compute_basis, correlation_matrix, ModeSelection};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square(n: usize) -> Mesh {
        generate_rect_mesh(&RectMeshSpec::channel(n, n, 1.0, 1.0)).unwrap()
    }

    fn zero_gradient_bcs(mesh: &Mesh) -> Vec<BoundaryCondition<f64>> {
        mesh.patches
            .iter()
            .map(|_| BoundaryCondition::ZeroGradient)
            .collect()
    }

    #[test]
    fn constant_pressure_gives_zero_supremizer() {
        let mesh = unit_square(8);
        let mut set = SnapshotSet::new(&mesh, "q", 1);
        set.push_column(&vec![3.5; mesh.n_cells()], 0.1);
        let sup = solve_supremizers(
            &mesh,
            &set,
            &zero_gradient_bcs(&mesh),
            &SolverParams::default(),
        )
        .unwrap();
        assert_eq!(sup.field, "s");
        assert!(sup.column(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_pressure_matches_unit_square_poisson_oracle() {
        // q = x gives grad q = (1, 0), so s_x solves lap(s) = -1 with zero
        // boundary trace: the classic unit-square Poisson bump, center value
        // 0.07367135 from the series solution.
        let mesh = unit_square(33);
        let mut set = SnapshotSet::new(&mesh, "q", 1);
        let col: Vec<f64> = mesh.cells.iter().map(|c| c.centroid.x).collect();
        set.push_column(&col, 0.1);
        let bcs: Vec<BoundaryCondition<f64>> = (0..mesh.patches.len())
            .map(|p| BoundaryCondition::fixed_profile(&mesh, p, |x| x.x))
            .collect();
        let sup =
            solve_supremizers(&mesh, &set, &bcs, &SolverParams::default()).unwrap();
        let center = mesh
            .cells
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da = (a.centroid - Vec2::new(0.5, 0.5)).norm();
                let db = (b.centroid - Vec2::new(0.5, 0.5)).norm();
                da.total_cmp(&db)
            })
            .map(|(i, _)| i)
            .unwrap();
        let s = sup.vector_column(0);
        assert!(
            (s[center].x - 0.07367135).abs() < 8e-4,
            "center value {}",
            s[center].x
        );
        assert!(s[center].y.abs() < 1e-8);
    }

    #[test]
    fn supremizer_solve_is_linear_in_the_pressure() {
        let mesh = unit_square(12);
        let q1: Vec<f64> = mesh
            .cells
            .iter()
            .map(|c| (c.centroid.x * 3.0).sin() + c.centroid.y)
            .collect();
        let q2: Vec<f64> = mesh
            .cells
            .iter()
            .map(|c| c.centroid.x * c.centroid.y - 0.2)
            .collect();
        let combo: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let mut set = SnapshotSet::new(&mesh, "q", 1);
        set.push_column(&q1, 0.1);
        set.push_column(&q2, 0.2);
        set.push_column(&combo, 0.3);
        let sup = solve_supremizers(
            &mesh,
            &set,
            &zero_gradient_bcs(&mesh),
            &SolverParams::default(),
        )
        .unwrap();
        for d in 0..sup.n_dof() {
            let want = 2.0 * sup.column(0)[d] - 3.0 * sup.column(1)[d];
            assert!(
                (sup.column(2)[d] - want).abs() < 1e-8,
                "dof {d}: {} vs {want}",
                sup.column(2)[d]
            );
        }
    }

    fn random_vector_basis(mesh: &Mesh, n: usize, modes: usize, seed: u64) -> PodBasis {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = SnapshotSet::new(mesh, "v", 2);
        for i in 0..n {
            let col: Vec<f64> = (0..2 * mesh.n_cells())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            set.push_column(&col, i as f64);
        }
        compute_basis(
            &correlation_matrix(&set).unwrap(),
            &set,
            ModeSelection::Count(modes),
        )
        .unwrap()
    }

    #[test]
    fn enrichment_layouts_and_bc_tags() {
        let mesh = unit_square(5);
        let v = random_vector_basis(&mesh, 3, 2, 1);
        let s = random_vector_basis(&mesh, 2, 1, 2);
        let s_bar = random_vector_basis(&mesh, 2, 1, 3);

        let plain = enrich(&v, &[], SpaceVariant::Plain).unwrap();
        assert_eq!(plain.n_modes(), 2);
        assert_eq!(plain.mode_bc(1), ModeBc::Homogenized);

        let sup1 = enrich(&v, &[&s], SpaceVariant::Sup1).unwrap();
        assert_eq!(sup1.n_modes(), 3);
        assert_eq!(sup1.blocks, vec![(2, ModeBc::Homogenized), (1, ModeBc::ZeroDirichlet)]);
        assert_eq!(sup1.mode(0), v.mode(0));
        assert_eq!(sup1.mode(2), s.mode(0));
        assert_eq!(sup1.mode_bc(2), ModeBc::ZeroDirichlet);

        let sup2 = enrich(&v, &[&s, &s_bar], SpaceVariant::Sup2).unwrap();
        assert_eq!(sup2.n_modes(), 4);
        assert_eq!(sup2.mode(3), s_bar.mode(0));

        assert!(matches!(
            enrich(&v, &[&s], SpaceVariant::Sup2),
            Err(CoreError::Enrichment(_))
        ));
    }

    #[test]
    fn near_dependent_enrichment_is_rejected() {
        let mesh = unit_square(5);
        let v = random_vector_basis(&mesh, 3, 2, 7);
        // A "supremizer" basis built from the velocity modes themselves is
        // exactly dependent on the velocity block.
        let mut dup = SnapshotSet::new(&mesh, "q", 2);
        dup.push_column(v.mode(0), 0.0);
        let dup_basis = compute_basis(
            &correlation_matrix(&dup).unwrap(),
            &dup,
            ModeSelection::Count(1),
        )
        .unwrap();
        assert!(matches!(
            enrich(&v, &[&dup_basis], SpaceVariant::Sup1),
            Err(CoreError::Enrichment(_))
        ));
    }

    #[test]
    fn zero_block_enrichment_equals_plain_basis() {
        let mesh = unit_square(5);
        let v = random_vector_basis(&mesh, 3, 2, 9);
        let none = random_vector_basis(&mesh, 2, 1, 10);
        let empty = PodBasis {
            modes: SnapshotSet::like(&none.modes, "s"),
            eigenvalues: none.eigenvalues.clone(),
            eigenvectors: none.eigenvectors.clone(),
            cumulative: none.cumulative.clone(),
        };
        let space = enrich(&v, &[&empty], SpaceVariant::Sup1).unwrap();
        assert_eq!(space.n_modes(), v.n_modes());
        for k in 0..space.n_modes() {
            assert_eq!(space.mode(k), v.mode(k));
        }
    }

    #[test]
    fn gram_projection_recovers_combination_coefficients() {
        let mesh = unit_square(6);
        let v = random_vector_basis(&mesh, 3, 2, 21);
        let s = random_vector_basis(&mesh, 2, 2, 22);
        let space = enrich(&v, &[&s], SpaceVariant::Sup1).unwrap();
        let coefs = vec![0.3, -1.2, 0.7, 2.0];
        let field = space.reconstruct(&coefs);
        let got = space.project_l2(&field).unwrap();
        for (a, b) in got.iter().zip(&coefs) {
            assert!((a - b).abs() < 1e-10, "{got:?} vs {coefs:?}");
        }
    }
}
