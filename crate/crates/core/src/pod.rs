//! Method-of-snapshots proper orthogonal decomposition.
//!
//! - `correlation_matrix` assembles the snapshot Gram matrix in the
//!   cell-volume-weighted L2 inner product.
//! - `compute_basis` eigendecomposes the correlation matrix and builds
//!   L2-orthonormal modes, truncated by an energy target or a mode count.
//! - `cumulative_table` reports the leading cumulative energy fractions per
//!   field in the layout used by the offline summary.
//!
//! Eigenvalues are sorted descending, tiny negatives are clipped to zero, and
//! anything below `1e-12` of the leading eigenvalue counts as numerically
//! zero and never produces a mode.  Each mode is explicitly renormalized to
//! unit L2 norm and its sign is fixed so the first significant weighted
//! component is positive, making the basis deterministic across eigensolvers.

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};
use crate::snapshots::{l2_inner, l2_norm, SnapshotSet};

/// Relative eigenvalue cutoff for the numerical rank.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Truncation rule for `compute_basis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeSelection {
    /// Keep the smallest number of modes whose cumulative energy fraction
    /// reaches the target (target in `(0, 1]`).
    Energy(f64),
    /// Keep exactly this many modes (at most the numerical rank).
    Count(usize),
}

/// An L2-orthonormal basis extracted from one snapshot family.
#[derive(Debug, Clone)]
pub struct PodBasis {
    /// Modes as columns; `times[k]` carries the eigenvalue of mode `k` so the
    /// basis round-trips through the snapshot container format.
    pub modes: SnapshotSet,
    /// Full eigenvalue spectrum, descending, negatives clipped to zero.
    pub eigenvalues: Vec<f64>,
    /// Eigenvector matrix, columns ordered like `eigenvalues`. Columns that
    /// produced modes share the mode sign convention.
    pub eigenvectors: DMatrix<f64>,
    /// Cumulative energy fractions over the full spectrum.
    pub cumulative: Vec<f64>,
}

impl PodBasis {
    /// Number of retained modes.
    pub fn n_modes(&self) -> usize {
        self.modes.n_snapshots()
    }

    /// Mode `k` as a flat dof slice.
    pub fn mode(&self, k: usize) -> &[f64] {
        self.modes.column(k)
    }

    /// Mode `k` as per-cell vectors (two-component bases only).
    pub fn vector_mode(&self, k: usize) -> Vec<crate::geom::Vec2> {
        self.modes.vector_column(k)
    }

    /// L2 projection coefficients of a dof column onto the retained modes.
    pub fn project(&self, column: &[f64]) -> Vec<f64> {
        (0..self.n_modes())
            .map(|k| {
                l2_inner(
                    column,
                    self.mode(k),
                    &self.modes.weights,
                    self.modes.components,
                )
            })
            .collect()
    }

    /// Linear combination of the retained modes.
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

    /// The same basis restricted to its first `k` modes; the spectrum
    /// metadata is kept whole.
    pub fn truncated(&self, k: usize) -> Result<PodBasis> {
        if k > self.n_modes() {
            return Err(CoreError::Pod(format!(
                "cannot truncate a {}-mode `{}` basis to {k} modes",
                self.n_modes(),
                self.modes.field
            )));
        }
        let mut modes = SnapshotSet::like(&self.modes, &self.modes.field);
        for i in 0..k {
            modes.push_column(self.mode(i), self.modes.times[i]);
        }
        Ok(PodBasis {
            modes,
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: self.eigenvectors.clone(),
            cumulative: self.cumulative.clone(),
        })
    }

    /// Rebuild a basis from persisted modes (each mode's time slot carries
    /// its eigenvalue). Only what the container holds comes back: the
    /// spectrum tail is gone, so `cumulative` is empty and `eigenvectors`
    /// zero-sized. Projection and reconstruction are unaffected.
    pub fn from_modes(modes: SnapshotSet) -> PodBasis {
        PodBasis {
            eigenvalues: modes.times.clone(),
            eigenvectors: DMatrix::zeros(0, 0),
            cumulative: Vec::new(),
            modes,
        }
    }
}

/// Gram matrix `C[i][j] = (snapshot_i, snapshot_j)` in the weighted L2 inner
/// product. Symmetric positive-semidefinite by construction.
pub fn correlation_matrix(set: &SnapshotSet) -> Result<DMatrix<f64>> {
    let n = set.n_snapshots();
    if n == 0 {
        return Err(CoreError::Pod(format!(
            "correlation matrix of `{}` requires at least one snapshot",
            set.field
        )));
    }
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = set.inner(i, j);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Sign fix: positive first weighted component above `1e-12` of the largest.
fn canonical_sign(mode: &[f64], weights: &[f64], components: usize) -> f64 {
    let weighted = |d: usize| mode[d].abs() * weights[d / components].sqrt();
    let peak = (0..mode.len()).map(weighted).fold(0.0, f64::max);
    if peak == 0.0 {
        return 1.0;
    }
    for (d, value) in mode.iter().enumerate() {
        if weighted(d) > RANK_CUTOFF * peak {
            return if *value < 0.0 { -1.0 } else { 1.0 };
        }
    }
    1.0
}

/// Eigendecompose the correlation matrix and assemble the truncated basis.
///
/// The correlation matrix must come from `correlation_matrix` of the same
/// set. Modes are built as eigenvector-weighted snapshot combinations and
/// renormalized to unit L2 norm; eigenvalues below the rank cutoff never
/// produce modes.
pub fn compute_basis(
    c: &DMatrix<f64>,
    set: &SnapshotSet,
    selection: ModeSelection,
) -> Result<PodBasis> {
    let n = set.n_snapshots();
    if n == 0 || c.nrows() != n || c.ncols() != n {
        return Err(CoreError::Pod(format!(
            "correlation matrix is {}x{} but the `{}` set has {n} snapshots",
            c.nrows(),
            c.ncols(),
            set.field
        )));
    }

    let eigen = c.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eigen.eigenvalues[*b].total_cmp(&eigen.eigenvalues[*a]));
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|i| eigen.eigenvalues[*i].max(0.0))
        .collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (k, i) in order.iter().enumerate() {
        eigenvectors.set_column(k, &eigen.eigenvectors.column(*i));
    }

    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(CoreError::Pod(format!(
            "`{}` snapshots carry no energy",
            set.field
        )));
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut run = 0.0;
    for lambda in &eigenvalues {
        run += lambda;
        cumulative.push((run / total).min(1.0));
    }
    let rank = eigenvalues
        .iter()
        .filter(|l| **l >= RANK_CUTOFF * eigenvalues[0])
        .count();

    let n_modes = match selection {
        ModeSelection::Energy(target) => {
            if !(target > 0.0 && target <= 1.0) {
                return Err(CoreError::Pod(format!(
                    "energy target {target} outside (0, 1]"
                )));
            }
            cumulative
                .iter()
                .take(rank)
                .position(|c| *c >= target)
                .map(|k| k + 1)
                .unwrap_or(rank)
        }
        ModeSelection::Count(count) => {
            if count > rank {
                return Err(CoreError::Pod(format!(
                    "{count} modes requested but the `{}` set has numerical rank {rank}",
                    set.field
                )));
            }
            count
        }
    };

    let mut modes = SnapshotSet::like(set, &set.field);
    for k in 0..n_modes {
        let mut mode = vec![0.0; set.n_dof()];
        for j in 0..n {
            let q = eigenvectors[(j, k)];
            for (m, s) in mode.iter_mut().zip(set.column(j)) {
                *m += q * s;
            }
        }
        let norm = l2_norm(&mode, &set.weights, set.components);
        if norm <= 0.0 || !norm.is_finite() {
            return Err(CoreError::Pod(format!(
                "mode {k} of `{}` has degenerate norm {norm}",
                set.field
            )));
        }
        let sign = canonical_sign(&mode, &set.weights, set.components);
        for m in mode.iter_mut() {
            *m *= sign / norm;
        }
        if sign < 0.0 {
            for j in 0..n {
                eigenvectors[(j, k)] = -eigenvectors[(j, k)];
            }
        }
        modes.push_column(&mode, eigenvalues[k]);
    }

    Ok(PodBasis {
        modes,
        eigenvalues,
        eigenvectors,
        cumulative,
    })
}

/// Cumulative energy fractions, one row per truncation level `k = 1..=4`,
/// one column per basis. Levels beyond a spectrum's length repeat its final
/// (complete) fraction.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    pub fields: Vec<String>,
    /// `rows[k - 1][column]` is the fraction captured by the first `k` modes.
    pub rows: Vec<Vec<f64>>,
}

pub fn cumulative_table(bases: &[&PodBasis]) -> CumulativeTable {
    let fields = bases.iter().map(|b| b.modes.field.clone()).collect();
    let rows = (1..=4)
        .map(|k| {
            bases
                .iter()
                .map(|b| {
                    let idx = k.min(b.cumulative.len());
                    b.cumulative[idx - 1]
                })
                .collect()
        })
        .collect();
    CumulativeTable { fields, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, RectMeshSpec};
    use crate::mesh::Mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_mesh() -> Mesh {
        generate_rect_mesh(&RectMeshSpec::channel(6, 3, 2.2, 0.41)).unwrap()
    }

    fn scalar_set(mesh: &Mesh, columns: &[Vec<f64>]) -> SnapshotSet {
        let mut set = SnapshotSet::new(mesh, "q", 1);
        for (i, col) in columns.iter().enumerate() {
            set.push_column(col, i as f64);
        }
        set
    }

    fn random_set(mesh: &Mesh, components: usize, n: usize, seed: u64) -> SnapshotSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = SnapshotSet::new(mesh, "v", components);
        for i in 0..n {
            let col: Vec<f64> = (0..mesh.cells.len() * components)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            set.push_column(&col, i as f64);
        }
        set
    }

    #[test]
    fn orthogonal_snapshots_give_diagonal_correlation() {
        let mesh = tiny_mesh();
        let n = mesh.cells.len();
        // Two indicator-style snapshots on disjoint halves, scaled so the
        // weighted norms are exactly 2 and 1.
        let half = n / 2;
        let w: Vec<f64> = mesh.cells.iter().map(|c| c.area).collect();
        let first_mass: f64 = w[..half].iter().sum();
        let second_mass: f64 = w[half..].iter().sum();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for i in 0..half {
            a[i] = 2.0 / first_mass.sqrt();
        }
        for i in half..n {
            b[i] = 1.0 / second_mass.sqrt();
        }
        let set = scalar_set(&mesh, &[a, b]);
        let c = correlation_matrix(&set).unwrap();
        assert!((c[(0, 0)] - 4.0).abs() < 1e-12);
        assert!((c[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(c[(0, 1)].abs() < 1e-14 && c[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn duplicated_snapshot_gives_rank_one_correlation() {
        let mesh = tiny_mesh();
        let f: Vec<f64> = mesh.cells.iter().map(|c| c.centroid.x + 0.3).collect();
        let set = scalar_set(&mesh, &[f.clone(), f.clone()]);
        let c = correlation_matrix(&set).unwrap();
        let norm2 = set.inner(0, 0);
        assert!((c.trace() - 2.0 * norm2).abs() < 1e-12 * norm2);
        // rank 1: determinant vanishes.
        assert!((c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)]).abs() < 1e-10 * norm2 * norm2);
        let basis = compute_basis(&c, &set, ModeSelection::Energy(0.999)).unwrap();
        assert_eq!(basis.n_modes(), 1);
    }

    #[test]
    fn empty_set_is_rejected() {
        let mesh = tiny_mesh();
        let set = scalar_set(&mesh, &[]);
        assert!(matches!(correlation_matrix(&set), Err(CoreError::Pod(_))));
    }

    #[test]
    fn single_snapshot_mode_is_the_normalized_snapshot() {
        let mesh = tiny_mesh();
        let f: Vec<f64> = mesh.cells.iter().map(|c| c.centroid.y - 0.1).collect();
        let set = scalar_set(&mesh, &[f.clone()]);
        let c = correlation_matrix(&set).unwrap();
        let basis = compute_basis(&c, &set, ModeSelection::Count(1)).unwrap();
        let norm = l2_norm(&f, &set.weights, 1);
        assert!((basis.eigenvalues[0] - norm * norm).abs() < 1e-12 * norm * norm);
        let sign = canonical_sign(&f, &set.weights, 1);
        for (m, v) in basis.mode(0).iter().zip(&f) {
            assert!((m - sign * v / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn modes_match_dense_svd_oracle() {
        let mesh = tiny_mesh();
        let set = random_set(&mesh, 2, 5, 7);
        let c = correlation_matrix(&set).unwrap();
        let basis = compute_basis(&c, &set, ModeSelection::Count(5)).unwrap();

        // Oracle: SVD of the weight-scaled snapshot matrix. Left singular
        // vectors scaled back are the L2-orthonormal modes; singular values
        // squared are the eigenvalues.
        let n_dof = set.n_dof();
        let mut b = DMatrix::zeros(n_dof, 5);
        for j in 0..5 {
            for (d, v) in set.column(j).iter().enumerate() {
                b[(d, j)] = v * set.weights[d / 2].sqrt();
            }
        }
        let svd = b.svd(true, false);
        let u = svd.u.as_ref().unwrap();
        for k in 0..5 {
            let sigma = svd.singular_values[k];
            assert!(
                (basis.eigenvalues[k] - sigma * sigma).abs() < 1e-9 * sigma.max(1.0) * sigma,
                "eigenvalue {k}"
            );
            let mut oracle: Vec<f64> = (0..n_dof)
                .map(|d| u[(d, k)] / set.weights[d / 2].sqrt())
                .collect();
            let s = canonical_sign(&oracle, &set.weights, 2);
            for v in oracle.iter_mut() {
                *v *= s;
            }
            for (d, (have, want)) in basis.mode(k).iter().zip(&oracle).enumerate() {
                assert!(
                    (have - want).abs() < 1e-9,
                    "mode {k} dof {d}: {have} vs {want}"
                );
            }
        }
    }

    #[test]
    fn modes_are_orthonormal() {
        let mesh = tiny_mesh();
        let set = random_set(&mesh, 2, 6, 11);
        let c = correlation_matrix(&set).unwrap();
        let basis = compute_basis(&c, &set, ModeSelection::Count(6)).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let p = l2_inner(basis.mode(i), basis.mode(j), &set.weights, 2);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p - want).abs() <= 1e-10, "({i},{j}): {p}");
            }
        }
    }

    #[test]
    fn truncated_reconstruction_error_matches_discarded_energy() {
        let mesh = tiny_mesh();
        let set = random_set(&mesh, 1, 6, 3);
        let c = correlation_matrix(&set).unwrap();
        let basis = compute_basis(&c, &set, ModeSelection::Count(6)).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..=6usize {
            let mut direct = 0.0;
            for i in 0..6 {
                let col = set.column(i);
                let mut residual = col.to_vec();
                for m in 0..k {
                    let a = l2_inner(col, basis.mode(m), &set.weights, 1);
                    for (r, z) in residual.iter_mut().zip(basis.mode(m)) {
                        *r -= a * z;
                    }
                }
                let n = l2_norm(&residual, &set.weights, 1);
                direct += n * n;
            }
            let discarded: f64 = basis.eigenvalues[k..].iter().sum();
            assert!(
                (direct - discarded).abs() <= 1e-8 * basis.eigenvalues[0],
                "k = {k}: {direct} vs {discarded}"
            );
            assert!(direct <= last + 1e-12, "reconstruction error must not grow");
            last = direct;
        }
    }

    #[test]
    fn sign_convention_is_stable_under_snapshot_negation() {
        let mesh = tiny_mesh();
        let set = random_set(&mesh, 1, 4, 19);
        let mut flipped = SnapshotSet::like(&set, &set.field);
        for i in 0..4 {
            let col: Vec<f64> = set.column(i).iter().map(|v| -v).collect();
            flipped.push_column(&col, set.times[i]);
        }
        let a = compute_basis(&correlation_matrix(&set).unwrap(), &set, ModeSelection::Count(4))
            .unwrap();
        let b = compute_basis(
            &correlation_matrix(&flipped).unwrap(),
            &flipped,
            ModeSelection::Count(4),
        )
        .unwrap();
        for k in 0..4 {
            for (x, y) in a.mode(k).iter().zip(b.mode(k)) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn energy_selection_and_invalid_inputs() {
        let mesh = tiny_mesh();
        let set = random_set(&mesh, 1, 5, 23);
        let c = correlation_matrix(&set).unwrap();
        let full = compute_basis(&c, &set, ModeSelection::Count(5)).unwrap();
        // Pick a target between cum_1 and cum_2: exactly two modes expected.
        let target = 0.5 * (full.cumulative[0] + full.cumulative[1]);
        let basis = compute_basis(&c, &set, ModeSelection::Energy(target)).unwrap();
        assert_eq!(basis.n_modes(), 2);
        assert!(matches!(
            compute_basis(&c, &set, ModeSelection::Energy(0.0)),
            Err(CoreError::Pod(_))
        ));
        assert!(matches!(
            compute_basis(&c, &set, ModeSelection::Energy(1.2)),
            Err(CoreError::Pod(_))
        ));
        assert!(matches!(
            compute_basis(&c, &set, ModeSelection::Count(6)),
            Err(CoreError::Pod(_))
        ));
    }

    #[test]
    fn rank_deficient_set_caps_mode_count() {
        let mesh = tiny_mesh();
        let f: Vec<f64> = mesh.cells.iter().map(|c| c.centroid.x).collect();
        let g: Vec<f64> = f.iter().map(|v| 2.0 * v).collect();
        let set = scalar_set(&mesh, &[f, g]);
        let c = correlation_matrix(&set).unwrap();
        assert!(matches!(
            compute_basis(&c, &set, ModeSelection::Count(2)),
            Err(CoreError::Pod(_))
        ));
        let basis = compute_basis(&c, &set, ModeSelection::Energy(1.0)).unwrap();
        assert_eq!(basis.n_modes(), 1);
    }

    #[test]
    fn cumulative_table_layout() {
        let mesh = tiny_mesh();
        // Two exactly orthogonal equal-norm snapshots: fractions 0.5 then 1.
        let n = mesh.cells.len();
        let w: Vec<f64> = mesh.cells.iter().map(|c| c.area).collect();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for i in 0..n {
            if i % 2 == 0 {
                a[i] = 1.0 / w[i].sqrt();
            } else {
                b[i] = 1.0 / w[i].sqrt();
            }
        }
        let pair = scalar_set(&mesh, &[a, b]);
        let pair_basis =
            compute_basis(&correlation_matrix(&pair).unwrap(), &pair, ModeSelection::Count(2))
                .unwrap();

        let single: Vec<f64> = mesh.cells.iter().map(|c| c.centroid.x).collect();
        let rank1 = scalar_set(&mesh, &[single]);
        let rank1_basis =
            compute_basis(&correlation_matrix(&rank1).unwrap(), &rank1, ModeSelection::Count(1))
                .unwrap();

        let table = cumulative_table(&[&pair_basis, &rank1_basis]);
        assert_eq!(table.fields, vec!["q".to_string(), "q".to_string()]);
        assert!((table.rows[0][0] - 0.5).abs() < 1e-12);
        assert!((table.rows[1][0] - 1.0).abs() < 1e-12);
        assert!((table.rows[3][0] - 1.0).abs() < 1e-12);
        for k in 0..4 {
            assert!((table.rows[k][1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_and_reload_keep_modes() {
        let mesh = tiny_mesh();
        let set = random_set(&mesh, 2, 5, 11);
        let basis =
            compute_basis(&correlation_matrix(&set).unwrap(), &set, ModeSelection::Count(4))
                .unwrap();

        let cut = basis.truncated(2).unwrap();
        assert_eq!(cut.n_modes(), 2);
        assert_eq!(cut.mode(0), basis.mode(0));
        assert_eq!(cut.mode(1), basis.mode(1));
        assert_eq!(cut.eigenvalues, basis.eigenvalues);
        assert_eq!(cut.cumulative, basis.cumulative);
        assert!(basis.truncated(5).is_err());

        // Persisted modes carry eigenvalues in the time slots, so a reload
        // reproduces projection behaviour exactly.
        let reloaded = PodBasis::from_modes(cut.modes.clone());
        assert_eq!(reloaded.n_modes(), 2);
        assert_eq!(reloaded.eigenvalues, &basis.eigenvalues[..2]);
        let column = set.column(3);
        assert_eq!(reloaded.project(column), cut.project(column));
    }
}
