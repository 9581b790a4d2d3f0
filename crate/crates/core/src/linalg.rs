//! Sparse CSR matrices over cell unknowns and deterministic Krylov solvers.
//!
//! The FV discretization produces one scalar matrix per equation whose
//! sparsity pattern (diagonal + face-adjacent cells) never changes for a
//! given mesh, so the pattern is built once (`CellPattern`) and assemblies
//! write into preallocated value slots.
//!
//! Solvers are single-threaded with fixed iteration order, so identical
//! inputs give bit-identical solutions:
//! - conjugate gradients with a simplified diagonal-incomplete-Cholesky
//!   preconditioner for symmetric systems (pressure, filters);
//! - BiCGStab with a diagonal-incomplete-LU preconditioner for the
//!   convective momentum systems.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::mesh::Mesh;

#[derive(Debug)]
pub struct CsrStructure {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl CsrStructure {
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Slot of entry (row, col); None if outside the pattern.
    pub fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        self.col_idx[lo..hi]
            .binary_search(&col)
            .ok()
            .map(|k| lo + k)
    }
}

#[derive(Debug, Clone)]
pub struct Csr {
    pub structure: Arc<CsrStructure>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn zeros(structure: Arc<CsrStructure>) -> Csr {
        let nnz = structure.nnz();
        Csr {
            structure,
            vals: vec![0.0; nnz],
        }
    }

    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Csr {
        let mut cols_per_row: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            if !cols_per_row[i].contains(&j) {
                cols_per_row[i].push(j);
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        for (i, cols) in cols_per_row.iter_mut().enumerate() {
            cols.sort_unstable();
            row_ptr[i + 1] = row_ptr[i] + cols.len();
            col_idx.extend_from_slice(cols);
        }
        let structure = Arc::new(CsrStructure { n, row_ptr, col_idx });
        let mut m = Csr::zeros(structure);
        for &(i, j, v) in triplets {
            let s = m.structure.slot(i, j).unwrap();
            m.vals[s] += v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.structure.n
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let s = &self.structure;
        for i in 0..s.n {
            let mut acc = 0.0;
            for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                acc += self.vals[k] * x[s.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let s = &self.structure;
        (0..s.n)
            .map(|i| s.slot(i, i).map_or(0.0, |k| self.vals[k]))
            .collect()
    }

    /// Dense copy, for small-system oracles in tests and reduced assembly.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let s = &self.structure;
        let mut d = nalgebra::DMatrix::zeros(s.n, s.n);
        for i in 0..s.n {
            for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                d[(i, s.col_idx[k])] += self.vals[k];
            }
        }
        d
    }
}

/// Cached FV sparsity pattern: diagonal plus face neighbours, with
/// per-internal-face slots for direct assembly writes.
#[derive(Debug)]
pub struct CellPattern {
    pub structure: Arc<CsrStructure>,
    pub diag_slot: Vec<usize>,
    /// Per internal face (indexed by face id): (owner-row/neigh-col slot,
    /// neigh-row/owner-col slot).
    pub face_slots: Vec<(usize, usize)>,
}

impl CellPattern {
    pub fn build(mesh: &Mesh) -> CellPattern {
        let n = mesh.n_cells();
        let mut cols: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for j in mesh.internal_faces() {
            let f = &mesh.faces[j];
            let nb = f.neighbour.unwrap();
            cols[f.owner].push(nb);
            cols[nb].push(f.owner);
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        for (i, c) in cols.iter_mut().enumerate() {
            c.sort_unstable();
            c.dedup();
            row_ptr[i + 1] = row_ptr[i] + c.len();
            col_idx.extend_from_slice(c);
        }
        let structure = Arc::new(CsrStructure { n, row_ptr, col_idx });
        let diag_slot = (0..n).map(|i| structure.slot(i, i).unwrap()).collect();
        let face_slots = (0..mesh.n_internal_faces)
            .map(|j| {
                let f = &mesh.faces[j];
                let nb = f.neighbour.unwrap();
                (
                    structure.slot(f.owner, nb).unwrap(),
                    structure.slot(nb, f.owner).unwrap(),
                )
            })
            .collect();
        CellPattern {
            structure,
            diag_slot,
            face_slots,
        }
    }

    pub fn zeros(&self) -> Csr {
        Csr::zeros(self.structure.clone())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Removes the constant component (Euclidean mean) from `x`.
pub fn project_out_constant(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final residual norm relative to the right-hand side norm.
    pub residual: f64,
}

/// Simplified diagonal incomplete-Cholesky / incomplete-LU preconditioner:
/// M = (D' + L) D'^-1 (D' + U) with L/U the strict triangles of A and D'
/// the recursively corrected diagonal.
struct DiagIncomplete {
    inv_diag: Vec<f64>,
}

impl DiagIncomplete {
    /// `symmetric: a_ij * a_ji` reduces to `a_ij^2`; the general product form
    /// covers the nonsymmetric (DILU) case.
    fn factor(a: &Csr) -> DiagIncomplete {
        let s = &a.structure;
        let mut d = a.diagonal();
        for i in 0..s.n {
            for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                let j = s.col_idx[k];
                if j < i {
                    if let Some(kt) = s.slot(j, i) {
                        d[i] -= a.vals[k] * a.vals[kt] / d[j];
                    }
                }
            }
        }
        DiagIncomplete {
            inv_diag: d.iter().map(|v| 1.0 / v).collect(),
        }
    }

    fn apply(&self, a: &Csr, r: &[f64], out: &mut [f64], work: &mut [f64]) {
        let s = &a.structure;
        // Forward: (D' + L) w = r
        for i in 0..s.n {
            let mut acc = r[i];
            for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                let j = s.col_idx[k];
                if j < i {
                    acc -= a.vals[k] * work[j];
                }
            }
            work[i] = acc * self.inv_diag[i];
        }
        // Backward: (D' + U) x = D' w
        for i in (0..s.n).rev() {
            let mut acc = work[i] / self.inv_diag[i];
            for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                let j = s.col_idx[k];
                if j > i {
                    acc -= a.vals[k] * out[j];
                }
            }
            out[i] = acc * self.inv_diag[i];
        }
    }
}

/// Preconditioned conjugate gradients for symmetric positive-(semi)definite
/// systems. With `project_nullspace`, the constant vector is removed from the
/// right-hand side and iterates (all-Neumann pressure systems).
pub fn cg_solve(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    project_nullspace: bool,
    system: &str,
) -> Result<SolveStats> {
    let n = a.n();
    let mut b = b.to_vec();
    if project_nullspace {
        project_out_constant(&mut b);
        project_out_constant(x);
    }
    let b_norm = norm2(&b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let pre = DiagIncomplete::factor(a);
    let mut r = vec![0.0; n];
    a.matvec_into(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if project_nullspace {
        project_out_constant(&mut r);
    }
    let mut z = vec![0.0; n];
    let mut work = vec![0.0; n];
    pre.apply(a, &r, &mut z, &mut work);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut res = norm2(&r) / b_norm;
    if res <= tol {
        return Ok(SolveStats {
            iterations: 0,
            residual: res,
        });
    }
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            return Err(CoreError::SolverDiverged {
                solver: "cg",
                system: system.into(),
                residual: res,
                iterations: it,
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if project_nullspace {
            project_out_constant(&mut r);
        }
        res = norm2(&r) / b_norm;
        if res <= tol {
            if project_nullspace {
                project_out_constant(x);
            }
            return Ok(SolveStats {
                iterations: it,
                residual: res,
            });
        }
        pre.apply(a, &r, &mut z, &mut work);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(CoreError::SolverDiverged {
        solver: "cg",
        system: system.into(),
        residual: res,
        iterations: max_iter,
    })
}

/// Preconditioned BiCGStab for nonsymmetric systems.
pub fn bicgstab_solve(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    system: &str,
) -> Result<SolveStats> {
    let n = a.n();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let pre = DiagIncomplete::factor(a);
    let mut r = vec![0.0; n];
    a.matvec_into(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_shadow = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut work = vec![0.0; n];
    let mut res = norm2(&r) / b_norm;
    if res <= tol {
        return Ok(SolveStats {
            iterations: 0,
            residual: res,
        });
    }
    for it in 1..=max_iter {
        let rho1 = dot(&r_shadow, &r);
        if rho1 == 0.0 || !rho1.is_finite() {
            return Err(CoreError::SolverDiverged {
                solver: "bicgstab",
                system: system.into(),
                residual: res,
                iterations: it,
            });
        }
        if it == 1 {
            p.copy_from_slice(&r);
        } else {
            let beta = (rho1 / rho) * (alpha / omega);
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
        }
        rho = rho1;
        pre.apply(a, &p, &mut p_hat, &mut work);
        a.matvec_into(&p_hat, &mut v);
        let denom = dot(&r_shadow, &v);
        if denom == 0.0 || !denom.is_finite() {
            return Err(CoreError::SolverDiverged {
                solver: "bicgstab",
                system: system.into(),
                residual: res,
                iterations: it,
            });
        }
        alpha = rho1 / denom;
        // s = r - alpha v (reuse r)
        for i in 0..n {
            r[i] -= alpha * v[i];
        }
        res = norm2(&r) / b_norm;
        if res <= tol {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok(SolveStats {
                iterations: it,
                residual: res,
            });
        }
        pre.apply(a, &r, &mut s_hat, &mut work);
        a.matvec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 || !tt.is_finite() {
            return Err(CoreError::SolverDiverged {
                solver: "bicgstab",
                system: system.into(),
                residual: res,
                iterations: it,
            });
        }
        omega = dot(&t, &r) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] -= omega * t[i];
        }
        res = norm2(&r) / b_norm;
        if !res.is_finite() {
            return Err(CoreError::SolverDiverged {
                solver: "bicgstab",
                system: system.into(),
                residual: res,
                iterations: it,
            });
        }
        if res <= tol {
            return Ok(SolveStats {
                iterations: it,
                residual: res,
            });
        }
        if omega == 0.0 {
            return Err(CoreError::SolverDiverged {
                solver: "bicgstab",
                system: system.into(),
                residual: res,
                iterations: it,
            });
        }
    }
    Err(CoreError::SolverDiverged {
        solver: "bicgstab",
        system: system.into(),
        residual: res,
        iterations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_rect_mesh, RectMeshSpec};
    use approx::assert_relative_eq;

    /// 1-D Poisson matrix (tridiagonal, SPD) of size n.
    fn poisson_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        Csr::from_triplets(n, &t)
    }

    #[test]
    fn cg_matches_dense_solve() {
        let n = 40;
        let a = poisson_1d(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = vec![0.0; n];
        let stats = cg_solve(&a, &b, &mut x, 1e-12, 1000, false, "test").unwrap();
        assert!(stats.residual <= 1e-12);

        let dense = a.to_dense();
        let xd = dense
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&b))
            .unwrap();
        for i in 0..n {
            assert_relative_eq!(x[i], xd[i], epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn cg_with_nullspace_projection() {
        // Periodic-like singular matrix: rows sum to zero.
        let n = 12;
        let mut t = Vec::new();
        for i in 0..n {
            let l = (i + n - 1) % n;
            let r = (i + 1) % n;
            t.push((i, i, 2.0));
            t.push((i, l, -1.0));
            t.push((i, r, -1.0));
        }
        let a = Csr::from_triplets(n, &t);
        // Compatible RHS (zero mean).
        let mut b: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect();
        project_out_constant(&mut b);
        let mut x = vec![0.0; n];
        cg_solve(&a, &b, &mut x, 1e-12, 500, true, "test").unwrap();
        // Solution has zero mean and satisfies Ax = b.
        assert!(x.iter().sum::<f64>().abs() < 1e-10);
        let ax = a.matvec(&x);
        for i in 0..n {
            assert_relative_eq!(ax[i], b[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn bicgstab_matches_dense_solve() {
        // Nonsymmetric convection-diffusion band matrix.
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0));
            if i > 0 {
                t.push((i, i - 1, -1.4));
            }
            if i + 1 < n {
                t.push((i, i + 1, -0.6));
            }
        }
        let a = Csr::from_triplets(n, &t);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64).collect();
        let mut x = vec![0.0; n];
        let stats = bicgstab_solve(&a, &b, &mut x, 1e-13, 1000, "test").unwrap();
        assert!(stats.residual <= 1e-13);
        let xd = a
            .to_dense()
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&b))
            .unwrap();
        for i in 0..n {
            assert_relative_eq!(x[i], xd[i], epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn solvers_are_deterministic() {
        let n = 64;
        let a = poisson_1d(n);
        let b: Vec<f64> = (0..n).map(|i| ((i * i) % 13) as f64 - 6.0).collect();
        let mut x1 = vec![0.0; n];
        let mut x2 = vec![0.0; n];
        cg_solve(&a, &b, &mut x1, 1e-10, 1000, false, "t").unwrap();
        cg_solve(&a, &b, &mut x2, 1e-10, 1000, false, "t").unwrap();
        assert_eq!(x1, x2);
        let mut y1 = vec![0.0; n];
        let mut y2 = vec![0.0; n];
        bicgstab_solve(&a, &b, &mut y1, 1e-10, 1000, "t").unwrap();
        bicgstab_solve(&a, &b, &mut y2, 1e-10, 1000, "t").unwrap();
        assert_eq!(y1, y2);
    }

    #[test]
    fn cell_pattern_slots() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(3, 2)).unwrap();
        let pat = CellPattern::build(&m);
        assert_eq!(pat.structure.n, 6);
        // Each internal face has two mirrored slots.
        for (j, &(so, sn)) in pat.face_slots.iter().enumerate() {
            let f = &m.faces[j];
            let nb = f.neighbour.unwrap();
            assert_eq!(pat.structure.col_idx[so], nb);
            assert_eq!(pat.structure.col_idx[sn], f.owner);
        }
        // Diagonal slots point at the diagonal.
        for i in 0..6 {
            assert_eq!(pat.structure.col_idx[pat.diag_slot[i]], i);
        }
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let a = poisson_1d(5);
        let b = vec![0.0; 5];
        let mut x = vec![1.0; 5];
        cg_solve(&a, &b, &mut x, 1e-10, 10, false, "t").unwrap();
        assert_eq!(x, vec![0.0; 5]);
    }
}
