//! Discrete collocated FV operators.
//!
//! - Face interpolation: distance-weighted central differencing.
//! - Gradient/divergence: Green-Gauss with interpolated face values.
//! - Laplacian: over-relaxed orthogonal/non-orthogonal decomposition; the
//!   orthogonal part is implicit, the correction is explicit (deferred) from
//!   the current cell gradients.
//! - Convection: central face values weighted by a prescribed face flux.
//! - Rhie-Chow momentum interpolation for collocated pressure coupling.
//!
//! All assembled operators are in integrated form (per-cell volume absorbed);
//! see `SparseOperator`.

use crate::error::{CoreError, Result};
use crate::fv::{BoundaryCondition, Field, FieldValue, ScalarField, SparseOperator, VectorField};
use crate::geom::Vec2;
use crate::linalg::CellPattern;
use crate::mesh::Mesh;

/// Face values of a field: central interpolation inside, boundary conditions
/// on the boundary.
pub fn face_values<T: FieldValue>(mesh: &Mesh, field: &Field<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(mesh.n_faces());
    for j in mesh.internal_faces() {
        let f = &mesh.faces[j];
        let nb = f.neighbour.unwrap();
        let w = mesh.face_weight(j);
        out.push(field.values[f.owner] * w + field.values[nb] * (1.0 - w));
    }
    for j in mesh.boundary_faces() {
        out.push(field.boundary_value(mesh, j));
    }
    out
}

/// Green-Gauss cell gradient (per unit volume).
pub fn gauss_gradient<T: FieldValue>(mesh: &Mesh, field: &Field<T>) -> Vec<T::Gradient> {
    let fv = face_values(mesh, field);
    let mut grads = vec![T::Gradient::default(); mesh.n_cells()];
    for (j, f) in mesh.faces.iter().enumerate() {
        let contrib = fv[j].flux_outer(f.area);
        grads[f.owner] += contrib;
        if let Some(nb) = f.neighbour {
            grads[nb] += contrib * -1.0;
        }
    }
    for (i, g) in grads.iter_mut().enumerate() {
        *g = *g * (1.0 / mesh.cells[i].area);
    }
    grads
}

/// Green-Gauss divergence of a vector field (per unit volume).
pub fn gauss_divergence(mesh: &Mesh, field: &VectorField) -> Vec<f64> {
    let fv = face_values(mesh, field);
    let mut div = vec![0.0; mesh.n_cells()];
    for (j, f) in mesh.faces.iter().enumerate() {
        let flux = fv[j].dot(f.area);
        div[f.owner] += flux;
        if let Some(nb) = f.neighbour {
            div[nb] -= flux;
        }
    }
    for (i, d) in div.iter_mut().enumerate() {
        *d /= mesh.cells[i].area;
    }
    div
}

/// Interpolated face flux `v_f . A_j` on every face.
pub fn face_flux(mesh: &Mesh, v: &VectorField) -> Vec<f64> {
    face_values(mesh, v)
        .iter()
        .zip(&mesh.faces)
        .map(|(vf, f)| vf.dot(f.area))
        .collect()
}

/// Diffusion operator with a per-face diffusivity (integrated form).
pub fn laplacian_per_face<T: FieldValue>(
    mesh: &Mesh,
    pattern: &CellPattern,
    gamma: &[f64],
    field: &Field<T>,
) -> Result<SparseOperator<T>> {
    if let Some(g) = gamma.iter().find(|g| **g < 0.0) {
        return Err(CoreError::Contract(format!(
            "negative diffusivity {g} passed to laplacian"
        )));
    }
    debug_assert_eq!(gamma.len(), mesh.n_faces());
    let grads = gauss_gradient(mesh, field);
    let mut matrix = pattern.zeros();
    let mut rhs = vec![T::zero(); mesh.n_cells()];

    for j in mesh.internal_faces() {
        let f = &mesh.faces[j];
        let nb = f.neighbour.unwrap();
        let d = mesh.cells[nb].centroid - mesh.cells[f.owner].centroid;
        let ad = f.area.dot(d);
        let a2 = f.area.norm_squared();
        let coef = gamma[j] * a2 / ad;
        let (slot_on, slot_no) = pattern.face_slots[j];
        matrix.vals[slot_on] += coef;
        matrix.vals[pattern.diag_slot[f.owner]] -= coef;
        matrix.vals[slot_no] += coef;
        matrix.vals[pattern.diag_slot[nb]] -= coef;

        // Over-relaxed non-orthogonal correction, deferred to the RHS.
        let t = f.area - d * (a2 / ad);
        let w = mesh.face_weight(j);
        let gf = grads[f.owner] * w + grads[nb] * (1.0 - w);
        let corr = T::grad_dot(gf, t) * gamma[j];
        rhs[f.owner] += corr;
        rhs[nb] -= corr;
    }

    for j in mesh.boundary_faces() {
        let f = &mesh.faces[j];
        let patch = mesh.face_patch(j).unwrap();
        let local = j - mesh.patches[patch].start;
        match &field.bcs[patch] {
            BoundaryCondition::FixedValue(vals) => {
                let d = f.centroid - mesh.cells[f.owner].centroid;
                let ad = f.area.dot(d);
                let a2 = f.area.norm_squared();
                let coef = gamma[j] * a2 / ad;
                matrix.vals[pattern.diag_slot[f.owner]] -= coef;
                let t = f.area - d * (a2 / ad);
                rhs[f.owner] +=
                    vals[local] * coef + T::grad_dot(grads[f.owner], t) * gamma[j];
            }
            BoundaryCondition::ZeroGradient => {}
            BoundaryCondition::FixedGradient(gr) => {
                rhs[f.owner] += gr[local] * (gamma[j] * f.area.norm());
            }
        }
    }
    Ok(SparseOperator { matrix, rhs })
}

/// Per-face diffusive fluxes of the assembled Laplacian: the signed sum of
/// these over a cell's faces reproduces `laplacian_per_face` applied to the
/// field. Used to correct conservative face fluxes after a pressure solve.
pub fn laplacian_face_flux<T: FieldValue>(
    mesh: &Mesh,
    gamma: &[f64],
    field: &Field<T>,
) -> Vec<T> {
    let grads = gauss_gradient(mesh, field);
    let mut flux = vec![T::zero(); mesh.n_faces()];
    for j in mesh.internal_faces() {
        let f = &mesh.faces[j];
        let nb = f.neighbour.unwrap();
        let d = mesh.cells[nb].centroid - mesh.cells[f.owner].centroid;
        let ad = f.area.dot(d);
        let a2 = f.area.norm_squared();
        let t = f.area - d * (a2 / ad);
        let w = mesh.face_weight(j);
        let gf = grads[f.owner] * w + grads[nb] * (1.0 - w);
        flux[j] = (field.values[nb] - field.values[f.owner]) * (gamma[j] * a2 / ad)
            + T::grad_dot(gf, t) * gamma[j];
    }
    for j in mesh.boundary_faces() {
        let f = &mesh.faces[j];
        let patch = mesh.face_patch(j).unwrap();
        let local = j - mesh.patches[patch].start;
        match &field.bcs[patch] {
            BoundaryCondition::FixedValue(vals) => {
                let d = f.centroid - mesh.cells[f.owner].centroid;
                let ad = f.area.dot(d);
                let a2 = f.area.norm_squared();
                let t = f.area - d * (a2 / ad);
                flux[j] = (vals[local] - field.values[f.owner]) * (gamma[j] * a2 / ad)
                    + T::grad_dot(grads[f.owner], t) * gamma[j];
            }
            BoundaryCondition::ZeroGradient => {}
            BoundaryCondition::FixedGradient(gr) => {
                flux[j] = gr[local] * (gamma[j] * f.area.norm());
            }
        }
    }
    flux
}

/// Diffusion operator with a uniform diffusivity.
pub fn laplacian<T: FieldValue>(
    mesh: &Mesh,
    pattern: &CellPattern,
    gamma: f64,
    field: &Field<T>,
) -> Result<SparseOperator<T>> {
    laplacian_per_face(mesh, pattern, &vec![gamma; mesh.n_faces()], field)
}

/// Convection operator for a given face flux (integrated form): row i sums
/// `flux_j * phi_face_j` with outward sign for cell i and central face values.
pub fn convective<T: FieldValue>(
    mesh: &Mesh,
    pattern: &CellPattern,
    flux: &[f64],
    field: &Field<T>,
) -> SparseOperator<T> {
    debug_assert_eq!(flux.len(), mesh.n_faces());
    let mut matrix = pattern.zeros();
    let mut rhs = vec![T::zero(); mesh.n_cells()];

    for j in mesh.internal_faces() {
        let f = &mesh.faces[j];
        let nb = f.neighbour.unwrap();
        let w = mesh.face_weight(j);
        let fl = flux[j];
        let (slot_on, slot_no) = pattern.face_slots[j];
        matrix.vals[pattern.diag_slot[f.owner]] += fl * w;
        matrix.vals[slot_on] += fl * (1.0 - w);
        matrix.vals[slot_no] -= fl * w;
        matrix.vals[pattern.diag_slot[nb]] -= fl * (1.0 - w);
    }

    for j in mesh.boundary_faces() {
        let f = &mesh.faces[j];
        let patch = mesh.face_patch(j).unwrap();
        let local = j - mesh.patches[patch].start;
        let fl = flux[j];
        match &field.bcs[patch] {
            BoundaryCondition::FixedValue(vals) => {
                rhs[f.owner] += vals[local] * fl;
            }
            BoundaryCondition::ZeroGradient => {
                matrix.vals[pattern.diag_slot[f.owner]] += fl;
            }
            BoundaryCondition::FixedGradient(gr) => {
                let d = f.centroid - mesh.cells[f.owner].centroid;
                let n = f.area.normalized();
                matrix.vals[pattern.diag_slot[f.owner]] += fl;
                rhs[f.owner] += gr[local] * (d.dot(n) * fl);
            }
        }
    }
    SparseOperator { matrix, rhs }
}

/// Explicit integrated `div(gamma (grad v)^T)`, the transpose-gradient half of
/// the strain-rate diffusion term.
pub fn div_grad_transpose(mesh: &Mesh, gamma: f64, field: &VectorField) -> Vec<Vec2> {
    let grads = gauss_gradient(mesh, field);
    let mut out = vec![Vec2::ZERO; mesh.n_cells()];
    for j in mesh.internal_faces() {
        let f = &mesh.faces[j];
        let nb = f.neighbour.unwrap();
        let w = mesh.face_weight(j);
        let gf = grads[f.owner] * w + grads[nb] * (1.0 - w);
        let contrib = gf.transpose().mul_vec(f.area) * gamma;
        out[f.owner] += contrib;
        out[nb] -= contrib;
    }
    for j in mesh.boundary_faces() {
        let f = &mesh.faces[j];
        out[f.owner] += grads[f.owner].transpose().mul_vec(f.area) * gamma;
    }
    out
}

/// Rhie-Chow momentum-interpolated face fluxes: central flux plus a pressure
/// smoothing term proportional to the cell-volume-over-momentum-diagonal
/// coefficient. Boundary faces take the velocity boundary value directly.
pub fn rhie_chow_flux(
    mesh: &Mesh,
    v: &VectorField,
    p: &ScalarField,
    momentum_diag: &[f64],
) -> Result<Vec<f64>> {
    debug_assert_eq!(momentum_diag.len(), mesh.n_cells());
    for (i, a) in momentum_diag.iter().enumerate() {
        if *a == 0.0 || !a.is_finite() {
            return Err(CoreError::SingularCoupling(i));
        }
    }
    let d_vol: Vec<f64> = (0..mesh.n_cells())
        .map(|i| mesh.cells[i].area / momentum_diag[i])
        .collect();
    let p_grads = gauss_gradient(mesh, p);
    let mut flux = vec![0.0; mesh.n_faces()];
    for j in mesh.internal_faces() {
        let f = &mesh.faces[j];
        let nb = f.neighbour.unwrap();
        let w = mesh.face_weight(j);
        let vf = v.values[f.owner] * w + v.values[nb] * (1.0 - w);
        let df = d_vol[f.owner] * w + d_vol[nb] * (1.0 - w);
        let d = mesh.cells[nb].centroid - mesh.cells[f.owner].centroid;
        let a_geo = f.area.norm_squared() / f.area.dot(d);
        let gpf = p_grads[f.owner] * w + p_grads[nb] * (1.0 - w);
        let correction = df * a_geo * ((p.values[nb] - p.values[f.owner]) - gpf.dot(d));
        flux[j] = vf.dot(f.area) - correction;
    }
    for j in mesh.boundary_faces() {
        flux[j] = v.boundary_value(mesh, j).dot(mesh.faces[j].area);
    }
    Ok(flux)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cylinder_mesh, generate_rect_mesh, RectMeshSpec};
    use approx::assert_relative_eq;

    fn strip_4x1() -> Mesh {
        generate_rect_mesh(&RectMeshSpec {
            nx: 4,
            ny: 1,
            origin: Vec2::ZERO,
            size: Vec2::new(4.0, 1.0),
            left: "left".into(),
            right: "right".into(),
            bottom: "walls".into(),
            top: "walls".into(),
        })
        .unwrap()
    }

    /// Dirichlet conditions sampled from a profile on every patch.
    fn dirichlet_everywhere<T: FieldValue>(
        mesh: &Mesh,
        mut field: Field<T>,
        profile: impl Fn(Vec2) -> T + Copy,
    ) -> Field<T> {
        for p in 0..mesh.patches.len() {
            field.set_bc(p, BoundaryCondition::fixed_profile(mesh, p, profile));
        }
        field
    }

    #[test]
    fn interpolation_exact_on_linear_field() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(6, 5)).unwrap();
        let f = |c: Vec2| c.x;
        let field = dirichlet_everywhere(&m, ScalarField::from_fn(&m, f), f);
        let fv = face_values(&m, &field);
        for (j, face) in m.faces.iter().enumerate() {
            assert_relative_eq!(fv[j], face.centroid.x, epsilon = 1e-13);
        }
    }

    #[test]
    fn interpolation_constant_everywhere() {
        let m = generate_cylinder_mesh(150, 1.0).unwrap();
        let field = ScalarField::constant(&m, 3.25);
        for v in face_values(&m, &field) {
            assert_eq!(v, 3.25);
        }
    }

    #[test]
    fn interpolation_weights_on_strip() {
        let m = strip_4x1();
        // f = x^2 sampled at centroids 0.5, 1.5, 2.5, 3.5.
        let field = ScalarField::from_fn(&m, |c| c.x * c.x);
        let fv = face_values(&m, &field);
        for j in m.internal_faces() {
            let f = &m.faces[j];
            let nb = f.neighbour.unwrap();
            // Uniform mesh: exactly the arithmetic mean of the two cells.
            let expect = 0.5 * (field.values[f.owner] + field.values[nb]);
            assert_relative_eq!(fv[j], expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn gradient_exact_on_linear_field() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(5, 4)).unwrap();
        let f = |c: Vec2| 2.0 * c.x - 3.0 * c.y + 1.0;
        let field = dirichlet_everywhere(&m, ScalarField::from_fn(&m, f), f);
        for g in gauss_gradient(&m, &field) {
            assert_relative_eq!(g.x, 2.0, epsilon = 1e-12);
            assert_relative_eq!(g.y, -3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn divergence_of_uniform_field_vanishes() {
        let m = generate_cylinder_mesh(150, 1.0).unwrap();
        let v = Vec2::new(1.0, 0.0);
        let field = dirichlet_everywhere(&m, VectorField::constant(&m, v), |_| v);
        for (i, d) in gauss_divergence(&m, &field).iter().enumerate() {
            assert!(d.abs() < 1e-10, "cell {i}: div {d:.3e}");
        }
    }

    #[test]
    fn global_conservation_matches_boundary_flux() {
        let m = generate_cylinder_mesh(200, 1.2).unwrap();
        let field = VectorField::from_fn(&m, |c| {
            Vec2::new((1.3 * c.x).sin() + 0.2, (2.0 * c.y).cos())
        });
        let div = gauss_divergence(&m, &field);
        let total: f64 = div
            .iter()
            .enumerate()
            .map(|(i, d)| d * m.cells[i].area)
            .sum();
        let fv = face_values(&m, &field);
        let boundary: f64 = m
            .boundary_faces()
            .map(|j| fv[j].dot(m.faces[j].area))
            .sum();
        let scale: f64 = fv.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(
            (total - boundary).abs() <= 1e-12 * scale.max(1.0),
            "{total:.3e} vs {boundary:.3e}"
        );
    }

    #[test]
    fn laplacian_of_quadratic_is_four_inside() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(20, 20)).unwrap();
        let f = |c: Vec2| c.x * c.x + c.y * c.y;
        let field = dirichlet_everywhere(&m, ScalarField::from_fn(&m, f), f);
        let pat = CellPattern::build(&m);
        let op = laplacian(&m, &pat, 1.0, &field).unwrap();
        let lap = op.apply_per_volume(&m, &field.values);
        for (i, c) in m.cells.iter().enumerate() {
            let interior = c.faces.iter().all(|&j| !m.faces[j].is_boundary());
            if interior {
                assert_relative_eq!(lap[i], 4.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn face_fluxes_reproduce_the_assembled_laplacian() {
        let m = generate_cylinder_mesh(200, 1.4).unwrap();
        let f = |c: Vec2| (2.0 * c.x).sin() * c.y + 0.3 * c.x;
        let field = dirichlet_everywhere(&m, ScalarField::from_fn(&m, f), f);
        let gamma: Vec<f64> = (0..m.n_faces()).map(|j| 1.0 + 0.1 * (j % 7) as f64).collect();
        let pat = CellPattern::build(&m);
        let op = laplacian_per_face(&m, &pat, &gamma, &field).unwrap();
        let by_matrix = op.apply(&field.values);
        let flux = laplacian_face_flux(&m, &gamma, &field);
        let mut by_flux = vec![0.0; m.n_cells()];
        for (j, fc) in m.faces.iter().enumerate() {
            by_flux[fc.owner] += flux[j];
            if let Some(nb) = fc.neighbour {
                by_flux[nb] -= flux[j];
            }
        }
        let scale: f64 = by_matrix.iter().map(|v: &f64| v.abs()).fold(0.0, f64::max);
        for i in 0..m.n_cells() {
            assert!(
                (by_matrix[i] - by_flux[i]).abs() <= 1e-12 * scale.max(1.0),
                "cell {i}: {:.3e} vs {:.3e}",
                by_matrix[i],
                by_flux[i]
            );
        }
    }

    #[test]
    fn negative_diffusivity_rejected() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(2, 2)).unwrap();
        let field = ScalarField::zeros(&m);
        let pat = CellPattern::build(&m);
        assert!(matches!(
            laplacian(&m, &pat, -1.0, &field),
            Err(CoreError::Contract(_))
        ));
    }

    #[test]
    fn zero_flux_gives_zero_convection() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(3, 3)).unwrap();
        let field = dirichlet_everywhere(&m, ScalarField::from_fn(&m, |c| c.x), |c| c.x);
        let pat = CellPattern::build(&m);
        let op = convective(&m, &pat, &vec![0.0; m.n_faces()], &field);
        assert!(op.matrix.vals.iter().all(|v| *v == 0.0));
        assert!(op.rhs.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn convection_of_linear_field_in_uniform_stream() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(10, 6)).unwrap();
        let u = Vec2::new(1.0, 0.0);
        let vel = dirichlet_everywhere(&m, VectorField::constant(&m, u), |_| u);
        let flux = face_flux(&m, &vel);
        let f = |c: Vec2| c.x;
        let field = dirichlet_everywhere(&m, ScalarField::from_fn(&m, f), f);
        let pat = CellPattern::build(&m);
        let op = convective(&m, &pat, &flux, &field);
        let conv = op.apply_per_volume(&m, &field.values);
        for (i, c) in m.cells.iter().enumerate() {
            let interior = c.faces.iter().all(|&j| !m.faces[j].is_boundary());
            if interior {
                // d(u x)/dx = 1.
                assert_relative_eq!(conv[i], 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn operators_are_linear_in_the_field() {
        let m = generate_cylinder_mesh(150, 1.0).unwrap();
        let pat = CellPattern::build(&m);
        let fa = |c: Vec2| (3.0 * c.x).sin() + c.y;
        let fb = |c: Vec2| c.x * c.y - 0.4 * (2.0 * c.y).cos();
        let a = dirichlet_everywhere(&m, ScalarField::from_fn(&m, fa), fa);
        let b = dirichlet_everywhere(&m, ScalarField::from_fn(&m, fb), fb);
        let comb = |c: Vec2| 2.0 * fa(c) - 0.7 * fb(c);
        let ab = dirichlet_everywhere(
            &m,
            ScalarField::from_fn(&m, comb),
            comb,
        );

        let flux: Vec<f64> = m
            .faces
            .iter()
            .map(|f| f.area.x * 0.8 - 0.1 * f.area.y)
            .collect();

        let la = laplacian(&m, &pat, 1.0, &a).unwrap().apply(&a.values);
        let lb = laplacian(&m, &pat, 1.0, &b).unwrap().apply(&b.values);
        let lab = laplacian(&m, &pat, 1.0, &ab).unwrap().apply(&ab.values);
        let ca = convective(&m, &pat, &flux, &a).apply(&a.values);
        let cb = convective(&m, &pat, &flux, &b).apply(&b.values);
        let cab = convective(&m, &pat, &flux, &ab).apply(&ab.values);

        let scale_l: f64 = lab.iter().map(|v: &f64| v.abs()).fold(0.0, f64::max);
        let scale_c: f64 = cab.iter().map(|v: &f64| v.abs()).fold(0.0, f64::max);
        for i in 0..m.n_cells() {
            assert!(
                (lab[i] - (2.0 * la[i] - 0.7 * lb[i])).abs() <= 1e-12 * scale_l.max(1.0),
                "laplacian nonlinear at cell {i}"
            );
            assert!(
                (cab[i] - (2.0 * ca[i] - 0.7 * cb[i])).abs() <= 1e-12 * scale_c.max(1.0),
                "convection nonlinear at cell {i}"
            );
        }
    }

    #[test]
    fn rhie_chow_is_exact_for_uniform_flow() {
        let m = generate_cylinder_mesh(150, 1.0).unwrap();
        let u = Vec2::new(0.3, 0.1);
        let v = dirichlet_everywhere(&m, VectorField::constant(&m, u), |_| u);
        let p = ScalarField::zeros(&m);
        let diag = vec![1.0; m.n_cells()];
        let flux = rhie_chow_flux(&m, &v, &p, &diag).unwrap();
        for (j, f) in m.faces.iter().enumerate() {
            assert_relative_eq!(flux[j], u.dot(f.area), epsilon = 1e-14);
        }
    }

    #[test]
    fn rhie_chow_damps_checkerboard_pressure() {
        let m = strip_4x1();
        let v = VectorField::zeros(&m);
        let mut p = ScalarField::zeros(&m);
        for (i, val) in p.values.iter_mut().enumerate() {
            *val = if i % 2 == 0 { 1.0 } else { -1.0 };
        }
        let diag = vec![1.0; m.n_cells()];
        let flux = rhie_chow_flux(&m, &v, &p, &diag).unwrap();
        // Pure interpolation gives zero flux; the pressure term must not.
        for j in m.internal_faces() {
            assert!(
                flux[j].abs() > 0.1,
                "face {j}: no checkerboard damping ({:.3e})",
                flux[j]
            );
            // Flux runs from the high-pressure cell to the low-pressure cell.
            let f = &m.faces[j];
            let dp = p.values[f.neighbour.unwrap()] - p.values[f.owner];
            assert!(flux[j] * dp < 0.0);
        }
    }

    #[test]
    fn zero_momentum_diagonal_is_an_error() {
        let m = strip_4x1();
        let v = VectorField::zeros(&m);
        let p = ScalarField::zeros(&m);
        let mut diag = vec![1.0; m.n_cells()];
        diag[2] = 0.0;
        assert!(matches!(
            rhie_chow_flux(&m, &v, &p, &diag),
            Err(CoreError::SingularCoupling(2))
        ));
    }

    #[test]
    fn fixed_gradient_boundary_value() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(2, 2)).unwrap();
        let mut field = ScalarField::constant(&m, 1.0);
        let right = m.patch_id("right").unwrap();
        field.set_bc(
            right,
            BoundaryCondition::FixedGradient(vec![0.5; m.patches[right].count]),
        );
        for j in m.patches[right].faces() {
            // Owner centroid is 0.25 from the face along the outward normal.
            assert_relative_eq!(field.boundary_value(&m, j), 1.0 + 0.5 * 0.25, epsilon = 1e-13);
        }
    }

    #[test]
    fn vector_laplacian_acts_componentwise() {
        let m = generate_rect_mesh(&RectMeshSpec::unit(12, 12)).unwrap();
        let fv = |c: Vec2| Vec2::new(c.x * c.x, c.y * c.y);
        let vfield = dirichlet_everywhere(&m, VectorField::from_fn(&m, fv), fv);
        let pat = CellPattern::build(&m);
        let op = laplacian(&m, &pat, 1.0, &vfield).unwrap();
        let lap = op.apply_per_volume(&m, &vfield.values);
        for (i, c) in m.cells.iter().enumerate() {
            let interior = c.faces.iter().all(|&j| !m.faces[j].is_boundary());
            if interior {
                assert_relative_eq!(lap[i].x, 2.0, epsilon = 1e-10);
                assert_relative_eq!(lap[i].y, 2.0, epsilon = 1e-10);
            }
        }
    }
}
