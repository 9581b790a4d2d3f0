//! Pressure-velocity coupling for the evolve and filter steps.
//!
//! - `evolve_step`: BDF2 momentum predictor with extrapolated convecting flux,
//!   then PISO pressure correctors on the pressure-free momentum residual.
//! - `generalized_stokes`: SIMPLEC outer iterations for `c u - mu_bar lap(u)
//!   + grad(q) = c source` with `div(u) = 0`; used by the filter step and by
//!   the lifting construction.
//!
//! Both paths keep one scalar matrix per system and solve the two velocity
//! components against it. Pressure systems are solved in deficit form with
//! one deferred non-orthogonal corrector pass.

use crate::error::{CoreError, Result};
use crate::fom::{CaseBcs, FomState, PhysicsConfig, SolverParams};
use crate::fv::{
    convective, div_grad_transpose, gauss_gradient, laplacian, laplacian_face_flux,
    laplacian_per_face, rhie_chow_flux, BoundaryCondition, Field, FieldValue, ScalarField,
    VectorField,
};
use crate::geom::Vec2;
use crate::linalg::{bicgstab_solve, cg_solve, CellPattern, Csr};
use crate::mesh::Mesh;

/// Face interpolation of a per-cell scalar; boundary faces copy the owner.
fn interp_face_scalar(mesh: &Mesh, vals: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_faces()];
    for j in mesh.internal_faces() {
        let f = &mesh.faces[j];
        let w = mesh.face_weight(j);
        out[j] = w * vals[f.owner] + (1.0 - w) * vals[f.neighbour.unwrap()];
    }
    for j in mesh.boundary_faces() {
        out[j] = vals[mesh.faces[j].owner];
    }
    out
}

/// Per-cell signed sums of a face flux (the integrated divergence).
fn flux_divergence(mesh: &Mesh, flux: &[f64]) -> Vec<f64> {
    let mut div = vec![0.0; mesh.n_cells()];
    for (j, f) in mesh.faces.iter().enumerate() {
        div[f.owner] += flux[j];
        if let Some(nb) = f.neighbour {
            div[nb] -= flux[j];
        }
    }
    div
}

fn max_abs(vals: &[f64]) -> f64 {
    vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn row_sums(matrix: &Csr) -> Vec<f64> {
    let rp = &matrix.structure.row_ptr;
    (0..matrix.n())
        .map(|i| matrix.vals[rp[i]..rp[i + 1]].iter().sum())
        .collect()
}

/// Solve one scalar CSR system against both components of a vector rhs.
fn solve_vector_system(
    matrix: &Csr,
    rhs: &[Vec2],
    guess: &mut [Vec2],
    tol: f64,
    max_iter: usize,
    symmetric: bool,
    system: &str,
) -> Result<()> {
    let n = rhs.len();
    for comp in 0..2 {
        let b: Vec<f64> = rhs.iter().map(|v| v.component(comp)).collect();
        let mut x: Vec<f64> = guess.iter().map(|v| v.component(comp)).collect();
        let label = if comp == 0 {
            format!("{system}-x")
        } else {
            format!("{system}-y")
        };
        if symmetric {
            cg_solve(matrix, &b, &mut x, tol, max_iter, false, &label)?;
        } else {
            bicgstab_solve(matrix, &b, &mut x, tol, max_iter, &label)?;
        }
        for i in 0..n {
            guess[i] = guess[i].with_component(comp, x[i]);
        }
    }
    Ok(())
}

/// Solve a pressure system `lap(gamma) p = div` in place with deferred
/// non-orthogonal correctors. The assembled Laplacian is negated so the
/// system handed to CG is positive definite.
pub(crate) fn solve_pressure(
    mesh: &Mesh,
    pattern: &CellPattern,
    gamma_face: &[f64],
    p: &mut ScalarField,
    div: &[f64],
    params: &SolverParams,
    project_nullspace: bool,
    system: &str,
) -> Result<()> {
    for _ in 0..=params.n_nonorth {
        let lap = laplacian_per_face(mesh, pattern, gamma_face, p)?;
        let mut matrix = lap.matrix;
        for v in &mut matrix.vals {
            *v = -*v;
        }
        let b: Vec<f64> = div
            .iter()
            .zip(&lap.rhs)
            .map(|(d, r)| -(d - r))
            .collect();
        cg_solve(
            &matrix,
            &b,
            &mut p.values,
            params.tol_pressure,
            params.max_pressure,
            project_nullspace,
            system,
        )?;
    }
    Ok(())
}

fn check_finite<T: FieldValue>(field: &Field<T>, name: &str, t: f64) -> Result<()> {
    if field.first_non_finite().is_some() {
        return Err(CoreError::BlowUp {
            field: name.to_string(),
            time: t,
        });
    }
    Ok(())
}

/// BDF2/PISO evolve step: advance the Navier-Stokes velocity and pressure to
/// `t_new` using the filtered-velocity history for the time terms and the
/// extrapolated convecting flux.
pub fn evolve_step(
    mesh: &Mesh,
    pattern: &CellPattern,
    cfg: &PhysicsConfig,
    params: &SolverParams,
    bcs: &CaseBcs,
    state: &FomState,
    t_new: f64,
) -> Result<(VectorField, ScalarField)> {
    let n = mesh.n_cells();
    let vol: Vec<f64> = mesh.cells.iter().map(|c| c.area).collect();
    let dt = cfg.dt;
    let bdf2 = state.step > 0;

    // Time-derivative split: a0 * v^{n+1} minus known history, times rho*vol.
    let a0 = if bdf2 { 1.5 / dt } else { 1.0 / dt };
    let hist: Vec<Vec2> = (0..n)
        .map(|i| {
            if bdf2 {
                (state.u.values[i] * 2.0 - state.u_prev[i] * 0.5) * (1.0 / dt)
            } else {
                state.u.values[i] * (1.0 / dt)
            }
        })
        .collect();

    // Convecting flux extrapolated from the filtered-velocity flux history.
    let flux_star: Vec<f64> = if bdf2 {
        state
            .flux
            .iter()
            .zip(&state.flux_prev)
            .map(|(f, fp)| 2.0 * f - fp)
            .collect()
    } else {
        state.flux.clone()
    };

    let v_bcs = bcs.velocity_at(mesh, t_new);
    let mut v = state.v.clone();
    v.bcs = v_bcs.clone();
    let mut q = state.q.clone();

    // Explicit transposed-gradient diffusion at the extrapolated velocity.
    let ustar_vals: Vec<Vec2> = (0..n)
        .map(|i| {
            if bdf2 {
                state.u.values[i] * 2.0 - state.u_prev[i]
            } else {
                state.u.values[i]
            }
        })
        .collect();
    let mut ustar = state.u.with_values(ustar_vals);
    ustar.bcs = v_bcs;

    let conv = convective(mesh, pattern, &flux_star, &v);
    let lap = laplacian(mesh, pattern, cfg.mu, &v)?;
    let tdiff = div_grad_transpose(mesh, cfg.mu, &ustar);

    let mut matrix = pattern.zeros();
    for (k, val) in matrix.vals.iter_mut().enumerate() {
        *val = cfg.rho * conv.matrix.vals[k] - lap.matrix.vals[k];
    }
    for i in 0..n {
        matrix.vals[pattern.diag_slot[i]] += a0 * cfg.rho * vol[i];
    }
    let diag = matrix.diagonal();

    // Momentum right-hand side without the pressure gradient.
    let rhs0: Vec<Vec2> = (0..n)
        .map(|i| hist[i] * (cfg.rho * vol[i]) - conv.rhs[i] * cfg.rho + lap.rhs[i] + tdiff[i])
        .collect();

    // Predictor with the lagged pressure gradient.
    let gq = gauss_gradient(mesh, &q);
    let rhs_pred: Vec<Vec2> = (0..n).map(|i| rhs0[i] - gq[i] * vol[i]).collect();
    solve_vector_system(
        &matrix,
        &rhs_pred,
        &mut v.values,
        params.tol_momentum,
        params.max_momentum,
        false,
        "momentum",
    )?;
    check_finite(&v, "v", t_new)?;

    let project = !q
        .bcs
        .iter()
        .any(|bc| matches!(bc, BoundaryCondition::FixedValue(_)));

    for _ in 0..params.n_piso_correctors {
        // H(v)/a and the volume-over-diagonal coefficient.
        let mv = {
            let mut out = vec![Vec2::ZERO; n];
            for comp in 0..2 {
                let x: Vec<f64> = v.values.iter().map(|w| w.component(comp)).collect();
                let y = matrix.matvec(&x);
                for i in 0..n {
                    out[i] = out[i].with_component(comp, y[i]);
                }
            }
            out
        };
        let hby: Vec<Vec2> = (0..n)
            .map(|i| (rhs0[i] - mv[i] + v.values[i] * diag[i]) * (1.0 / diag[i]))
            .collect();
        let d_vol: Vec<f64> = (0..n).map(|i| vol[i] / diag[i]).collect();
        let gamma_face = interp_face_scalar(mesh, &d_vol);

        // Flux of H/a: central interpolation inside, boundary conditions of
        // the velocity on the boundary (Dirichlet faces keep their flux).
        let hby_field = v.with_values(hby.clone());
        let mut flux = vec![0.0; mesh.n_faces()];
        for j in mesh.internal_faces() {
            let f = &mesh.faces[j];
            let w = mesh.face_weight(j);
            let hf = hby[f.owner] * w + hby[f.neighbour.unwrap()] * (1.0 - w);
            flux[j] = hf.dot(f.area);
        }
        for j in mesh.boundary_faces() {
            flux[j] = hby_field.boundary_value(mesh, j).dot(mesh.faces[j].area);
        }
        let div_h = flux_divergence(mesh, &flux);

        solve_pressure(
            mesh,
            pattern,
            &gamma_face,
            &mut q,
            &div_h,
            params,
            project,
            "pressure",
        )?;

        // Conservative flux and velocity correction from the new pressure.
        let corr = laplacian_face_flux(mesh, &gamma_face, &q);
        for j in 0..mesh.n_faces() {
            flux[j] -= corr[j];
        }
        let gq_new = gauss_gradient(mesh, &q);
        for i in 0..n {
            v.values[i] = hby[i] - gq_new[i] * d_vol[i];
        }
    }
    check_finite(&v, "v", t_new)?;
    check_finite(&q, "q", t_new)?;
    Ok((v, q))
}

/// Converged generalized-Stokes solution.
#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub u: VectorField,
    pub q: ScalarField,
    /// Conservative face flux of `u`.
    pub flux: Vec<f64>,
    /// Final normalized per-cell continuity residual.
    pub residual: f64,
    pub outer_iterations: usize,
}

/// SIMPLEC solve of `c u - mu_bar lap(u) + grad(q) = c source, div(u) = 0`.
///
/// `label` names the system in solver errors. The returned flux is the
/// corrected conservative flux; `residual` is measured on the Rhie-Chow flux
/// of the returned velocity, i.e. on `u` itself.
#[allow(clippy::too_many_arguments)]
pub fn generalized_stokes(
    mesh: &Mesh,
    pattern: &CellPattern,
    c: f64,
    mu_bar: f64,
    source: &[Vec2],
    vel_bcs: Vec<BoundaryCondition<Vec2>>,
    p_bcs: Vec<BoundaryCondition<f64>>,
    initial: Option<(&[Vec2], &[f64])>,
    params: &SolverParams,
    label: &str,
) -> Result<StokesSolution> {
    let n = mesh.n_cells();
    let vol: Vec<f64> = mesh.cells.iter().map(|cell| cell.area).collect();
    let mut u = Field {
        values: initial.map(|(u0, _)| u0.to_vec()).unwrap_or_else(|| source.to_vec()),
        bcs: vel_bcs,
        mesh_fingerprint: mesh.fingerprint(),
    };
    let mut q = Field {
        values: initial
            .map(|(_, q0)| q0.to_vec())
            .unwrap_or_else(|| vec![0.0; n]),
        bcs: p_bcs,
        mesh_fingerprint: mesh.fingerprint(),
    };
    let project = !q
        .bcs
        .iter()
        .any(|bc| matches!(bc, BoundaryCondition::FixedValue(_)));
    let correction_bcs: Vec<BoundaryCondition<f64>> = q
        .bcs
        .iter()
        .zip(&mesh.patches)
        .map(|(bc, p)| match bc {
            BoundaryCondition::FixedValue(_) => {
                BoundaryCondition::FixedValue(vec![0.0; p.count])
            }
            _ => BoundaryCondition::ZeroGradient,
        })
        .collect();

    for outer in 1..=params.max_outer {
        // Momentum with the current pressure and deferred corrections.
        let lap = laplacian(mesh, pattern, mu_bar, &u)?;
        let mut matrix = pattern.zeros();
        for (k, val) in matrix.vals.iter_mut().enumerate() {
            *val = -lap.matrix.vals[k];
        }
        for i in 0..n {
            matrix.vals[pattern.diag_slot[i]] += c * vol[i];
        }
        let gq = gauss_gradient(mesh, &q);
        let rhs: Vec<Vec2> = (0..n)
            .map(|i| source[i] * (c * vol[i]) + lap.rhs[i] - gq[i] * vol[i])
            .collect();
        solve_vector_system(
            &matrix,
            &rhs,
            &mut u.values,
            params.tol_momentum,
            params.max_momentum,
            true,
            label,
        )?;
        if u.first_non_finite().is_some() || q.first_non_finite().is_some() {
            return Err(CoreError::SolverDiverged {
                solver: "simplec",
                system: label.to_string(),
                residual: f64::NAN,
                iterations: outer,
            });
        }

        // SIMPLEC correction coefficient: volume over the momentum row sum.
        let a_tilde = row_sums(&matrix);
        if let Some(i) = a_tilde.iter().position(|a| *a <= 0.0 || !a.is_finite()) {
            return Err(CoreError::SingularCoupling(i));
        }
        let flux0 = rhie_chow_flux(mesh, &u, &q, &a_tilde)?;
        let div0 = flux_divergence(mesh, &flux0);
        let scale = max_abs(&flux0).max(1e-300);
        let residual = max_abs(&div0) / scale;
        if residual <= params.tol_simplec {
            return Ok(StokesSolution {
                u,
                q,
                flux: flux0,
                residual,
                outer_iterations: outer,
            });
        }

        // Pressure correction and updates.
        let d_vol: Vec<f64> = (0..n).map(|i| vol[i] / a_tilde[i]).collect();
        let gamma_face = interp_face_scalar(mesh, &d_vol);
        let mut pc = Field {
            values: vec![0.0; n],
            bcs: correction_bcs.clone(),
            mesh_fingerprint: mesh.fingerprint(),
        };
        solve_pressure(
            mesh,
            pattern,
            &gamma_face,
            &mut pc,
            &div0,
            params,
            project,
            label,
        )?;
        let corr = laplacian_face_flux(mesh, &gamma_face, &pc);
        let flux: Vec<f64> = flux0
            .iter()
            .zip(&corr)
            .map(|(f0, fc)| f0 - fc)
            .collect();
        let gpc = gauss_gradient(mesh, &pc);
        for i in 0..n {
            q.values[i] += pc.values[i];
            u.values[i] -= gpc[i] * d_vol[i];
        }

        if outer == params.max_outer {
            let div = flux_divergence(mesh, &flux);
            let post = max_abs(&div) / max_abs(&flux).max(1e-300);
            // The corrected flux is conservative even when the outer loop has
            // not yet contracted u itself below tolerance.
            if post <= params.tol_simplec {
                return Ok(StokesSolution {
                    u,
                    q,
                    flux,
                    residual: post,
                    outer_iterations: outer,
                });
            }
            return Err(CoreError::SolverDiverged {
                solver: "simplec",
                system: label.to_string(),
                residual,
                iterations: outer,
            });
        }
    }
    unreachable!("simplec loop returns from within");
}

/// Differential-filter step: a generalized Stokes solve with coefficient
/// `rho/dt` and viscosity `rho alpha^2 / dt`, sourced by the evolve velocity.
pub fn filter_step(
    mesh: &Mesh,
    pattern: &CellPattern,
    cfg: &PhysicsConfig,
    params: &SolverParams,
    bcs: &CaseBcs,
    v_new: &VectorField,
    q_bar_prev: &ScalarField,
    t_new: f64,
) -> Result<StokesSolution> {
    let sol = generalized_stokes(
        mesh,
        pattern,
        cfg.rho / cfg.dt,
        cfg.filter_viscosity(),
        &v_new.values,
        v_new.bcs.clone(),
        bcs.pressure.clone(),
        Some((&v_new.values, &q_bar_prev.values)),
        params,
        "filter",
    )?;
    check_finite(&sol.u, "u", t_new)?;
    check_finite(&sol.q, "q_bar", t_new)?;
    Ok(sol)
}
