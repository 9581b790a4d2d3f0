//! Offline projection of the FV operators onto the reduced spaces.
//!
//! - Volume matrices: mass and mass-cross blocks, projected Laplacian,
//!   transposed-gradient diffusion, pressure gradient, velocity divergence.
//! - Convection tensors: one matrix per test mode, convected modes against
//!   convecting-mode face fluxes, plus all four lifting interaction blocks
//!   (mode-mode, lifting-mode, mode-lifting, lifting-lifting).
//! - Pressure-Poisson blocks: pressure-gradient Gram matrices, rot-rot and
//!   normal-trace boundary couplings, and the convection tensor tested
//!   against pressure-mode gradients.
//!
//! Conventions:
//! - Operators that return volume-integrated cell values (Laplacian,
//!   convection, transposed-gradient divergence) are projected with a plain
//!   dot product against the test mode; pointwise quantities (mode values,
//!   Gauss gradients, divergence) use the area-weighted inner product. A
//!   dense projection oracle in the tests pins both conventions.
//! - All blocks are assembled with unit material coefficients; density and
//!   viscosities scale them online, so one operator set serves any fluid.
//! - Convecting face fluxes of modes are central interpolations; the
//!   lifting function convects with its stored conservative flux, the same
//!   family the full-order convection sees.
//! - Boundary integrals use face-centroid quadrature with owner-cell
//!   gradients; the 2-D curl is the scalar out-of-plane component.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};
use crate::fom::CaseBcs;
use crate::fv::{
    convective, div_grad_transpose, face_flux, gauss_divergence, gauss_gradient, laplacian,
    ScalarField, VectorField,
};
use crate::geom::{Mat2, Vec2};
use crate::linalg::CellPattern;
use crate::mesh::Mesh;
use crate::snapshots::l2_inner;
use crate::supremizer::{EnrichedSpace, ModeBc};

use super::{
    homogenized_pressure_bcs, homogenized_velocity_bcs, zero_dirichlet_velocity_bcs, RomSpaces,
    StabilizationMode,
};

/// Convection tensor: one matrix per test mode, laid out
/// (convected mode, convecting mode).
pub type ConvectionTensor = Vec<DMatrix<f64>>;

/// Blocks that only the pressure-Poisson closure uses.
#[derive(Debug, Clone, PartialEq)]
pub struct PpeOperators {
    /// Gram matrix of evolve pressure-mode gradients.
    pub stiffness: DMatrix<f64>,
    /// Gram matrix of filter pressure-mode gradients.
    pub stiffness_bar: DMatrix<f64>,
    /// Boundary rot-rot coupling: evolve pressure modes against evolve
    /// velocity modes.
    pub curl_boundary: DMatrix<f64>,
    /// Boundary rot-rot coupling for the filter system.
    pub curl_boundary_bar: DMatrix<f64>,
    /// Boundary normal-trace coupling: evolve pressure modes against the
    /// normal trace of evolve velocity modes (implicit time term).
    pub trace_boundary: DMatrix<f64>,
    /// Same test modes against filter velocity modes (time-history term).
    pub trace_boundary_bar: DMatrix<f64>,
    /// Convection tested against evolve pressure-mode gradients:
    /// one (evolve x filter) matrix per pressure mode.
    pub convection_grad: ConvectionTensor,
    /// Lifting convected by filter-mode fluxes, tested against pressure
    /// gradients.
    pub lift_convection_grad_in: DMatrix<f64>,
    /// Evolve modes convected by the lifting flux, tested against pressure
    /// gradients (enters the system matrix).
    pub lift_convection_grad_by: DMatrix<f64>,
    /// Lifting convected by its own flux, tested against pressure gradients.
    pub lift_convection_grad_self: DVector<f64>,
    /// Boundary rot-rot of the lifting function.
    pub lift_curl_boundary: DVector<f64>,
    /// Filter-system counterpart of `lift_curl_boundary`.
    pub lift_curl_boundary_bar: DVector<f64>,
    /// Boundary normal trace of the lifting function (drives the reduced
    /// Poisson equation through the inlet).
    pub lift_trace_boundary: DVector<f64>,
}

/// Every projected operator one reduced run needs. Material coefficients
/// are applied online, so the same set serves any density/viscosity pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOperators {
    pub mode: StabilizationMode,
    pub mesh_fingerprint: u64,

    /// Evolve velocity mass matrix.
    pub mass: DMatrix<f64>,
    /// Evolve test modes against filter modes (time-history coupling).
    pub mass_cross: DMatrix<f64>,
    /// Projected FV Laplacian of the evolve modes (unit diffusivity).
    pub diffusion: DMatrix<f64>,
    /// Projected transposed-gradient diffusion applied to filter modes.
    pub diffusion_transpose: DMatrix<f64>,
    /// Evolve modes against evolve pressure-mode gradients.
    pub pressure_gradient: DMatrix<f64>,
    /// Evolve pressure modes against evolve mode divergences.
    pub divergence: DMatrix<f64>,
    /// Convection tensor of the evolve system.
    pub convection: ConvectionTensor,

    /// Filter velocity mass matrix.
    pub mass_bar: DMatrix<f64>,
    /// Projected FV Laplacian of the filter modes.
    pub diffusion_bar: DMatrix<f64>,
    /// Filter modes against filter pressure-mode gradients.
    pub pressure_gradient_bar: DMatrix<f64>,
    /// Filter pressure modes against filter mode divergences.
    pub divergence_bar: DMatrix<f64>,

    /// Lifting projections on the evolve side (unit coefficients).
    pub lift_mass: DVector<f64>,
    pub lift_diffusion: DVector<f64>,
    pub lift_diffusion_transpose: DVector<f64>,
    /// Lifting convected by filter-mode fluxes.
    pub lift_convection_in: DMatrix<f64>,
    /// Evolve modes convected by the lifting flux (enters the LHS).
    pub lift_convection_by: DMatrix<f64>,
    /// Lifting convected by its own flux.
    pub lift_convection_self: DVector<f64>,
    pub lift_divergence: DVector<f64>,

    /// Lifting projections on the filter side.
    pub lift_diffusion_bar: DVector<f64>,
    pub lift_divergence_bar: DVector<f64>,

    /// Pressure-Poisson blocks; absent unless assembled for that closure.
    pub ppe: Option<PpeOperators>,
}

impl ReducedOperators {
    pub fn n_evolve(&self) -> usize {
        self.mass.nrows()
    }

    pub fn n_filter(&self) -> usize {
        self.mass_bar.nrows()
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure_gradient.ncols()
    }

    pub fn n_pressure_bar(&self) -> usize {
        self.pressure_gradient_bar.ncols()
    }
}

/// Contract a convection tensor with a convecting-coefficient vector on the
/// right index: `out[i][j] = sum_k tensor[i][(j,k)] * convecting[k]`.
///
/// The result is the state-dependent convection matrix one time step adds
/// to the reduced system matrix.
pub fn contract_convecting(tensor: &ConvectionTensor, convecting: &DVector<f64>) -> DMatrix<f64> {
    if tensor.is_empty() {
        return DMatrix::zeros(0, 0);
    }
    let rows = tensor.len();
    let cols = tensor[0].nrows();
    let mut out = DMatrix::zeros(rows, cols);
    for (i, slice) in tensor.iter().enumerate() {
        debug_assert_eq!(slice.ncols(), convecting.len());
        let row = slice * convecting;
        for j in 0..cols {
            out[(i, j)] = row[j];
        }
    }
    out
}

/// Extrapolated-convection residual vector of the reduced momentum
/// equation: the tensor contracted with the second-order extrapolation
/// `2 history - history_prev` on the convecting index and with `beta` on
/// the convected index. Bilinear in (extrapolation, `beta`).
pub fn tensor_contract(
    tensor: &ConvectionTensor,
    history: &DVector<f64>,
    history_prev: &DVector<f64>,
    beta: &DVector<f64>,
) -> DVector<f64> {
    let star = history * 2.0 - history_prev;
    let matrix = contract_convecting(tensor, &star);
    &matrix * beta
}

/// Cell-major flattening of a vector mode.
fn flatten(values: &[Vec2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() * 2);
    for v in values {
        out.push(v.x);
        out.push(v.y);
    }
    out
}

/// Plain dot product of a mode with a volume-integrated operator result.
fn dot_integrated(mode: &[Vec2], integrated: &[Vec2]) -> f64 {
    mode.iter()
        .zip(integrated)
        .map(|(a, b)| a.dot(*b))
        .sum()
}

/// Scalar out-of-plane curl of a velocity gradient.
fn curl2(g: Mat2) -> f64 {
    g.yx - g.xy
}

/// Scalar out-of-plane component of `n x grad(psi)`.
fn rot2(n: Vec2, grad: Vec2) -> f64 {
    n.x * grad.y - n.y * grad.x
}

/// Materialized velocity mode: cell values plus the boundary family the
/// full-order operators should see.
struct VelocityMode {
    field: VectorField,
    values: Vec<Vec2>,
    flat: Vec<f64>,
}

fn velocity_modes(
    mesh: &Mesh,
    space: &EnrichedSpace,
    homogenized: &[crate::fv::BoundaryCondition<Vec2>],
    zero_dirichlet: &[crate::fv::BoundaryCondition<Vec2>],
) -> Vec<VelocityMode> {
    (0..space.n_modes())
        .map(|k| {
            let values = space.vector_mode(k);
            let bcs = match space.mode_bc(k) {
                ModeBc::Homogenized => homogenized.to_vec(),
                ModeBc::ZeroDirichlet => zero_dirichlet.to_vec(),
            };
            let field = VectorField {
                values: values.clone(),
                bcs,
                mesh_fingerprint: mesh.fingerprint(),
            };
            let flat = flatten(&values);
            VelocityMode {
                field,
                values,
                flat,
            }
        })
        .collect()
}

/// Project every full-order operator the reduced systems need.
///
/// `case` supplies the boundary-condition families: velocity modes carry
/// homogenized (or all-zero Dirichlet) conditions, pressure modes carry the
/// case pressure conditions with Dirichlet values zeroed, and the lifting
/// function keeps its own unit-amplitude conditions.
pub fn assemble(mesh: &Mesh, spaces: &RomSpaces, case: &CaseBcs) -> Result<ReducedOperators> {
    spaces.v.modes.check_mesh(mesh)?;
    spaces.u.modes.check_mesh(mesh)?;
    spaces.lifting.check_mesh(mesh)?;

    let n = mesh.n_cells();
    let weights = &spaces.v.modes.weights;
    if weights.len() != n {
        return Err(CoreError::Assembly(
            "mode weights do not match the mesh cell count".to_string(),
        ));
    }

    let nv = spaces.n_evolve();
    let nu = spaces.n_filter();
    let nq = spaces.n_pressure();
    let nqb = spaces.n_pressure_bar();

    let pattern = CellPattern::build(mesh);
    let homog = homogenized_velocity_bcs(mesh, case, 0.0);
    let zerod = zero_dirichlet_velocity_bcs(mesh);
    let q_bcs = homogenized_pressure_bcs(&case.pressure);

    let v_modes = velocity_modes(mesh, &spaces.v, &homog, &zerod);
    let u_modes = velocity_modes(mesh, &spaces.u, &homog, &zerod);

    let q_fields: Vec<ScalarField> = (0..nq)
        .map(|k| ScalarField {
            values: spaces.q.mode(k).to_vec(),
            bcs: q_bcs.clone(),
            mesh_fingerprint: mesh.fingerprint(),
        })
        .collect();
    let qb_fields: Vec<ScalarField> = (0..nqb)
        .map(|k| ScalarField {
            values: spaces.q_bar.mode(k).to_vec(),
            bcs: q_bcs.clone(),
            mesh_fingerprint: mesh.fingerprint(),
        })
        .collect();

    let chi = &spaces.lifting.chi;
    let chi_flat = flatten(&chi.values);

    // Pointwise gradients used by the pressure blocks and boundary terms.
    let q_grads: Vec<Vec<Vec2>> = q_fields.iter().map(|f| gauss_gradient(mesh, f)).collect();
    let qb_grads: Vec<Vec<Vec2>> = qb_fields.iter().map(|f| gauss_gradient(mesh, f)).collect();
    let q_grads_flat: Vec<Vec<f64>> = q_grads.iter().map(|g| flatten(g)).collect();
    let qb_grads_flat: Vec<Vec<f64>> = qb_grads.iter().map(|g| flatten(g)).collect();

    // Mass family: area-weighted inner products, mirrored for exact symmetry.
    let mut mass = DMatrix::zeros(nv, nv);
    for i in 0..nv {
        for j in i..nv {
            let m = l2_inner(&v_modes[i].flat, &v_modes[j].flat, weights, 2);
            mass[(i, j)] = m;
            mass[(j, i)] = m;
        }
    }
    let mut mass_bar = DMatrix::zeros(nu, nu);
    for i in 0..nu {
        for j in i..nu {
            let m = l2_inner(&u_modes[i].flat, &u_modes[j].flat, weights, 2);
            mass_bar[(i, j)] = m;
            mass_bar[(j, i)] = m;
        }
    }
    let mass_cross = DMatrix::from_fn(nv, nu, |i, j| {
        l2_inner(&v_modes[i].flat, &u_modes[j].flat, weights, 2)
    });
    let lift_mass = DVector::from_fn(nv, |i, _| l2_inner(&v_modes[i].flat, &chi_flat, weights, 2));

    // Projected Laplacians (unit diffusivity, integrated form).
    let mut diffusion = DMatrix::zeros(nv, nv);
    for j in 0..nv {
        let op = laplacian(mesh, &pattern, 1.0, &v_modes[j].field)?;
        let lv = op.apply(&v_modes[j].values);
        for i in 0..nv {
            diffusion[(i, j)] = dot_integrated(&v_modes[i].values, &lv);
        }
    }
    let mut diffusion_bar = DMatrix::zeros(nu, nu);
    for j in 0..nu {
        let op = laplacian(mesh, &pattern, 1.0, &u_modes[j].field)?;
        let lv = op.apply(&u_modes[j].values);
        for i in 0..nu {
            diffusion_bar[(i, j)] = dot_integrated(&u_modes[i].values, &lv);
        }
    }
    let lap_chi = laplacian(mesh, &pattern, 1.0, chi)?.apply(&chi.values);
    let lift_diffusion = DVector::from_fn(nv, |i, _| dot_integrated(&v_modes[i].values, &lap_chi));
    let lift_diffusion_bar =
        DVector::from_fn(nu, |i, _| dot_integrated(&u_modes[i].values, &lap_chi));

    // Transposed-gradient diffusion, applied to the filter modes.
    let mut diffusion_transpose = DMatrix::zeros(nv, nu);
    for k in 0..nu {
        let tv = div_grad_transpose(mesh, 1.0, &u_modes[k].field);
        for i in 0..nv {
            diffusion_transpose[(i, k)] = dot_integrated(&v_modes[i].values, &tv);
        }
    }
    let t_chi = div_grad_transpose(mesh, 1.0, chi);
    let lift_diffusion_transpose =
        DVector::from_fn(nv, |i, _| dot_integrated(&v_modes[i].values, &t_chi));

    // Pressure gradient and velocity divergence couplings.
    let pressure_gradient = DMatrix::from_fn(nv, nq, |i, j| {
        l2_inner(&v_modes[i].flat, &q_grads_flat[j], weights, 2)
    });
    let pressure_gradient_bar = DMatrix::from_fn(nu, nqb, |i, j| {
        l2_inner(&u_modes[i].flat, &qb_grads_flat[j], weights, 2)
    });

    let v_divs: Vec<Vec<f64>> = v_modes
        .iter()
        .map(|m| gauss_divergence(mesh, &m.field))
        .collect();
    let u_divs: Vec<Vec<f64>> = u_modes
        .iter()
        .map(|m| gauss_divergence(mesh, &m.field))
        .collect();
    let chi_div = gauss_divergence(mesh, chi);
    let divergence = DMatrix::from_fn(nq, nv, |i, j| {
        l2_inner(&q_fields[i].values, &v_divs[j], weights, 1)
    });
    let divergence_bar = DMatrix::from_fn(nqb, nu, |i, j| {
        l2_inner(&qb_fields[i].values, &u_divs[j], weights, 1)
    });
    let lift_divergence =
        DVector::from_fn(nq, |i, _| l2_inner(&q_fields[i].values, &chi_div, weights, 1));
    let lift_divergence_bar = DVector::from_fn(nqb, |i, _| {
        l2_inner(&qb_fields[i].values, &chi_div, weights, 1)
    });

    // Convection: convecting fluxes are central interpolations of the
    // filter modes, plus the conservative lifting flux.
    let with_ppe = spaces.mode.uses_pressure_poisson();
    let u_fluxes: Vec<Vec<f64>> = u_modes
        .iter()
        .map(|m| face_flux(mesh, &m.field))
        .collect();
    let chi_flux = &spaces.lifting.flux;
    if chi_flux.len() != mesh.n_faces() {
        return Err(CoreError::Assembly(
            "lifting flux does not match the mesh face count".to_string(),
        ));
    }

    let mut convection: ConvectionTensor = (0..nv).map(|_| DMatrix::zeros(nv, nu)).collect();
    let mut convection_grad: ConvectionTensor = if with_ppe {
        (0..nq).map(|_| DMatrix::zeros(nv, nu)).collect()
    } else {
        Vec::new()
    };
    let mut lift_convection_in = DMatrix::zeros(nv, nu);
    let mut lift_convection_grad_in = DMatrix::zeros(nq, nu);
    for (k, flux) in u_fluxes.iter().enumerate() {
        for (j, vm) in v_modes.iter().enumerate() {
            let cv = convective(mesh, &pattern, flux, &vm.field).apply(&vm.values);
            for (i, tm) in v_modes.iter().enumerate() {
                convection[i][(j, k)] = dot_integrated(&tm.values, &cv);
            }
            if with_ppe {
                for i in 0..nq {
                    convection_grad[i][(j, k)] = dot_integrated(&q_grads[i], &cv);
                }
            }
        }
        let cx = convective(mesh, &pattern, flux, chi).apply(&chi.values);
        for (i, tm) in v_modes.iter().enumerate() {
            lift_convection_in[(i, k)] = dot_integrated(&tm.values, &cx);
        }
        if with_ppe {
            for i in 0..nq {
                lift_convection_grad_in[(i, k)] = dot_integrated(&q_grads[i], &cx);
            }
        }
    }

    let mut lift_convection_by = DMatrix::zeros(nv, nv);
    let mut lift_convection_grad_by = DMatrix::zeros(nq, nv);
    for (j, vm) in v_modes.iter().enumerate() {
        let cv = convective(mesh, &pattern, chi_flux, &vm.field).apply(&vm.values);
        for (i, tm) in v_modes.iter().enumerate() {
            lift_convection_by[(i, j)] = dot_integrated(&tm.values, &cv);
        }
        if with_ppe {
            for i in 0..nq {
                lift_convection_grad_by[(i, j)] = dot_integrated(&q_grads[i], &cv);
            }
        }
    }
    let cxx = convective(mesh, &pattern, chi_flux, chi).apply(&chi.values);
    let lift_convection_self =
        DVector::from_fn(nv, |i, _| dot_integrated(&v_modes[i].values, &cxx));
    let lift_convection_grad_self =
        DVector::from_fn(nq, |i, _| dot_integrated(&q_grads[i], &cxx));

    // Pressure-Poisson blocks.
    let ppe = if with_ppe {
        let mut stiffness = DMatrix::zeros(nq, nq);
        for i in 0..nq {
            for j in i..nq {
                let s = l2_inner(&q_grads_flat[i], &q_grads_flat[j], weights, 2);
                stiffness[(i, j)] = s;
                stiffness[(j, i)] = s;
            }
        }
        let mut stiffness_bar = DMatrix::zeros(nqb, nqb);
        for i in 0..nqb {
            for j in i..nqb {
                let s = l2_inner(&qb_grads_flat[i], &qb_grads_flat[j], weights, 2);
                stiffness_bar[(i, j)] = s;
                stiffness_bar[(j, i)] = s;
            }
        }

        let v_grads: Vec<Vec<Mat2>> = v_modes
            .iter()
            .map(|m| gauss_gradient(mesh, &m.field))
            .collect();
        let u_grads: Vec<Vec<Mat2>> = u_modes
            .iter()
            .map(|m| gauss_gradient(mesh, &m.field))
            .collect();
        let chi_grad: Vec<Mat2> = gauss_gradient(mesh, chi);

        let mut curl_boundary = DMatrix::zeros(nq, nv);
        let mut curl_boundary_bar = DMatrix::zeros(nqb, nu);
        let mut trace_boundary = DMatrix::zeros(nq, nv);
        let mut trace_boundary_bar = DMatrix::zeros(nq, nu);
        let mut lift_curl_boundary = DVector::zeros(nq);
        let mut lift_curl_boundary_bar = DVector::zeros(nqb);
        let mut lift_trace_boundary = DVector::zeros(nq);

        for bf in mesh.boundary_faces() {
            let f = &mesh.faces[bf];
            let owner = f.owner;
            let area = f.area.norm();
            let nrm = f.area.normalized();
            let chi_trace = nrm.dot(chi.boundary_value(mesh, bf));
            let chi_curl = curl2(chi_grad[owner]);
            for i in 0..nq {
                let rot = rot2(nrm, q_grads[i][owner]);
                let trace = q_fields[i].boundary_value(mesh, bf);
                for (j, vm) in v_modes.iter().enumerate() {
                    curl_boundary[(i, j)] += area * rot * curl2(v_grads[j][owner]);
                    trace_boundary[(i, j)] +=
                        area * trace * nrm.dot(vm.field.boundary_value(mesh, bf));
                }
                for (k, um) in u_modes.iter().enumerate() {
                    trace_boundary_bar[(i, k)] +=
                        area * trace * nrm.dot(um.field.boundary_value(mesh, bf));
                }
                lift_curl_boundary[i] += area * rot * chi_curl;
                lift_trace_boundary[i] += area * trace * chi_trace;
            }
            for i in 0..nqb {
                let rot = rot2(nrm, qb_grads[i][owner]);
                for (k, _) in u_modes.iter().enumerate() {
                    curl_boundary_bar[(i, k)] += area * rot * curl2(u_grads[k][owner]);
                }
                lift_curl_boundary_bar[i] += area * rot * chi_curl;
            }
        }

        Some(PpeOperators {
            stiffness,
            stiffness_bar,
            curl_boundary,
            curl_boundary_bar,
            trace_boundary,
            trace_boundary_bar,
            convection_grad,
            lift_convection_grad_in,
            lift_convection_grad_by,
            lift_convection_grad_self,
            lift_curl_boundary,
            lift_curl_boundary_bar,
            lift_trace_boundary,
        })
    } else {
        None
    };

    let ops = ReducedOperators {
        mode: spaces.mode,
        mesh_fingerprint: mesh.fingerprint(),
        mass,
        mass_cross,
        diffusion,
        diffusion_transpose,
        pressure_gradient,
        divergence,
        convection,
        mass_bar,
        diffusion_bar,
        pressure_gradient_bar,
        divergence_bar,
        lift_mass,
        lift_diffusion,
        lift_diffusion_transpose,
        lift_convection_in,
        lift_convection_by,
        lift_convection_self,
        lift_divergence,
        lift_diffusion_bar,
        lift_divergence_bar,
        ppe,
    };
    check_invariants(&ops)?;
    Ok(ops)
}

/// Structural sanity of an assembled set: mass matrices symmetric positive
/// definite, pressure-gradient Grams symmetric positive semidefinite.
fn check_invariants(ops: &ReducedOperators) -> Result<()> {
    check_spd("evolve mass", &ops.mass, true)?;
    check_spd("filter mass", &ops.mass_bar, false)?;
    if let Some(ppe) = &ops.ppe {
        check_spd("evolve pressure stiffness", &ppe.stiffness, false)?;
        check_spd("filter pressure stiffness", &ppe.stiffness_bar, false)?;
    }
    Ok(())
}

fn check_spd(label: &str, m: &DMatrix<f64>, strict: bool) -> Result<()> {
    let n = m.nrows();
    if n == 0 {
        return Ok(());
    }
    let mut scale = 0.0f64;
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(m[(i, j)].abs());
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asym > 1e-12 * scale.max(1.0) {
        return Err(CoreError::Assembly(format!(
            "{label} matrix is not symmetric (asymmetry {asym:.3e})"
        )));
    }
    let eigen = m.clone().symmetric_eigen();
    let min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = if strict {
        1e-14 * scale.max(1.0)
    } else {
        -1e-12 * scale.max(1.0)
    };
    if !(min > floor) {
        return Err(CoreError::Assembly(format!(
            "{label} matrix is not positive {} (min eigenvalue {min:.3e})",
            if strict { "definite" } else { "semidefinite" }
        )));
    }
    Ok(())
}
