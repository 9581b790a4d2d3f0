//! Full-order Evolve-Filter solver.
//!
//! Each time step advances the Navier-Stokes system with BDF2 and PISO
//! pressure coupling (evolve), then applies the differential filter as a
//! generalized Stokes solve with SIMPLEC coupling (filter). The filtered
//! velocity feeds both the next step's time derivative and the extrapolated
//! convecting flux.
//!
//! - `PhysicsConfig`: fluid and time-interval parameters.
//! - `CaseBcs`: per-patch boundary conditions, time-dependent for velocity.
//! - `FomState`: solution fields plus the history the scheme carries.
//! - `run_fom`: full run from rest with snapshot sampling and per-step
//!   drag/lift records.

pub mod coupling;

pub use coupling::{evolve_step, filter_step, generalized_stokes, StokesSolution};

use crate::error::{CoreError, Result};
use crate::fv::{BoundaryCondition, ScalarField, VectorField};
use crate::geom::Vec2;
use crate::linalg::CellPattern;
use crate::mesh::Mesh;
use crate::postproc::{aero_coefficients, AeroCoefficients};
use crate::snapshots::{SamplingSchedule, SnapshotSet};

/// Height of the benchmark channel.
pub const CHANNEL_HEIGHT: f64 = 0.41;
/// Period of the benchmark inlet modulation.
pub const INLET_PERIOD: f64 = 8.0;

/// Parabolic inlet profile with unit mean.
pub fn inlet_parabola(y: f64) -> f64 {
    6.0 / (CHANNEL_HEIGHT * CHANNEL_HEIGHT) * y * (CHANNEL_HEIGHT - y)
}

/// Benchmark inlet modulation `sin(pi t / 8)`.
pub fn inlet_law(t: f64) -> f64 {
    (std::f64::consts::PI * t / INLET_PERIOD).sin()
}

/// Fluid and time-discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsConfig {
    pub rho: f64,
    pub mu: f64,
    /// Filtering radius.
    pub alpha: f64,
    pub dt: f64,
    pub t0: f64,
    pub t_end: f64,
}

impl PhysicsConfig {
    /// The benchmark setup: unit density, mu = 1e-3, alpha = 0.0032,
    /// dt = 4e-4 on [0, 8].
    pub fn benchmark() -> Self {
        Self {
            rho: 1.0,
            mu: 1e-3,
            alpha: 0.0032,
            dt: 4e-4,
            t0: 0.0,
            t_end: 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.mu > 0.0) || !(self.dt > 0.0) {
            return Err(CoreError::Contract(format!(
                "rho, mu, dt must be positive (rho={}, mu={}, dt={})",
                self.rho, self.mu, self.dt
            )));
        }
        if !(self.alpha >= 0.0) {
            return Err(CoreError::Contract(format!(
                "filter radius must be non-negative (alpha={})",
                self.alpha
            )));
        }
        if !(self.t_end >= self.t0) {
            return Err(CoreError::Contract(format!(
                "empty time interval: [{}, {}]",
                self.t0, self.t_end
            )));
        }
        self.n_steps()?;
        Ok(())
    }

    /// Filter viscosity `rho alpha^2 / dt`, always recomputed.
    pub fn filter_viscosity(&self) -> f64 {
        self.rho * self.alpha * self.alpha / self.dt
    }

    /// Number of time steps; the step must divide the interval.
    pub fn n_steps(&self) -> Result<usize> {
        let ratio = (self.t_end - self.t0) / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-8 * steps.max(1.0) {
            return Err(CoreError::Contract(format!(
                "time step {} does not divide the interval [{}, {}]",
                self.dt, self.t0, self.t_end
            )));
        }
        Ok(steps as usize)
    }
}

/// Iteration controls for the linear and coupling solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub tol_momentum: f64,
    pub tol_pressure: f64,
    /// Normalized per-cell continuity tolerance of the filter iterations.
    pub tol_simplec: f64,
    pub max_momentum: usize,
    pub max_pressure: usize,
    /// Maximum SIMPLEC outer iterations.
    pub max_outer: usize,
    pub n_piso_correctors: usize,
    /// Deferred non-orthogonal corrector passes per pressure solve.
    pub n_nonorth: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol_momentum: 1e-7,
            tol_pressure: 1e-8,
            tol_simplec: 1e-7,
            max_momentum: 1000,
            max_pressure: 2000,
            max_outer: 50,
            n_piso_correctors: 2,
            n_nonorth: 1,
        }
    }
}

type VelocityBcFn = dyn Fn(&Mesh, f64) -> Vec<BoundaryCondition<Vec2>> + Send + Sync;

/// Boundary conditions of one flow case: velocity conditions as a function of
/// time, pressure conditions fixed.
pub struct CaseBcs {
    velocity: Box<VelocityBcFn>,
    pub pressure: Vec<BoundaryCondition<f64>>,
}

fn channel_velocity(mesh: &Mesh, law: f64) -> Vec<BoundaryCondition<Vec2>> {
    mesh.patches
        .iter()
        .enumerate()
        .map(|(pid, p)| match p.name.as_str() {
            "inlet" => BoundaryCondition::fixed_profile(mesh, pid, |c| {
                Vec2::new(inlet_parabola(c.y) * law, 0.0)
            }),
            "outlet" => BoundaryCondition::ZeroGradient,
            _ => BoundaryCondition::uniform_fixed(mesh, pid, Vec2::ZERO),
        })
        .collect()
}

fn channel_pressure(mesh: &Mesh) -> Vec<BoundaryCondition<f64>> {
    mesh.patches
        .iter()
        .map(|p| match p.name.as_str() {
            "outlet" => BoundaryCondition::FixedValue(vec![0.0; p.count]),
            _ => BoundaryCondition::ZeroGradient,
        })
        .collect()
}

impl CaseBcs {
    pub fn new(
        velocity: impl Fn(&Mesh, f64) -> Vec<BoundaryCondition<Vec2>> + Send + Sync + 'static,
        pressure: Vec<BoundaryCondition<f64>>,
    ) -> Self {
        Self {
            velocity: Box::new(velocity),
            pressure,
        }
    }

    /// Benchmark case: parabolic inlet modulated by `sin(pi t / 8)`, no-slip
    /// walls and cylinder, zero-gradient outlet velocity, outlet pressure 0.
    pub fn channel_cylinder(mesh: &Mesh) -> Self {
        Self::new(
            |m, t| channel_velocity(m, inlet_law(t)),
            channel_pressure(mesh),
        )
    }

    /// Steady parabolic inlet (no modulation); same wall/outlet handling.
    pub fn steady_channel(mesh: &Mesh) -> Self {
        Self::new(|m, _| channel_velocity(m, 1.0), channel_pressure(mesh))
    }

    /// All Dirichlet data zero; used by decay and rest-state tests.
    pub fn zero_inflow(mesh: &Mesh) -> Self {
        Self::new(|m, _| channel_velocity(m, 0.0), channel_pressure(mesh))
    }

    pub fn velocity_at(&self, mesh: &Mesh, t: f64) -> Vec<BoundaryCondition<Vec2>> {
        (self.velocity)(mesh, t)
    }
}

/// Solver state after a completed Evolve-Filter step.
#[derive(Debug, Clone)]
pub struct FomState {
    pub t: f64,
    /// Completed steps.
    pub step: usize,
    /// Evolve velocity.
    pub v: VectorField,
    /// Evolve pressure.
    pub q: ScalarField,
    /// Filtered velocity.
    pub u: VectorField,
    /// Filter pressure.
    pub q_bar: ScalarField,
    /// Filtered velocity one step back.
    pub u_prev: Vec<Vec2>,
    /// Conservative face flux of `u`.
    pub flux: Vec<f64>,
    pub flux_prev: Vec<f64>,
    /// Normalized continuity residual of the last filter solve.
    pub continuity: f64,
}

impl FomState {
    /// Fluid at rest at `t0` with the case's boundary conditions.
    pub fn rest(mesh: &Mesh, bcs: &CaseBcs, t0: f64) -> Self {
        let mut v = VectorField::zeros(mesh);
        v.bcs = bcs.velocity_at(mesh, t0);
        let mut q = ScalarField::zeros(mesh);
        q.bcs = bcs.pressure.clone();
        Self {
            t: t0,
            step: 0,
            v: v.clone(),
            q: q.clone(),
            u: v,
            q_bar: q,
            u_prev: vec![Vec2::ZERO; mesh.n_cells()],
            flux: vec![0.0; mesh.n_faces()],
            flux_prev: vec![0.0; mesh.n_faces()],
            continuity: 0.0,
        }
    }
}

/// Advance the state by one Evolve-Filter step to `t_new`.
pub fn ef_step(
    mesh: &Mesh,
    pattern: &CellPattern,
    cfg: &PhysicsConfig,
    params: &SolverParams,
    bcs: &CaseBcs,
    state: &mut FomState,
    t_new: f64,
) -> Result<()> {
    let (v, q) = evolve_step(mesh, pattern, cfg, params, bcs, state, t_new)?;
    let filt = filter_step(mesh, pattern, cfg, params, bcs, &v, &state.q_bar, t_new)?;
    state.u_prev = std::mem::take(&mut state.u.values);
    state.u = filt.u;
    state.flux_prev = std::mem::replace(&mut state.flux, filt.flux);
    state.q_bar = filt.q;
    state.v = v;
    state.q = q;
    state.continuity = filt.residual;
    state.t = t_new;
    state.step += 1;
    Ok(())
}

/// One per-step record of the run.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub t: f64,
    pub coefficients: AeroCoefficients,
    pub max_u: f64,
    pub continuity: f64,
}

/// Raw (not homogenized) snapshot sets of one run.
#[derive(Debug, Clone)]
pub struct FieldSnapshots {
    pub v: SnapshotSet,
    pub u: SnapshotSet,
    pub q: SnapshotSet,
    pub q_bar: SnapshotSet,
}

impl FieldSnapshots {
    pub fn new(mesh: &Mesh) -> Self {
        Self {
            v: SnapshotSet::new(mesh, "v", 2),
            u: SnapshotSet::new(mesh, "u", 2),
            q: SnapshotSet::new(mesh, "q", 1),
            q_bar: SnapshotSet::new(mesh, "q_bar", 1),
        }
    }

    pub fn n_snapshots(&self) -> usize {
        self.v.n_snapshots()
    }
}

/// A completed full-order run.
pub struct FomRun {
    pub snapshots: FieldSnapshots,
    pub records: Vec<StepRecord>,
    pub state: FomState,
}

/// Run the Evolve-Filter solver from rest over the configured interval,
/// sampling snapshots on the schedule and recording drag/lift every step.
pub fn run_fom(
    mesh: &Mesh,
    cfg: &PhysicsConfig,
    params: &SolverParams,
    bcs: &CaseBcs,
    schedule: Option<SamplingSchedule>,
    mut on_step: impl FnMut(&StepRecord),
) -> Result<FomRun> {
    cfg.validate()?;
    let n_steps = cfg.n_steps()?;
    let sample_every = schedule
        .map(|s| s.steps_per_sample(cfg.dt))
        .transpose()?;
    let pattern = CellPattern::build(mesh);
    let mut state = FomState::rest(mesh, bcs, cfg.t0);
    let mut snapshots = FieldSnapshots::new(mesh);
    let mut records = Vec::with_capacity(n_steps);
    let has_cylinder = mesh.patch_id("cylinder").is_some();

    for n in 0..n_steps {
        let t_new = cfg.t0 + (n + 1) as f64 * cfg.dt;
        ef_step(mesh, &pattern, cfg, params, bcs, &mut state, t_new)
            .map_err(|e| e.at_time(t_new))?;
        let coefficients = if has_cylinder {
            aero_coefficients(mesh, &state.u, &state.q, cfg.rho, cfg.mu, "cylinder")?
        } else {
            AeroCoefficients::default()
        };
        let max_u = state
            .u
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.norm()));
        if !max_u.is_finite() {
            return Err(CoreError::BlowUp {
                field: "u".to_string(),
                time: t_new,
            });
        }
        let record = StepRecord {
            t: t_new,
            coefficients,
            max_u,
            continuity: state.continuity,
        };
        on_step(&record);
        records.push(record);
        if let Some(every) = sample_every {
            if (n + 1) % every == 0 {
                snapshots.v.push_vector(&state.v, t_new);
                snapshots.u.push_vector(&state.u, t_new);
                snapshots.q.push_scalar(&state.q, t_new);
                snapshots.q_bar.push_scalar(&state.q_bar, t_new);
            }
        }
    }
    Ok(FomRun {
        snapshots,
        records,
        state,
    })
}
