//! Staggered fluid–rigid-body loop over space-time slabs, with the flow solve replaced by a
//! [`ForceProvider`].
//!
//! Per slab: predictor for both degrees of freedom from the load at `tⁿ`, then repeat
//! {move the mesh to the iterate, decide the sliding swap, extrude and validate the slab,
//! evaluate the provider on the new mesh, one corrector step} until both increments drop
//! below `δ_rb`. The accepted slab is rebuilt from the converged state, and the provider is
//! evaluated once more there to seed the next predictor.

mod force;

pub use force::{
    compute_force_moment, gauss_legendre, integrate_samples, polygon_segments, sample_boundary, AnalyticStress,
    BoundarySegment, BoundaryStressSample, FluidParams, ForceProvider, Harmonic, LinearSurrogate, PrescribedProvider,
    ProviderContext, ProviderSpec, QuasiSteady, ZeroProvider,
};

use thiserror::Error;

use crate::extrude::{extrude_slab, validate_slab, BlockConnectivityCache, ExtrudeError, SpaceTimeSlab};
use crate::mesh::SpatialMesh;
use crate::motion::{advance_vertices, AxisBox, MotionError, MotionMap, Rotation, Translation};
use crate::rigid_body::{
    backfill, corrector, increment, predictor, DofParams, ForceMoment, RigidBodyError, RigidBodyState, Startup,
};
use crate::sliding::{update_sliding, AnnulusState, SlidingError, SwapDirection};

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("mesh motion rejected: {0}")]
    Motion(#[from] MotionError),
    #[error("sliding update failed: {0}")]
    Sliding(#[from] SlidingError),
    #[error("slab extrusion failed: {0}")]
    Extrude(#[from] ExtrudeError),
    #[error("slab ending at t={t} is not conforming ({count} violations, first: {first})")]
    Conformity { t: f64, count: usize, first: String },
    #[error("staggered loop did not converge in {iterations} iterations (last increment {increment:e})")]
    OuterDivergence { iterations: usize, increment: f64 },
    #[error("rigid body: {0}")]
    RigidBody(#[from] RigidBodyError),
    #[error("provider returned a non-finite load at t={0}")]
    NonFiniteLoad(f64),
    #[error("body boundary is not closed (gap {gap:e})")]
    OpenBoundary { gap: f64 },
    #[error("the mesh has no body polygon")]
    NoBody,
    #[error("configuration: {0}")]
    Config(String),
}

/// Uniform time grid `t0 + n·dt`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default)]
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn level(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }
}

/// Initial displacement, rotation and their rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialState {
    pub d: f64,
    pub d_rate: f64,
    pub theta: f64,
    pub theta_rate: f64,
}

/// Region moving rigidly with the translation, and the region outside of which nothing moves.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionBoxes {
    pub inner: AxisBox,
    pub outer: AxisBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    pub time: TimeGrid,
    /// `δ_rb`.
    pub tolerance: f64,
    pub max_outer: usize,
    pub fluid: FluidParams,
    /// `None` keeps the degree of freedom at its initial value.
    pub translation: Option<DofParams>,
    pub rotation: Option<DofParams>,
    pub initial: InitialState,
    pub boxes: Option<MotionBoxes>,
    pub provider: ProviderSpec,
    pub startup: Startup,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_MAX_OUTER: usize = 50;

impl CouplingConfig {
    pub fn new(time: TimeGrid) -> Self {
        CouplingConfig {
            time,
            tolerance: DEFAULT_TOLERANCE,
            max_outer: DEFAULT_MAX_OUTER,
            fluid: FluidParams::default(),
            translation: None,
            rotation: None,
            initial: InitialState::default(),
            boxes: None,
            provider: ProviderSpec::Zero {},
            startup: Startup::default(),
        }
    }

    pub fn check(&self, mesh: &SpatialMesh) -> Result<(), CouplingError> {
        let bad = |m: String| Err(CouplingError::Config(m));
        if !(self.time.dt > 0.0) || self.time.steps == 0 {
            return bad(format!("time grid needs dt > 0 and steps > 0, got dt={} steps={}", self.time.dt, self.time.steps));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1".into());
        }
        self.fluid.check()?;
        for p in self.translation.iter().chain(&self.rotation) {
            p.check()?;
        }
        if self.rotation.is_some() && mesh.annulus.is_none() {
            return bad("rotation needs a mesh with an annulus".into());
        }
        if self.translation.is_some() && self.boxes.is_none() {
            return bad("translation needs motion boxes".into());
        }
        if self.rotation.is_none() && self.initial.theta_rate != 0.0 {
            return bad("initial rotation rate given but rotation is disabled".into());
        }
        if self.translation.is_none() && self.initial.d_rate != 0.0 {
            return bad("initial translation rate given but translation is disabled".into());
        }
        Ok(())
    }
}

/// Rigid-body state plus the converged load at its time level.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyState {
    pub body: RigidBodyState,
    pub load: ForceMoment,
}

/// One accepted slab.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: BodyState,
    pub mesh: SpatialMesh,
    pub annulus: Option<AnnulusState>,
    pub slab: SpaceTimeSlab,
    pub outer_iterations: usize,
    pub swap: Option<SwapDirection>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub d: f64,
    pub d_rate: f64,
    pub theta: f64,
    pub theta_rate: f64,
    pub fy: f64,
    pub m: f64,
    pub outer_iterations: usize,
    pub swapped: bool,
}

impl StepRecord {
    pub fn from_state(t: f64, s: &BodyState, outer_iterations: usize, swapped: bool) -> Self {
        StepRecord {
            t,
            d: s.body.translation.value,
            d_rate: s.body.translation.rate,
            theta: s.body.rotation.value,
            theta_rate: s.body.rotation.rate,
            fy: s.load.force.y,
            m: s.load.moment,
            outer_iterations,
            swapped,
        }
    }
}

/// Mesh at the next level for the given increments, with the sliding layer updated.
pub struct Level {
    pub mesh: SpatialMesh,
    pub annulus: Option<AnnulusState>,
    pub slab: SpaceTimeSlab,
    pub swap: Option<SwapDirection>,
}

/// Move `mesh` by `(Δd, Δθ)`, update the sliding layer and extrude the slab.
/// `d_n` is the displacement at the bottom level, used to place the rigid box.
pub fn build_level(
    mesh: &SpatialMesh,
    annulus: Option<&AnnulusState>,
    boxes: Option<&MotionBoxes>,
    d_n: f64,
    delta_d: f64,
    delta_theta: f64,
    t_next: f64,
    cache: Option<&BlockConnectivityCache>,
) -> Result<Level, CouplingError> {
    let rotation = (delta_theta != 0.0).then_some(Rotation { center: mesh.rotation_center, angle: delta_theta });
    let translation = match boxes {
        Some(b) if delta_d != 0.0 => Some(Translation { dy: delta_d, inner: b.inner.translated(d_n), outer: b.outer }),
        _ => None,
    };
    let moved = advance_vertices(mesh, &MotionMap { rotation, translation }, t_next)?;
    let (next, annulus, swap) = match annulus {
        Some(a) => {
            let rotated = a.rotated(delta_theta)?;
            let (state, next, decision) = update_sliding(&rotated, &moved)?;
            (next, Some(state), decision.direction)
        }
        None => (moved, None, None),
    };
    let slab = extrude_slab(mesh, &next, swap, cache)?;
    Ok(Level { mesh: next, annulus, slab, swap })
}

fn check_conforming(slab: &SpaceTimeSlab) -> Result<(), CouplingError> {
    let report = validate_slab(slab);
    match report.violations.first() {
        None => Ok(()),
        Some(v) => Err(CouplingError::Conformity { t: slab.t_end, count: report.violations.len(), first: v.to_string() }),
    }
}

fn evaluate(provider: &dyn ForceProvider, t: f64, d: (f64, f64), th: (f64, f64), mesh: &SpatialMesh) -> Result<ForceMoment, CouplingError> {
    let ctx = ProviderContext { time: t, d: d.0, d_rate: d.1, theta: th.0, theta_rate: th.1, mesh };
    let fm = provider.evaluate(&ctx)?;
    if fm.is_finite() {
        Ok(fm)
    } else {
        Err(CouplingError::NonFiniteLoad(t))
    }
}

/// Inputs of one staggered step.
pub struct StepInput<'a> {
    pub mesh: &'a SpatialMesh,
    pub annulus: Option<&'a AnnulusState>,
    pub state: &'a BodyState,
    pub t_next: f64,
    pub cache: Option<&'a BlockConnectivityCache>,
}

/// Advance from `tⁿ` to `tⁿ⁺¹` with the staggered loop.
pub fn staggered_step(
    input: &StepInput,
    provider: &dyn ForceProvider,
    config: &CouplingConfig,
) -> Result<StepOutcome, CouplingError> {
    let mesh = input.mesh;
    let st = &input.state.body;
    let dt = input.t_next - mesh.time;
    if !(dt > 0.0) {
        return Err(RigidBodyError::NonPositiveStep(dt).into());
    }
    let (tr, rot) = (&st.translation, &st.rotation);
    let cur_d = (tr.value, tr.rate);
    let cur_t = (rot.value, rot.rate);
    let load = input.state.load;
    let prev = |p: &DofParams, s: &crate::rigid_body::DofState, l: f64| {
        s.previous.unwrap_or_else(|| backfill(p, s.value, s.rate, l, dt, config.startup))
    };

    // Disabled degrees of freedom stay where they are.
    let mut x_d = match &config.translation {
        Some(p) => predictor(p, cur_d.0, cur_d.1, load.force.y, dt),
        None => cur_d,
    };
    let mut x_t = match &config.rotation {
        Some(p) => predictor(p, cur_t.0, cur_t.1, load.moment, dt),
        None => cur_t,
    };

    let mut last_inc = f64::INFINITY;
    let mut converged = None;
    for l in 1..=config.max_outer {
        let level = build_level(
            mesh,
            input.annulus,
            config.boxes.as_ref(),
            cur_d.0,
            x_d.0 - cur_d.0,
            x_t.0 - cur_t.0,
            input.t_next,
            input.cache,
        )?;
        check_conforming(&level.slab)?;
        let fm = evaluate(provider, input.t_next, x_d, x_t, &level.mesh)?;
        let mut inc: f64 = 0.0;
        if let Some(p) = &config.translation {
            let y = corrector(p, cur_d, prev(p, tr, load.force.y), x_d, fm.force.y, dt);
            inc = inc.max(increment(x_d, y));
            x_d = y;
        }
        if let Some(p) = &config.rotation {
            let y = corrector(p, cur_t, prev(p, rot, load.moment), x_t, fm.moment, dt);
            inc = inc.max(increment(x_t, y));
            x_t = y;
        }
        if !(x_d.0.is_finite() && x_d.1.is_finite() && x_t.0.is_finite() && x_t.1.is_finite()) {
            return Err(RigidBodyError::NonFinite.into());
        }
        last_inc = inc;
        if inc < config.tolerance {
            converged = Some(l);
            break;
        }
    }
    let Some(outer_iterations) = converged else {
        return Err(CouplingError::OuterDivergence { iterations: config.max_outer, increment: last_inc });
    };

    let level = build_level(
        mesh,
        input.annulus,
        config.boxes.as_ref(),
        cur_d.0,
        x_d.0 - cur_d.0,
        x_t.0 - cur_t.0,
        input.t_next,
        input.cache,
    )?;
    check_conforming(&level.slab)?;
    let load_next = evaluate(provider, input.t_next, x_d, x_t, &level.mesh)?;
    let body = RigidBodyState {
        translation: tr.advanced(input.t_next, x_d.0, x_d.1),
        rotation: rot.advanced(input.t_next, x_t.0, x_t.1),
    };
    Ok(StepOutcome {
        state: BodyState { body, load: load_next },
        mesh: level.mesh,
        annulus: level.annulus,
        slab: level.slab,
        outer_iterations,
        swap: level.swap,
    })
}

/// Radii of the annulus rings about the rotation center, for the block cache.
pub fn annulus_radii(mesh: &SpatialMesh) -> Option<(f64, f64, f64, usize)> {
    let a = mesh.annulus.as_ref()?;
    let r = |id| (mesh.pos(id) - mesh.rotation_center).norm();
    Some((r(a.inner.ids[0]), r(a.middle[0]), r(a.outer.ids[0]), a.n_quads()))
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub records: Vec<StepRecord>,
    pub final_state: BodyState,
    pub final_mesh: SpatialMesh,
    pub swaps: usize,
}

/// State at `t⁰` with the load evaluated on the input mesh. The initial `d` and `θ` label
/// the input mesh as is; it is not moved to match them.
pub fn initial_state(config: &CouplingConfig, mesh: &SpatialMesh) -> Result<BodyState, CouplingError> {
    let i = &config.initial;
    let body = RigidBodyState {
        translation: crate::rigid_body::DofState::new(config.time.t0, i.d, i.d_rate),
        rotation: crate::rigid_body::DofState::new(config.time.t0, i.theta, i.theta_rate),
    };
    let provider = config.provider.build()?;
    let load = evaluate(provider.as_ref(), config.time.t0, (i.d, i.d_rate), (i.theta, i.theta_rate), mesh)?;
    Ok(BodyState { body, load })
}

/// Drive the staggered loop over the whole grid. `on_step` sees every accepted slab and its
/// record; an error from it stops the run.
pub fn run_simulation(
    config: &CouplingConfig,
    mesh: &SpatialMesh,
    mut on_step: impl FnMut(&StepRecord, &StepOutcome) -> Result<(), CouplingError>,
) -> Result<SimulationResult, CouplingError> {
    config.check(mesh)?;
    let provider = config.provider.build()?;
    let cache = match annulus_radii(mesh) {
        Some((r0, r1, r2, n)) => Some(
            BlockConnectivityCache::derive(r0, r1, r2, n).map_err(CouplingError::Extrude)?,
        ),
        None => None,
    };
    let mut mesh = mesh.clone();
    mesh.time = config.time.t0;
    let mut annulus = match mesh.annulus {
        Some(_) => Some(AnnulusState::from_mesh(&mesh)?),
        None => None,
    };
    let mut state = initial_state(config, &mesh)?;
    let mut records = vec![StepRecord::from_state(config.time.t0, &state, 0, false)];
    let mut swaps = 0;
    for n in 0..config.time.steps {
        let t_next = config.time.level(n + 1);
        let out = staggered_step(
            &StepInput { mesh: &mesh, annulus: annulus.as_ref(), state: &state, t_next, cache: cache.as_ref() },
            provider.as_ref(),
            config,
        )?;
        let rec = StepRecord::from_state(t_next, &out.state, out.outer_iterations, out.swap.is_some());
        log::debug!("t={t_next} d={} theta={} outer={} swap={:?}", rec.d, rec.theta, rec.outer_iterations, out.swap);
        on_step(&rec, &out)?;
        swaps += usize::from(out.swap.is_some());
        records.push(rec);
        state = out.state;
        mesh = out.mesh;
        annulus = out.annulus;
    }
    Ok(SimulationResult { records, final_state: state, final_mesh: mesh, swaps })
}
