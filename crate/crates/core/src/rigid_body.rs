//! Spring-damper rigid body: Euler predictor, fixed-point BDF2 corrector, surface kinematics.
//!
//! Each degree of freedom obeys `inertia·ẍ + damping·ẋ + stiffness·x = load`, written as
//! the first-order system `ẋ = r`, `ṙ = (−k·x − c·r + load)/inertia`. Translation (d, ḋ)
//! and rotation (θ, θ̇) share the same routines.

use nalgebra::{Matrix2, Vector2};
use serde::Deserialize;
use thiserror::Error;

use crate::geometry::Vec2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RigidBodyError {
    #[error("inertia must be positive, got {0}")]
    NonPositiveInertia(f64),
    #[error("damping and stiffness must be non-negative, got c={0}, k={1}")]
    NegativeCoefficient(f64, f64),
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("corrector did not converge in {iterations} iterations (last increment {increment:e})")]
    Diverged { iterations: usize, increment: f64 },
    #[error("non-finite state or load")]
    NonFinite,
}

/// Mass (or moment of inertia), damping and stiffness of one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DofParams {
    pub inertia: f64,
    #[serde(default)]
    pub damping: f64,
    #[serde(default)]
    pub stiffness: f64,
}

impl DofParams {
    pub fn new(inertia: f64, damping: f64, stiffness: f64) -> Result<Self, RigidBodyError> {
        let p = DofParams { inertia, damping, stiffness };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), RigidBodyError> {
        if !(self.inertia > 0.0) {
            return Err(RigidBodyError::NonPositiveInertia(self.inertia));
        }
        if !(self.damping >= 0.0 && self.stiffness >= 0.0) {
            return Err(RigidBodyError::NegativeCoefficient(self.damping, self.stiffness));
        }
        Ok(())
    }

    /// `ṙ` of the first-order system.
    pub fn acceleration(&self, value: f64, rate: f64, load: f64) -> f64 {
        (-self.stiffness * value - self.damping * rate + load) / self.inertia
    }

    /// Undamped natural frequency in cycles per unit time.
    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.inertia).sqrt() / (2.0 * std::f64::consts::PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryPoint {
    pub t: f64,
    pub value: f64,
    pub rate: f64,
}

/// Value and rate of one degree of freedom, with the step before for BDF2.
#[derive(Debug, Clone, PartialEq)]
pub struct DofState {
    pub value: f64,
    pub rate: f64,
    /// `(value, rate)` at the previous time level; `None` before the first step.
    pub previous: Option<(f64, f64)>,
    pub history: Vec<HistoryPoint>,
}

impl DofState {
    pub fn new(t0: f64, value: f64, rate: f64) -> Self {
        DofState { value, rate, previous: None, history: vec![HistoryPoint { t: t0, value, rate }] }
    }

    pub fn time(&self) -> f64 {
        self.history.last().map_or(0.0, |h| h.t)
    }

    /// Accept `(value, rate)` at `t`. Times must increase.
    pub fn advanced(&self, t: f64, value: f64, rate: f64) -> Self {
        assert!(t > self.time(), "history times must increase");
        let mut history = self.history.clone();
        history.push(HistoryPoint { t, value, rate });
        DofState { value, rate, previous: Some((self.value, self.rate)), history }
    }
}

/// Force per unit length and moment acting on the body.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForceMoment {
    pub force: Vec2,
    pub moment: f64,
}

impl ForceMoment {
    pub fn is_finite(&self) -> bool {
        self.force.x.is_finite() && self.force.y.is_finite() && self.moment.is_finite()
    }
}

/// How `(value, rate)` at `t⁻¹` is made up for the first BDF2 step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Startup {
    /// Constant rate: `x₋₁ = x₀ − Δt·r₀`, `r₋₁ = r₀`. Leaves an O(Δt) error in the rate history.
    ConstantRate,
    /// Second-order Taylor step backwards using the equation of motion at `t⁰`.
    #[default]
    Taylor,
}

/// `(x₋₁, r₋₁)` for the first step.
pub fn backfill(p: &DofParams, value: f64, rate: f64, load: f64, dt: f64, startup: Startup) -> (f64, f64) {
    match startup {
        Startup::ConstantRate => (value - dt * rate, rate),
        Startup::Taylor => {
            let a = p.acceleration(value, rate, load);
            (value - dt * rate + 0.5 * dt * dt * a, rate - dt * a)
        }
    }
}

/// Euler predictor from the state and load at `tⁿ`.
pub fn predictor(p: &DofParams, value: f64, rate: f64, load: f64, dt: f64) -> (f64, f64) {
    (dt * rate + value, dt * (-p.stiffness * value - p.damping * rate + load) / p.inertia + rate)
}

/// One fixed-point BDF2 update of the iterate using the load at `tⁿ⁺¹`.
pub fn corrector(
    p: &DofParams,
    current: (f64, f64),
    previous: (f64, f64),
    iterate: (f64, f64),
    load: f64,
    dt: f64,
) -> (f64, f64) {
    let (dn, bn) = current;
    let (dm, bm) = previous;
    let (dl, bl) = iterate;
    (
        2.0 / 3.0 * dt * bl + 4.0 / 3.0 * dn - 1.0 / 3.0 * dm,
        2.0 / 3.0 * dt * (-p.stiffness * dl - p.damping * bl + load) / p.inertia + 4.0 / 3.0 * bn - 1.0 / 3.0 * bm,
    )
}

/// Stopping measure between two successive iterates.
pub fn increment(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Exact solution of the implicit BDF2 equations with a fixed load.
pub fn implicit_bdf2(p: &DofParams, current: (f64, f64), previous: (f64, f64), load: f64, dt: f64) -> (f64, f64) {
    let h = 2.0 / 3.0 * dt;
    let a = Matrix2::new(1.0, -h, h * p.stiffness / p.inertia, 1.0 + h * p.damping / p.inertia);
    let r = Vector2::new(
        4.0 / 3.0 * current.0 - 1.0 / 3.0 * previous.0,
        4.0 / 3.0 * current.1 - 1.0 / 3.0 * previous.1 + h * load / p.inertia,
    );
    let x = a.lu().solve(&r).expect("BDF2 matrix is regular for dt > 0");
    (x[0], x[1])
}

/// Norm of the implicit BDF2 residual at `x`.
pub fn bdf2_residual(p: &DofParams, current: (f64, f64), previous: (f64, f64), x: (f64, f64), load: f64, dt: f64) -> f64 {
    let y = corrector(p, current, previous, x, load, dt);
    increment(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofStep {
    pub value: f64,
    pub rate: f64,
    pub iterations: usize,
    pub last_increment: f64,
}

/// Integration controls for one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub dt: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    pub startup: Startup,
}

/// Predictor then correctors until the increment drops below the tolerance.
/// `load_at` maps an iterate `(value, rate)` to the load at `tⁿ⁺¹`; `load_n` is the load at `tⁿ`.
pub fn integrate_dof(
    p: &DofParams,
    state: &DofState,
    load_n: f64,
    mut load_at: impl FnMut(f64, f64) -> f64,
    ctl: &StepControl,
) -> Result<DofStep, RigidBodyError> {
    if !(ctl.dt > 0.0) {
        return Err(RigidBodyError::NonPositiveStep(ctl.dt));
    }
    if !(ctl.tolerance > 0.0) {
        return Err(RigidBodyError::NonPositiveTolerance(ctl.tolerance));
    }
    let current = (state.value, state.rate);
    let previous = state.previous.unwrap_or_else(|| backfill(p, state.value, state.rate, load_n, ctl.dt, ctl.startup));
    let mut x = predictor(p, state.value, state.rate, load_n, ctl.dt);
    let mut inc = f64::INFINITY;
    for l in 1..=ctl.max_iters {
        let load = load_at(x.0, x.1);
        let y = corrector(p, current, previous, x, load, ctl.dt);
        if !(y.0.is_finite() && y.1.is_finite()) {
            return Err(RigidBodyError::NonFinite);
        }
        inc = increment(x, y);
        x = y;
        if inc < ctl.tolerance {
            return Ok(DofStep { value: x.0, rate: x.1, iterations: l, last_increment: inc });
        }
    }
    Err(RigidBodyError::Diverged { iterations: ctl.max_iters, increment: inc })
}

/// Velocity of a body surface point at offset `dx` from the center of gravity.
pub fn body_surface_velocity(d_rate: f64, theta_rate: f64, dx: Vec2) -> Vec2 {
    Vec2::new(-theta_rate * dx.y, d_rate + theta_rate * dx.x)
}

/// Translation (vertical) and rotation states at a common time.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidBodyState {
    pub translation: DofState,
    pub rotation: DofState,
}

impl RigidBodyState {
    pub fn at_rest(t0: f64) -> Self {
        RigidBodyState { translation: DofState::new(t0, 0.0, 0.0), rotation: DofState::new(t0, 0.0, 0.0) }
    }

    pub fn time(&self) -> f64 {
        self.translation.time()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> DofParams {
        DofParams::new(1.0, 0.0, 0.0).unwrap()
    }

    fn cylinder() -> DofParams {
        DofParams::new(20.0, 0.00581195, 3.08425).unwrap()
    }

    #[test]
    fn predictor_examples() {
        assert_eq!(predictor(&unit(), 0.0, 1.0, 0.0, 0.1), (0.1, 1.0));
        let (d, b) = predictor(&unit(), 0.0, 0.0, 3.0, 0.15);
        assert_eq!(d, 0.0);
        assert_abs_diff_eq!(b, 0.45, epsilon = 1e-15);
        assert_eq!(predictor(&cylinder(), 0.7, -0.2, 1.0, 0.0), (0.7, -0.2));
    }

    #[test]
    fn corrector_examples() {
        let (d, b) = corrector(&unit(), (0.0, 0.0), (0.0, 0.0), (0.0, 0.45), 3.0, 0.15);
        assert_abs_diff_eq!(d, 0.045, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.3, epsilon = 1e-15);
        let mut x = (0.0, 0.0);
        for _ in 0..5 {
            x = corrector(&cylinder(), (0.0, 0.0), (0.0, 0.0), x, 0.0, 0.1);
            assert_eq!(x, (0.0, 0.0));
        }
    }

    #[test]
    fn corrector_fixed_point_is_implicit_solution() {
        let p = unit();
        let (cur, prev) = ((0.2, 0.1), (0.19, 0.05));
        let exact = implicit_bdf2(&p, cur, prev, 3.0, 0.15);
        let mut x = predictor(&p, cur.0, cur.1, 3.0, 0.15);
        for _ in 0..10 {
            x = corrector(&p, cur, prev, x, 3.0, 0.15);
        }
        assert_abs_diff_eq!(x.0, exact.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x.1, exact.1, epsilon = 1e-14);
    }

    #[test]
    fn cylinder_step_converges_to_bdf2() {
        let p = cylinder();
        let s = DofState::new(0.0, 1.0, 0.0);
        let ctl = StepControl { dt: 0.1, tolerance: 1e-5, max_iters: 100, startup: Startup::Taylor };
        let step = integrate_dof(&p, &s, 0.0, |_, _| 0.0, &ctl).unwrap();
        let prev = backfill(&p, 1.0, 0.0, 0.0, 0.1, Startup::Taylor);
        let r = bdf2_residual(&p, (1.0, 0.0), prev, (step.value, step.rate), 0.0, 0.1);
        assert!(r <= 10.0 * ctl.tolerance, "residual {r}");
        assert!(step.last_increment < 1e-5);
    }

    #[test]
    fn integration_is_linear() {
        let p = cylinder();
        let ctl = StepControl { dt: 0.1, tolerance: 1e-14, max_iters: 200, startup: Startup::Taylor };
        let run = |scale: f64| {
            let mut s = DofState::new(0.0, scale, 0.3 * scale);
            for n in 0..20 {
                let st = integrate_dof(&p, &s, 0.0, |_, _| 0.0, &ctl).unwrap();
                s = s.advanced((n + 1) as f64 * 0.1, st.value, st.rate);
            }
            (s.value, s.rate)
        };
        let (a, b) = (run(1.0), run(2.0));
        assert_abs_diff_eq!(b.0, 2.0 * a.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.1, 2.0 * a.1, epsilon = 1e-12);
    }

    #[test]
    fn stopping_rule_and_errors() {
        let p = cylinder();
        let s = DofState::new(0.0, 1.0, 0.0);
        let mut ctl = StepControl { dt: 0.1, tolerance: 1e-5, max_iters: 1, startup: Startup::Taylor };
        assert!(matches!(integrate_dof(&p, &s, 0.0, |_, _| 0.0, &ctl), Err(RigidBodyError::Diverged { iterations: 1, .. })));
        ctl.max_iters = 100;
        ctl.tolerance = 0.0;
        assert_eq!(integrate_dof(&p, &s, 0.0, |_, _| 0.0, &ctl), Err(RigidBodyError::NonPositiveTolerance(0.0)));
        ctl.tolerance = 1e-5;
        ctl.dt = 0.0;
        assert_eq!(integrate_dof(&p, &s, 0.0, |_, _| 0.0, &ctl), Err(RigidBodyError::NonPositiveStep(0.0)));
        assert_eq!(DofParams::new(0.0, 0.0, 0.0), Err(RigidBodyError::NonPositiveInertia(0.0)));
        assert!(DofParams::new(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn backfill_variants() {
        let p = unit();
        assert_eq!(backfill(&p, 1.0, 2.0, 4.0, 0.5, Startup::ConstantRate), (0.0, 2.0));
        // Taylor backfill is exact for constant acceleration.
        let (d, b) = backfill(&p, 1.0, 2.0, 4.0, 0.5, Startup::Taylor);
        assert_abs_diff_eq!(d, 1.0 - 1.0 + 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn damped_peaks_decrease() {
        let p = DofParams::new(1.0, 0.1, 1.0).unwrap();
        let ctl = StepControl { dt: 0.05, tolerance: 1e-12, max_iters: 100, startup: Startup::Taylor };
        let mut s = DofState::new(0.0, 1.0, 0.0);
        for n in 0..1000 {
            let st = integrate_dof(&p, &s, 0.0, |_, _| 0.0, &ctl).unwrap();
            s = s.advanced((n + 1) as f64 * ctl.dt, st.value, st.rate);
        }
        let v: Vec<f64> = s.history.iter().map(|h| h.value.abs()).collect();
        let peaks: Vec<f64> = (1..v.len() - 1).filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1]).map(|i| v[i]).collect();
        assert!(peaks.len() > 10);
        assert!(peaks.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn theta_is_not_wrapped() {
        let p = unit();
        let ctl = StepControl { dt: 0.1, tolerance: 1e-12, max_iters: 100, startup: Startup::Taylor };
        let mut s = DofState::new(0.0, 0.0, 10.0);
        for n in 0..20 {
            let st = integrate_dof(&p, &s, 0.0, |_, _| 0.0, &ctl).unwrap();
            s = s.advanced((n + 1) as f64 * 0.1, st.value, st.rate);
        }
        assert_abs_diff_eq!(s.value, 20.0, epsilon = 1e-9);
    }

    #[test]
    fn surface_velocity_examples() {
        assert_eq!(body_surface_velocity(2.0, 3.0, Vec2::new(1.0, 0.0)), Vec2::new(0.0, 5.0));
        assert_eq!(body_surface_velocity(0.0, 1.0, Vec2::new(0.0, 1.0)), Vec2::new(-1.0, 0.0));
        assert_eq!(body_surface_velocity(1.5, 0.0, Vec2::new(-4.0, 7.0)), Vec2::new(0.0, 1.5));
    }

    #[test]
    #[should_panic]
    fn history_must_increase() {
        DofState::new(1.0, 0.0, 0.0).advanced(1.0, 0.0, 0.0);
    }
}
