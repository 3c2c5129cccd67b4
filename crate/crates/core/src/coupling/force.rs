//! Boundary force and moment quadrature, and the force providers that stand in for a flow solver.
//!
//! Sign convention: the integral `∮ ρ(pI − 2νε)n ds` with `n` the outward normal of the
//! body polygon is fed unchanged into the equations of motion as `F_y` and `M`.

use nalgebra::Matrix2;
use serde::Deserialize;

use super::CouplingError;
use crate::geometry::{cross2, Point, Vec2};
use crate::mesh::SpatialMesh;
use crate::rigid_body::ForceMoment;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidParams {
    pub rho: f64,
    pub nu: f64,
}

impl FluidParams {
    pub fn check(&self) -> Result<(), CouplingError> {
        if self.rho > 0.0 && self.nu > 0.0 {
            Ok(())
        } else {
            Err(CouplingError::Config(format!("fluid parameters must be positive, got rho={} nu={}", self.rho, self.nu)))
        }
    }
}

impl Default for FluidParams {
    fn default() -> Self {
        FluidParams { rho: 1.0, nu: 1e-2 }
    }
}

/// Pressure and strain rate at a point of the body boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryStressSample {
    pub position: Point,
    pub pressure: f64,
    /// Symmetric strain-rate tensor.
    pub strain: Matrix2<f64>,
    /// Unit normal pointing out of the body.
    pub normal: Vec2,
}

impl BoundaryStressSample {
    pub fn traction(&self, fluid: &FluidParams) -> Vec2 {
        fluid.rho * (Matrix2::identity() * self.pressure - 2.0 * fluid.nu * self.strain) * self.normal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub a: Point,
    pub b: Point,
}

impl BoundarySegment {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Right-hand normal, outward for a counterclockwise body polygon.
    pub fn outward_normal(&self) -> Vec2 {
        let d = self.b - self.a;
        Vec2::new(d.y, -d.x) / d.norm()
    }
}

/// Segments of a closed polygon, counterclockwise around the body.
pub fn polygon_segments(polygon: &[Point]) -> Vec<BoundarySegment> {
    let n = polygon.len();
    (0..n).map(|i| BoundarySegment { a: polygon[i], b: polygon[(i + 1) % n] }).collect()
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(q: usize) -> Vec<(f64, f64)> {
    assert!(q >= 1, "at least one quadrature point");
    let mut out = Vec::with_capacity(q);
    for i in 0..q {
        // Chebyshev guess, then Newton on P_q.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 1 { x } else { p1 };
            let pqm1 = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (x * pq - pqm1) / (x * x - 1.0);
            let dx = pq / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Quadrature samples of `field` on the segments, `q` points per segment.
pub fn sample_boundary(
    segments: &[BoundarySegment],
    q: usize,
    field: &dyn Fn(&Point) -> (f64, Matrix2<f64>),
) -> Result<Vec<(BoundaryStressSample, f64)>, CouplingError> {
    if segments.is_empty() {
        return Err(CouplingError::OpenBoundary { gap: f64::INFINITY });
    }
    let scale = segments.iter().map(|s| s.length()).fold(0.0, f64::max);
    for (i, s) in segments.iter().enumerate() {
        let next = &segments[(i + 1) % segments.len()];
        let gap = (next.a - s.b).norm();
        if gap > 1e-12 * scale || !(s.length() > 0.0) {
            return Err(CouplingError::OpenBoundary { gap });
        }
    }
    let rule = gauss_legendre(q);
    let mut out = Vec::with_capacity(segments.len() * q);
    for s in segments {
        let (n, half) = (s.outward_normal(), 0.5 * s.length());
        for &(xi, w) in &rule {
            let position = Point::from(s.a.coords * (0.5 * (1.0 - xi)) + s.b.coords * (0.5 * (1.0 + xi)));
            let (pressure, strain) = field(&position);
            out.push((BoundaryStressSample { position, pressure, strain, normal: n }, w * half));
        }
    }
    Ok(out)
}

/// Force and moment about `center` from weighted boundary samples.
pub fn integrate_samples(samples: &[(BoundaryStressSample, f64)], fluid: &FluidParams, center: &Point) -> ForceMoment {
    let mut fm = ForceMoment::default();
    for (s, w) in samples {
        let t = s.traction(fluid);
        fm.force += *w * t;
        fm.moment += *w * cross2(&(s.position - center), &t);
    }
    fm
}

/// Quadrature with `q ≥ 2` Gauss points per segment; exact for integrands of degree `2q − 1`.
pub fn compute_force_moment(
    segments: &[BoundarySegment],
    q: usize,
    field: &dyn Fn(&Point) -> (f64, Matrix2<f64>),
    fluid: &FluidParams,
    center: &Point,
) -> Result<ForceMoment, CouplingError> {
    if q < 2 {
        return Err(CouplingError::Config(format!("quadrature order must be at least 2, got {q}")));
    }
    Ok(integrate_samples(&sample_boundary(segments, q, field)?, fluid, center))
}

/// Everything a provider may look at: the time `tⁿ⁺¹`, the current iterate and its mesh.
#[derive(Debug, Clone, Copy)]
pub struct ProviderContext<'a> {
    pub time: f64,
    pub d: f64,
    pub d_rate: f64,
    pub theta: f64,
    pub theta_rate: f64,
    pub mesh: &'a SpatialMesh,
}

/// Stand-in for the flow solve. Must be deterministic.
pub trait ForceProvider {
    fn name(&self) -> &'static str;
    fn evaluate(&self, ctx: &ProviderContext) -> Result<ForceMoment, CouplingError>;
}

pub struct ZeroProvider;

impl ForceProvider for ZeroProvider {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn evaluate(&self, _: &ProviderContext) -> Result<ForceMoment, CouplingError> {
        Ok(ForceMoment::default())
    }
}

/// `offset + amplitude·sin(omega·t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Harmonic {
    pub offset: f64,
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl Harmonic {
    pub fn at(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (self.omega * t + self.phase).sin()
    }
}

/// State-independent load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrescribedProvider {
    pub force_y: Harmonic,
    pub moment: Harmonic,
}

impl ForceProvider for PrescribedProvider {
    fn name(&self) -> &'static str {
        "prescribed"
    }

    fn evaluate(&self, ctx: &ProviderContext) -> Result<ForceMoment, CouplingError> {
        Ok(ForceMoment { force: Vec2::new(0.0, self.force_y.at(ctx.time)), moment: self.moment.at(ctx.time) })
    }
}

/// `F_y = −k_d·d − c_d·ḋ`, `M = −k_θ·θ − c_θ·θ̇`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSurrogate {
    pub k_d: f64,
    pub c_d: f64,
    pub k_theta: f64,
    pub c_theta: f64,
}

impl ForceProvider for LinearSurrogate {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn evaluate(&self, ctx: &ProviderContext) -> Result<ForceMoment, CouplingError> {
        Ok(ForceMoment {
            force: Vec2::new(0.0, -self.k_d * ctx.d - self.c_d * ctx.d_rate),
            moment: -self.k_theta * ctx.theta - self.c_theta * ctx.theta_rate,
        })
    }
}

/// Quasi-steady galloping model with tabulated coefficients against the apparent angle
/// `α = θ − atan(ḋ/U)`. `F_y = ½ρU²L·c_y(α)`, `M = ½ρU²L²·c_m(α)`, linear interpolation,
/// clamped at the table ends.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasiSteady {
    pub u_inf: f64,
    pub rho: f64,
    pub length: f64,
    /// Rows `[α, c_y, c_m]` with strictly increasing α.
    pub table: Vec<[f64; 3]>,
}

impl QuasiSteady {
    pub fn check(&self) -> Result<(), CouplingError> {
        if self.table.len() < 2 || self.table.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            return Err(CouplingError::Config("quasi-steady table needs two or more rows with increasing angle".into()));
        }
        if !(self.u_inf > 0.0 && self.rho > 0.0 && self.length > 0.0) {
            return Err(CouplingError::Config("quasi-steady u_inf, rho and length must be positive".into()));
        }
        Ok(())
    }

    pub fn coefficients(&self, alpha: f64) -> (f64, f64) {
        let t = &self.table;
        if alpha <= t[0][0] {
            return (t[0][1], t[0][2]);
        }
        for w in t.windows(2) {
            if alpha <= w[1][0] {
                let s = (alpha - w[0][0]) / (w[1][0] - w[0][0]);
                return (w[0][1] + s * (w[1][1] - w[0][1]), w[0][2] + s * (w[1][2] - w[0][2]));
            }
        }
        let last = t[t.len() - 1];
        (last[1], last[2])
    }
}

impl ForceProvider for QuasiSteady {
    fn name(&self) -> &'static str {
        "quasi-steady"
    }

    fn evaluate(&self, ctx: &ProviderContext) -> Result<ForceMoment, CouplingError> {
        let alpha = ctx.theta - (ctx.d_rate / self.u_inf).atan();
        let (cy, cm) = self.coefficients(alpha);
        let q = 0.5 * self.rho * self.u_inf * self.u_inf * self.length;
        Ok(ForceMoment { force: Vec2::new(0.0, q * cy), moment: q * self.length * cm })
    }
}

/// Polynomial stress field in coordinates relative to the body center: pressure
/// `Σ c_i·m_i` over the monomials `1, x, y, x², xy, y²`, constant strain `(ε_xx, ε_xy, ε_yy)`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticStress {
    pub fluid: FluidParams,
    #[serde(default)]
    pub pressure: [f64; 6],
    #[serde(default)]
    pub strain: [f64; 3],
    #[serde(default = "default_order")]
    pub order: usize,
}

fn default_order() -> usize {
    3
}

impl AnalyticStress {
    pub fn field(&self, center: Point) -> impl Fn(&Point) -> (f64, Matrix2<f64>) + '_ {
        move |x: &Point| {
            let (u, v) = (x.x - center.x, x.y - center.y);
            let c = &self.pressure;
            let p = c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * u * v + c[5] * v * v;
            let [exx, exy, eyy] = self.strain;
            (p, Matrix2::new(exx, exy, exy, eyy))
        }
    }
}

impl ForceProvider for AnalyticStress {
    fn name(&self) -> &'static str {
        "stress"
    }

    fn evaluate(&self, ctx: &ProviderContext) -> Result<ForceMoment, CouplingError> {
        let body = ctx.mesh.body.as_ref().ok_or(CouplingError::NoBody)?;
        let polygon: Vec<Point> = body.iter().map(|&i| *ctx.mesh.pos(i)).collect();
        let center = ctx.mesh.rotation_center;
        compute_force_moment(&polygon_segments(&polygon), self.order, &self.field(center), &self.fluid, &center)
    }
}

/// Provider selection as it appears in a configuration file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProviderSpec {
    Zero {},
    Prescribed {
        #[serde(default)]
        force_y: Harmonic,
        #[serde(default)]
        moment: Harmonic,
    },
    Linear(LinearSurrogate),
    QuasiSteady(QuasiSteady),
    Stress(AnalyticStress),
}

impl Default for ProviderSpec {
    fn default() -> Self {
        ProviderSpec::Zero {}
    }
}

impl ProviderSpec {
    pub fn build(&self) -> Result<Box<dyn ForceProvider>, CouplingError> {
        Ok(match self {
            ProviderSpec::Zero {} => Box::new(ZeroProvider),
            ProviderSpec::Prescribed { force_y, moment } => Box::new(PrescribedProvider { force_y: *force_y, moment: *moment }),
            ProviderSpec::Linear(l) => Box::new(*l),
            ProviderSpec::QuasiSteady(q) => {
                q.check()?;
                Box::new(q.clone())
            }
            ProviderSpec::Stress(s) => {
                s.fluid.check()?;
                if s.order < 2 {
                    return Err(CouplingError::Config("stress quadrature order must be at least 2".into()));
                }
                Box::new(*s)
            }
        })
    }
}
