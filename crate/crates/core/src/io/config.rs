//! Simulation configuration in TOML. Unknown keys are errors; every default that was
//! filled in is listed in [`ParsedConfig::defaults`].
//!
//! ```toml
//! [mesh]            # or: file = "mesh.stm"
//! n_theta = 100
//! body = { shape = "rectangle", half_width = 0.5, half_height = 0.5 }
//! inner_layers = 4
//! annulus = [4.4, 4.7, 5.0]
//! r_far = 20.0
//! outer_layers = 6
//!
//! [time]
//! dt = 0.15
//! steps = 100
//!
//! [rotation]
//! inertia = 400.0
//! damping = 78.54
//! stiffness = 61.685
//!
//! [provider]
//! kind = "zero"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::IoError;
use crate::coupling::{
    CouplingConfig, FluidParams, InitialState, MotionBoxes, ProviderSpec, TimeGrid, DEFAULT_MAX_OUTER, DEFAULT_TOLERANCE,
};
use crate::geometry::Point;
use crate::mesh::{BodyShape, MeshParams};
use crate::rigid_body::{DofParams, Startup};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshSection {
    file: Option<PathBuf>,
    center: Option<[f64; 2]>,
    n_theta: Option<usize>,
    body: Option<BodyShape>,
    inner_layers: Option<usize>,
    annulus: Option<[f64; 3]>,
    r_far: Option<f64>,
    outer_layers: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CouplingSection {
    tolerance: Option<f64>,
    max_outer: Option<usize>,
    startup: Option<Startup>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    vtk: Option<bool>,
    vtk_every: Option<usize>,
    slabs: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    t0: Option<f64>,
    dt: f64,
    steps: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mesh: MeshSection,
    time: TimeSection,
    #[serde(default)]
    coupling: CouplingSection,
    fluid: Option<FluidParams>,
    translation: Option<DofParams>,
    rotation: Option<DofParams>,
    initial: Option<InitialState>,
    boxes: Option<MotionBoxes>,
    provider: Option<ProviderSpec>,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Generate(MeshParams),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputOptions {
    /// Write a VTK file per slab.
    pub vtk: bool,
    /// Only every `vtk_every`-th slab is exported.
    pub vtk_every: usize,
    /// Also write native slab files.
    pub slabs: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub coupling: CouplingConfig,
    pub mesh: MeshSource,
    pub output: OutputOptions,
    /// Dotted keys whose defaults were used.
    pub defaults: Vec<String>,
}

fn line_of(text: &str, e: &toml::de::Error) -> Option<usize> {
    e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

fn pick<T>(v: Option<T>, default: T, key: &str, defaults: &mut Vec<String>) -> T {
    v.unwrap_or_else(|| {
        defaults.push(key.to_string());
        default
    })
}

/// Parse configuration text. Relative mesh paths are resolved against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ParsedConfig, IoError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| IoError::Config { line: line_of(text, &e), message: e.message().to_string() })?;
    let mut defaults = Vec::new();
    let cfg_err = |m: String| IoError::Config { line: None, message: m };

    let m = raw.mesh;
    let mesh = match m.file {
        Some(f) => {
            if m.n_theta.is_some() || m.body.is_some() || m.annulus.is_some() || m.r_far.is_some() {
                return Err(cfg_err("mesh.file excludes the generator keys".into()));
            }
            MeshSource::File(if f.is_absolute() { f } else { base_dir.join(f) })
        }
        None => {
            let n_theta = m.n_theta.ok_or_else(|| cfg_err("mesh.n_theta is required without mesh.file".into()))?;
            let r_far = m.r_far.ok_or_else(|| cfg_err("mesh.r_far is required without mesh.file".into()))?;
            let c = pick(m.center, [0.0, 0.0], "mesh.center", &mut defaults);
            MeshSource::Generate(MeshParams {
                center: Point::new(c[0], c[1]),
                n_theta,
                body: pick(m.body, BodyShape::None, "mesh.body", &mut defaults),
                inner_layers: pick(m.inner_layers, 4, "mesh.inner_layers", &mut defaults),
                annulus: m.annulus.map(|a| (a[0], a[1], a[2])),
                r_far,
                outer_layers: pick(m.outer_layers, 4, "mesh.outer_layers", &mut defaults),
            })
        }
    };

    let t0 = pick(raw.time.t0, 0.0, "time.t0", &mut defaults);
    let mut c = CouplingConfig::new(TimeGrid { t0, dt: raw.time.dt, steps: raw.time.steps });
    c.tolerance = pick(raw.coupling.tolerance, DEFAULT_TOLERANCE, "coupling.tolerance", &mut defaults);
    c.max_outer = pick(raw.coupling.max_outer, DEFAULT_MAX_OUTER, "coupling.max_outer", &mut defaults);
    c.startup = pick(raw.coupling.startup, Startup::default(), "coupling.startup", &mut defaults);
    c.fluid = pick(raw.fluid, FluidParams::default(), "fluid", &mut defaults);
    c.translation = raw.translation;
    c.rotation = raw.rotation;
    c.initial = pick(raw.initial, InitialState::default(), "initial", &mut defaults);
    c.boxes = raw.boxes;
    c.provider = pick(raw.provider, ProviderSpec::Zero {}, "provider", &mut defaults);
    if !(c.tolerance > 0.0) {
        return Err(cfg_err(format!("coupling.tolerance must be positive, got {}", c.tolerance)));
    }
    if !(c.time.dt > 0.0) || c.time.steps == 0 {
        return Err(cfg_err("time.dt must be positive and time.steps at least 1".into()));
    }

    let output = OutputOptions {
        vtk: pick(raw.output.vtk, false, "output.vtk", &mut defaults),
        vtk_every: pick(raw.output.vtk_every, 1, "output.vtk_every", &mut defaults).max(1),
        slabs: pick(raw.output.slabs, false, "output.slabs", &mut defaults),
    };
    Ok(ParsedConfig { coupling: c, mesh, output, defaults })
}

pub fn parse_config(path: &Path) -> Result<ParsedConfig, IoError> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}
