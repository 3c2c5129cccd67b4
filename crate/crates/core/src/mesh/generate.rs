//! Structured ring-based generators for the annulus and for complete test meshes.

use std::f64::consts::PI;

use serde::Deserialize;

use super::{
    assign_chainsaw_ids, Annulus, Layer, MeshError, Region, RingKind, RingOrdering, SpatialMesh, Triangle,
    VertexId,
};
use crate::geometry::{signed_area, Point};

fn polar(center: &Point, r: f64, theta: f64) -> Point {
    Point::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

/// Annulus fragment with ids starting at `base`: inner ring `[base, base+N)` and outer ring
/// `[base+2N, base+3N)` numbered chainsaw style, middle ring `[base+N, base+2N)` in order.
pub fn build_annulus_with_base(
    center: Point,
    r_rotating: f64,
    r_mid: f64,
    r_outer: f64,
    n_quads: usize,
    base: VertexId,
) -> Result<SpatialMesh, MeshError> {
    if n_quads % 2 != 0 || n_quads < 6 {
        return Err(MeshError::BadQuadCount(n_quads));
    }
    if !(0.0 < r_rotating && r_rotating < r_mid && r_mid < r_outer) {
        return Err(MeshError::BadRadii(r_rotating, r_mid, r_outer));
    }
    let n = n_quads;
    let inner_pool: Vec<VertexId> = (base..base + n).collect();
    let outer_pool: Vec<VertexId> = (base + 2 * n..base + 3 * n).collect();
    let inner = assign_chainsaw_ids(n, &inner_pool)?;
    let middle: Vec<VertexId> = (base + n..base + 2 * n).collect();
    let outer = assign_chainsaw_ids(n, &outer_pool)?;

    let mut positions = vec![Point::origin(); 3 * n];
    for k in 0..n {
        let theta = 2.0 * PI * k as f64 / n as f64;
        positions[inner[k] - base] = polar(&center, r_rotating, theta);
        positions[middle[k] - base] = polar(&center, r_mid, theta);
        positions[outer[k] - base] = polar(&center, r_outer, theta);
    }
    let annulus = Annulus {
        inner: RingOrdering { ring: RingKind::InnerCircle, ids: inner },
        middle,
        outer: RingOrdering { ring: RingKind::OuterCircle, ids: outer },
        sliding_offset: 0,
    };
    let mut quads = annulus.buffer_quads();
    quads.extend(annulus.sliding_quads(0));
    Ok(SpatialMesh {
        time: 0.0,
        id_base: base,
        positions,
        triangles: Vec::new(),
        quads,
        rotation_center: center,
        annulus: Some(annulus),
        body: None,
    })
}

/// Annulus on its own, ids from zero.
pub fn build_annulus_mesh(
    center: Point,
    r_rotating: f64,
    r_mid: f64,
    r_outer: f64,
    n_quads: usize,
) -> Result<SpatialMesh, MeshError> {
    build_annulus_with_base(center, r_rotating, r_mid, r_outer, n_quads, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum BodyShape {
    /// No hole; the inner region is a fan around the center.
    None,
    Circle { radius: f64 },
    Rectangle { half_width: f64, half_height: f64 },
}

impl BodyShape {
    /// Distance from the center to the body boundary along direction `theta`.
    fn radius_at(&self, theta: f64) -> f64 {
        match *self {
            BodyShape::None => 0.0,
            BodyShape::Circle { radius } => radius,
            BodyShape::Rectangle { half_width, half_height } => {
                let (s, c) = theta.sin_cos();
                1.0 / (c.abs() / half_width).max(s.abs() / half_height)
            }
        }
    }

    fn max_radius(&self) -> f64 {
        match *self {
            BodyShape::None => 0.0,
            BodyShape::Circle { radius } => radius,
            BodyShape::Rectangle { half_width, half_height } => half_width.hypot(half_height),
        }
    }
}

/// Parameters of the structured generator.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshParams {
    pub center: Point,
    /// Vertices per ring; equals the annulus quad count when an annulus is present.
    pub n_theta: usize,
    pub body: BodyShape,
    /// Ring layers between the body and the rotating circle (or the far boundary).
    pub inner_layers: usize,
    /// `(r_rotating, r_mid, r_outer)`.
    pub annulus: Option<(f64, f64, f64)>,
    pub r_far: f64,
    /// Ring layers between the annulus and the far boundary.
    pub outer_layers: usize,
}

/// Triangulate the band between two aligned rings along the shorter valid diagonal.
fn ring_band(inner: &[VertexId], outer: &[VertexId], pos: &dyn Fn(VertexId) -> Point, region: Region) -> Vec<Triangle> {
    let n = inner.len();
    let mut tris = Vec::with_capacity(2 * n);
    for k in 0..n {
        let k1 = (k + 1) % n;
        let (a, b, c, d) = (inner[k], outer[k], outer[k1], inner[k1]);
        let (pa, pb, pc, pd) = (pos(a), pos(b), pos(c), pos(d));
        let ac_ok = signed_area(&pa, &pb, &pc) > 0.0 && signed_area(&pa, &pc, &pd) > 0.0;
        let bd_ok = signed_area(&pa, &pb, &pd) > 0.0 && signed_area(&pb, &pc, &pd) > 0.0;
        let use_ac = ac_ok && (!bd_ok || (pc - pa).norm() <= (pd - pb).norm());
        if use_ac {
            tris.push(Triangle { v: [a, b, c], region });
            tris.push(Triangle { v: [a, c, d], region });
        } else {
            tris.push(Triangle { v: [a, b, d], region });
            tris.push(Triangle { v: [b, c, d], region });
        }
    }
    tris
}

/// Build a complete mesh: inner rings (rotating when an annulus is present), the annulus,
/// and static rings out to `r_far`. Ids ascend as interior, annulus inner, middle, outer,
/// static, which makes every smallest-id diagonal on the annulus rings start on the ring
/// closer to the center.
pub fn generate_mesh(p: &MeshParams) -> Result<SpatialMesh, MeshError> {
    let n = p.n_theta;
    if n < 6 || n % 2 != 0 {
        return Err(MeshError::BadQuadCount(n));
    }
    if p.inner_layers == 0 {
        return Err(MeshError::BadParams("inner_layers must be at least 1".into()));
    }
    let c = p.center;
    let r_inner_end = match p.annulus {
        Some((r_rot, r_mid, r_out)) => {
            if !(r_rot < r_mid && r_mid < r_out) {
                return Err(MeshError::BadRadii(r_rot, r_mid, r_out));
            }
            if !(p.r_far > r_out) || p.outer_layers == 0 {
                return Err(MeshError::BadParams("need r_far > r_outer and outer_layers >= 1".into()));
            }
            r_rot
        }
        None => p.r_far,
    };
    if p.body.max_radius() >= r_inner_end {
        return Err(MeshError::BadParams("body does not fit inside the first circle".into()));
    }
    let thetas: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();

    let mut positions: Vec<Point> = Vec::new();
    let mut triangles: Vec<Triangle> = Vec::new();
    let inner_region = if p.annulus.is_some() { Region::Rotating } else { Region::Static };

    // Ring radii along each ray, blending from the body outline to the first circle.
    let layers = if p.annulus.is_some() { p.inner_layers } else { p.inner_layers + p.outer_layers };
    let ring_point = |j: usize, k: usize| {
        let r0 = p.body.radius_at(thetas[k]);
        let r = r0 + (r_inner_end - r0) * j as f64 / layers as f64;
        polar(&c, r, thetas[k])
    };
    let mut rings: Vec<Vec<VertexId>> = Vec::new();
    let has_hole = p.body != BodyShape::None;
    if !has_hole {
        positions.push(c);
    }
    // With an annulus the last inner ring is the annulus inner circle, numbered later.
    let last_plain = if p.annulus.is_some() { layers - 1 } else { layers };
    let first = if has_hole { 0 } else { 1 };
    for j in first..=last_plain {
        let ids: Vec<VertexId> = (0..n)
            .map(|k| {
                positions.push(ring_point(j, k));
                positions.len() - 1
            })
            .collect();
        rings.push(ids);
    }

    let mut annulus = None;
    let mut quads = Vec::new();
    if let Some((r_rot, r_mid, r_out)) = p.annulus {
        let frag = build_annulus_with_base(c, r_rot, r_mid, r_out, n, positions.len())?;
        positions.extend_from_slice(&frag.positions);
        let a = frag.annulus.expect("fragment has an annulus");
        rings.push(a.inner.ids.clone());
        quads = frag.quads;
        let outer_ids = a.outer.ids.clone();
        annulus = Some(a);
        let inner_rings = rings.clone();
        // Static rings outside the annulus.
        let mut static_rings = vec![outer_ids];
        for j in 1..=p.outer_layers {
            let r = r_out + (p.r_far - r_out) * j as f64 / p.outer_layers as f64;
            let ids: Vec<VertexId> = thetas
                .iter()
                .map(|&t| {
                    positions.push(polar(&c, r, t));
                    positions.len() - 1
                })
                .collect();
            static_rings.push(ids);
        }
        let pos = |id: VertexId| positions[id];
        append_bands(&mut triangles, &inner_rings, has_hole, &pos, inner_region);
        for w in static_rings.windows(2) {
            triangles.extend(ring_band(&w[0], &w[1], &pos, Region::Static));
        }
    } else {
        let pos = |id: VertexId| positions[id];
        append_bands(&mut triangles, &rings, has_hole, &pos, inner_region);
    }

    let body = if has_hole { Some(rings[0].clone()) } else { None };
    debug_assert!(quads.iter().all(|q| matches!(q.layer, Layer::Buffer | Layer::Sliding)));
    Ok(SpatialMesh {
        time: 0.0,
        id_base: 0,
        positions,
        triangles,
        quads,
        rotation_center: c,
        annulus,
        body,
    })
}

fn append_bands(
    triangles: &mut Vec<Triangle>,
    rings: &[Vec<VertexId>],
    has_hole: bool,
    pos: &dyn Fn(VertexId) -> Point,
    region: Region,
) {
    if !has_hole {
        let first = &rings[0];
        let n = first.len();
        for k in 0..n {
            triangles.push(Triangle { v: [0, first[k], first[(k + 1) % n]], region });
        }
    }
    for w in rings.windows(2) {
        triangles.extend(ring_band(&w[0], &w[1], pos, region));
    }
}
