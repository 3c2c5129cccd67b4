//! Domain motion over one slab: rigid rotation of the inner region and box-blended
//! vertical translation, followed by the identifier shift to the next time level.

use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{signed_area, Point, Vec2};
use crate::mesh::SpatialMesh;

#[derive(Debug, Error, PartialEq)]
pub enum MotionError {
    #[error("inner box must lie strictly inside the outer box")]
    NonNestedBoxes,
    #[error("motion inverts {element} (area {area:e}); reduce the time step")]
    InvertedElement { element: String, area: f64 },
    #[error("rotation requested but the mesh has no rotating annulus")]
    NoRotatingRegion,
}

/// Axis-aligned rectangle `[min.x, max.x] × [min.y, max.y]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl AxisBox {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        AxisBox { min, max }
    }

    pub fn translated(&self, dy: f64) -> AxisBox {
        AxisBox { min: [self.min[0], self.min[1] + dy], max: [self.max[0], self.max[1] + dy] }
    }

    fn strictly_inside(&self, outer: &AxisBox) -> bool {
        outer.min[0] < self.min[0] && outer.min[1] < self.min[1] && self.max[0] < outer.max[0] && self.max[1] < outer.max[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub center: Point,
    pub angle: f64,
}

/// Vertical translation by `dy`, full inside `inner`, fading to zero at `outer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Translation {
    pub dy: f64,
    pub inner: AxisBox,
    pub outer: AxisBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotionMap {
    pub rotation: Option<Rotation>,
    pub translation: Option<Translation>,
}

impl MotionMap {
    pub fn identity() -> Self {
        MotionMap::default()
    }
}

pub fn rotate_point(center: &Point, angle: f64, p: &Point) -> Point {
    let (s, c) = angle.sin_cos();
    let d = p - center;
    Point::new(center.x + c * d.x - s * d.y, center.y + s * d.x + c * d.y)
}

/// Weight 1 inside `inner`, 0 outside `outer`, linear across the family of boxes obtained
/// by interpolating the corners of the two boxes. For concentric similar boxes this is the
/// scaled L∞ distance ratio.
pub fn blend_weight(inner: &AxisBox, outer: &AxisBox, p: &Point) -> Result<f64, MotionError> {
    if !inner.strictly_inside(outer) {
        return Err(MotionError::NonNestedBoxes);
    }
    // Smallest λ such that p lies in box(λ) = (1−λ)·inner + λ·outer.
    let lambdas = [
        (inner.min[0] - p.x) / (inner.min[0] - outer.min[0]),
        (p.x - inner.max[0]) / (outer.max[0] - inner.max[0]),
        (inner.min[1] - p.y) / (inner.min[1] - outer.min[1]),
        (p.y - inner.max[1]) / (outer.max[1] - inner.max[1]),
    ];
    let lambda = lambdas.iter().fold(0.0f64, |m, &l| m.max(l)).min(1.0);
    Ok(1.0 - lambda)
}

/// Apply `map` to the vertices of `mesh` and return the mesh at the next level, stamped
/// with time `t_next` and ids shifted by `N_v`.
pub fn advance_vertices(mesh: &SpatialMesh, map: &MotionMap, t_next: f64) -> Result<SpatialMesh, MotionError> {
    let rotating = mesh.rotating_vertices();
    if let Some(r) = &map.rotation {
        if r.angle != 0.0 && mesh.annulus.is_none() {
            return Err(MotionError::NoRotatingRegion);
        }
    }
    let weight = |p: &Point| -> Result<f64, MotionError> {
        match &map.translation {
            Some(t) => blend_weight(&t.inner, &t.outer, p),
            None => Ok(0.0),
        }
    };
    let dy = map.translation.map_or(0.0, |t| t.dy);

    let mut positions = Vec::with_capacity(mesh.n_vertices());
    for (i, p) in mesh.positions.iter().enumerate() {
        let mut q = *p;
        if rotating[i] {
            if let Some(r) = &map.rotation {
                q = rotate_point(&r.center, r.angle, p);
            }
        }
        if map.translation.is_some() {
            let w = weight(p)?;
            if w != 0.0 {
                q += Vec2::new(0.0, w * dy);
            }
        }
        positions.push(q);
    }
    let mut center = mesh.rotation_center;
    if map.translation.is_some() {
        center += Vec2::new(0.0, weight(&mesh.rotation_center)? * dy);
    }

    let mut next = mesh.shift_ids(mesh.n_vertices());
    next.positions = positions;
    next.rotation_center = center;
    next.time = t_next;
    check_positive(&next)?;
    Ok(next)
}

/// First non-positive triangle of the mesh, including quad triangles.
pub fn check_positive(mesh: &SpatialMesh) -> Result<(), MotionError> {
    for (i, t) in mesh.triangles.iter().enumerate() {
        let a = mesh.triangle_area(&t.v);
        if a <= 0.0 {
            return Err(MotionError::InvertedElement { element: format!("triangle {i}"), area: a });
        }
    }
    for (i, q) in mesh.quads.iter().enumerate() {
        for t in q.triangles() {
            let a = signed_area(mesh.pos(t[0]), mesh.pos(t[1]), mesh.pos(t[2]));
            if a <= 0.0 {
                return Err(MotionError::InvertedElement { element: format!("{:?} quad {i}", q.layer), area: a });
            }
        }
    }
    Ok(())
}
