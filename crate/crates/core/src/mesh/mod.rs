//! Spatial mesh model: globally numbered vertices, triangles, annulus quads and ring orderings.
//!
//! Vertex ids of one time level are contiguous: a mesh stores `id_base` and a position per
//! id in `[id_base, id_base + N_v)`. Advancing a mesh by one level shifts every id by `N_v`.

mod generate;

pub use generate::{build_annulus_mesh, build_annulus_with_base, generate_mesh, BodyShape, MeshParams};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::geometry::{cross2, signed_area, Point};

pub type VertexId = usize;

/// Element region tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Rotating,
    Buffer,
    Sliding,
    Static,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Rotating => "rotating",
            Region::Buffer => "buffer",
            Region::Sliding => "sliding",
            Region::Static => "static",
        }
    }

    pub fn parse(s: &str) -> Option<Region> {
        match s {
            "rotating" => Some(Region::Rotating),
            "buffer" => Some(Region::Buffer),
            "sliding" => Some(Region::Sliding),
            "static" => Some(Region::Static),
            _ => None,
        }
    }

    /// Integer code used in VTK scalars.
    pub fn code(self) -> u8 {
        match self {
            Region::Rotating => 0,
            Region::Buffer => 1,
            Region::Sliding => 2,
            Region::Static => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Buffer,
    Sliding,
}

impl Layer {
    pub fn region(self) -> Region {
        match self {
            Layer::Buffer => Region::Buffer,
            Layer::Sliding => Region::Sliding,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub v: [VertexId; 3],
    pub region: Region,
}

/// Annulus quad. `n1, n2` lie on the inner circle ordered clockwise, `n3, n4` on the outer
/// circle ordered anticlockwise, so `n1 n2 n3 n4` is a counterclockwise polygon.
/// Each quad is triangulated along `n2–n4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnulusQuad {
    pub n: [VertexId; 4],
    pub layer: Layer,
}

impl AnnulusQuad {
    /// The two counterclockwise triangles of the `n2–n4` cut.
    pub fn triangles(&self) -> [[VertexId; 3]; 2] {
        let [n1, n2, n3, n4] = self.n;
        [[n1, n2, n4], [n2, n3, n4]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingKind {
    InnerCircle,
    OuterCircle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingOrdering {
    pub ring: RingKind,
    /// Ring vertices in order of increasing angle.
    pub ids: Vec<VertexId>,
}

/// Annulus topology. `inner` is the rotating circle, `middle` the buffer/sliding interface,
/// `outer` the circle shared with the static mesh. All three have the same length and
/// entry `k` sits at angle `2πk/N` in the reference configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annulus {
    pub inner: RingOrdering,
    pub middle: Vec<VertexId>,
    pub outer: RingOrdering,
    /// Index `s` of the current sliding triangulation: sliding quad `k` spans middle
    /// vertices `k, k+1` and outer vertices `k+s, k+s+1`.
    pub sliding_offset: i64,
}

impl Annulus {
    pub fn n_quads(&self) -> usize {
        self.middle.len()
    }

    pub fn buffer_quads(&self) -> Vec<AnnulusQuad> {
        let n = self.n_quads();
        (0..n)
            .map(|k| {
                let k1 = (k + 1) % n;
                AnnulusQuad {
                    n: [self.inner.ids[k1], self.inner.ids[k], self.middle[k], self.middle[k1]],
                    layer: Layer::Buffer,
                }
            })
            .collect()
    }

    /// Sliding quads of offset `s`.
    pub fn sliding_quads(&self, s: i64) -> Vec<AnnulusQuad> {
        let n = self.n_quads();
        (0..n)
            .map(|k| {
                let k1 = (k + 1) % n;
                let o0 = (k as i64 + s).rem_euclid(n as i64) as usize;
                let o1 = (o0 + 1) % n;
                AnnulusQuad {
                    n: [self.middle[k1], self.middle[k], self.outer.ids[o0], self.outer.ids[o1]],
                    layer: Layer::Sliding,
                }
            })
            .collect()
    }

    pub fn shifted(&self, by: VertexId) -> Annulus {
        Annulus {
            inner: RingOrdering { ring: self.inner.ring, ids: self.inner.ids.iter().map(|i| i + by).collect() },
            middle: self.middle.iter().map(|i| i + by).collect(),
            outer: RingOrdering { ring: self.outer.ring, ids: self.outer.ids.iter().map(|i| i + by).collect() },
            sliding_offset: self.sliding_offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMesh {
    pub time: f64,
    pub id_base: VertexId,
    /// Position of vertex `id_base + i`.
    pub positions: Vec<Point>,
    pub triangles: Vec<Triangle>,
    pub quads: Vec<AnnulusQuad>,
    pub rotation_center: Point,
    pub annulus: Option<Annulus>,
    /// Body boundary polygon, counterclockwise.
    pub body: Option<Vec<VertexId>>,
}

impl SpatialMesh {
    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn contains(&self, id: VertexId) -> bool {
        id >= self.id_base && id < self.id_base + self.positions.len()
    }

    /// Position of a vertex. Panics if the id is not in this level.
    pub fn pos(&self, id: VertexId) -> &Point {
        &self.positions[id - self.id_base]
    }

    pub fn ids(&self) -> std::ops::Range<VertexId> {
        self.id_base..self.id_base + self.positions.len()
    }

    /// All spatial triangles with their region, quads split along `n2–n4`.
    /// Explicit triangles come first, then quads in storage order.
    pub fn spatial_triangles(&self) -> Vec<([VertexId; 3], Region)> {
        let mut out: Vec<([VertexId; 3], Region)> = self.triangles.iter().map(|t| (t.v, t.region)).collect();
        for q in &self.quads {
            for t in q.triangles() {
                out.push((t, q.layer.region()));
            }
        }
        out
    }

    pub fn triangle_area(&self, t: &[VertexId; 3]) -> f64 {
        signed_area(self.pos(t[0]), self.pos(t[1]), self.pos(t[2]))
    }

    pub fn total_area(&self) -> f64 {
        self.spatial_triangles().iter().map(|(t, _)| self.triangle_area(t)).sum()
    }

    pub fn bounding_diagonal(&self) -> f64 {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.positions {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        if self.positions.is_empty() {
            0.0
        } else {
            (hi - lo).norm()
        }
    }

    /// Edges with exactly one adjacent spatial triangle, oriented as in that triangle.
    pub fn boundary_edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut count: HashMap<(VertexId, VertexId), ((VertexId, VertexId), usize)> = HashMap::new();
        for (t, _) in self.spatial_triangles() {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                let key = (a.min(b), a.max(b));
                count.entry(key).or_insert(((a, b), 0)).1 += 1;
            }
        }
        let mut edges: Vec<(VertexId, VertexId)> =
            count.into_values().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect();
        edges.sort_unstable();
        edges
    }

    /// Copy with every id shifted by `by`.
    pub fn shift_ids(&self, by: VertexId) -> SpatialMesh {
        SpatialMesh {
            time: self.time,
            id_base: self.id_base + by,
            positions: self.positions.clone(),
            triangles: self
                .triangles
                .iter()
                .map(|t| Triangle { v: t.v.map(|i| i + by), region: t.region })
                .collect(),
            quads: self.quads.iter().map(|q| AnnulusQuad { n: q.n.map(|i| i + by), layer: q.layer }).collect(),
            rotation_center: self.rotation_center,
            annulus: self.annulus.as_ref().map(|a| a.shifted(by)),
            body: self.body.as_ref().map(|b| b.iter().map(|i| i + by).collect()),
        }
    }

    /// Copy renumbered so that ids start at zero.
    pub fn rebased(&self) -> SpatialMesh {
        let mut m = self.shift_ids(0);
        let base = self.id_base;
        m.id_base = 0;
        for t in &mut m.triangles {
            t.v = t.v.map(|i| i - base);
        }
        for q in &mut m.quads {
            q.n = q.n.map(|i| i - base);
        }
        if let Some(a) = &mut m.annulus {
            for i in a.inner.ids.iter_mut().chain(a.middle.iter_mut()).chain(a.outer.ids.iter_mut()) {
                *i -= base;
            }
        }
        if let Some(b) = &mut m.body {
            for i in b.iter_mut() {
                *i -= base;
            }
        }
        m
    }

    /// Replace the sliding quads by those of offset `s`.
    pub fn set_sliding_offset(&mut self, s: i64) {
        let Some(annulus) = &mut self.annulus else { return };
        annulus.sliding_offset = s;
        let sliding = annulus.sliding_quads(s);
        let buffer: Vec<AnnulusQuad> = self.quads.iter().copied().filter(|q| q.layer == Layer::Buffer).collect();
        self.quads = buffer;
        self.quads.extend(sliding);
    }

    /// Vertices that move rigidly with the body: rotating triangles, buffer quads and the
    /// inner side of the sliding layer.
    pub fn rotating_vertices(&self) -> Vec<bool> {
        let mut flag = vec![false; self.n_vertices()];
        for t in &self.triangles {
            if t.region == Region::Rotating {
                for &v in &t.v {
                    flag[v - self.id_base] = true;
                }
            }
        }
        if let Some(a) = &self.annulus {
            for &v in a.inner.ids.iter().chain(&a.middle) {
                flag[v - self.id_base] = true;
            }
        }
        flag
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("annulus quad count must be even and at least 6, got {0}")]
    BadQuadCount(usize),
    #[error("annulus radii must increase strictly, got {0} < {1} < {2} violated")]
    BadRadii(f64, f64, f64),
    #[error("chainsaw ring size must be even, got {0}")]
    OddRing(usize),
    #[error("id pool has {pool} entries but ring has {ring}")]
    PoolSize { pool: usize, ring: usize },
    #[error("invalid mesh parameters: {0}")]
    BadParams(String),
}

/// Interleave the lower and upper halves of a sorted pool: low, high, low, high, ...
pub fn assign_chainsaw_ids(ring_size: usize, id_pool: &[VertexId]) -> Result<Vec<VertexId>, MeshError> {
    if ring_size % 2 != 0 {
        return Err(MeshError::OddRing(ring_size));
    }
    if id_pool.len() != ring_size {
        return Err(MeshError::PoolSize { pool: id_pool.len(), ring: ring_size });
    }
    let mut sorted = id_pool.to_vec();
    sorted.sort_unstable();
    let half = ring_size / 2;
    let mut out = Vec::with_capacity(ring_size);
    for i in 0..half {
        out.push(sorted[i]);
        out.push(sorted[half + i]);
    }
    Ok(out)
}

/// Start index of the first cyclic window of three monotone ids, if any.
pub fn chainsaw_violation(seq: &[VertexId]) -> Option<usize> {
    let n = seq.len();
    if n < 3 {
        return None;
    }
    (0..n).find(|&i| {
        let (a, b, c) = (seq[i], seq[(i + 1) % n], seq[(i + 2) % n]);
        (a < b && b < c) || (a > b && b > c)
    })
}

pub fn is_chainsaw(seq: &[VertexId]) -> bool {
    chainsaw_violation(seq).is_none()
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshViolation {
    NonPositiveArea { element: String, area: f64 },
    DanglingVertex { element: String, id: VertexId },
    DuplicateCoordinates { a: VertexId, b: VertexId },
    OddBufferCount(usize),
    LayerCountMismatch { buffer: usize, sliding: usize },
    QuadRadiusOrder { quad: usize },
    QuadOrientation { quad: usize },
    ChainsawViolation { ring: RingKind, window: usize },
    RingSizeMismatch,
    SlidingQuadsInconsistent,
    IdBaseMisaligned { id_base: VertexId, n_v: usize },
}

impl fmt::Display for MeshViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshViolation::NonPositiveArea { element, area } => write!(f, "{element} has non-positive area {area:e}"),
            MeshViolation::DanglingVertex { element, id } => write!(f, "{element} references missing vertex {id}"),
            MeshViolation::DuplicateCoordinates { a, b } => write!(f, "vertices {a} and {b} coincide"),
            MeshViolation::OddBufferCount(n) => write!(f, "odd number of buffer quads ({n})"),
            MeshViolation::LayerCountMismatch { buffer, sliding } => {
                write!(f, "{buffer} buffer quads but {sliding} sliding quads")
            }
            MeshViolation::QuadRadiusOrder { quad } => write!(f, "quad {quad}: inner nodes not inside outer nodes"),
            MeshViolation::QuadOrientation { quad } => write!(f, "quad {quad}: node ordering convention broken"),
            MeshViolation::ChainsawViolation { ring, window } => {
                write!(f, "{ring:?} ring: monotone id window at position {window}")
            }
            MeshViolation::RingSizeMismatch => write!(f, "annulus rings differ in size"),
            MeshViolation::SlidingQuadsInconsistent => write!(f, "sliding quads do not match the sliding offset"),
            MeshViolation::IdBaseMisaligned { id_base, n_v } => {
                write!(f, "id base {id_base} is not a multiple of the vertex count {n_v}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<MeshViolation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_spatial_mesh(mesh: &SpatialMesh) -> ValidationReport {
    let mut v = Vec::new();
    let nv = mesh.n_vertices();
    if nv > 0 && mesh.id_base % nv != 0 {
        v.push(MeshViolation::IdBaseMisaligned { id_base: mesh.id_base, n_v: nv });
    }

    let mut refs_ok = true;
    let mut check_ref = |name: String, id: VertexId, v: &mut Vec<MeshViolation>| {
        if !mesh.contains(id) {
            refs_ok = false;
            v.push(MeshViolation::DanglingVertex { element: name, id });
        }
    };
    for (i, t) in mesh.triangles.iter().enumerate() {
        for &id in &t.v {
            check_ref(format!("triangle {i}"), id, &mut v);
        }
    }
    for (i, q) in mesh.quads.iter().enumerate() {
        for &id in &q.n {
            check_ref(format!("quad {i}"), id, &mut v);
        }
    }
    if let Some(a) = &mesh.annulus {
        for &id in a.inner.ids.iter().chain(&a.middle).chain(&a.outer.ids) {
            check_ref("annulus ring".into(), id, &mut v);
        }
    }
    if let Some(b) = &mesh.body {
        for &id in b {
            check_ref("body polygon".into(), id, &mut v);
        }
    }
    if !refs_ok {
        return ValidationReport { violations: v };
    }

    for (i, t) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_area(&t.v);
        if area <= 0.0 {
            v.push(MeshViolation::NonPositiveArea { element: format!("triangle {i}"), area });
        }
    }
    let c = mesh.rotation_center;
    for (i, q) in mesh.quads.iter().enumerate() {
        for (j, t) in q.triangles().iter().enumerate() {
            let area = mesh.triangle_area(t);
            if area <= 0.0 {
                v.push(MeshViolation::NonPositiveArea { element: format!("quad {i} triangle {j}"), area });
            }
        }
        let p = q.n.map(|id| *mesh.pos(id));
        let r = p.map(|x| (x - c).norm());
        if !(r[0].max(r[1]) < r[2].min(r[3])) {
            v.push(MeshViolation::QuadRadiusOrder { quad: i });
        }
        let inner_cw = cross2(&(p[0] - c), &(p[1] - c)) < 0.0;
        let outer_ccw = cross2(&(p[2] - c), &(p[3] - c)) > 0.0;
        if !(inner_cw && outer_ccw) {
            v.push(MeshViolation::QuadOrientation { quad: i });
        }
    }

    let n_buffer = mesh.quads.iter().filter(|q| q.layer == Layer::Buffer).count();
    let n_sliding = mesh.quads.len() - n_buffer;
    if n_buffer % 2 != 0 {
        v.push(MeshViolation::OddBufferCount(n_buffer));
    }
    if n_buffer != n_sliding {
        v.push(MeshViolation::LayerCountMismatch { buffer: n_buffer, sliding: n_sliding });
    }

    if let Some(a) = &mesh.annulus {
        let n = a.n_quads();
        if a.inner.ids.len() != n || a.outer.ids.len() != n {
            v.push(MeshViolation::RingSizeMismatch);
        } else {
            for ring in [&a.inner, &a.outer] {
                if let Some(w) = chainsaw_violation(&ring.ids) {
                    v.push(MeshViolation::ChainsawViolation { ring: ring.ring, window: w });
                }
            }
            let expected = a.sliding_quads(a.sliding_offset);
            let actual: Vec<AnnulusQuad> =
                mesh.quads.iter().copied().filter(|q| q.layer == Layer::Sliding).collect();
            if expected != actual {
                v.push(MeshViolation::SlidingQuadsInconsistent);
            }
        }
    }

    duplicate_points(mesh, &mut v);
    ValidationReport { violations: v }
}

/// Grid-hash search for coincident points.
fn duplicate_points(mesh: &SpatialMesh, out: &mut Vec<MeshViolation>) {
    let tol = 1e-12 * mesh.bounding_diagonal();
    let cell = if tol > 0.0 { tol } else { f64::MIN_POSITIVE };
    let key = |p: &Point| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in mesh.positions.iter().enumerate() {
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = grid.get(&(kx + dx, ky + dy)) {
                    for &j in list {
                        if (mesh.positions[j] - p).norm() <= tol {
                            out.push(MeshViolation::DuplicateCoordinates {
                                a: mesh.id_base + j,
                                b: mesh.id_base + i,
                            });
                        }
                    }
                }
            }
        }
        grid.entry((kx, ky)).or_default().push(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chainsaw_interleaves_pool() {
        let seq = assign_chainsaw_ids(6, &[1, 2, 3, 5, 6, 7]).unwrap();
        assert_eq!(seq, vec![1, 5, 2, 6, 3, 7]);
        assert!(is_chainsaw(&seq));
    }

    #[test]
    fn chainsaw_hundred() {
        let pool: Vec<VertexId> = (0..100).collect();
        let seq = assign_chainsaw_ids(100, &pool).unwrap();
        assert!(is_chainsaw(&seq));
    }

    #[test]
    fn monotone_sequence_fails_predicate() {
        assert_eq!(chainsaw_violation(&[1, 2, 3, 4, 5, 6]), Some(0));
    }

    #[test]
    fn odd_ring_rejected() {
        assert_eq!(assign_chainsaw_ids(5, &[0, 1, 2, 3, 4]), Err(MeshError::OddRing(5)));
        assert!(matches!(assign_chainsaw_ids(4, &[0, 1, 2]), Err(MeshError::PoolSize { .. })));
    }

    #[test]
    fn unordered_pool_is_sorted_first() {
        let seq = assign_chainsaw_ids(4, &[7, 1, 5, 3]).unwrap();
        assert_eq!(seq, vec![1, 5, 3, 7]);
    }

    fn square_mesh() -> SpatialMesh {
        SpatialMesh {
            time: 0.0,
            id_base: 0,
            positions: vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)],
            triangles: vec![
                Triangle { v: [0, 1, 2], region: Region::Static },
                Triangle { v: [0, 2, 3], region: Region::Static },
            ],
            quads: vec![],
            rotation_center: Point::origin(),
            annulus: None,
            body: None,
        }
    }

    #[test]
    fn inverted_triangle_reported_once() {
        let mut m = square_mesh();
        assert!(validate_spatial_mesh(&m).is_empty());
        m.triangles[1].v = [0, 3, 2];
        let r = validate_spatial_mesh(&m);
        assert_eq!(r.violations.len(), 1);
        assert!(matches!(r.violations[0], MeshViolation::NonPositiveArea { .. }));
    }

    #[test]
    fn dangling_and_duplicate_detected() {
        let mut m = square_mesh();
        m.triangles[0].v = [0, 1, 9];
        assert!(matches!(validate_spatial_mesh(&m).violations[0], MeshViolation::DanglingVertex { id: 9, .. }));
        let mut m = square_mesh();
        m.positions.push(Point::new(1.0, 1.0));
        let r = validate_spatial_mesh(&m);
        assert!(r.violations.contains(&MeshViolation::DuplicateCoordinates { a: 2, b: 4 }));
    }

    #[test]
    fn boundary_edges_of_square() {
        let m = square_mesh();
        assert_eq!(m.boundary_edges(), vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
    }

    #[test]
    fn shift_and_rebase_are_inverse() {
        let m = build_annulus_mesh(Point::origin(), 1.0, 1.5, 2.0, 6).unwrap();
        let shifted = m.shift_ids(m.n_vertices());
        assert_eq!(shifted.id_base, 18);
        assert_eq!(shifted.rebased(), m);
    }
}
