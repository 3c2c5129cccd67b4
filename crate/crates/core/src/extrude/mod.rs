//! Space-time slab construction.
//!
//! Every spatial triangle is extruded to a prism and cut into three tets by taking, on each
//! lateral face, the diagonal that starts at the face's smallest id. Neighbouring prisms
//! therefore agree on shared faces. In a swap slab the annulus triangulations at the two
//! levels differ, and the annulus is filled block by block from cached connectivity sets.

pub mod block;
pub mod search;
mod validate;

pub use block::{
    derive_block_connectivity, reference_block, select_configuration, standard_pattern, Agreement, BlockConnectivity,
    BlockConnectivityCache, BlockPattern,
};
pub use validate::{
    facet_geometry, facet_table, twist_correction, validate_slab, ConformityReport, FacetClass, FacetEntry,
    FacetGeometry, SlabStats, SlabViolation,
};

use thiserror::Error;

use crate::geometry::{lift, tet_volume, Point, StPoint};
use crate::mesh::{Layer, Region, SpatialMesh, VertexId};
use crate::sliding::SwapDirection;

#[derive(Debug, Error, PartialEq)]
pub enum ExtrudeError {
    #[error("meshes are not consecutive levels of the same connectivity: {0}")]
    Incompatible(String),
    #[error("sliding offset changed by {0}; at most one swap per slab is possible")]
    OffsetJump(i64),
    #[error("requested swap {requested:?} does not match the meshes ({found:?})")]
    SwapMismatch { requested: Option<SwapDirection>, found: Option<SwapDirection> },
    #[error("block derivation failed: {0}")]
    BlockDerivation(String),
    #[error("block at column {column} has pattern {found:?}, expected {expected:?}")]
    UnexpectedBlockPattern { column: usize, found: BlockPattern, expected: BlockPattern },
    #[error("no block connectivity is needed without a swap")]
    NoSwapConfiguration,
    #[error("block connectivity cache required for a swap slab")]
    MissingCache,
    #[error("tet {tet} has non-positive volume {volume:e}")]
    NonPositiveTet { tet: usize, volume: f64 },
    #[error("facet has zero area")]
    ZeroAreaFacet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceTimeTet {
    pub v: [VertexId; 4],
    pub region: Region,
    /// Index of the column (prism or annulus block) the tet fills.
    pub column: usize,
}

/// Extruded spatial polygon; its bottom ids in counterclockwise order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub polygon: Vec<VertexId>,
    /// Block configuration 1..=4, or 0 for a prism.
    pub configuration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSlab {
    pub t_start: f64,
    pub t_end: f64,
    pub n_v: usize,
    /// Smallest bottom-level id; top-level ids start at `bottom_base + n_v`.
    pub bottom_base: VertexId,
    pub bottom: Vec<Point>,
    pub top: Vec<Point>,
    pub tets: Vec<SpaceTimeTet>,
    pub columns: Vec<Column>,
    pub bottom_triangles: Vec<[VertexId; 3]>,
    pub top_triangles: Vec<[VertexId; 3]>,
}

impl SpaceTimeSlab {
    pub fn point(&self, id: VertexId) -> Option<StPoint> {
        let b = self.bottom_base;
        if id >= b && id < b + self.n_v {
            Some(lift(self.t_start, &self.bottom[id - b]))
        } else if id >= b + self.n_v && id < b + 2 * self.n_v {
            Some(lift(self.t_end, &self.top[id - b - self.n_v]))
        } else {
            None
        }
    }

    pub fn is_bottom(&self, id: VertexId) -> bool {
        id >= self.bottom_base && id < self.bottom_base + self.n_v
    }

    /// Corner points of a tet; panics on ids outside the slab.
    pub fn tet_points(&self, t: &SpaceTimeTet) -> [StPoint; 4] {
        t.v.map(|i| self.point(i).expect("tet vertex outside slab"))
    }

    pub fn tet_volume(&self, t: &SpaceTimeTet) -> f64 {
        let p = self.tet_points(t);
        // Relative to the first corner to limit cancellation.
        tet_volume(&StPoint::zeros(), &(p[1] - p[0]), &(p[2] - p[0]), &(p[3] - p[0]))
    }

    pub fn total_volume(&self) -> f64 {
        self.tets.iter().map(|t| self.tet_volume(t)).sum()
    }
}

/// Three tets of the prism over counterclockwise `bottom`, top ids at `+n_v`. Each lateral
/// face is cut by the diagonal from its smallest id, so only relative id order matters.
pub fn cut_prism(bottom: [VertexId; 3], n_v: usize) -> [[VertexId; 4]; 3] {
    let r = (0..3).min_by_key(|&i| bottom[i]).expect("three ids");
    let (m, p, q) = (bottom[r], bottom[(r + 1) % 3], bottom[(r + 2) % 3]);
    let (m2, p2, q2) = (m + n_v, p + n_v, q + n_v);
    if p < q {
        [[m, p, q, q2], [m, p, q2, p2], [m, p2, q2, m2]]
    } else {
        [[m, p, q, p2], [m, q, q2, p2], [m, p2, q2, m2]]
    }
}

/// Diagonal of one lateral prism face as (bottom vertex, top vertex) local labels, with the
/// bottom triangle labelled 0, 1, 2 and the top 3, 4, 5.
pub type PrismDiagonal = (u8, u8);

/// A prism cut is valid when some vertex touches two diagonals; the two perfect matchings
/// of the six vertices are the invalid ones.
pub fn is_valid_cut(diagonals: &[PrismDiagonal; 3]) -> bool {
    let mut seen = [0u8; 6];
    for &(a, b) in diagonals {
        seen[a as usize] += 1;
        seen[b as usize] += 1;
    }
    seen.iter().any(|&c| c >= 2)
}

/// All eight diagonal assignments of a prism, sides (0,1), (1,2), (2,0).
pub fn all_prism_cuts() -> Vec<[PrismDiagonal; 3]> {
    let sides = [(0u8, 1u8), (1, 2), (2, 0)];
    (0..8u8)
        .map(|mask| {
            let mut d = [(0, 0); 3];
            for (i, &(u, v)) in sides.iter().enumerate() {
                d[i] = if mask >> i & 1 == 0 { (u, v + 3) } else { (v, u + 3) };
            }
            d
        })
        .collect()
}

/// Valid and invalid counts over all eight assignments.
pub fn cut_census() -> (usize, usize) {
    let valid = all_prism_cuts().iter().filter(|d| is_valid_cut(d)).count();
    (valid, 8 - valid)
}

/// Swap direction implied by the sliding offsets of two consecutive meshes.
pub fn swap_between(mesh_n: &SpatialMesh, mesh_n1: &SpatialMesh) -> Result<Option<SwapDirection>, ExtrudeError> {
    let (Some(a), Some(b)) = (&mesh_n.annulus, &mesh_n1.annulus) else {
        return Ok(None);
    };
    match b.sliding_offset - a.sliding_offset {
        0 => Ok(None),
        -1 => Ok(Some(SwapDirection::PrimaryToSecondary)),
        1 => Ok(Some(SwapDirection::SecondaryToPrimary)),
        d => Err(ExtrudeError::OffsetJump(d)),
    }
}

fn check_compatible(a: &SpatialMesh, b: &SpatialMesh) -> Result<(), ExtrudeError> {
    let nv = a.n_vertices();
    let bad = |m: &str| Err(ExtrudeError::Incompatible(m.to_string()));
    if b.n_vertices() != nv {
        return bad("vertex counts differ");
    }
    if b.id_base != a.id_base + nv {
        return bad("next level ids must be shifted by the vertex count");
    }
    if !(b.time > a.time) {
        return bad("time must increase");
    }
    let shifted = a.shift_ids(nv);
    if shifted.triangles != b.triangles {
        return bad("triangles differ");
    }
    let buf = |m: &SpatialMesh| m.quads.iter().copied().filter(|q| q.layer == Layer::Buffer).collect::<Vec<_>>();
    if buf(&shifted) != buf(b) {
        return bad("buffer quads differ");
    }
    match (&shifted.annulus, &b.annulus) {
        (None, None) => {}
        (Some(x), Some(y)) => {
            if x.inner != y.inner || x.middle != y.middle || x.outer != y.outer {
                return bad("annulus rings differ");
            }
        }
        _ => return bad("only one mesh has an annulus"),
    }
    if shifted.body != b.body {
        return bad("body polygons differ");
    }
    Ok(())
}

/// Build the slab between two consecutive meshes. `swap` must match the change of sliding
/// offset between them; `cache` is required when a swap occurs.
pub fn extrude_slab(
    mesh_n: &SpatialMesh,
    mesh_n1: &SpatialMesh,
    swap: Option<SwapDirection>,
    cache: Option<&BlockConnectivityCache>,
) -> Result<SpaceTimeSlab, ExtrudeError> {
    check_compatible(mesh_n, mesh_n1)?;
    let found = swap_between(mesh_n, mesh_n1)?;
    if found != swap {
        return Err(ExtrudeError::SwapMismatch { requested: swap, found });
    }
    let nv = mesh_n.n_vertices();
    let mut slab = SpaceTimeSlab {
        t_start: mesh_n.time,
        t_end: mesh_n1.time,
        n_v: nv,
        bottom_base: mesh_n.id_base,
        bottom: mesh_n.positions.clone(),
        top: mesh_n1.positions.clone(),
        tets: Vec::new(),
        columns: Vec::new(),
        bottom_triangles: mesh_n.spatial_triangles().into_iter().map(|(t, _)| t).collect(),
        top_triangles: mesh_n1.spatial_triangles().into_iter().map(|(t, _)| t).collect(),
    };

    let push_prism = |slab: &mut SpaceTimeSlab, tri: [VertexId; 3], region: Region| {
        let column = slab.columns.len();
        slab.columns.push(Column { polygon: tri.to_vec(), configuration: 0 });
        for v in cut_prism(tri, nv) {
            slab.tets.push(SpaceTimeTet { v, region, column });
        }
    };

    for t in &mesh_n.triangles {
        push_prism(&mut slab, t.v, t.region);
    }
    match swap {
        None => {
            for q in &mesh_n.quads {
                for t in q.triangles() {
                    push_prism(&mut slab, t, q.layer.region());
                }
            }
        }
        Some(dir) => {
            let cache = cache.ok_or(ExtrudeError::MissingCache)?;
            let a = mesh_n.annulus.as_ref().expect("swap implies an annulus");
            let s = a.sliding_offset;
            let j = match dir {
                SwapDirection::PrimaryToSecondary => s,
                SwapDirection::SecondaryToPrimary => s + 1,
            };
            let parity = j.rem_euclid(2) as usize;
            let configuration = select_configuration(Some(dir), parity)?;
            let conn = cache.get(configuration).ok_or(ExtrudeError::MissingCache)?;
            let n = a.n_quads();
            for k in (0..n).step_by(2) {
                let ring = |r: &[VertexId], off: i64, m: usize| r[((k + m) as i64 + off).rem_euclid(n as i64) as usize];
                let mut local = [0; 9];
                for m in 0..3 {
                    local[m] = ring(&a.inner.ids, 0, m);
                    local[3 + m] = ring(&a.middle, 0, m);
                    local[6 + m] = ring(&a.outer.ids, j, m);
                }
                let found = BlockPattern {
                    direction: Some(dir),
                    fixed_from_first: block::FIXED_FACES.map(|(u, v)| local[u] < local[v]),
                };
                if found != conn.pattern {
                    return Err(ExtrudeError::UnexpectedBlockPattern { column: k, found, expected: conn.pattern });
                }
                let column = slab.columns.len();
                slab.columns.push(Column {
                    polygon: vec![local[0], local[3], local[6], local[7], local[8], local[5], local[2], local[1]],
                    configuration,
                });
                let global = |l: usize| if l < block::TOP { local[l] } else { local[l - block::TOP] + nv };
                for (t, region) in &conn.tets {
                    slab.tets.push(SpaceTimeTet { v: t.map(global), region: *region, column });
                }
            }
        }
    }

    for (i, t) in slab.tets.iter().enumerate() {
        let v = slab.tet_volume(t);
        if !(v > 0.0) {
            return Err(ExtrudeError::NonPositiveTet { tet: i, volume: v });
        }
    }
    Ok(slab)
}
