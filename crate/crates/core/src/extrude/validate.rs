//! Facet table, facet geometry and conformity checks for a slab.
//!
//! Volume identity. Tets have flat faces, while the space-time region swept by a polygon
//! whose vertices move linearly has ruled (bilinear) lateral faces. For a lateral face over
//! the counterclockwise edge `u→v`, let `V = vol(u, v, v', u')`. Cutting it along `u–v'`
//! removes `V/2` relative to the ruled face, cutting along `v–u'` adds `V/2`. Hence
//! `Σ vol(tets) = ∫ area dt + Σ_edges ∓V/2`, which is exact; the correction vanishes for
//! edges that do not move and cancels across interior edges.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use super::{ExtrudeError, SpaceTimeSlab, SpaceTimeTet};
use crate::geometry::{simpson_polygon_volume, tet_volume, Point, StPoint, Vec2};
use crate::mesh::VertexId;

/// Relative tolerance of the volume identities.
pub const VOLUME_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetGeometry {
    pub n_t: f64,
    pub n: Vec2,
    pub area: f64,
    pub centroid: StPoint,
}

/// Geometry of the face opposite corner `face_index`, normal pointing away from the tet.
pub fn facet_geometry(points: &[StPoint; 4], face_index: usize) -> Result<FacetGeometry, ExtrudeError> {
    let idx: Vec<usize> = (0..4).filter(|&i| i != face_index).collect();
    let (a, b, c) = (points[idx[0]], points[idx[1]], points[idx[2]]);
    let mut normal = (b - a).cross(&(c - a));
    let norm = normal.norm();
    if !(norm > 0.0) {
        return Err(ExtrudeError::ZeroAreaFacet);
    }
    if normal.dot(&(points[face_index] - a)) > 0.0 {
        normal = -normal;
    }
    normal /= norm;
    Ok(FacetGeometry {
        n_t: normal.x,
        n: Vec2::new(normal.y, normal.z),
        area: 0.5 * norm,
        centroid: (a + b + c) / 3.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetClass {
    Bottom,
    Top,
    LateralBoundary,
    Interior,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FacetEntry {
    /// (tet index, local face index) of each owner.
    pub owners: Vec<(usize, u8)>,
    pub class: FacetClass,
}

fn face_ids(t: &SpaceTimeTet, face: usize) -> [VertexId; 3] {
    let mut f = [0; 3];
    let mut j = 0;
    for i in 0..4 {
        if i != face {
            f[j] = t.v[i];
            j += 1;
        }
    }
    f.sort_unstable();
    f
}

/// Facets keyed by sorted id triple.
pub fn facet_table(slab: &SpaceTimeSlab) -> BTreeMap<[VertexId; 3], FacetEntry> {
    let mut table: BTreeMap<[VertexId; 3], FacetEntry> = BTreeMap::new();
    for (ti, t) in slab.tets.iter().enumerate() {
        for face in 0..4 {
            let key = face_ids(t, face);
            table
                .entry(key)
                .or_insert_with(|| FacetEntry { owners: Vec::new(), class: FacetClass::Interior })
                .owners
                .push((ti, face as u8));
        }
    }
    for (key, e) in table.iter_mut() {
        let bottoms = key.iter().filter(|&&i| slab.is_bottom(i)).count();
        e.class = match (bottoms, e.owners.len()) {
            (3, _) => FacetClass::Bottom,
            (0, _) => FacetClass::Top,
            (_, 1) => FacetClass::LateralBoundary,
            _ => FacetClass::Interior,
        };
    }
    table
}

/// `∓V/2` term of the lateral face over the counterclockwise bottom edge `u→v`.
pub fn twist_correction(slab: &SpaceTimeSlab, u: VertexId, v: VertexId, diagonal_from_u: bool) -> f64 {
    let p = |id| slab.point(id).expect("edge in slab");
    let (pu, pv, pv2, pu2) = (p(u), p(v), p(v + slab.n_v), p(u + slab.n_v));
    let vf = tet_volume(&StPoint::zeros(), &(pv - pu), &(pv2 - pu), &(pu2 - pu));
    if diagonal_from_u {
        -0.5 * vf
    } else {
        0.5 * vf
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlabViolation {
    SteinerVertex { tet: usize, id: VertexId },
    NonPositiveVolume { tet: usize, volume: f64 },
    FacetMultiplicity { facet: [VertexId; 3], count: usize },
    OrientationMismatch { facet: [VertexId; 3] },
    UnpairedFacet { facet: [VertexId; 3] },
    BottomMismatch { missing: usize, extra: usize },
    TopMismatch { missing: usize, extra: usize },
    MissingDiagonal { column: usize, edge: (VertexId, VertexId) },
    ColumnVolume { column: usize, relative_error: f64 },
    SlabVolume { relative_error: f64 },
}

impl fmt::Display for SlabViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlabViolation::SteinerVertex { tet, id } => write!(f, "tet {tet} uses vertex {id} outside both levels"),
            SlabViolation::NonPositiveVolume { tet, volume } => write!(f, "tet {tet} has volume {volume:e}"),
            SlabViolation::FacetMultiplicity { facet, count } => write!(f, "facet {facet:?} shared by {count} tets"),
            SlabViolation::OrientationMismatch { facet } => write!(f, "tets on facet {facet:?} overlap"),
            SlabViolation::UnpairedFacet { facet } => write!(f, "facet {facet:?} has one owner but is not on the boundary"),
            SlabViolation::BottomMismatch { missing, extra } => {
                write!(f, "bottom facets: {missing} missing, {extra} extra")
            }
            SlabViolation::TopMismatch { missing, extra } => write!(f, "top facets: {missing} missing, {extra} extra"),
            SlabViolation::MissingDiagonal { column, edge } => {
                write!(f, "column {column}: lateral face over {edge:?} is not cut")
            }
            SlabViolation::ColumnVolume { column, relative_error } => {
                write!(f, "column {column}: volume identity off by {relative_error:e}")
            }
            SlabViolation::SlabVolume { relative_error } => write!(f, "slab volume identity off by {relative_error:e}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlabStats {
    pub tets: usize,
    pub interior_facets: usize,
    pub boundary_facets: usize,
    pub total_volume: f64,
    /// Simpson integral of the spatial mesh area.
    pub simpson_volume: f64,
    /// Twist correction summed over the spatial boundary edges.
    pub boundary_twist: f64,
    pub max_column_error: f64,
}

impl SlabStats {
    /// Relative gap between the tet volume and the plain area integral.
    pub fn uncorrected_error(&self) -> f64 {
        (self.total_volume - self.simpson_volume).abs() / self.simpson_volume.abs()
    }

    pub fn corrected_error(&self) -> f64 {
        (self.total_volume - self.simpson_volume - self.boundary_twist).abs() / self.simpson_volume.abs()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConformityReport {
    pub violations: Vec<SlabViolation>,
    pub stats: SlabStats,
}

impl ConformityReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sorted_keys(tris: &[[VertexId; 3]]) -> BTreeSet<[VertexId; 3]> {
    tris.iter()
        .map(|t| {
            let mut k = *t;
            k.sort_unstable();
            k
        })
        .collect()
}

fn local_polygon(pts: &[Point], origin: &Point) -> Vec<Point> {
    pts.iter().map(|p| Point::from(p - origin)).collect()
}

pub fn validate_slab(slab: &SpaceTimeSlab) -> ConformityReport {
    let mut v = Vec::new();
    let mut stats = SlabStats { tets: slab.tets.len(), ..Default::default() };
    let mut geometric_ok = vec![true; slab.tets.len()];

    for (ti, t) in slab.tets.iter().enumerate() {
        for &id in &t.v {
            if slab.point(id).is_none() {
                v.push(SlabViolation::SteinerVertex { tet: ti, id });
                geometric_ok[ti] = false;
            }
        }
        if geometric_ok[ti] {
            let vol = slab.tet_volume(t);
            stats.total_volume += vol;
            if !(vol > 0.0) {
                v.push(SlabViolation::NonPositiveVolume { tet: ti, volume: vol });
            }
        }
    }

    let table = facet_table(slab);
    let nv = slab.n_v;
    let boundary_edges: HashSet<(VertexId, VertexId)> = {
        let mut count: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
        for t in &slab.bottom_triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.into_iter().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect()
    };
    let base_id = |id: VertexId| if slab.is_bottom(id) { id } else { id - nv };

    let mut bottom_found = Vec::new();
    let mut top_found = Vec::new();
    for (key, e) in &table {
        let n = e.owners.len();
        if n > 2 {
            v.push(SlabViolation::FacetMultiplicity { facet: *key, count: n });
            continue;
        }
        match e.class {
            FacetClass::Bottom => {
                bottom_found.push(*key);
                if n != 1 {
                    v.push(SlabViolation::FacetMultiplicity { facet: *key, count: n });
                }
            }
            FacetClass::Top => {
                top_found.push(*key);
                if n != 1 {
                    v.push(SlabViolation::FacetMultiplicity { facet: *key, count: n });
                }
            }
            FacetClass::LateralBoundary => {
                stats.boundary_facets += 1;
                if key.iter().any(|&i| slab.point(i).is_none()) {
                    continue;
                }
                let mut b: Vec<VertexId> = key.iter().map(|&i| base_id(i)).collect();
                b.sort_unstable();
                b.dedup();
                let on_boundary = b.len() == 2 && boundary_edges.contains(&(b[0], b[1]));
                if !on_boundary {
                    v.push(SlabViolation::UnpairedFacet { facet: *key });
                }
            }
            FacetClass::Interior => {
                stats.interior_facets += 1;
                let (t0, f0) = e.owners[0];
                let (t1, f1) = e.owners[1];
                if !(geometric_ok[t0] && geometric_ok[t1]) {
                    continue;
                }
                let p = |id| slab.point(id).expect("checked");
                let [a, b, c] = key.map(p);
                let side = |ti: usize, fi: u8| {
                    let opp = p(slab.tets[ti].v[fi as usize]);
                    tet_volume(&a, &b, &c, &opp)
                };
                if side(t0, f0) * side(t1, f1) >= 0.0 {
                    v.push(SlabViolation::OrientationMismatch { facet: *key });
                }
            }
        }
    }
    stats.boundary_facets += bottom_found.len() + top_found.len();

    for (found, expected, is_bottom) in [
        (&bottom_found, &slab.bottom_triangles, true),
        (&top_found, &slab.top_triangles, false),
    ] {
        let exp = sorted_keys(expected);
        let got: BTreeSet<[VertexId; 3]> = found.iter().copied().collect();
        let missing = exp.difference(&got).count();
        let extra = got.difference(&exp).count();
        if missing + extra > 0 {
            v.push(if is_bottom {
                SlabViolation::BottomMismatch { missing, extra }
            } else {
                SlabViolation::TopMismatch { missing, extra }
            });
        }
    }

    // Column identities.
    let dt = slab.t_end - slab.t_start;
    let mut by_column: Vec<Vec<usize>> = vec![Vec::new(); slab.columns.len()];
    for (ti, t) in slab.tets.iter().enumerate() {
        if t.column < by_column.len() && geometric_ok[ti] {
            by_column[t.column].push(ti);
        }
    }
    for (ci, col) in slab.columns.iter().enumerate() {
        if col.polygon.iter().any(|&i| !slab.is_bottom(i)) {
            continue;
        }
        let edges: HashSet<(VertexId, VertexId)> = by_column[ci]
            .iter()
            .flat_map(|&ti| {
                let t = slab.tets[ti].v;
                (0..4).flat_map(move |i| (0..4).filter(move |&j| j != i).map(move |j| (t[i], t[j])))
            })
            .collect();
        let bottom: Vec<Point> = col.polygon.iter().map(|&i| slab.bottom[i - slab.bottom_base]).collect();
        let top: Vec<Point> = col.polygon.iter().map(|&i| slab.top[i - slab.bottom_base]).collect();
        let origin = bottom[0];
        let mut expected = simpson_polygon_volume(&local_polygon(&bottom, &origin), &local_polygon(&top, &origin), dt);
        let n = col.polygon.len();
        for i in 0..n {
            let (a, b) = (col.polygon[i], col.polygon[(i + 1) % n]);
            let from_a = edges.contains(&(a, b + nv));
            let from_b = edges.contains(&(b, a + nv));
            if from_a == from_b {
                v.push(SlabViolation::MissingDiagonal { column: ci, edge: (a, b) });
                continue;
            }
            let corr = twist_correction(slab, a, b, from_a);
            expected += corr;
            if boundary_edges.contains(&(a.min(b), a.max(b))) {
                stats.boundary_twist += corr;
            }
        }
        let sum: f64 = by_column[ci].iter().map(|&ti| slab.tet_volume(&slab.tets[ti])).sum();
        let err = (sum - expected).abs() / expected.abs();
        stats.max_column_error = stats.max_column_error.max(err);
        if !(err <= VOLUME_TOLERANCE) {
            v.push(SlabViolation::ColumnVolume { column: ci, relative_error: err });
        }
    }

    for t in &slab.bottom_triangles {
        if t.iter().any(|&i| !slab.is_bottom(i)) {
            continue;
        }
        let b: Vec<Point> = t.iter().map(|&i| slab.bottom[i - slab.bottom_base]).collect();
        let tp: Vec<Point> = t.iter().map(|&i| slab.top[i - slab.bottom_base]).collect();
        stats.simpson_volume += simpson_polygon_volume(&local_polygon(&b, &b[0]), &local_polygon(&tp, &b[0]), dt);
    }
    if !slab.tets.is_empty() {
        let err = stats.corrected_error();
        if !(err <= VOLUME_TOLERANCE) {
            v.push(SlabViolation::SlabVolume { relative_error: err });
        }
    }

    ConformityReport { violations: v, stats }
}
