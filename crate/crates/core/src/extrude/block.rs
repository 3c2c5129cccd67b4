//! Tetrahedralization of 2×2 annulus blocks in swap slabs.
//!
//! A block covers two angular columns of the buffer and sliding layers. Its 18 local
//! vertices are, at the bottom level, `0..3` on the inner ring, `3..6` on the middle ring and
//! `6..9` on the outer ring (increasing angle), with the top level at `+9`. The block holds
//! four hexahedra: buffer columns 0 and 1 and sliding columns 0 and 1.
//!
//! The boundary triangulation of a block is fixed by the spatial meshes and by the
//! smallest-id rule on its eight outer lateral faces. The four lateral faces inside the block
//! are free: each combination is tried and every hexahedron is tetrahedralized by
//! exhaustive search. The combination whose worst tet is largest wins, subject to the rule
//! that the buffer cut between the middle and inner rings agrees with the inner-ring cut
//! for even chainsaw parity and opposes it for odd parity.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::search::{enclosed_volume, sorted3, sorted4, tetrahedralize_all, SurfaceProblem};
use super::ExtrudeError;
use crate::geometry::{tet_volume, StPoint};
use crate::mesh::Region;
use crate::sliding::SwapDirection;

/// Fixed lateral faces of a block as local `(u, v)` pairs: inner ring, outer ring, and the
/// two end walls. The flag of a face says whether its diagonal starts at bottom `u`.
pub const FIXED_FACES: [(usize, usize); 8] = [(0, 1), (1, 2), (6, 7), (7, 8), (0, 3), (3, 6), (2, 5), (5, 8)];
/// Lateral faces interior to the block: the two middle-ring faces, the sliding wall and
/// the buffer wall between the two columns.
pub const FREE_FACES: [(usize, usize); 4] = [(3, 4), (4, 5), (4, 7), (1, 4)];

/// Bottom-level corner lists `n1 n2 n3 n4` of the four hexahedra.
pub const HEXES: [[usize; 4]; 4] = [[1, 0, 3, 4], [2, 1, 4, 5], [4, 3, 6, 7], [5, 4, 7, 8]];
pub const HEX_REGIONS: [Region; 4] = [Region::Buffer, Region::Buffer, Region::Sliding, Region::Sliding];

pub const TOP: usize = 9;

/// Boundary pattern of a block: swap direction plus the fixed face flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockPattern {
    pub direction: Option<SwapDirection>,
    pub fixed_from_first: [bool; 8],
}

/// Whether the middle-ring cuts follow the inner-ring cuts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    Agree,
    Opposite,
}

/// Configuration index for a swap direction and chainsaw parity.
pub fn select_configuration(direction: Option<SwapDirection>, parity: usize) -> Result<usize, ExtrudeError> {
    let dir = direction.ok_or(ExtrudeError::NoSwapConfiguration)?;
    Ok(match (dir, parity % 2) {
        (SwapDirection::PrimaryToSecondary, 0) => 1,
        (SwapDirection::SecondaryToPrimary, 0) => 2,
        (SwapDirection::PrimaryToSecondary, _) => 3,
        (SwapDirection::SecondaryToPrimary, _) => 4,
    })
}

fn configuration_parts(index: usize) -> (SwapDirection, usize) {
    match index {
        1 => (SwapDirection::PrimaryToSecondary, 0),
        2 => (SwapDirection::SecondaryToPrimary, 0),
        3 => (SwapDirection::PrimaryToSecondary, 1),
        _ => (SwapDirection::SecondaryToPrimary, 1),
    }
}

/// Face flags produced by the standard numbering: chainsaw inner and outer rings with the
/// block starting at an even inner index, middle ids above inner ids, outer ids above both.
pub fn standard_pattern(direction: Option<SwapDirection>, parity: usize) -> BlockPattern {
    let even = parity % 2 == 0;
    BlockPattern { direction, fixed_from_first: [true, false, even, !even, true, true, true, true] }
}

/// Space-time coordinates of a reference block: flipping quad family aligned at offset
/// `parity`, inner rings sliding ±`delta` pitches across it during the slab.
pub fn reference_block(r_inner: f64, r_mid: f64, r_outer: f64, n_quads: usize, direction: Option<SwapDirection>, parity: usize) -> Vec<StPoint> {
    let pitch = 2.0 * PI / n_quads as f64;
    let delta = 0.1;
    let j = (parity % 2) as f64;
    let (p0, p1) = match direction {
        Some(SwapDirection::PrimaryToSecondary) => (j + delta, j - delta),
        Some(SwapDirection::SecondaryToPrimary) => (j - delta, j + delta),
        None => (j + 0.2, j + 0.3),
    };
    // Keep the time extent comparable to the cell size.
    let dt = pitch * r_mid;
    let mut pts = Vec::with_capacity(18);
    for (t, p) in [(0.0, p0), (dt, p1)] {
        for (r, shift) in [(r_inner, p), (r_mid, p), (r_outer, j)] {
            for m in 0..3 {
                let a = (m as f64 + shift) * pitch;
                pts.push(StPoint::new(t, r * a.cos(), r * a.sin()));
            }
        }
    }
    pts
}

/// Tetrahedralization of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockConnectivity {
    /// 1..=4 for swap blocks, 0 for the no-swap reference.
    pub configuration: usize,
    pub pattern: BlockPattern,
    /// Local tets with the region of their hexahedron.
    pub tets: Vec<([usize; 4], Region)>,
    pub hex_of_tet: Vec<usize>,
    /// Chosen diagonal flags of the free faces.
    pub free_from_first: [bool; 4],
    /// Smallest tet volume over block volume on the reference geometry.
    pub min_volume_fraction: f64,
}

impl BlockConnectivity {
    /// Middle-ring cut agreement with the inner-ring cut, per column.
    pub fn agreement(&self) -> [Agreement; 2] {
        let a = |c: usize| {
            if self.free_from_first[c] == self.pattern.fixed_from_first[c] {
                Agreement::Agree
            } else {
                Agreement::Opposite
            }
        };
        [a(0), a(1)]
    }
}

/// Which bottom endpoint a lateral face diagonal starts from.
fn face_start(pattern: &BlockPattern, free: &[bool; 4], a: usize, b: usize) -> usize {
    let lookup = FIXED_FACES
        .iter()
        .zip(pattern.fixed_from_first.iter())
        .chain(FREE_FACES.iter().zip(free.iter()))
        .find(|((u, v), _)| (*u == a && *v == b) || (*u == b && *v == a));
    match lookup {
        Some(((u, v), &from_first)) => {
            if from_first {
                *u
            } else {
                *v
            }
        }
        // A quad diagonal wall inside a hexahedron (no-swap prisms only). With the standard
        // numbering the ring nearer the center carries the smaller ids.
        None => a.min(b),
    }
}

/// Spatial triangles of a hexahedron's bottom and top.
fn hex_caps(hex: &[usize; 4], layer: Region, direction: Option<SwapDirection>) -> ([[usize; 3]; 2], [[usize; 3]; 2]) {
    let [n1, n2, n3, n4] = *hex;
    let cut24 = [[n1, n2, n4], [n2, n3, n4]];
    let cut13 = [[n1, n2, n3], [n1, n3, n4]];
    if layer == Region::Buffer {
        return (cut24, cut24);
    }
    match direction {
        Some(SwapDirection::PrimaryToSecondary) => (cut24, cut13),
        Some(SwapDirection::SecondaryToPrimary) => (cut13, cut24),
        None => (cut24, cut24),
    }
}

/// Surface of one cell with inward orientation, and its lateral triangles keyed by face.
fn cell_surface(
    pts: &[StPoint],
    poly: &[usize],
    bottom: &[[usize; 3]],
    top: &[[usize; 3]],
    start: &dyn Fn(usize, usize) -> usize,
) -> Vec<[usize; 3]> {
    let mut surf: Vec<[usize; 3]> = bottom.to_vec();
    surf.extend(top.iter().map(|t| [t[0] + TOP, t[2] + TOP, t[1] + TOP]));
    let mut centroid = StPoint::zeros();
    for &v in poly {
        centroid += pts[v] + pts[v + TOP];
    }
    centroid /= (2 * poly.len()) as f64;
    let n = poly.len();
    for i in 0..n {
        let (u, v) = (poly[i], poly[(i + 1) % n]);
        let tris = if start(u, v) == u {
            [[u, v, v + TOP], [u, v + TOP, u + TOP]]
        } else {
            [[u, v, u + TOP], [v, v + TOP, u + TOP]]
        };
        for t in tris {
            let inward = tet_volume(&pts[t[0]], &pts[t[1]], &pts[t[2]], &centroid) > 0.0;
            surf.push(if inward { t } else { [t[0], t[2], t[1]] });
        }
    }
    surf
}

/// Sorted corner quadruples of all faces of a cell.
fn cell_faces(poly: &[usize]) -> Vec<[usize; 4]> {
    let n = poly.len();
    let mut f = Vec::new();
    if n == 4 {
        f.push(sorted4([poly[0], poly[1], poly[2], poly[3]]));
        f.push(sorted4([poly[0] + TOP, poly[1] + TOP, poly[2] + TOP, poly[3] + TOP]));
    }
    for i in 0..n {
        let (u, v) = (poly[i], poly[(i + 1) % n]);
        f.push(sorted4([u, v, u + TOP, v + TOP]));
    }
    f
}

fn min_volume(pts: &[StPoint], tets: &[[usize; 4]]) -> f64 {
    tets.iter()
        .map(|t| tet_volume(&pts[t[0]], &pts[t[1]], &pts[t[2]], &pts[t[3]]))
        .fold(f64::INFINITY, f64::min)
}

/// Best tetrahedralization of one cell, or `None` when infeasible.
fn solve_cell(
    pts: &[StPoint],
    poly: &[usize],
    bottom: &[[usize; 3]],
    top: &[[usize; 3]],
    start: &dyn Fn(usize, usize) -> usize,
) -> Option<Vec<[usize; 4]>> {
    let boundary = cell_surface(pts, poly, bottom, top, start);
    let mut vertices: Vec<usize> = poly.to_vec();
    vertices.extend(poly.iter().map(|v| v + TOP));
    vertices.sort_unstable();
    let problem = SurfaceProblem { points: pts, vertices, boundary, forbidden: cell_faces(poly) };
    let mut best: Option<(f64, Vec<[usize; 4]>)> = None;
    for sol in tetrahedralize_all(&problem, usize::MAX) {
        let m = min_volume(pts, &sol);
        if best.as_ref().is_none_or(|(b, _)| m > *b) {
            best = Some((m, sol));
        }
    }
    best.map(|(_, s)| s)
}

/// Tetrahedralize a block with the given boundary pattern on reference geometry `pts`.
///
/// Swap blocks use the agreement rule. The no-swap pattern splits every hexahedron into its
/// two prisms and takes the free faces from the smallest-id rule of the standard numbering.
pub fn derive_block_connectivity(
    pts: &[StPoint],
    pattern: &BlockPattern,
    agreement: Agreement,
    configuration: usize,
) -> Result<BlockConnectivity, ExtrudeError> {
    if pts.len() != 2 * TOP {
        return Err(ExtrudeError::BlockDerivation("reference block needs 18 points".into()));
    }
    let block_volume: f64 = {
        let mut v = 0.0;
        for (h, hex) in HEXES.iter().enumerate() {
            let (b, t) = hex_caps(hex, HEX_REGIONS[h], pattern.direction);
            let start = |a: usize, bb: usize| face_start(pattern, &[true; 4], a, bb);
            v += enclosed_volume(pts, &cell_surface(pts, hex, &b, &t, &start));
        }
        v
    };

    let mut best: Option<(f64, [bool; 4], Vec<([usize; 4], Region)>, Vec<usize>)> = None;
    for mask in 0..16u32 {
        let free = [mask & 1 != 0, mask & 2 != 0, mask & 4 != 0, mask & 8 != 0];
        if pattern.direction.is_none() {
            // Smallest-id rule with the standard numbering: middle ids ascend with angle,
            // and at a middle/outer or inner/middle wall the inner ring holds the smaller id.
            if free != [true; 4] {
                continue;
            }
        } else {
            let agrees = |c: usize| free[c] == pattern.fixed_from_first[c];
            let want = agreement == Agreement::Agree;
            if agrees(0) != want || agrees(1) != want {
                continue;
            }
        }
        let start = |a: usize, b: usize| face_start(pattern, &free, a, b);
        let mut tets = Vec::new();
        let mut hex_of = Vec::new();
        let mut worst = f64::INFINITY;
        let mut feasible = true;
        for (h, hex) in HEXES.iter().enumerate() {
            let (bottom, top) = hex_caps(hex, HEX_REGIONS[h], pattern.direction);
            let cells: Vec<(Vec<usize>, Vec<[usize; 3]>, Vec<[usize; 3]>)> =
                if pattern.direction.is_none() {
                    // Two prisms over the spatial triangles.
                    bottom.iter().map(|t| (t.to_vec(), vec![*t], vec![*t])).collect()
                } else {
                    vec![(hex.to_vec(), bottom.to_vec(), top.to_vec())]
                };
            for (poly, b, t) in cells {
                match solve_cell(pts, &poly, &b, &t, &start) {
                    Some(sol) => {
                        worst = worst.min(min_volume(pts, &sol));
                        for tet in sol {
                            tets.push((tet, HEX_REGIONS[h]));
                            hex_of.push(h);
                        }
                    }
                    None => {
                        feasible = false;
                        break;
                    }
                }
            }
            if !feasible {
                break;
            }
        }
        if feasible && best.as_ref().is_none_or(|(b, ..)| worst > *b) {
            best = Some((worst, free, tets, hex_of));
        }
    }
    let (worst, free, tets, hex_of_tet) = best.ok_or_else(|| {
        ExtrudeError::BlockDerivation(format!("no admissible tetrahedralization for configuration {configuration}"))
    })?;
    Ok(BlockConnectivity {
        configuration,
        pattern: *pattern,
        tets,
        hex_of_tet,
        free_from_first: free,
        min_volume_fraction: worst / block_volume,
    })
}

/// Boundary triangles a block must expose, keyed by sorted vertex triple.
pub fn expected_block_boundary(pattern: &BlockPattern) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for (h, hex) in HEXES.iter().enumerate() {
        let (b, t) = hex_caps(hex, HEX_REGIONS[h], pattern.direction);
        out.extend(b.iter().map(|x| sorted3(*x)));
        out.extend(t.iter().map(|x| sorted3(x.map(|v| v + TOP))));
    }
    for (i, &(u, v)) in FIXED_FACES.iter().enumerate() {
        let from = if pattern.fixed_from_first[i] { u } else { v };
        if from == u {
            out.push(sorted3([u, v, v + TOP]));
            out.push(sorted3([u, v + TOP, u + TOP]));
        } else {
            out.push(sorted3([u, v, u + TOP]));
            out.push(sorted3([v, v + TOP, u + TOP]));
        }
    }
    out.sort_unstable();
    out
}

/// Diagnostics of a connectivity set on given geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub boundary_exact: bool,
    pub interior_paired: bool,
    pub all_positive: bool,
    /// |Σ tet volumes − enclosed volume| / enclosed volume.
    pub volume_error: f64,
}

pub fn check_block(pts: &[StPoint], conn: &BlockConnectivity) -> BlockCheck {
    let mut count: HashMap<[usize; 3], usize> = HashMap::new();
    let mut sum = 0.0;
    let mut positive = true;
    for (t, _) in &conn.tets {
        let v = tet_volume(&pts[t[0]], &pts[t[1]], &pts[t[2]], &pts[t[3]]);
        positive &= v > 0.0;
        sum += v;
        for skip in 0..4 {
            let f: Vec<usize> = (0..4).filter(|&i| i != skip).map(|i| t[i]).collect();
            *count.entry(sorted3([f[0], f[1], f[2]])).or_default() += 1;
        }
    }
    let mut boundary: Vec<[usize; 3]> = count.iter().filter(|(_, &c)| c == 1).map(|(k, _)| *k).collect();
    boundary.sort_unstable();
    let interior_paired = count.values().all(|&c| c == 1 || c == 2);
    let expected = expected_block_boundary(&conn.pattern);
    // Enclosed volume from the expected boundary, oriented via the tets themselves.
    let mut total = 0.0;
    for (h, hex) in HEXES.iter().enumerate() {
        let (b, t) = hex_caps(hex, HEX_REGIONS[h], conn.pattern.direction);
        let start = |a: usize, bb: usize| face_start(&conn.pattern, &conn.free_from_first, a, bb);
        total += enclosed_volume(pts, &cell_surface(pts, hex, &b, &t, &start));
    }
    BlockCheck {
        boundary_exact: boundary == expected,
        interior_paired,
        all_positive: positive,
        volume_error: (sum - total).abs() / total.abs(),
    }
}

/// The four swap-block connectivity sets, derived once.
#[derive(Debug, Clone)]
pub struct BlockConnectivityCache {
    sets: Vec<BlockConnectivity>,
    /// Reference radii and quad count used for the derivation.
    pub reference: (f64, f64, f64, usize),
}

impl BlockConnectivityCache {
    /// Derive all four configurations on the reference block of an annulus.
    pub fn derive(r_inner: f64, r_mid: f64, r_outer: f64, n_quads: usize) -> Result<Self, ExtrudeError> {
        let mut sets = Vec::with_capacity(4);
        for index in 1..=4 {
            let (dir, parity) = configuration_parts(index);
            let pts = reference_block(r_inner, r_mid, r_outer, n_quads, Some(dir), parity);
            let pattern = standard_pattern(Some(dir), parity);
            let agreement = if parity == 0 { Agreement::Agree } else { Agreement::Opposite };
            let conn = derive_block_connectivity(&pts, &pattern, agreement, index)?;
            let check = check_block(&pts, &conn);
            if !(check.boundary_exact && check.interior_paired && check.all_positive && check.volume_error <= 1e-12) {
                return Err(ExtrudeError::BlockDerivation(format!("configuration {index} failed self-check: {check:?}")));
            }
            log::debug!(
                "block configuration {index}: {} tets, free faces {:?}, min volume fraction {:.4}",
                conn.tets.len(),
                conn.free_from_first,
                conn.min_volume_fraction
            );
            sets.push(conn);
        }
        Ok(BlockConnectivityCache { sets, reference: (r_inner, r_mid, r_outer, n_quads) })
    }

    /// Connectivity set by configuration index 1..=4.
    pub fn get(&self, configuration: usize) -> Option<&BlockConnectivity> {
        self.sets.get(configuration.checked_sub(1)?)
    }

    pub fn sets(&self) -> &[BlockConnectivity] {
        &self.sets
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn configuration_lookup() {
        assert_eq!(select_configuration(Some(SwapDirection::PrimaryToSecondary), 0).unwrap(), 1);
        assert_eq!(select_configuration(Some(SwapDirection::SecondaryToPrimary), 0).unwrap(), 2);
        assert_eq!(select_configuration(Some(SwapDirection::PrimaryToSecondary), 1).unwrap(), 3);
        assert_eq!(select_configuration(Some(SwapDirection::SecondaryToPrimary), 3).unwrap(), 4);
        assert_eq!(select_configuration(None, 0), Err(ExtrudeError::NoSwapConfiguration));
    }

    #[test]
    fn four_configurations_derive() {
        let cache = BlockConnectivityCache::derive(4.4, 4.7, 5.0, 100).unwrap();
        for (i, c) in cache.sets().iter().enumerate() {
            assert_eq!(c.configuration, i + 1);
            let want = if i < 2 { Agreement::Agree } else { Agreement::Opposite };
            assert_eq!(c.agreement(), [want, want]);
            assert!(c.min_volume_fraction > 0.0);
        }
    }

    #[test]
    fn reference_block_rectangular_midway() {
        // At the middle of the slab the flipping quads are aligned with the outer ring.
        let pts = reference_block(1.0, 1.5, 2.0, 12, Some(SwapDirection::PrimaryToSecondary), 1);
        let mid_angle = |a: usize| {
            let p = (pts[a] + pts[a + TOP]) * 0.5;
            p.z.atan2(p.y)
        };
        let pitch = 2.0 * PI / 12.0;
        assert!((mid_angle(3) - pitch).abs() < 1e-3);
        assert!((mid_angle(6) - pitch).abs() < 1e-12);
    }
}
