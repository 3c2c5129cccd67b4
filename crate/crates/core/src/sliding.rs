//! Sliding-layer triangulation state and the shortest-diagonal swap rule.
//!
//! The sliding layer between the middle ring `I` and the outer ring `O` is triangulated
//! by the family `T_s`, whose ring-to-ring edges join `I_k` to `O_{k+s}` and `O_{k+s+1}`.
//! `T_s` is at once the primary quads of offset `s` cut along `n2–n4` and the secondary
//! quads of offset `s+1` cut along `n1–n3`. A swap flips one of these two quad families to
//! its other diagonal, moving to `T_{s−1}` or `T_{s+1}`. Every quad of the layer is
//! flipped together.

use thiserror::Error;

use crate::geometry::{radius_ratio, Point};
use crate::mesh::{Layer, SpatialMesh};

/// Relative tolerance under which two diagonals count as equally long.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SlidingError {
    #[error("mesh has no annulus")]
    NoAnnulus,
    #[error("degenerate sliding diagonal of length {0:e}")]
    DegenerateDiagonal(f64),
    #[error("slab rotation {rotation:e} rad reaches half the angular pitch ({limit:e} rad); reduce the time step")]
    RotationBound { rotation: f64, limit: f64 },
    #[error("sliding triangle {index} has non-positive area {area:e} after the swap")]
    NonPositiveTriangle { index: usize, area: f64 },
    #[error("annulus state offset {state} does not match mesh offset {mesh}")]
    OffsetMismatch { state: i64, mesh: i64 },
}

/// Which quad family the current triangulation is read from, relative to the start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFamily {
    Primary,
    Secondary,
}

/// `PrimaryToSecondary` takes `T_s` to `T_{s−1}` (clockwise sliding); `SecondaryToPrimary`
/// takes `T_s` to `T_{s+1}` (anticlockwise sliding).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwapDirection {
    PrimaryToSecondary,
    SecondaryToPrimary,
}

impl SwapDirection {
    pub fn offset_step(self) -> i64 {
        match self {
            SwapDirection::PrimaryToSecondary => -1,
            SwapDirection::SecondaryToPrimary => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusState {
    pub offset: i64,
    pub initial_offset: i64,
    pub n_quads: usize,
    pub angular_pitch: f64,
    /// Summed rotation applied since construction, unwrapped.
    pub accumulated_rotation: f64,
}

impl AnnulusState {
    pub fn from_mesh(mesh: &SpatialMesh) -> Result<Self, SlidingError> {
        let a = mesh.annulus.as_ref().ok_or(SlidingError::NoAnnulus)?;
        let n = a.n_quads();
        Ok(AnnulusState {
            offset: a.sliding_offset,
            initial_offset: a.sliding_offset,
            n_quads: n,
            angular_pitch: 2.0 * std::f64::consts::PI / n as f64,
            accumulated_rotation: 0.0,
        })
    }

    pub fn current_family(&self) -> MeshFamily {
        if (self.offset - self.initial_offset).rem_euclid(2) == 0 {
            MeshFamily::Primary
        } else {
            MeshFamily::Secondary
        }
    }

    /// Reject a slab rotation of half a pitch or more.
    pub fn check_rotation_step(&self, dtheta: f64) -> Result<(), SlidingError> {
        let limit = 0.5 * self.angular_pitch;
        if dtheta.abs() < limit {
            Ok(())
        } else {
            Err(SlidingError::RotationBound { rotation: dtheta, limit })
        }
    }

    pub fn rotated(&self, dtheta: f64) -> Result<AnnulusState, SlidingError> {
        self.check_rotation_step(dtheta)?;
        let mut s = self.clone();
        s.accumulated_rotation += dtheta;
        Ok(s)
    }
}

/// Diagonal lengths of the two representative quads of the current triangulation `T_s`:
/// the primary quad spans outer vertices `s, s+1`, the secondary quad `s+1, s+2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentativeDiagonals {
    /// `n2–n4` of the primary quad, an edge of `T_s`.
    pub primary_current: f64,
    /// `n1–n3` of the primary quad, an edge of `T_{s−1}`.
    pub primary_alternative: f64,
    /// `n1–n3` of the secondary quad, an edge of `T_s`.
    pub secondary_current: f64,
    /// `n2–n4` of the secondary quad, an edge of `T_{s+1}`.
    pub secondary_alternative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapDecision {
    pub direction: Option<SwapDirection>,
    pub diagonals: Option<RepresentativeDiagonals>,
}

impl SwapDecision {
    pub fn none() -> Self {
        SwapDecision { direction: None, diagonals: None }
    }

    pub fn swap(&self) -> bool {
        self.direction.is_some()
    }
}

fn ring_pos(mesh: &SpatialMesh, ring: &[usize], k: i64) -> Point {
    let n = ring.len() as i64;
    *mesh.pos(ring[k.rem_euclid(n) as usize])
}

pub fn representative_diagonals(mesh: &SpatialMesh, state: &AnnulusState) -> Result<RepresentativeDiagonals, SlidingError> {
    let a = mesh.annulus.as_ref().ok_or(SlidingError::NoAnnulus)?;
    if a.sliding_offset != state.offset {
        return Err(SlidingError::OffsetMismatch { state: state.offset, mesh: a.sliding_offset });
    }
    let s = state.offset;
    let i0 = ring_pos(mesh, &a.middle, 0);
    let i1 = ring_pos(mesh, &a.middle, 1);
    let o = |m: i64| ring_pos(mesh, &a.outer.ids, s + m);
    let d = RepresentativeDiagonals {
        primary_current: (o(1) - i0).norm(),
        primary_alternative: (o(0) - i1).norm(),
        secondary_current: (o(1) - i1).norm(),
        secondary_alternative: (o(2) - i0).norm(),
    };
    for l in [d.primary_current, d.primary_alternative, d.secondary_current, d.secondary_alternative] {
        if !(l > 0.0) {
            return Err(SlidingError::DegenerateDiagonal(l));
        }
    }
    Ok(d)
}

/// Pairwise rule: stay with `current` unless the other family's diagonal is strictly
/// shorter beyond the tie tolerance.
pub fn shortest_family(current: MeshFamily, l_primary: f64, l_secondary: f64) -> Option<SwapDirection> {
    let strictly_shorter = |a: f64, b: f64| a < b * (1.0 - TIE_TOLERANCE);
    match current {
        MeshFamily::Primary if strictly_shorter(l_secondary, l_primary) => Some(SwapDirection::PrimaryToSecondary),
        MeshFamily::Secondary if strictly_shorter(l_primary, l_secondary) => Some(SwapDirection::SecondaryToPrimary),
        _ => None,
    }
}

/// Apply the pairwise rule to the primary quad (its two diagonals) and then to the
/// secondary quad. With the rotation bound at most one of them can prefer a flip.
pub fn decide_swap(diagonals: &RepresentativeDiagonals) -> SwapDecision {
    let backward = shortest_family(MeshFamily::Primary, diagonals.primary_current, diagonals.primary_alternative);
    let forward = shortest_family(MeshFamily::Secondary, diagonals.secondary_alternative, diagonals.secondary_current);
    SwapDecision { direction: backward.or(forward), diagonals: Some(*diagonals) }
}

/// Flip the sliding layer of `mesh` according to `decision` and return the new state.
pub fn apply_swap(
    state: &AnnulusState,
    decision: &SwapDecision,
    mesh: &SpatialMesh,
) -> Result<(AnnulusState, SpatialMesh), SlidingError> {
    let Some(dir) = decision.direction else {
        return Ok((state.clone(), mesh.clone()));
    };
    let mut next_state = state.clone();
    next_state.offset += dir.offset_step();
    let mut next_mesh = mesh.clone();
    next_mesh.set_sliding_offset(next_state.offset);
    let mut index = 0;
    for q in next_mesh.quads.iter().filter(|q| q.layer == Layer::Sliding) {
        for t in q.triangles() {
            let area = next_mesh.triangle_area(&t);
            if area <= 0.0 {
                return Err(SlidingError::NonPositiveTriangle { index, area });
            }
            index += 1;
        }
    }
    Ok((next_state, next_mesh))
}

/// Decide and apply in one go.
pub fn update_sliding(
    state: &AnnulusState,
    mesh: &SpatialMesh,
) -> Result<(AnnulusState, SpatialMesh, SwapDecision), SlidingError> {
    let d = representative_diagonals(mesh, state)?;
    let decision = decide_swap(&d);
    let (s, m) = apply_swap(state, &decision, mesh)?;
    Ok((s, m, decision))
}

/// Smallest inradius/circumradius ratio over the sliding-layer triangles.
pub fn min_sliding_quality(mesh: &SpatialMesh) -> f64 {
    mesh.quads
        .iter()
        .filter(|q| q.layer == Layer::Sliding)
        .flat_map(|q| q.triangles())
        .map(|t| radius_ratio(mesh.pos(t[0]), mesh.pos(t[1]), mesh.pos(t[2])))
        .fold(f64::INFINITY, f64::min)
}

/// Smallest inradius over the sliding-layer triangles.
pub fn min_sliding_inradius(mesh: &SpatialMesh) -> f64 {
    mesh.quads
        .iter()
        .filter(|q| q.layer == Layer::Sliding)
        .flat_map(|q| q.triangles())
        .map(|t| {
            let p = t.map(|i| *mesh.pos(i));
            let per = (p[1] - p[0]).norm() + (p[2] - p[1]).norm() + (p[0] - p[2]).norm();
            2.0 * mesh.triangle_area(&t).abs() / per
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest spread of the two diagonals over all sliding quads; zero for a congruent layer.
pub fn congruence_spread(mesh: &SpatialMesh) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for q in mesh.quads.iter().filter(|q| q.layer == Layer::Sliding) {
        let [n1, n2, n3, n4] = q.n.map(|i| *mesh.pos(i));
        for (j, l) in [(n4 - n2).norm(), (n3 - n1).norm()].into_iter().enumerate() {
            lo[j] = lo[j].min(l);
            hi[j] = hi[j].max(l);
        }
    }
    (hi[0] - lo[0]).max(hi[1] - lo[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_annulus_mesh;
    use crate::motion::{advance_vertices, MotionMap, Rotation};

    fn annulus() -> SpatialMesh {
        build_annulus_mesh(Point::origin(), 4.4, 4.7, 5.0, 100).unwrap()
    }

    fn rotate(mesh: &SpatialMesh, angle: f64) -> SpatialMesh {
        let map = MotionMap { rotation: Some(Rotation { center: Point::origin(), angle }), translation: None };
        advance_vertices(mesh, &map, mesh.time + 1.0).unwrap()
    }

    #[test]
    fn pairwise_rule_examples() {
        assert_eq!(shortest_family(MeshFamily::Primary, 1.2, 0.9), Some(SwapDirection::PrimaryToSecondary));
        assert_eq!(shortest_family(MeshFamily::Secondary, 1.2, 0.9), None);
        assert_eq!(shortest_family(MeshFamily::Primary, 1.0, 1.0), None);
        assert_eq!(shortest_family(MeshFamily::Secondary, 1.0, 1.0 - 1e-14), None);
    }

    #[test]
    fn diagonal_length_example() {
        let n2 = Point::new(0.6, 0.0);
        let n4 = Point::new(1.0, 1.0);
        assert!(((n4 - n2).norm() - 1.16f64.sqrt()).abs() < 1e-15);
        assert!(((n4 - n2).norm() - 1.07703).abs() < 1e-5);
    }

    #[test]
    fn unsheared_annulus_is_symmetric() {
        let m = annulus();
        let s = AnnulusState::from_mesh(&m).unwrap();
        let d = representative_diagonals(&m, &s).unwrap();
        assert!((d.primary_current - d.primary_alternative).abs() <= 1e-12 * d.primary_current);
        assert!((d.primary_current - d.secondary_alternative).abs() > 0.0);
        assert!(!decide_swap(&d).swap());
        assert!(congruence_spread(&m) < 1e-9);
    }

    #[test]
    fn half_pitch_rotation_prefers_other_family() {
        // The start sits on the boundary of T_0's optimal range: clockwise sliding leaves
        // it at once, anticlockwise sliding stays inside for a full pitch.
        let m = annulus();
        let s = AnnulusState::from_mesh(&m).unwrap();
        let half = 0.5 * s.angular_pitch * (1.0 - 1e-9);
        let ccw = representative_diagonals(&rotate(&m, half), &s).unwrap();
        assert!(!decide_swap(&ccw).swap());
        let cw_mesh = rotate(&m, -half);
        let cw = representative_diagonals(&cw_mesh, &s).unwrap();
        assert!(cw.primary_alternative < cw.primary_current);
        let dec = decide_swap(&cw);
        assert_eq!(dec.direction, Some(SwapDirection::PrimaryToSecondary));
        let (ns, nm) = apply_swap(&s, &dec, &cw_mesh).unwrap();
        assert_eq!(ns.offset, -1);
        assert_eq!(ns.current_family(), MeshFamily::Secondary);
        let again = decide_swap(&representative_diagonals(&nm, &ns).unwrap());
        assert!(!again.swap());
        // A second half pitch anticlockwise from the sheared state crosses into T_1.
        let ccw2 = rotate(&rotate(&m, half), half * 1.5);
        let dec2 = decide_swap(&representative_diagonals(&ccw2, &s).unwrap());
        assert_eq!(dec2.direction, Some(SwapDirection::SecondaryToPrimary));
    }

    #[test]
    fn swap_improves_inradius() {
        let m = annulus();
        let s = AnnulusState::from_mesh(&m).unwrap();
        for frac in [0.2, 0.3, 0.4, 0.49] {
            for sign in [1.0, -1.0] {
                let r = rotate(&m, sign * frac * s.angular_pitch);
                let (_, after, dec) = update_sliding(&s, &r).unwrap();
                if dec.swap() {
                    assert!(min_sliding_inradius(&after) >= min_sliding_inradius(&r));
                }
            }
        }
    }

    #[test]
    fn no_swap_is_identity() {
        let m = annulus();
        let s = AnnulusState::from_mesh(&m).unwrap();
        let (s2, m2) = apply_swap(&s, &SwapDecision::none(), &m).unwrap();
        assert_eq!(s2, s);
        assert_eq!(m2, m);
    }

    #[test]
    fn rotation_bound_enforced() {
        let s = AnnulusState::from_mesh(&annulus()).unwrap();
        assert!(s.rotated(0.49 * s.angular_pitch).is_ok());
        assert!(matches!(s.rotated(-0.5 * s.angular_pitch), Err(SlidingError::RotationBound { .. })));
    }
}
