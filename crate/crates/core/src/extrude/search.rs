//! Exhaustive tetrahedralization of a closed triangulated surface without interior points.
//!
//! Front advancing with backtracking: the lexicographically smallest open face is closed
//! by every admissible apex in turn. A face is consumed once it is shared by two tets (or
//! once a boundary face is covered) and may never reappear, and a tet face matching an open
//! face must carry the opposite orientation of a neighbour across it. Given positive
//! tets, these rules make the tets' union an exact partition of the enclosed volume.

use crate::geometry::{tet_volume, StPoint};

/// Surface to fill. `boundary` faces are oriented towards the interior, i.e.
/// `tet_volume(a, b, c, x) > 0` for interior points `x`.
pub struct SurfaceProblem<'a> {
    pub points: &'a [StPoint],
    pub vertices: Vec<usize>,
    pub boundary: Vec<[usize; 3]>,
    /// Sorted vertex quadruples that may not form a tet.
    pub forbidden: Vec<[usize; 4]>,
}

/// Relative volume tolerance for accepting a complete tetrahedralization.
pub const VOLUME_CLOSURE_TOLERANCE: f64 = 1e-9;
/// Smallest admissible tet volume relative to the enclosed volume.
pub const MIN_TET_FRACTION: f64 = 1e-10;

pub fn sorted3(f: [usize; 3]) -> [usize; 3] {
    let mut k = f;
    k.sort_unstable();
    k
}

pub fn sorted4(t: [usize; 4]) -> [usize; 4] {
    let mut k = t;
    k.sort_unstable();
    k
}

/// True if `b` is a cyclic rotation of `a`.
fn same_orientation(a: [usize; 3], b: [usize; 3]) -> bool {
    (0..3).any(|r| a[r] == b[0] && a[(r + 1) % 3] == b[1] && a[(r + 2) % 3] == b[2])
}

/// Enclosed volume from the inward-oriented surface.
pub fn enclosed_volume(points: &[StPoint], boundary: &[[usize; 3]]) -> f64 {
    let mut c = StPoint::zeros();
    for f in boundary {
        for &i in f {
            c += points[i];
        }
    }
    c /= (3 * boundary.len().max(1)) as f64;
    -boundary.iter().map(|f| tet_volume(&c, &points[f[0]], &points[f[1]], &points[f[2]])).sum::<f64>()
}

struct Search<'a> {
    pts: &'a [StPoint],
    vertices: &'a [usize],
    forbidden: &'a [[usize; 4]],
    target: f64,
    eps: f64,
    front: Vec<([usize; 3], [usize; 3])>,
    closed: Vec<[usize; 3]>,
    tets: Vec<[usize; 4]>,
    volume: f64,
    solutions: Vec<Vec<[usize; 4]>>,
    limit: usize,
}

impl Search<'_> {
    fn run(&mut self) {
        if self.solutions.len() >= self.limit {
            return;
        }
        if self.front.is_empty() {
            if (self.volume - self.target).abs() <= VOLUME_CLOSURE_TOLERANCE * self.target {
                self.solutions.push(self.tets.clone());
            }
            return;
        }
        let (fi, &(_, f)) = self.front.iter().enumerate().min_by_key(|(_, (k, _))| *k).expect("non-empty front");
        for &x in self.vertices {
            if f.contains(&x) {
                continue;
            }
            let [a, b, c] = f;
            let v = tet_volume(&self.pts[a], &self.pts[b], &self.pts[c], &self.pts[x]);
            if v <= self.eps || self.volume + v > self.target * (1.0 + VOLUME_CLOSURE_TOLERANCE) {
                continue;
            }
            let key4 = sorted4([a, b, c, x]);
            if self.forbidden.contains(&key4) || self.tets.iter().any(|t| sorted4(*t) == key4) {
                continue;
            }
            // The other three faces, each oriented towards the new tet.
            let others = [([b, c, x], a), ([a, c, x], b), ([a, b, x], c)];
            let mut matched: Vec<usize> = Vec::new();
            let mut fresh: Vec<([usize; 3], [usize; 3])> = Vec::new();
            let mut ok = true;
            for (g, opp) in others {
                let g_in = if tet_volume(&self.pts[g[0]], &self.pts[g[1]], &self.pts[g[2]], &self.pts[opp]) > 0.0 {
                    g
                } else {
                    [g[0], g[2], g[1]]
                };
                let gk = sorted3(g);
                if let Some(pos) = self.front.iter().position(|(k, _)| *k == gk) {
                    if pos == fi || !same_orientation(self.front[pos].1, g_in) {
                        ok = false;
                        break;
                    }
                    matched.push(pos);
                } else if self.closed.contains(&gk) {
                    ok = false;
                    break;
                } else {
                    fresh.push((gk, [g_in[0], g_in[2], g_in[1]]));
                }
            }
            if !ok {
                continue;
            }
            // Apply.
            let saved_front = self.front.clone();
            let closed_len = self.closed.len();
            let mut remove: Vec<usize> = matched.clone();
            remove.push(fi);
            remove.sort_unstable_by(|p, q| q.cmp(p));
            for r in remove {
                let (k, _) = self.front.remove(r);
                self.closed.push(k);
            }
            self.front.extend(fresh);
            self.tets.push([a, b, c, x]);
            self.volume += v;

            self.run();

            self.volume -= v;
            self.tets.pop();
            self.closed.truncate(closed_len);
            self.front = saved_front;
            if self.solutions.len() >= self.limit {
                return;
            }
        }
    }
}

/// All tetrahedralizations of the surface, up to `limit`. Each tet is positively oriented.
pub fn tetrahedralize_all(problem: &SurfaceProblem, limit: usize) -> Vec<Vec<[usize; 4]>> {
    let target = enclosed_volume(problem.points, &problem.boundary);
    if !(target > 0.0) {
        return Vec::new();
    }
    let mut search = Search {
        pts: problem.points,
        vertices: &problem.vertices,
        forbidden: &problem.forbidden,
        target,
        eps: MIN_TET_FRACTION * target,
        front: problem.boundary.iter().map(|f| (sorted3(*f), *f)).collect(),
        closed: Vec::new(),
        tets: Vec::new(),
        volume: 0.0,
        solutions: Vec::new(),
        limit,
    };
    search.run();
    search.solutions
}
