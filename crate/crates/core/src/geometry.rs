//! Small geometric kernels shared by the other modules.

use nalgebra::{Point2, Vector2, Vector3};

pub type Point = Point2<f64>;
pub type Vec2 = Vector2<f64>;
/// Space-time point ordered as (t, x, y).
pub type StPoint = Vector3<f64>;

/// z-component of `u × v`.
#[inline]
pub fn cross2(u: &Vec2, v: &Vec2) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Signed area of triangle (a, b, c); positive when counterclockwise.
#[inline]
pub fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * cross2(&(b - a), &(c - a))
}

/// Signed area of a simple polygon (shoelace formula).
pub fn polygon_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = &pts[i];
        let q = &pts[(i + 1) % n];
        s += p.x * q.y - p.y * q.x;
    }
    0.5 * s
}

/// Signed volume of the tetrahedron (a, b, c, d): det(b−a, c−a, d−a) / 6.
#[inline]
pub fn tet_volume(a: &StPoint, b: &StPoint, c: &StPoint, d: &StPoint) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

/// Inradius over circumradius; 0.5 for an equilateral triangle, 0 for a degenerate one.
pub fn radius_ratio(a: &Point, b: &Point, c: &Point) -> f64 {
    let la = (b - c).norm();
    let lb = (c - a).norm();
    let lc = (a - b).norm();
    let area = signed_area(a, b, c).abs();
    let s = 0.5 * (la + lb + lc);
    if s == 0.0 || la * lb * lc == 0.0 {
        return 0.0;
    }
    // r = A/s and R = abc/(4A)
    4.0 * area * area / (s * la * lb * lc)
}

/// Lift a spatial point to space-time.
#[inline]
pub fn lift(t: f64, p: &Point) -> StPoint {
    StPoint::new(t, p.x, p.y)
}

/// Simpson integral over [t0, t1] of the area of a polygon whose vertices move linearly
/// from `bottom` to `top`. Exact, since the area is quadratic in time.
pub fn simpson_polygon_volume(bottom: &[Point], top: &[Point], dt: f64) -> f64 {
    let mid: Vec<Point> = bottom
        .iter()
        .zip(top)
        .map(|(a, b)| Point::from((a.coords + b.coords) * 0.5))
        .collect();
    dt / 6.0 * (polygon_area(bottom) + 4.0 * polygon_area(&mid) + polygon_area(top))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ccw_triangle_has_positive_area() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let c = Point::new(0.0, 1.0);
        assert_relative_eq!(signed_area(&a, &b, &c), 0.5);
        assert_relative_eq!(signed_area(&a, &c, &b), -0.5);
    }

    #[test]
    fn equilateral_radius_ratio_is_one_half() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let c = Point::new(0.5, 3f64.sqrt() / 2.0);
        assert_relative_eq!(radius_ratio(&a, &b, &c), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn unit_corner_tet_volume() {
        let o = StPoint::zeros();
        let v = tet_volume(&o, &StPoint::x(), &StPoint::y(), &StPoint::z());
        assert_relative_eq!(v, 1.0 / 6.0);
    }

    #[test]
    fn simpson_matches_static_prism() {
        let tri = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 1.0)];
        assert_relative_eq!(simpson_polygon_volume(&tri, &tri, 0.5), 0.5);
    }
}
