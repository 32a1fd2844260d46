//! Planar primitives: points, segments, triangle metrics, and the
//! ground-truth predicates the analysis side checks controllers against.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use crate::error::CoreError;
use crate::fm;

/// Area below which a triangle is treated as degenerate, in m².
pub const DEGENERATE_AREA: f64 = 1e-12;

/// A point (or vector) in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        fm::hypot(self.x, self.y)
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// World-frame direction angle of the vector from `self` to `to`.
    pub fn direction_to(self, to: Point) -> crate::angle::Angle {
        crate::angle::Angle::new(fm::atan2(to.y - self.y, to.x - self.x))
    }

    pub fn from_angle(a: crate::angle::Angle) -> Point {
        Point::new(fm::cos(a.radians()), fm::sin(a.radians()))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Twice the signed area of the triangle (a, b, c); positive when
/// counterclockwise.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Signed area of a polygon given by its vertex loop.
pub fn polygon_signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        s += pts[i].cross(pts[j]);
    }
    s / 2.0
}

/// Closest point on segment `ab` to `p`.
pub fn closest_point_on_segment(p: Point, a: Point, b: Point) -> Point {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 <= 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Distance from `p` to segment `ab`.
pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    p.dist(closest_point_on_segment(p, a, b))
}

/// True if segments `ab` and `cd` intersect (including touching).
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| -> bool {
        o == 0.0
            && r.x <= p.x.max(q.x)
            && r.x >= p.x.min(q.x)
            && r.y <= p.y.max(q.y)
            && r.y >= p.y.min(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// True if segments `ab` and `cd` properly cross (interiors intersect),
/// with shared endpoints within `tol` not counted.
pub fn segments_cross_excluding_endpoints(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let shares = |p: Point, q: Point| p.dist(q) <= tol;
    if shares(a, c) || shares(a, d) || shares(b, c) || shares(b, d) {
        // Touching at a shared endpoint only; check whether they overlap
        // beyond the shared point (collinear overlap).
        let d1 = orient(c, d, a);
        let d2 = orient(c, d, b);
        if d1.abs() <= tol && d2.abs() <= tol {
            // Collinear; overlapping extents beyond a point count as a cross.
            let len = |p: Point, q: Point| p.dist(q);
            let total = len(a, b) + len(c, d);
            let span = {
                let xs = [a, b, c, d];
                let mut lo = xs[0];
                let mut hi = xs[0];
                for p in xs {
                    if (p.x, p.y) < (lo.x, lo.y) {
                        lo = p;
                    }
                    if (p.x, p.y) > (hi.x, hi.y) {
                        hi = p;
                    }
                }
                len(lo, hi)
            };
            return span < total - tol;
        }
        return false;
    }
    segments_intersect(a, b, c, d)
}

/// Per-triangle shape metrics measured from ground-truth vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleMetrics {
    /// Smallest interior angle, radians.
    pub min_angle: f64,
    /// Longest edge over shortest edge.
    pub edge_ratio: f64,
    /// Area in m².
    pub area: f64,
}

/// Minimum interior angle, max/min edge ratio, and area of a triangle.
/// Rejects triangles whose area is below [`DEGENERATE_AREA`].
pub fn triangle_metrics(p1: Point, p2: Point, p3: Point) -> Result<TriangleMetrics, CoreError> {
    let area = fm::abs(orient(p1, p2, p3)) / 2.0;
    if area < DEGENERATE_AREA {
        return Err(CoreError::DegenerateTriangle { area });
    }
    let a = p2.dist(p3);
    let b = p1.dist(p3);
    let c = p1.dist(p2);
    let angle = |opp: f64, s1: f64, s2: f64| -> f64 {
        let cosv = ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0);
        fm::acos(cosv)
    };
    let alpha = angle(a, b, c);
    let beta = angle(b, a, c);
    let gamma = PI - alpha - beta;
    let min_angle = alpha.min(beta).min(gamma);
    let longest = a.max(b).max(c);
    let shortest = a.min(b).min(c);
    Ok(TriangleMetrics { min_angle, edge_ratio: longest / shortest, area })
}

/// Signed-area point-in-triangle oracle (closed triangle). This is the
/// ground-truth reference the bearing-only occupancy test is audited
/// against; it must stay independent of the angular code path.
pub fn point_in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    let d1 = orient(p, a, b);
    let d2 = orient(p, b, c);
    let d3 = orient(p, c, a);
    let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(has_neg && has_pos)
}

/// Distance from `p` to the nearest edge of the triangle, used to exclude
/// an edge band from exactness comparisons.
pub fn dist_to_triangle_boundary(p: Point, a: Point, b: Point, c: Point) -> f64 {
    dist_point_segment(p, a, b)
        .min(dist_point_segment(p, b, c))
        .min(dist_point_segment(p, c, a))
}

/// Clips convex polygon `subject` by convex polygon `clip`
/// (Sutherland–Hodgman) and returns the overlap area.
pub fn convex_overlap_area(subject: &[Point], clip: &[Point]) -> f64 {
    let mut poly: Vec<Point> = subject.to_vec();
    // Ensure the clip loop is counterclockwise so "inside" is on the left.
    let mut clip_ccw: Vec<Point> = clip.to_vec();
    if polygon_signed_area(&clip_ccw) < 0.0 {
        clip_ccw.reverse();
    }
    let n = clip_ccw.len();
    for i in 0..n {
        if poly.is_empty() {
            return 0.0;
        }
        let e1 = clip_ccw[i];
        let e2 = clip_ccw[(i + 1) % n];
        let input = core::mem::take(&mut poly);
        let inside = |p: Point| orient(e1, e2, p) >= 0.0;
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let cur_in = inside(cur);
            let prev_in = inside(prev);
            if cur_in {
                if !prev_in {
                    if let Some(x) = line_intersection(prev, cur, e1, e2) {
                        poly.push(x);
                    }
                }
                poly.push(cur);
            } else if prev_in {
                if let Some(x) = line_intersection(prev, cur, e1, e2) {
                    poly.push(x);
                }
            }
        }
    }
    fm::abs(polygon_signed_area(&poly))
}

/// Intersection of segment `ab` with the infinite line through `cd`.
fn line_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<Point> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    if denom == 0.0 {
        return None;
    }
    let t = (c - a).cross(s) / denom;
    Some(a + r * t)
}

/// Total length of the intersection of the infinite line through
/// `(l1, l2)` with the closed triangle.
pub fn line_triangle_intersection_length(l1: Point, l2: Point, tri: &[Point; 3]) -> f64 {
    let dir = l2 - l1;
    let len = dir.norm();
    if len <= 0.0 {
        return 0.0;
    }
    let dir = dir * (1.0 / len);
    // Collect parametric hits of the line against the triangle edges, then
    // the intersection is the span between extreme parameters whose segment
    // midpoint lies inside.
    let mut ts: Vec<f64> = Vec::new();
    for i in 0..3 {
        let (e1, e2) = (tri[i], tri[(i + 1) % 3]);
        let es = e2 - e1;
        let denom = dir.cross(es);
        if fm::abs(denom) < 1e-15 {
            // Line parallel to edge; if collinear the edge itself contributes.
            if fm::abs((e1 - l1).cross(dir)) < 1e-12 {
                ts.push((e1 - l1).dot(dir));
                ts.push((e2 - l1).dot(dir));
            }
            continue;
        }
        let u = (e1 - l1).cross(dir) / denom;
        if (-1e-12..=1.0 + 1e-12).contains(&u) {
            let hit = e1 + es * u.clamp(0.0, 1.0);
            ts.push((hit - l1).dot(dir));
        }
    }
    if ts.len() < 2 {
        return 0.0;
    }
    let lo = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo).max(0.0)
}

/// Chord length of the intersection of the infinite line through
/// `(l1, l2)` with the disk centered at `c` of radius `r`.
pub fn line_disk_intersection_length(l1: Point, l2: Point, c: Point, r: f64) -> f64 {
    let dir = l2 - l1;
    let len = dir.norm();
    if len <= 0.0 {
        return 0.0;
    }
    let d = fm::abs((c - l1).cross(dir)) / len;
    if d >= r {
        0.0
    } else {
        2.0 * fm::sqrt(r * r - d * d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_unit_equilateral() {
        let m = triangle_metrics(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, fm::sqrt(3.0) / 2.0),
        )
        .unwrap();
        assert!((m.min_angle - PI / 3.0).abs() < 1e-9);
        assert!((m.edge_ratio - 1.0).abs() < 1e-9);
        assert!((m.area - 0.43301270189221946).abs() < 1e-9);
    }

    #[test]
    fn metrics_right_isosceles() {
        let m = triangle_metrics(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0))
            .unwrap();
        assert!((m.min_angle - PI / 4.0).abs() < 1e-12);
        assert!((m.edge_ratio - fm::sqrt(2.0)).abs() < 1e-12);
        assert!((m.area - 0.5).abs() < 1e-12);
    }

    #[test]
    fn metrics_rejects_degenerate() {
        let r = triangle_metrics(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0));
        assert!(matches!(r, Err(CoreError::DegenerateTriangle { .. })));
    }

    #[test]
    fn equilateral_side_from_reported_area() {
        // An ideal equilateral triangle of area 0.088 m² has side
        // sqrt(4·0.088/√3) ≈ 0.451 m; round-trip through the metrics.
        let side = fm::sqrt(4.0 * 0.088 / fm::sqrt(3.0));
        assert!((side - 0.451).abs() < 1e-3);
        let m = triangle_metrics(
            Point::new(0.0, 0.0),
            Point::new(side, 0.0),
            Point::new(side / 2.0, side * fm::sqrt(3.0) / 2.0),
        )
        .unwrap();
        assert!((m.area - 0.088).abs() < 1e-9);
    }

    #[test]
    fn overlap_area_of_shifted_squares() {
        let a = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let b = [
            Point::new(0.5, 0.5),
            Point::new(1.5, 0.5),
            Point::new(1.5, 1.5),
            Point::new(0.5, 1.5),
        ];
        assert!((convex_overlap_area(&a, &b) - 0.25).abs() < 1e-12);
        // Disjoint
        let c = [
            Point::new(2.0, 2.0),
            Point::new(3.0, 2.0),
            Point::new(3.0, 3.0),
            Point::new(2.0, 3.0),
        ];
        assert!(convex_overlap_area(&a, &c).abs() < 1e-12);
    }

    #[test]
    fn line_triangle_length_central_cut() {
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 1.0)];
        // Horizontal line through y = 0.5 crosses at widths scaled by half.
        let len = line_triangle_intersection_length(
            Point::new(-1.0, 0.5),
            Point::new(2.0, 0.5),
            &tri,
        );
        assert!((len - 0.5).abs() < 1e-9);
    }

    #[test]
    fn disk_chord_lengths() {
        let c = Point::new(0.0, 0.0);
        let l = line_disk_intersection_length(Point::new(-2.0, 0.0), Point::new(2.0, 0.0), c, 1.0);
        assert!((l - 2.0).abs() < 1e-12);
        let l2 = line_disk_intersection_length(Point::new(-2.0, 2.0), Point::new(2.0, 2.0), c, 1.0);
        assert!(l2.abs() < 1e-12);
    }

    #[test]
    fn segment_predicates() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 1.0);
        let c = Point::new(0.0, 1.0);
        let d = Point::new(1.0, 0.0);
        assert!(segments_intersect(a, b, c, d));
        assert!(!segments_intersect(a, c, d, b));
        assert!(!segments_cross_excluding_endpoints(a, b, b, d, 1e-12));
    }
}
