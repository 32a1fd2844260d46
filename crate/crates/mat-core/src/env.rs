//! Polygonal workspace: walls, line of sight, wall sensing, and
//! collision-clamped motion integration.
//!
//! The workspace is immutable after construction; every query here is
//! read-only and every update is a pure function of its inputs.

use alloc::vec::Vec;

use crate::angle::{quantize_bearing, Angle};
use crate::error::CoreError;
use crate::geom::{
    closest_point_on_segment, dist_point_segment, polygon_signed_area, segments_intersect, Point,
};

/// Contact threshold slack above δ/2, in meters.
pub const CONTACT_EPS: f64 = 1e-9;

/// Extra clearance the motion clamp keeps beyond δ/2 so a sliding robot
/// does not sit exactly on the contact threshold.
pub const CLAMP_MARGIN: f64 = 1e-4;

/// Physical robot parameters shared by the whole population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotSpec {
    /// Robot diameter δ, m.
    pub diameter: f64,
    /// Line-of-sight communication range, m.
    pub r_max: f64,
    /// Bearing quantization resolution, radians. `0.0` means exact bearings.
    pub bearing_resolution: f64,
    /// Short-range wall sensor reach, m.
    pub wall_sense_range: f64,
    /// Maximum forward speed, m/s.
    pub speed: f64,
}

impl RobotSpec {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.diameter > 0.0) {
            return Err(CoreError::BadConfig("diameter must be positive"));
        }
        if !(self.r_max > self.diameter) {
            return Err(CoreError::BadConfig("r_max must exceed the robot diameter"));
        }
        if self.bearing_resolution < 0.0 {
            return Err(CoreError::BadConfig("bearing_resolution must be >= 0"));
        }
        if self.bearing_resolution > 0.0 {
            crate::angle::sector_count(self.bearing_resolution)?;
        }
        if !(self.wall_sense_range >= self.diameter / 2.0) {
            return Err(CoreError::BadConfig("wall_sense_range must cover the contact radius"));
        }
        if !(self.speed > 0.0) {
            return Err(CoreError::BadConfig("speed must be positive"));
        }
        Ok(())
    }

    /// Shortest admissible non-boundary triangulation edge: a robot must fit
    /// between the two edge robots.
    pub fn r_min(&self) -> f64 {
        2.0 * self.diameter
    }
}

/// Ground-truth pose. Controllers never read this; only sensors and the
/// analysis side do.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// World-frame heading, radians.
    pub heading: Angle,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Pose {
        Pose { x, y, heading: Angle::new(heading) }
    }

    #[inline]
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Bearing of `target` in this robot's frame.
    pub fn bearing_to(&self, target: Point) -> Angle {
        Angle::new(self.position().direction_to(target).radians() - self.heading.radians())
    }

    /// Converts a robot-frame bearing back to a world-frame direction.
    pub fn local_to_world(&self, local: Angle) -> Angle {
        Angle::new(local.radians() + self.heading.radians())
    }
}

/// Motion command produced by a controller for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionCmd {
    /// Turn rate, rad/s.
    pub turn_rate: f64,
    /// Forward speed along the post-turn heading, m/s.
    pub forward: f64,
}

impl MotionCmd {
    pub const HOLD: MotionCmd = MotionCmd { turn_rate: 0.0, forward: 0.0 };
}

/// Wall sensor reading, in the robot frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSense {
    /// Nearest wall point within the contact radius.
    pub contact: bool,
    /// Nearest wall point within the sensor range.
    pub near_wall: bool,
    /// Robot-frame bearing of the nearest wall point, when `near_wall`.
    pub wall_bearing: Option<Angle>,
}

impl WallSense {
    pub const NONE: WallSense = WallSense { contact: false, near_wall: false, wall_bearing: None };
}

/// The workspace: a simple outer boundary (counterclockwise), disjoint holes
/// (clockwise) strictly inside it, and the base edge where construction
/// starts.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspacePolygon {
    outer: Vec<Point>,
    holes: Vec<Vec<Point>>,
    base_edge: [Point; 2],
    segments: Vec<(Point, Point)>,
}

impl WorkspacePolygon {
    /// Builds and validates a workspace. Ring orientations are normalized
    /// (outer counterclockwise, holes clockwise).
    pub fn new(
        mut outer: Vec<Point>,
        mut holes: Vec<Vec<Point>>,
        base_edge: [Point; 2],
    ) -> Result<WorkspacePolygon, CoreError> {
        if outer.len() < 3 {
            return Err(CoreError::BadPolygon("outer boundary needs at least 3 vertices"));
        }
        if polygon_signed_area(&outer) < 0.0 {
            outer.reverse();
        }
        if ring_self_intersects(&outer) {
            return Err(CoreError::BadPolygon("outer boundary self-intersects"));
        }
        for h in holes.iter_mut() {
            if h.len() < 3 {
                return Err(CoreError::BadPolygon("hole needs at least 3 vertices"));
            }
            if polygon_signed_area(h) > 0.0 {
                h.reverse();
            }
            if ring_self_intersects(h) {
                return Err(CoreError::BadPolygon("hole self-intersects"));
            }
        }
        let mut segments = ring_segments(&outer);
        for h in &holes {
            if !h.iter().all(|p| point_in_ring(*p, &outer)) {
                return Err(CoreError::BadPolygon("hole not inside the outer boundary"));
            }
            segments.extend(ring_segments(h));
        }
        for (i, h) in holes.iter().enumerate() {
            for other in holes.iter().skip(i + 1) {
                for &(a, b) in &ring_segments(h) {
                    for &(c, d) in &ring_segments(other) {
                        if segments_intersect(a, b, c, d) {
                            return Err(CoreError::BadPolygon("holes intersect each other"));
                        }
                    }
                }
            }
        }
        let w = WorkspacePolygon { outer, holes, base_edge, segments };
        if !w.contains(base_edge[0]) || !w.contains(base_edge[1]) {
            return Err(CoreError::BadPolygon("base edge endpoint outside free space"));
        }
        Ok(w)
    }

    pub fn outer(&self) -> &[Point] {
        &self.outer
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.holes
    }

    pub fn base_edge(&self) -> [Point; 2] {
        self.base_edge
    }

    /// All wall segments (outer boundary plus holes).
    pub fn wall_segments(&self) -> &[(Point, Point)] {
        &self.segments
    }

    /// Free-space membership (inside outer, outside every hole).
    pub fn contains(&self, p: Point) -> bool {
        if !point_in_ring(p, &self.outer) {
            return false;
        }
        !self.holes.iter().any(|h| point_in_ring(p, h))
    }

    /// Distance from `p` to the nearest wall.
    pub fn wall_clearance(&self, p: Point) -> f64 {
        let mut d = f64::INFINITY;
        for &(a, b) in &self.segments {
            d = d.min(dist_point_segment(p, a, b));
        }
        d
    }

    /// Nearest wall point to `p`.
    pub fn nearest_wall_point(&self, p: Point) -> Point {
        let mut best = self.segments[0].0;
        let mut d = f64::INFINITY;
        for &(a, b) in &self.segments {
            let q = closest_point_on_segment(p, a, b);
            let dq = p.dist(q);
            if dq < d {
                d = dq;
                best = q;
            }
        }
        best
    }

    /// Total free-space area (outer area minus holes).
    pub fn free_area(&self) -> f64 {
        let mut a = polygon_signed_area(&self.outer);
        for h in &self.holes {
            a += polygon_signed_area(h); // holes are clockwise, negative
        }
        a
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = self.outer[0];
        let mut hi = self.outer[0];
        for p in &self.outer {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }
}

fn ring_segments(ring: &[Point]) -> Vec<(Point, Point)> {
    let n = ring.len();
    (0..n).map(|i| (ring[i], ring[(i + 1) % n])).collect()
}

fn ring_self_intersects(ring: &[Point]) -> bool {
    let segs = ring_segments(ring);
    let n = segs.len();
    for i in 0..n {
        for j in i + 1..n {
            // Skip adjacent segments (they share an endpoint).
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                return true;
            }
        }
    }
    false
}

/// Even-odd ray cast against a single ring.
fn point_in_ring(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = ring[i];
        let b = ring[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// True iff the open segment between `p` and `q` crosses no wall.
pub fn line_of_sight(p: Point, q: Point, w: &WorkspacePolygon) -> bool {
    for &(a, b) in w.wall_segments() {
        if segments_intersect(p, q, a, b) {
            return false;
        }
    }
    true
}

/// Contact and short-range wall sensing. Neighboring robots are invisible to
/// this sensor; only walls register. The reported bearing is quantized at the
/// platform's bearing resolution.
pub fn sense_walls(pose: &Pose, spec: &RobotSpec, w: &WorkspacePolygon) -> WallSense {
    let p = pose.position();
    let d = w.wall_clearance(p);
    if d > spec.wall_sense_range {
        return WallSense::NONE;
    }
    let nearest = w.nearest_wall_point(p);
    let mut bearing = pose.bearing_to(nearest);
    if spec.bearing_resolution > 0.0 {
        if let Ok(q) = quantize_bearing(bearing, spec.bearing_resolution) {
            bearing = q;
        }
    }
    WallSense {
        contact: d <= spec.diameter / 2.0 + CONTACT_EPS,
        near_wall: true,
        wall_bearing: Some(bearing),
    }
}

/// Unicycle update: turn first, then translate along the new heading. If the
/// translation would take the center within δ/2 of a wall, the motion is
/// clamped so the robot slides along the clearance boundary.
pub fn integrate_motion(
    pose: &Pose,
    cmd: MotionCmd,
    dt: f64,
    spec: &RobotSpec,
    w: &WorkspacePolygon,
) -> Pose {
    debug_assert!(dt > 0.0);
    let heading = pose.heading.add(cmd.turn_rate * dt);
    let forward = cmd.forward.clamp(-spec.speed, spec.speed);
    let step = forward * dt;
    let dir = Point::from_angle(heading);
    let mut target = pose.position() + dir * step;
    let clear = spec.diameter / 2.0;
    if w.wall_clearance(target) < clear {
        // Project back out along the wall normal; a couple of iterations
        // settle corners where two constraints are active.
        for _ in 0..3 {
            let d = w.wall_clearance(target);
            if d >= clear {
                break;
            }
            let foot = w.nearest_wall_point(target);
            let away = target - foot;
            let n = away.norm();
            if n < 1e-12 {
                // Center on the wall; push back toward the previous position.
                target = pose.position();
                break;
            }
            target = foot + away * ((clear + CLAMP_MARGIN) / n);
        }
        if w.wall_clearance(target) < clear - 1e-9 || !w.contains(target) {
            target = pose.position();
        }
    }
    if !w.contains(target) {
        target = pose.position();
    }
    Pose { x: target.x, y: target.y, heading }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn rect(w: f64, h: f64) -> WorkspacePolygon {
        WorkspacePolygon::new(
            alloc::vec![
                Point::new(0.0, 0.0),
                Point::new(w, 0.0),
                Point::new(w, h),
                Point::new(0.0, h)
            ],
            alloc::vec![],
            [Point::new(0.3, h / 2.0 - 0.2), Point::new(0.3, h / 2.0 + 0.2)],
        )
        .unwrap()
    }

    fn spec() -> RobotSpec {
        RobotSpec {
            diameter: 0.1,
            r_max: 1.0,
            bearing_resolution: 0.0,
            wall_sense_range: 0.5,
            speed: 0.2,
        }
    }

    #[test]
    fn los_in_convex_room() {
        let w = rect(3.0, 2.0);
        assert!(line_of_sight(Point::new(0.5, 0.5), Point::new(2.5, 1.5), &w));
    }

    #[test]
    fn los_blocked_by_hole() {
        let w = WorkspacePolygon::new(
            alloc::vec![
                Point::new(0.0, 0.0),
                Point::new(3.0, 0.0),
                Point::new(3.0, 2.0),
                Point::new(0.0, 2.0)
            ],
            alloc::vec![alloc::vec![
                Point::new(1.2, 0.8),
                Point::new(1.8, 0.8),
                Point::new(1.8, 1.2),
                Point::new(1.2, 1.2)
            ]],
            [Point::new(0.3, 0.8), Point::new(0.3, 1.2)],
        )
        .unwrap();
        assert!(!line_of_sight(Point::new(0.5, 1.0), Point::new(2.5, 1.0), &w));
        assert!(line_of_sight(Point::new(0.5, 0.3), Point::new(2.5, 0.3), &w));
    }

    #[test]
    fn los_matches_per_wall_sampling_oracle() {
        // Independent oracle: walk the segment in small steps and check every
        // sample stays in free space; compare over random pairs in an L-room.
        let w = WorkspacePolygon::new(
            alloc::vec![
                Point::new(0.0, 0.0),
                Point::new(3.0, 0.0),
                Point::new(3.0, 1.0),
                Point::new(1.5, 1.0),
                Point::new(1.5, 2.0),
                Point::new(0.0, 2.0)
            ],
            alloc::vec![],
            [Point::new(0.3, 0.5), Point::new(0.3, 0.9)],
        )
        .unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut tested = 0;
        while tested < 300 {
            let p = Point::new(rng.random_range(0.05..2.95), rng.random_range(0.05..1.95));
            let q = Point::new(rng.random_range(0.05..2.95), rng.random_range(0.05..1.95));
            if !w.contains(p) || !w.contains(q) {
                continue;
            }
            // Skip pairs whose segment passes within 2 mm of a wall; the
            // sampling oracle cannot resolve grazing contact.
            let steps = 400;
            let mut min_clear = f64::INFINITY;
            let mut oracle = true;
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                let s = p + (q - p) * t;
                if !w.contains(s) {
                    oracle = false;
                }
                min_clear = min_clear.min(w.wall_clearance(s));
            }
            if min_clear < 2e-3 {
                continue;
            }
            assert_eq!(line_of_sight(p, q, &w), oracle, "pair {p:?} {q:?}");
            tested += 1;
        }
    }

    #[test]
    fn los_symmetric() {
        let w = rect(3.0, 2.0);
        let p = Point::new(0.4, 0.4);
        let q = Point::new(2.2, 1.7);
        assert_eq!(line_of_sight(p, q, &w), line_of_sight(q, p, &w));
    }

    #[test]
    fn wall_sense_far_silent() {
        let w = rect(4.0, 4.0);
        let s = sense_walls(&Pose::new(2.0, 2.0, 0.0), &spec(), &w);
        assert_eq!(s, WallSense::NONE);
    }

    #[test]
    fn wall_sense_contact_at_half_diameter() {
        let w = rect(4.0, 4.0);
        let sp = spec();
        let s = sense_walls(&Pose::new(2.0, 0.05, PI / 2.0), &sp, &w);
        assert!(s.contact && s.near_wall);
        // Wall foot is straight below the robot; robot faces +y, so the wall
        // reads at local bearing π.
        assert!((s.wall_bearing.unwrap().radians() - PI).abs() < 1e-9);
    }

    #[test]
    fn wall_sense_flips_exactly_at_range() {
        let w = rect(4.0, 4.0);
        let sp = spec();
        for i in 1..=10 {
            let d = i as f64 * 0.1;
            let s = sense_walls(&Pose::new(2.0, d, 0.0), &sp, &w);
            assert_eq!(s.near_wall, d <= sp.wall_sense_range + 1e-12, "distance {d}");
        }
    }

    #[test]
    fn motion_identity_and_straight_line() {
        let w = rect(4.0, 4.0);
        let sp = spec();
        let p0 = Pose::new(2.0, 2.0, 0.0);
        let p1 = integrate_motion(&p0, MotionCmd::HOLD, 0.1, &sp, &w);
        assert_eq!(p0, p1);
        let p2 = integrate_motion(&p0, MotionCmd { turn_rate: 0.0, forward: 0.2 }, 0.5, &sp, &w);
        assert!((p2.x - 2.1).abs() < 1e-12 && (p2.y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn motion_slides_along_wall() {
        let w = rect(4.0, 4.0);
        let sp = spec();
        // Drive into the bottom wall at 45°; expect a tangential slide that
        // keeps clearance, matching the closest-point projection oracle.
        let mut pose = Pose::new(2.0, 0.06, -PI / 4.0);
        for _ in 0..20 {
            pose = integrate_motion(&pose, MotionCmd { turn_rate: 0.0, forward: 0.2 }, 0.1, &sp, &w);
            assert!(w.wall_clearance(pose.position()) >= sp.diameter / 2.0 - 1e-9);
        }
        // The x component kept advancing while y stayed clamped.
        assert!(pose.x > 2.1);
        assert!(pose.y <= 0.06);
    }

    #[test]
    fn clearance_invariant_random_walk() {
        use rand::{Rng, SeedableRng};
        let w = rect(3.0, 2.0);
        let sp = spec();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut pose = Pose::new(1.5, 1.0, 0.0);
        for _ in 0..2000 {
            let cmd = MotionCmd {
                turn_rate: rng.random_range(-6.0..6.0),
                forward: rng.random_range(0.0..0.2),
            };
            pose = integrate_motion(&pose, cmd, 0.1, &sp, &w);
            assert!(w.wall_clearance(pose.position()) >= sp.diameter / 2.0 - 1e-9);
            assert!(w.contains(pose.position()));
        }
    }
}
