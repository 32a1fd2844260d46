//! Offline analysis over finished triangulations: BFS routing oracles,
//! greedy paths through the dual graph, an exact shortest-path reference,
//! fatness certification, stretch bounds, and coverage accounting.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::f64::consts::PI;

use crate::error::CoreError;
use crate::fm;
use crate::geom::{
    dist_point_segment, line_disk_intersection_length, line_triangle_intersection_length,
    point_in_triangle, segments_cross_excluding_endpoints, segments_intersect, triangle_metrics,
    Point,
};
use crate::msg::{RobotId, TriKey};
use crate::store::{DualGraph, EdgeClass, EdgeKind};

/// Fatness certificate of a triangulation: edge-length spread and minimum
/// angle, with the extreme edge lengths that produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FatnessParams {
    /// Longest over shortest edge, ≥ 1.
    pub rho: f64,
    /// Minimum angle over all triangles, radians.
    pub alpha: f64,
    pub r_max_observed: f64,
    pub r_min_observed: f64,
}

impl FatnessParams {
    pub fn new(rho: f64, alpha: f64) -> Result<FatnessParams, CoreError> {
        if !(rho >= 1.0) || !(alpha > 0.0) || alpha > PI / 3.0 + 1e-12 {
            return Err(CoreError::BadFatness { rho, alpha });
        }
        Ok(FatnessParams { rho, alpha, r_max_observed: rho, r_min_observed: 1.0 })
    }

    /// Measures fatness over ground-truth triangle corners.
    pub fn measure(triangles: &[[Point; 3]]) -> Result<FatnessParams, CoreError> {
        if triangles.is_empty() {
            return Err(CoreError::BadFatness { rho: f64::NAN, alpha: f64::NAN });
        }
        let mut longest: f64 = 0.0;
        let mut shortest = f64::INFINITY;
        let mut alpha = f64::INFINITY;
        for t in triangles {
            let m = triangle_metrics(t[0], t[1], t[2])?;
            alpha = alpha.min(m.min_angle);
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let len = a.dist(b);
                longest = longest.max(len);
                shortest = shortest.min(len);
            }
        }
        Ok(FatnessParams {
            rho: longest / shortest,
            alpha,
            r_max_observed: longest,
            r_min_observed: shortest,
        })
    }
}

/// Worst-case multiplicative stretch constants of greedy dual-graph routing
/// over a (ρ, α)-fat triangulation: `c` for the additive form
/// `d_T ≤ c·d + 2`, `c'` for the pure multiplicative form.
pub fn stretch_bounds(fat: &FatnessParams) -> Result<(f64, f64), CoreError> {
    if !(fat.alpha > 0.0) || !(fat.rho >= 1.0) {
        return Err(CoreError::BadFatness { rho: fat.rho, alpha: fat.alpha });
    }
    let s = fm::sin(fat.alpha / 2.0);
    let c = fm::floor(2.0 * PI / fat.alpha) * fat.rho / s;
    let c_prime = fm::floor(6.0 * PI / fat.alpha) * fat.rho / s;
    Ok((c, c_prime))
}

/// Lower bound on how much of a crossing line a fat triangle captures:
/// either the triangle itself holds a chord of at least
/// `r_min·sin(α/2)/2`, or the disk of radius `r_min/2` around one of its
/// vertices does.
///
/// Derivation: the line separates one vertex w; it crosses the two edges at
/// distances p, q from w, and the chord length is at least
/// `(p+q)·sin(θ_w/2) ≥ max(p,q)·sin(α/2)`. If `max(p,q) ≥ r_min/2` the
/// first branch holds. Otherwise both crossing points are inside the
/// `r_min/2` disk around w; with `d = dist(w, line) ≤ min(p,q)`, either
/// `d ≤ (r_min/2)·√(1 − sin²(α/2)/4)` and the disk chord `2·√((r_min/2)² −
/// d²)` reaches the bound, or `p, q ≥ d` are both large enough that the
/// triangle chord `(p+q)·sin(α/2)` does.
pub fn intersection_bound_threshold(r_min: f64, alpha: f64) -> f64 {
    r_min * fm::sin(alpha / 2.0) / 2.0
}

/// Checks the intersection lower-bound disjunction for one triangle/line
/// pair. The line is the infinite line through the two given points; it
/// must actually cross the triangle for the bound to be meaningful.
pub fn intersection_lower_bound(
    tri: &[Point; 3],
    line: (Point, Point),
    r_min: f64,
    alpha: f64,
) -> bool {
    let t = intersection_bound_threshold(r_min, alpha);
    let chord = line_triangle_intersection_length(line.0, line.1, tri);
    if chord >= t - 1e-12 {
        return true;
    }
    tri.iter().any(|v| {
        line_disk_intersection_length(line.0, line.1, *v, r_min / 2.0) >= t - 1e-12
    })
}

/// Waypoint placement rule for greedy paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaypointRule {
    /// Midpoint of each door edge (the physical default).
    SharedEdgeMidpoint,
    /// The door-edge endpoint farther from the straight start-goal line,
    /// for stressing the worst-case bound.
    WorstCaseVertex,
}

/// A route that follows a shortest dual-graph path, one waypoint per
/// intermediate triangle.
#[derive(Debug, Clone)]
pub struct GreedyPath {
    pub waypoints: Vec<Point>,
    pub dual_sequence: Vec<TriKey>,
    pub length: f64,
}

/// Triangulation geometry handed to the routing analysis: each triangle's
/// key and ground-truth corners.
#[derive(Debug, Clone, Default)]
pub struct TriangleSet {
    tris: BTreeMap<TriKey, [Point; 3]>,
}

impl TriangleSet {
    pub fn new() -> TriangleSet {
        TriangleSet::default()
    }

    pub fn insert(&mut self, key: TriKey, pts: [Point; 3]) {
        self.tris.insert(key, pts);
    }

    pub fn points(&self, key: &TriKey) -> Option<&[Point; 3]> {
        self.tris.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TriKey, &[Point; 3])> {
        self.tris.iter()
    }

    pub fn len(&self) -> usize {
        self.tris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    /// The triangle containing a point (ties broken by smaller key).
    pub fn locate(&self, p: Point) -> Option<TriKey> {
        self.tris
            .iter()
            .find(|(_, t)| point_in_triangle(p, t[0], t[1], t[2]))
            .map(|(k, _)| *k)
    }

    pub fn centroid(&self, key: &TriKey) -> Option<Point> {
        self.points(key).map(|t| (t[0] + t[1] + t[2]) * (1.0 / 3.0))
    }
}

/// Exact BFS hop distances from a goal triangle over the dual graph;
/// unreachable triangles are absent from the map.
pub fn dual_bfs(dual: &DualGraph, goal: TriKey) -> Result<BTreeMap<TriKey, u32>, CoreError> {
    if !dual.contains(&goal) {
        return Err(CoreError::UnknownTriangle { key: goal });
    }
    Ok(dual.bfs(goal))
}

/// Shortest dual path between the triangles containing `s` and `g`
/// (lexicographic tie-break), with straight segments between waypoints.
pub fn greedy_path(
    s: Point,
    g: Point,
    tris: &TriangleSet,
    dual: &DualGraph,
    rule: WaypointRule,
) -> Result<GreedyPath, CoreError> {
    let start = tris.locate(s).ok_or(CoreError::OutsideTriangulation)?;
    let goal = tris.locate(g).ok_or(CoreError::OutsideTriangulation)?;
    if start == goal {
        return Ok(GreedyPath {
            waypoints: alloc::vec![s, g],
            dual_sequence: alloc::vec![start],
            length: s.dist(g),
        });
    }
    // BFS with sorted adjacency fixes parents deterministically and yields
    // the lexicographically smallest shortest sequence.
    let mut parent: BTreeMap<TriKey, TriKey> = BTreeMap::new();
    let mut seen: BTreeSet<TriKey> = BTreeSet::new();
    let mut q = VecDeque::new();
    seen.insert(start);
    q.push_back(start);
    while let Some(cur) = q.pop_front() {
        if cur == goal {
            break;
        }
        for &n in dual.neighbors(&cur) {
            if seen.insert(n) {
                parent.insert(n, cur);
                q.push_back(n);
            }
        }
    }
    if !seen.contains(&goal) {
        return Err(CoreError::Unreachable);
    }
    let mut seq = alloc::vec![goal];
    let mut cur = goal;
    while cur != start {
        cur = parent[&cur];
        seq.push(cur);
    }
    seq.reverse();

    let mut waypoints = alloc::vec![s];
    for win in seq.windows(2) {
        let (a, b) = (win[0], win[1]);
        let edge = a.shared_edge(&b).expect("consecutive dual nodes share an edge");
        let (pa, pb) = edge_points(tris, a, edge);
        let wp = match rule {
            WaypointRule::SharedEdgeMidpoint => (pa + pb) * 0.5,
            WaypointRule::WorstCaseVertex => {
                if dist_point_segment(pa, s, g) >= dist_point_segment(pb, s, g) {
                    pa
                } else {
                    pb
                }
            }
        };
        waypoints.push(wp);
    }
    waypoints.push(g);
    let length = waypoints.windows(2).map(|w| w[0].dist(w[1])).sum();
    Ok(GreedyPath { waypoints, dual_sequence: seq, length })
}

fn edge_points(tris: &TriangleSet, key: TriKey, edge: (RobotId, RobotId)) -> (Point, Point) {
    let pts = tris.points(&key).expect("triangle present");
    let idx = |id: RobotId| key.0.iter().position(|v| *v == id).expect("edge endpoint in key");
    (pts[idx(edge.0)], pts[idx(edge.1)])
}

/// Euclidean shortest path length between two free-space points, via the
/// visibility graph over reflex corners of the workspace.
pub fn exact_shortest_path(
    s: Point,
    g: Point,
    w: &crate::env::WorkspacePolygon,
) -> Result<f64, CoreError> {
    if s.dist(g) < 1e-15 {
        return Ok(0.0);
    }
    let mut nodes = alloc::vec![s, g];
    nodes.extend(reflex_vertices(w));
    let n = nodes.len();
    let visible = |a: Point, b: Point| -> bool {
        if a.dist(b) < 1e-15 {
            return true;
        }
        for &(wa, wb) in w.wall_segments() {
            if segments_cross_excluding_endpoints(a, b, wa, wb, 1e-9) {
                return false;
            }
        }
        // Guard against segments that skirt outside through a reflex notch.
        let mid = (a + b) * 0.5;
        w.contains(mid) || w.wall_clearance(mid) < 1e-9
    };
    let mut adj: Vec<Vec<(usize, f64)>> = alloc::vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if visible(nodes[i], nodes[j]) {
                let d = nodes[i].dist(nodes[j]);
                adj[i].push((j, d));
                adj[j].push((i, d));
            }
        }
    }
    // Dijkstra from node 0 (s) to node 1 (g).
    let mut dist = alloc::vec![f64::INFINITY; n];
    dist[0] = 0.0;
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    heap.push(Reverse((0, 0)));
    while let Some(Reverse((dk, u))) = heap.pop() {
        let du = f64::from_bits(dk);
        if du > dist[u] + 1e-15 {
            continue;
        }
        if u == 1 {
            return Ok(dist[1]);
        }
        for &(v, len) in &adj[u] {
            let nd = du + len;
            if nd < dist[v] - 1e-15 {
                dist[v] = nd;
                heap.push(Reverse((nd.to_bits(), v)));
            }
        }
    }
    Err(CoreError::Unreachable)
}

/// Corners a shortest path can bend around: outer-boundary vertices whose
/// free-space interior angle exceeds π, plus every hole vertex that pokes
/// into free space.
fn reflex_vertices(w: &crate::env::WorkspacePolygon) -> Vec<Point> {
    // With the outer ring counterclockwise and holes clockwise, a corner is
    // reflex in free space exactly when the walk turns clockwise there.
    let mut out = Vec::new();
    let mut ringscan = |ring: &[Point]| {
        let n = ring.len();
        for i in 0..n {
            let prev = ring[(i + n - 1) % n];
            let cur = ring[i];
            let next = ring[(i + 1) % n];
            if (cur - prev).cross(next - cur) < 0.0 {
                out.push(cur);
            }
        }
    };
    ringscan(w.outer());
    for h in w.holes() {
        ringscan(h);
    }
    out
}

/// Coverage accounting for a finished (or stopped) run.
#[derive(Debug, Clone)]
pub struct CoverageReport {
    /// Sum of triangle areas, m².
    pub covered_area: f64,
    /// Area of the region behind the frontier (bounded by the base edge,
    /// frontier and wall edges, and physical walls), m².
    pub behind_frontier_area: f64,
    /// covered / behind-frontier.
    pub coverage_fraction: f64,
    /// Largest over smallest triangle area.
    pub observed_area_ratio: f64,
    /// The fatness-implied ceiling √3·ρ²/(2·sin α) on that ratio.
    pub area_ratio_bound: f64,
}

/// Measures covered area against the region behind the frontier. The
/// region is found by flood fill on a grid seeded from the staging side:
/// boundary edges of the triangulation (frontier, wall, and the base edge)
/// act as barriers, so the un-flooded free space is exactly the explored
/// side plus any wall standoff the robots left uncovered.
pub fn coverage_metrics(
    tris: &TriangleSet,
    edge_classes: &[EdgeClass],
    positions: &BTreeMap<RobotId, Point>,
    base_edge: [Point; 2],
    staging_seed: Point,
    w: &crate::env::WorkspacePolygon,
    grid_res: f64,
    fat: &FatnessParams,
) -> Result<CoverageReport, CoreError> {
    let mut covered = 0.0;
    let mut area_min = f64::INFINITY;
    let mut area_max: f64 = 0.0;
    for (_, pts) in tris.iter() {
        let m = triangle_metrics(pts[0], pts[1], pts[2])?;
        covered += m.area;
        area_min = area_min.min(m.area);
        area_max = area_max.max(m.area);
    }

    // Barriers: every boundary (non-internal) edge of the triangulation,
    // plus the base edge itself.
    let mut barriers: Vec<(Point, Point)> = alloc::vec![(base_edge[0], base_edge[1])];
    for ec in edge_classes {
        if ec.kind == EdgeKind::Internal {
            continue;
        }
        let (Some(a), Some(b)) = (positions.get(&ec.edge.0), positions.get(&ec.edge.1)) else {
            continue;
        };
        barriers.push((*a, *b));
    }

    let (lo, hi) = w.bounding_box();
    let nx = ((hi.x - lo.x) / grid_res).ceil() as usize + 1;
    let ny = ((hi.y - lo.y) / grid_res).ceil() as usize + 1;
    let cell = |ix: usize, iy: usize| -> Point {
        Point::new(lo.x + (ix as f64 + 0.5) * grid_res, lo.y + (iy as f64 + 0.5) * grid_res)
    };
    let idx = |ix: usize, iy: usize| iy * nx + ix;
    let mut free = alloc::vec![false; nx * ny];
    let mut total_free_cells = 0usize;
    for iy in 0..ny {
        for ix in 0..nx {
            if w.contains(cell(ix, iy)) {
                free[idx(ix, iy)] = true;
                total_free_cells += 1;
            }
        }
    }
    // Flood from the staging seed; a move is blocked when the step segment
    // crosses a barrier edge.
    let seed_ix = (((staging_seed.x - lo.x) / grid_res - 0.5).round().max(0.0) as usize).min(nx - 1);
    let seed_iy = (((staging_seed.y - lo.y) / grid_res - 0.5).round().max(0.0) as usize).min(ny - 1);
    let mut flooded = alloc::vec![false; nx * ny];
    let mut q = VecDeque::new();
    if free[idx(seed_ix, seed_iy)] {
        flooded[idx(seed_ix, seed_iy)] = true;
        q.push_back((seed_ix, seed_iy));
    }
    while let Some((ix, iy)) = q.pop_front() {
        let from = cell(ix, iy);
        let neighbors = [
            (ix.wrapping_sub(1), iy),
            (ix + 1, iy),
            (ix, iy.wrapping_sub(1)),
            (ix, iy + 1),
        ];
        for (jx, jy) in neighbors {
            if jx >= nx || jy >= ny {
                continue;
            }
            let j = idx(jx, jy);
            if !free[j] || flooded[j] {
                continue;
            }
            let to = cell(jx, jy);
            if barriers.iter().any(|&(a, b)| segments_intersect(from, to, a, b)) {
                continue;
            }
            flooded[j] = true;
            q.push_back((jx, jy));
        }
    }
    let flooded_cells = flooded.iter().filter(|f| **f).count();
    let cell_area = grid_res * grid_res;
    let behind = (total_free_cells - flooded_cells) as f64 * cell_area;

    let bound = fm::sqrt(3.0) * fat.rho * fat.rho / (2.0 * fm::sin(fat.alpha));
    Ok(CoverageReport {
        covered_area: covered,
        behind_frontier_area: behind,
        coverage_fraction: if behind > 0.0 { covered / behind } else { 0.0 },
        observed_area_ratio: if area_min > 0.0 { area_max / area_min } else { f64::INFINITY },
        area_ratio_bound: bound,
    })
}
