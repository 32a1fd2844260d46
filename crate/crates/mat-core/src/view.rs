//! Neighbor graph construction and two-hop angle sharing.
//!
//! A robot's view of round t is built from ground truth by the scheduler
//! (range + line of sight), but only quantized bearings ever reach the
//! controller. Everything else a controller knows arrives in messages.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::angle::{quantize_bearing, sector_center, sector_count, sector_index, Angle, InnerAngles};
use crate::env::{line_of_sight, Pose, RobotSpec, WorkspacePolygon};
use crate::msg::{RobotId, RoundMessage};

/// Wire sector count used when the platform senses exact bearings
/// (bearing_resolution = 0): messages still carry byte-sized sectors.
pub const EXACT_WIRE_SECTORS: u32 = 256;

/// One sensed neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborInfo {
    pub id: RobotId,
    /// Bearing in the observer's frame, quantized at the platform
    /// resolution (exact if the resolution is 0).
    pub bearing: Angle,
    /// Neighbor's frame orientation relative to the observer's frame,
    /// derivable as B_v(u) + π − B_u(v).
    pub ori: Angle,
}

/// Everything a robot can sense about its neighborhood this round.
#[derive(Debug, Clone, Default)]
pub struct NeighborView {
    entries: Vec<NeighborInfo>,
}

impl NeighborView {
    /// Assembles a view from explicit entries (sorted by id); the scheduler
    /// and synthetic test setups use this.
    pub fn from_entries(mut entries: Vec<NeighborInfo>) -> NeighborView {
        entries.sort_by_key(|e| e.id);
        NeighborView { entries }
    }

    pub fn entries(&self) -> &[NeighborInfo] {
        &self.entries
    }

    pub fn bearing_to(&self, id: RobotId) -> Option<Angle> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.bearing)
    }

    pub fn contains(&self, id: RobotId) -> bool {
        self.entries.iter().any(|e| e.id == id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = RobotId> + '_ {
        self.entries.iter().map(|e| e.id)
    }
}

/// Number of wire sectors for a platform resolution.
pub fn wire_sectors(spec: &RobotSpec) -> u32 {
    if spec.bearing_resolution > 0.0 {
        sector_count(spec.bearing_resolution).unwrap_or(EXACT_WIRE_SECTORS)
    } else {
        EXACT_WIRE_SECTORS
    }
}

/// Wire sector index of a local bearing.
pub fn to_wire_sector(bearing: Angle, sectors: u32) -> u8 {
    sector_index(bearing, sectors) as u8
}

/// Center angle of a wire sector.
pub fn from_wire_sector(sector: u8, sectors: u32) -> Angle {
    sector_center(sector as u32, sectors)
}

/// Builds every robot's neighbor view: {u,v} are neighbors iff their
/// distance is at most r_max and no wall blocks the segment between them.
/// Matches the brute-force all-pairs oracle by construction.
pub fn build_neighbor_graph(
    poses: &[(RobotId, Pose)],
    spec: &RobotSpec,
    w: &WorkspacePolygon,
) -> BTreeMap<RobotId, NeighborView> {
    let mut views: BTreeMap<RobotId, NeighborView> = BTreeMap::new();
    for (id, _) in poses {
        views.insert(*id, NeighborView::default());
    }
    for i in 0..poses.len() {
        for j in i + 1..poses.len() {
            let (ia, pa) = poses[i];
            let (ib, pb) = poses[j];
            if pa.position().dist(pb.position()) > spec.r_max {
                continue;
            }
            if !line_of_sight(pa.position(), pb.position(), w) {
                continue;
            }
            let b_ab = measure_bearing(&pa, pb.position(), spec);
            let b_ba = measure_bearing(&pb, pa.position(), spec);
            let ori_ab = Angle::new(b_ba.radians() + core::f64::consts::PI - b_ab.radians());
            let ori_ba = Angle::new(b_ab.radians() + core::f64::consts::PI - b_ba.radians());
            views.get_mut(&ia).unwrap().entries.push(NeighborInfo {
                id: ib,
                bearing: b_ab,
                ori: ori_ab,
            });
            views.get_mut(&ib).unwrap().entries.push(NeighborInfo {
                id: ia,
                bearing: b_ba,
                ori: ori_ba,
            });
        }
    }
    for v in views.values_mut() {
        v.entries.sort_by_key(|e| e.id);
    }
    views
}

/// Sensed bearing of a point in the robot frame, at platform resolution.
pub fn measure_bearing(pose: &Pose, target: crate::geom::Point, spec: &RobotSpec) -> Angle {
    let exact = pose.bearing_to(target);
    if spec.bearing_resolution > 0.0 {
        quantize_bearing(exact, spec.bearing_resolution).unwrap_or(exact)
    } else {
        exact
    }
}

/// Looks up the bearing `from` announced toward `to` in `from`'s last
/// broadcast angle table.
pub fn announced_bearing(
    inbox: &BTreeMap<RobotId, RoundMessage>,
    from: RobotId,
    to: RobotId,
    sectors: u32,
) -> Option<Angle> {
    let msg = inbox.get(&from)?;
    msg.angle_table
        .iter()
        .find(|e| e.id == to)
        .map(|e| from_wire_sector(e.sector, sectors))
}

/// Inner angles of candidate triangle Δ(me, l, r), evaluated purely from
/// the two neighbors' announced angle tables.
pub fn inner_angles_for(
    inbox: &BTreeMap<RobotId, RoundMessage>,
    me: RobotId,
    l: RobotId,
    r: RobotId,
    sectors: u32,
) -> Option<InnerAngles> {
    let b_l_u = announced_bearing(inbox, l, me, sectors)?;
    let b_l_r = announced_bearing(inbox, l, r, sectors)?;
    let b_r_u = announced_bearing(inbox, r, me, sectors)?;
    let b_r_l = announced_bearing(inbox, r, l, sectors)?;
    Some(crate::angle::inner_angles_from_bearings(b_l_u, b_l_r, b_r_u, b_r_l))
}

/// All inner angles this robot can evaluate from announced tables: one
/// entry per ordered pair (l, r) of mutually adjacent neighbors. Work is
/// O(deg²) in the robot's degree.
pub fn two_hop_angles(
    view: &NeighborView,
    inbox: &BTreeMap<RobotId, RoundMessage>,
    me: RobotId,
    sectors: u32,
) -> BTreeMap<(RobotId, RobotId), InnerAngles> {
    let mut out = BTreeMap::new();
    let ids: Vec<RobotId> = view.ids().collect();
    for &l in &ids {
        for &r in &ids {
            if l >= r {
                continue;
            }
            if let Some(angles) = inner_angles_for(inbox, me, l, r, sectors) {
                out.insert((l, r), angles);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use alloc::vec;
    use core::f64::consts::PI;

    fn open_room() -> WorkspacePolygon {
        WorkspacePolygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(5.0, 0.0),
                Point::new(5.0, 5.0),
                Point::new(0.0, 5.0),
            ],
            vec![],
            [Point::new(0.3, 2.3), Point::new(0.3, 2.7)],
        )
        .unwrap()
    }

    fn spec(res: f64) -> RobotSpec {
        RobotSpec {
            diameter: 0.1,
            r_max: 1.0,
            bearing_resolution: res,
            wall_sense_range: 0.5,
            speed: 0.2,
        }
    }

    #[test]
    fn adjacency_by_range() {
        let w = open_room();
        let sp = spec(0.0);
        let poses = vec![
            (RobotId(0), Pose::new(1.0, 1.0, 0.0)),
            (RobotId(1), Pose::new(1.5, 1.0, 0.0)),
            (RobotId(2), Pose::new(2.02, 1.0, 0.0)),
        ];
        let views = build_neighbor_graph(&poses, &sp, &w);
        assert!(views[&RobotId(0)].contains(RobotId(1)));
        assert!(!views[&RobotId(0)].contains(RobotId(2)), "1.02·r_max apart");
        assert!(views[&RobotId(1)].contains(RobotId(2)));
    }

    #[test]
    fn adjacency_matches_all_pairs_oracle_in_l_room() {
        use rand::{Rng, SeedableRng};
        let w = WorkspacePolygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(3.0, 0.0),
                Point::new(3.0, 1.0),
                Point::new(1.5, 1.0),
                Point::new(1.5, 2.0),
                Point::new(0.0, 2.0),
            ],
            vec![],
            [Point::new(0.3, 0.5), Point::new(0.3, 0.9)],
        )
        .unwrap();
        let sp = spec(PI / 8.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut poses = Vec::new();
        let mut id = 0;
        while poses.len() < 20 {
            let p = Point::new(rng.random_range(0.1..2.9), rng.random_range(0.1..1.9));
            if w.contains(p) && w.wall_clearance(p) > 0.05 {
                poses.push((RobotId(id), Pose::new(p.x, p.y, rng.random_range(0.0..6.28))));
                id += 1;
            }
        }
        let views = build_neighbor_graph(&poses, &sp, &w);
        for (ia, pa) in &poses {
            for (ib, pb) in &poses {
                if ia == ib {
                    continue;
                }
                let expral = pa.position().dist(pb.position()) <= sp.r_max
                    && line_of_sight(pa.position(), pb.position(), &w);
                assert_eq!(views[ia].contains(*ib), expral);
            }
        }
    }

    #[test]
    fn ori_identity_holds() {
        let w = open_room();
        let sp = spec(0.0);
        let poses = vec![
            (RobotId(0), Pose::new(1.0, 1.0, 0.7)),
            (RobotId(1), Pose::new(1.6, 1.4, 2.1)),
        ];
        let views = build_neighbor_graph(&poses, &sp, &w);
        let e01 = views[&RobotId(0)].entries()[0];
        // Ori in the observer frame equals the heading difference expressed
        // by the B_v(u) + π − B_u(v) identity.
        let b01 = views[&RobotId(0)].entries()[0].bearing;
        let b10 = views[&RobotId(1)].entries()[0].bearing;
        let expect = Angle::new(b10.radians() + PI - b01.radians());
        assert!((e01.ori.radians() - expect.radians()).abs() < 1e-12);
    }

    #[test]
    fn two_hop_equilateral_within_sector_error() {
        let w = open_room();
        let sp = spec(PI / 8.0);
        let s = 0.6;
        let poses = vec![
            (RobotId(0), Pose::new(2.0, 2.0, 0.3)),
            (RobotId(1), Pose::new(2.0 + s, 2.0, 1.1)),
            (RobotId(2), Pose::new(2.0 + s / 2.0, 2.0 + s * 0.8660254, 4.0)),
        ];
        let views = build_neighbor_graph(&poses, &sp, &w);
        let sectors = wire_sectors(&sp);
        // Feed robot 2 the other robots' announced tables.
        let mut inbox = BTreeMap::new();
        for id in [RobotId(0), RobotId(1)] {
            let mut m = RoundMessage::empty(id, crate::msg::FsmState::Frontier);
            for e in views[&id].entries() {
                m.angle_table.push(crate::msg::AngleEntry {
                    id: e.id,
                    sector: to_wire_sector(e.bearing, sectors),
                });
            }
            inbox.insert(id, m);
        }
        let got = two_hop_angles(&views[&RobotId(2)], &inbox, RobotId(2), sectors);
        let angles = got[&(RobotId(0), RobotId(1))];
        assert!((angles.theta_l - PI / 3.0).abs() <= PI / 8.0 + 1e-9);
        assert!((angles.theta_r - PI / 3.0).abs() <= PI / 8.0 + 1e-9);
    }

    #[test]
    fn two_hop_pair_absent_without_mutual_adjacency() {
        let w = open_room();
        let sp = spec(0.0);
        // Robots 0 and 1 are both within range of 2 but not of each other.
        let poses = vec![
            (RobotId(0), Pose::new(1.0, 2.0, 0.0)),
            (RobotId(1), Pose::new(2.9, 2.0, 0.0)),
            (RobotId(2), Pose::new(1.95, 2.0, 0.0)),
        ];
        let views = build_neighbor_graph(&poses, &sp, &w);
        let sectors = wire_sectors(&sp);
        let mut inbox = BTreeMap::new();
        for id in [RobotId(0), RobotId(1)] {
            let mut m = RoundMessage::empty(id, crate::msg::FsmState::Frontier);
            for e in views[&id].entries() {
                m.angle_table.push(crate::msg::AngleEntry {
                    id: e.id,
                    sector: to_wire_sector(e.bearing, sectors),
                });
            }
            inbox.insert(id, m);
        }
        let got = two_hop_angles(&views[&RobotId(2)], &inbox, RobotId(2), sectors);
        assert!(got.is_empty());
    }

    #[test]
    fn two_hop_matches_ground_truth_on_random_cluster() {
        use rand::{Rng, SeedableRng};
        let w = open_room();
        let sp = spec(PI / 8.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut poses = Vec::new();
        for id in 0..8u16 {
            poses.push((
                RobotId(id),
                Pose::new(
                    2.0 + rng.random_range(-0.45..0.45),
                    2.0 + rng.random_range(-0.45..0.45),
                    rng.random_range(0.0..6.28),
                ),
            ));
        }
        let views = build_neighbor_graph(&poses, &sp, &w);
        let sectors = wire_sectors(&sp);
        let mut inbox = BTreeMap::new();
        for (id, _) in &poses {
            let mut m = RoundMessage::empty(*id, crate::msg::FsmState::Frontier);
            for e in views[id].entries() {
                m.angle_table.push(crate::msg::AngleEntry {
                    id: e.id,
                    sector: to_wire_sector(e.bearing, sectors),
                });
            }
            inbox.insert(*id, m);
        }
        let me = RobotId(0);
        let got = two_hop_angles(&views[&me], &inbox, me, sectors);
        let pos: BTreeMap<RobotId, Point> =
            poses.iter().map(|(id, p)| (*id, p.position())).collect();
        for ((l, r), angles) in got {
            let exact_l = (pos[&me] - pos[&l]).cross(pos[&r] - pos[&l]);
            let theta_l_true = crate::fm::abs(crate::fm::atan2(
                exact_l,
                (pos[&me] - pos[&l]).dot(pos[&r] - pos[&l]),
            ));
            // Each announced bearing is off by at most half a sector, so the
            // derived angle is off by at most one sector width.
            assert!(
                (angles.theta_l - theta_l_true).abs() <= PI / 8.0 + 1e-9,
                "θ_L for pair {l}-{r}"
            );
        }
    }
}
