//! Synchronous lockstep scheduler: one round = deliver last round's
//! broadcasts, step every controller on its own view and inbox, integrate
//! motions, then admit the next robot if the injection policy allows.
//!
//! Controllers read only previous-round messages, so evaluation order never
//! affects outcomes; results are merged in robot-id order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::agent::{self, AgentEvent, AgentParams, AgentState, Fsm};
use crate::angle::Angle;
use crate::env::{integrate_motion, sense_walls, Pose, RobotSpec, WorkspacePolygon};
use crate::error::CoreError;
use crate::fm;
use crate::geom::Point;
use crate::msg::{
    decode, encode, id_width_for, size_budget, sorted_pair, FsmState, RobotId, RoundMessage,
    TableCaps, TriKey,
};
use crate::store::TriangleRecord;
use crate::view::{build_neighbor_graph, wire_sectors};

/// Immutable run configuration.
#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub workspace: WorkspacePolygon,
    pub spec: RobotSpec,
    pub n_robots: usize,
    pub params: AgentParams,
    pub caps: TableCaps,
    /// Robots in the navigating state allowed at once.
    pub max_navigators: usize,
    /// How far behind the base edge new robots appear, m.
    pub staging_offset: f64,
}

/// One robot's simulation slot.
#[derive(Debug, Clone)]
pub struct Robot {
    pub id: RobotId,
    pub pose: Pose,
    pub agent: AgentState,
    /// Broadcast produced last round, delivered to neighbors this round.
    pub outbox: RoundMessage,
    pub spawned: bool,
    pub spawn_round: Option<u64>,
}

/// What one round reported back.
#[derive(Debug, Clone, Default)]
pub struct RoundReport {
    pub spawned: Option<RobotId>,
    pub max_msg_bytes: usize,
    pub events: Vec<(RobotId, AgentEvent)>,
}

/// The full simulation state.
#[derive(Debug, Clone)]
pub struct World {
    cfg: WorldConfig,
    round: u64,
    robots: Vec<Robot>,
    next_spawn: usize,
    id_width: usize,
    sectors: u32,
    base_ids: [RobotId; 2],
    staging: Pose,
    max_msg_bytes_seen: usize,
}

impl World {
    /// Places the two base robots on the base edge (frontier-wall state,
    /// pointing into unexplored space, which lies left of the directed base
    /// edge) and queues the navigators behind it.
    pub fn new(cfg: WorldConfig) -> Result<World, CoreError> {
        cfg.spec.validate()?;
        if cfg.n_robots < 3 {
            return Err(CoreError::BadConfig("need at least 3 robots (2 base + 1 navigator)"));
        }
        if cfg.n_robots > u16::MAX as usize {
            return Err(CoreError::BadConfig("too many robots"));
        }
        if cfg.max_navigators == 0 {
            return Err(CoreError::BadConfig("max_navigators must be at least 1"));
        }
        let [p1, p2] = cfg.workspace.base_edge();
        let edge_len = p1.dist(p2);
        if edge_len > cfg.spec.r_max {
            return Err(CoreError::BadConfig("base edge longer than communication range"));
        }
        if edge_len < cfg.spec.r_min() {
            return Err(CoreError::BadConfig("base edge shorter than 2 robot diameters"));
        }
        let dir = p2 - p1;
        let normal_world = Angle::new(fm::atan2(dir.y, dir.x) + core::f64::consts::FRAC_PI_2);
        let mid = (p1 + p2) * 0.5;
        let staging_pos = mid + Point::from_angle(normal_world) * (-cfg.staging_offset);
        let clear = cfg.spec.diameter / 2.0;
        for (what, p) in [("base edge endpoint", p1), ("base edge endpoint", p2)] {
            let _ = what;
            if !cfg.workspace.contains(p) || cfg.workspace.wall_clearance(p) < clear {
                return Err(CoreError::BadConfig("base edge endpoint lacks wall clearance"));
            }
        }
        if !cfg.workspace.contains(staging_pos)
            || cfg.workspace.wall_clearance(staging_pos) < clear
        {
            return Err(CoreError::BadConfig("staging point behind base edge lacks clearance"));
        }

        let b0 = RobotId(0);
        let b1 = RobotId(1);
        let mut robots = Vec::with_capacity(cfg.n_robots);
        let heading = normal_world.radians();
        let base_robot = |id: RobotId, p: Point, left, right| Robot {
            id,
            pose: Pose::new(p.x, p.y, heading),
            agent: AgentState::base(left, right),
            outbox: RoundMessage::empty(id, FsmState::FrontierWall),
            spawned: true,
            spawn_round: Some(0),
        };
        robots.push(base_robot(b0, p1, None, Some(b1)));
        robots.push(base_robot(b1, p2, Some(b0), None));
        for i in 2..cfg.n_robots {
            let id = RobotId(i as u16);
            robots.push(Robot {
                id,
                pose: Pose::new(staging_pos.x, staging_pos.y, heading),
                agent: AgentState::navigator(),
                outbox: RoundMessage::empty(id, FsmState::NavInternal),
                spawned: false,
                spawn_round: None,
            });
        }

        let id_width = id_width_for(cfg.n_robots);
        let sectors = wire_sectors(&cfg.spec);
        let staging = Pose::new(staging_pos.x, staging_pos.y, heading);
        let mut world = World {
            cfg,
            round: 0,
            robots,
            next_spawn: 2,
            id_width,
            sectors,
            base_ids: [b0, b1],
            staging,
            max_msg_bytes_seen: 0,
        };
        world.spawn_if_allowed();
        Ok(world)
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn robots(&self) -> &[Robot] {
        &self.robots
    }

    pub fn base_ids(&self) -> [RobotId; 2] {
        self.base_ids
    }

    pub fn staging(&self) -> Pose {
        self.staging
    }

    pub fn sectors(&self) -> u32 {
        self.sectors
    }

    pub fn id_width(&self) -> usize {
        self.id_width
    }

    pub fn max_msg_bytes_seen(&self) -> usize {
        self.max_msg_bytes_seen
    }

    pub fn size_budget(&self) -> usize {
        size_budget(&self.cfg.caps, self.id_width)
    }

    /// All robots queued behind the base edge have been admitted and the
    /// last one has joined the structure.
    pub fn all_deployed(&self) -> bool {
        self.next_spawn >= self.cfg.n_robots
            && self
                .robots
                .iter()
                .filter(|r| r.spawned)
                .all(|r| r.agent.fsm.tag().is_stationary_member())
    }

    /// Runs one synchronous round.
    pub fn run_round(&mut self) -> Result<RoundReport, CoreError> {
        let poses: Vec<(RobotId, Pose)> =
            self.robots.iter().filter(|r| r.spawned).map(|r| (r.id, r.pose)).collect();
        let views = build_neighbor_graph(&poses, &self.cfg.spec, &self.cfg.workspace);
        let outboxes: BTreeMap<RobotId, RoundMessage> =
            self.robots.iter().filter(|r| r.spawned).map(|r| (r.id, r.outbox.clone())).collect();

        let mut report = RoundReport::default();
        let mut staged: Vec<(usize, agent::AgentStep)> = Vec::new();
        for (idx, robot) in self.robots.iter().enumerate() {
            if !robot.spawned {
                continue;
            }
            let view = &views[&robot.id];
            let inbox: BTreeMap<RobotId, RoundMessage> =
                view.ids().filter_map(|id| outboxes.get(&id).map(|m| (id, m.clone()))).collect();
            let input = agent::StepInput {
                id: robot.id,
                round: self.round,
                view,
                inbox: &inbox,
                wall: sense_walls(&robot.pose, &self.cfg.spec, &self.cfg.workspace),
                params: &self.cfg.params,
                sectors: self.sectors,
                caps: self.cfg.caps,
            };
            let step = agent::step(&robot.agent, &input);
            staged.push((idx, step));
        }

        for (idx, step) in staged {
            let bytes = encode(&step.message, &self.cfg.caps, self.id_width)?;
            report.max_msg_bytes = report.max_msg_bytes.max(bytes.len());
            // Deliver exactly what survives the wire.
            let delivered = decode(&bytes, &self.cfg.caps, self.id_width)?;
            let robot = &mut self.robots[idx];
            robot.pose = integrate_motion(
                &robot.pose,
                step.motion,
                self.cfg.params.dt,
                &self.cfg.spec,
                &self.cfg.workspace,
            );
            robot.agent = step.state;
            robot.outbox = delivered;
            for ev in step.events {
                report.events.push((robot.id, ev));
            }
        }
        self.max_msg_bytes_seen = self.max_msg_bytes_seen.max(report.max_msg_bytes);

        self.round += 1;
        report.spawned = self.spawn_if_allowed();
        Ok(report)
    }

    /// Admits the next queued robot when fewer than `max_navigators`
    /// robots are still in the navigating state.
    fn spawn_if_allowed(&mut self) -> Option<RobotId> {
        if self.next_spawn >= self.cfg.n_robots {
            return None;
        }
        let navigating = self
            .robots
            .iter()
            .filter(|r| r.spawned && matches!(r.agent.fsm, Fsm::NavInternal))
            .count();
        if navigating >= self.cfg.max_navigators {
            return None;
        }
        let robot = &mut self.robots[self.next_spawn];
        robot.spawned = true;
        robot.spawn_round = Some(self.round);
        robot.pose = self.staging;
        self.next_spawn += 1;
        Some(robot.id)
    }

    /// Ground-truth position of every spawned robot.
    pub fn positions(&self) -> BTreeMap<RobotId, Point> {
        self.robots
            .iter()
            .filter(|r| r.spawned)
            .map(|r| (r.id, r.pose.position()))
            .collect()
    }

    /// All triangle records across robots.
    pub fn records(&self) -> Vec<TriangleRecord> {
        let mut out = Vec::new();
        for r in &self.robots {
            for t in &r.agent.owned {
                out.push(TriangleRecord {
                    key: t.key,
                    owner: r.id,
                    hop: t.hop,
                    is_frontier: t.is_frontier,
                    kind: t.kind,
                    created_round: t.created_round,
                });
            }
        }
        out.sort_by_key(|r| r.key);
        out
    }

    /// Robots that are or ever were in wall contact states.
    pub fn wall_contact_set(&self) -> BTreeSet<RobotId> {
        self.robots.iter().filter(|r| r.agent.ever_wall).map(|r| r.id).collect()
    }

    /// Current communication edges (range + line of sight).
    pub fn primal_edges(&self) -> BTreeSet<(RobotId, RobotId)> {
        let poses: Vec<(RobotId, Pose)> =
            self.robots.iter().filter(|r| r.spawned).map(|r| (r.id, r.pose)).collect();
        let views = build_neighbor_graph(&poses, &self.cfg.spec, &self.cfg.workspace);
        let mut edges = BTreeSet::new();
        for (id, view) in &views {
            for other in view.ids() {
                edges.insert(sorted_pair(*id, other));
            }
        }
        edges
    }

    /// Ground-truth triangle corners for a record, from current poses
    /// (structure members never move once they own triangles).
    pub fn triangle_points(&self, key: &TriKey) -> Option<[Point; 3]> {
        let mut pts = [Point::default(); 3];
        for (i, id) in key.0.iter().enumerate() {
            let robot = self.robots.iter().find(|r| r.id == *id && r.spawned)?;
            pts[i] = robot.pose.position();
        }
        Some(pts)
    }

    /// Compact digest of everything that should stay fixed once the run has
    /// quiesced; used for termination detection.
    pub fn stability_digest(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x100000001b3);
        };
        mix(self.next_spawn as u64);
        for r in &self.robots {
            if !r.spawned {
                continue;
            }
            mix(u64::from(r.id.0));
            mix(r.agent.fsm.tag() as u64);
            mix(r.agent.left.map(|i| i.0 as u64 + 1).unwrap_or(0));
            mix(r.agent.right.map(|i| i.0 as u64 + 1).unwrap_or(0));
            mix((r.pose.x * 1e6) as i64 as u64);
            mix((r.pose.y * 1e6) as i64 as u64);
            for t in &r.agent.owned {
                for v in t.key.0 {
                    mix(u64::from(v.0) + 3);
                }
                mix(t.hop.map(|x| x as u64 + 1).unwrap_or(0));
                mix(t.is_frontier as u64);
            }
        }
        h
    }
}
