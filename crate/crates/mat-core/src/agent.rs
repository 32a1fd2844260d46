//! The per-robot controller: a six-state machine that navigates to the
//! frontier, expands triangles at the far point beyond a frontier edge,
//! discovers adjacent triangles from two-hop geometry, follows walls to an
//! isosceles stop, and then anchors the structure as a stationary member.
//!
//! Every step is a pure function of (previous state, sensed view, inbox),
//! so agents can be evaluated in any order within a round.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use crate::angle::{frontier_angle, side_of_edge, triangle_quality, Angle, InnerAngles, Side};
use crate::env::{MotionCmd, WallSense};
use crate::msg::{
    AngleEntry, FrontierUpdate, FsmState, RobotId, RoundMessage, TriEntry, TriKey, TriKind,
};
use crate::store::update_triangle_hop;
use crate::view::{announced_bearing, inner_angles_for, to_wire_sector, NeighborView};

/// Tunable controller parameters, fixed per scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    /// Frontier-angle quality threshold k for discovery triangles.
    pub quality_k: f64,
    /// Goal tolerance ε for the expansion target and the isosceles stop.
    pub goal_tol: f64,
    /// Forward speed command magnitude, m/s.
    pub speed: f64,
    /// Round duration, s.
    pub dt: f64,
    /// Cap on discovery-chain length per side, keeping arrival messages
    /// within their table caps.
    pub max_discovery_per_side: usize,
}

impl Default for AgentParams {
    fn default() -> AgentParams {
        AgentParams {
            quality_k: 3.0 * PI / 4.0,
            goal_tol: PI / 16.0,
            speed: 0.2,
            dt: 0.1,
            max_discovery_per_side: 3,
        }
    }
}

/// Controller mode plus the scratch state each mode needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fsm {
    NavInternal,
    ExpandTriangle { crossed: bool, settling: bool },
    WallFollow { settling: bool },
    Frontier,
    FrontierWall,
    Internal,
}

impl Fsm {
    pub fn tag(self) -> FsmState {
        match self {
            Fsm::NavInternal => FsmState::NavInternal,
            Fsm::ExpandTriangle { .. } => FsmState::ExpandTriangle,
            Fsm::WallFollow { .. } => FsmState::WallFollow,
            Fsm::Frontier => FsmState::Frontier,
            Fsm::FrontierWall => FsmState::FrontierWall,
            Fsm::Internal => FsmState::Internal,
        }
    }
}

/// One owned triangle record as the robot itself stores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OwnedTri {
    pub key: TriKey,
    pub kind: TriKind,
    pub hop: Option<u32>,
    pub is_frontier: bool,
    pub created_round: u64,
}

/// Full per-robot controller state.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub fsm: Fsm,
    /// Left frontier neighbor u.L.
    pub left: Option<RobotId>,
    /// Right frontier neighbor u.R.
    pub right: Option<RobotId>,
    pub owned: Vec<OwnedTri>,
    /// Robot-frame bearing pointing into unexplored space; maintained by
    /// bisector continuity as the frontier rewires around this robot.
    pub unexplored_ref: Option<Angle>,
    /// Robot has wall contact now or did when it joined the structure.
    pub ever_wall: bool,
    pub is_base: bool,
    /// Robot has been inside a triangle at least once (distinguishes the
    /// initial walk through the base edge from a lost robot).
    pub entered_once: bool,
}

impl AgentState {
    pub fn navigator() -> AgentState {
        AgentState {
            fsm: Fsm::NavInternal,
            left: None,
            right: None,
            owned: Vec::new(),
            unexplored_ref: None,
            ever_wall: false,
            is_base: false,
            entered_once: false,
        }
    }

    pub fn base(fnbr_left: Option<RobotId>, fnbr_right: Option<RobotId>) -> AgentState {
        AgentState {
            fsm: Fsm::FrontierWall,
            left: fnbr_left,
            right: fnbr_right,
            owned: Vec::new(),
            unexplored_ref: Some(Angle::ZERO),
            ever_wall: true,
            is_base: true,
            entered_once: true,
        }
    }
}

/// Everything a controller may read in one round.
pub struct StepInput<'a> {
    pub id: RobotId,
    pub round: u64,
    pub view: &'a NeighborView,
    pub inbox: &'a BTreeMap<RobotId, RoundMessage>,
    pub wall: WallSense,
    pub params: &'a AgentParams,
    /// Wire sector count for announced bearings.
    pub sectors: u32,
    /// Message table caps; the angle table is trimmed to fit.
    pub caps: crate::msg::TableCaps,
}

/// Notable things that happened during a step, for logs and tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentEvent {
    Claimed { left: RobotId, right: RobotId },
    Crossed { left: RobotId, right: RobotId },
    Expanded { key: TriKey },
    Discovered { key: TriKey },
    WallTriangle { key: TriKey },
    Disconnected { target: RobotId },
    Reverted,
    WentInternal,
}

/// Step result: successor state, outgoing broadcast, motion command.
pub struct AgentStep {
    pub state: AgentState,
    pub message: RoundMessage,
    pub motion: MotionCmd,
    pub events: Vec<AgentEvent>,
}

/// What the expansion controller wants to do, given only the inner angles
/// and the robot's own bearings to the two edge robots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpandAction {
    /// Both inner angles are within tolerance of π/3: stop, signal arrival.
    Goal,
    /// Drive toward this robot-frame bearing at full speed.
    Move(Angle),
}

/// Region-based expansion control on the unexplored side of the edge.
///
/// With one angle at or past π/2 the robot is outside the slab between the
/// edge-endpoint perpendiculars and orbits the near endpoint back in.
/// Otherwise it repairs the angle that deviates most from π/3 by moving
/// radially relative to the *other* endpoint, which leaves that endpoint's
/// angle unchanged: toward it to shrink the repaired angle, away to grow
/// it. Alternating these radial legs converges to the goal region without
/// ever re-approaching the edge.
pub fn expansion_controller(
    theta: InnerAngles,
    b_l: Angle,
    b_r: Angle,
    goal_tol: f64,
) -> ExpandAction {
    let dev_l = theta.theta_l - FRAC_PI_3;
    let dev_r = theta.theta_r - FRAC_PI_3;
    if dev_l.abs() <= goal_tol && dev_r.abs() <= goal_tol {
        return ExpandAction::Goal;
    }
    if theta.theta_l >= FRAC_PI_2 || theta.theta_r >= FRAC_PI_2 {
        // Orbit the endpoint with the oversized angle (the nearer one),
        // tangentially, in the direction that heads back toward the slab.
        let (b_anchor, b_other) = if theta.theta_l >= theta.theta_r { (b_l, b_r) } else { (b_r, b_l) };
        let t1 = b_anchor.add(FRAC_PI_2);
        let t2 = b_anchor.add(-FRAC_PI_2);
        let heading = if t1.diff(b_other) <= t2.diff(b_other) { t1 } else { t2 };
        return ExpandAction::Move(heading);
    }
    // Repair the worse angle; radial moves w.r.t. the opposite robot keep
    // that robot's angle fixed.
    if dev_l.abs() >= dev_r.abs() {
        ExpandAction::Move(if dev_l > 0.0 { b_r } else { b_r.opposite() })
    } else {
        ExpandAction::Move(if dev_r > 0.0 { b_l } else { b_l.opposite() })
    }
}

/// Outcome of scanning one side for discovery triangles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscoveryOutcome {
    /// Accepted triangles, in scan order.
    pub accepted: Vec<TriKey>,
    /// The robot that ends up as this side's frontier neighbor.
    pub final_neighbor: RobotId,
    /// The consumed robots (lost all frontier edges).
    pub disconnects: Vec<RobotId>,
    /// The single rewire directive for the side's surviving neighbor.
    pub update: FrontierUpdate,
}

/// Which side of the fresh expansion triangle to scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanSide {
    Left,
    Right,
}

fn announced_fnbrs(inbox: &BTreeMap<RobotId, RoundMessage>, id: RobotId) -> (Option<RobotId>, Option<RobotId>) {
    inbox.get(&id).map(|m| (m.fnbr_left, m.fnbr_right)).unwrap_or((None, None))
}

/// Walks the frontier chain away from a fresh expansion triangle and
/// collects every consecutive high-quality candidate.
///
/// For the left side the chain is x.L, x.L.L, …; a candidate Δ(me, lᵢ,
/// lᵢ₋₁) is accepted iff the edge {lᵢ, lᵢ₋₁} is a mutually announced
/// frontier edge and the frontier angle at lᵢ₋₁ — the sweep between its
/// bearings to me and to lᵢ away from the explored side — is below k. The
/// scan stops at the first rejection.
pub fn discover_triangles(
    me: RobotId,
    side: ScanSide,
    edge_near: RobotId,
    edge_far: RobotId,
    view: &NeighborView,
    inbox: &BTreeMap<RobotId, RoundMessage>,
    params: &AgentParams,
    sectors: u32,
) -> DiscoveryOutcome {
    let mut accepted = Vec::new();
    let mut disconnects = Vec::new();
    let mut prev = edge_near; // l₀ (or r₀)
    let mut exclude = edge_far; // direction marking the explored sweep at prev
    for _ in 0..params.max_discovery_per_side {
        let (pl, pr) = announced_fnbrs(inbox, prev);
        let next = match side {
            ScanSide::Left => pl,
            ScanSide::Right => pr,
        };
        let Some(next) = next else { break };
        if next == me || next == edge_far || !view.contains(next) {
            break;
        }
        // The edge {next, prev} must be announced from both ends.
        let (nl, nr) = announced_fnbrs(inbox, next);
        let reciprocal = match side {
            ScanSide::Left => nr == Some(prev),
            ScanSide::Right => nl == Some(prev),
        };
        if !reciprocal {
            break;
        }
        // Frontier angle at the shared robot, from its announced table:
        // the sweep between its bearings to me and to next that avoids its
        // explored side (marked by the previous chain direction).
        let Some(b_p_me) = announced_bearing(inbox, prev, me, sectors) else { break };
        let Some(b_p_next) = announced_bearing(inbox, prev, next, sectors) else { break };
        let Some(b_p_ex) = announced_bearing(inbox, prev, exclude, sectors) else { break };
        let sweep = b_p_me.ccw_sweep_to(b_p_next);
        let theta_f = if b_p_ex.within_ccw(b_p_me, b_p_next) {
            2.0 * PI - sweep
        } else {
            sweep
        };
        if !triangle_quality(theta_f, params.quality_k) {
            break;
        }
        accepted.push(TriKey::new(me, next, prev));
        disconnects.push(prev);
        exclude = prev;
        prev = next;
    }
    let update = if accepted.is_empty() {
        FrontierUpdate { target: edge_near, old: edge_far, new: me }
    } else {
        FrontierUpdate { target: prev, old: exclude, new: me }
    };
    DiscoveryOutcome { accepted, final_neighbor: prev, disconnects, update }
}

/// Runs one synchronous controller step.
pub fn step(state: &AgentState, input: &StepInput<'_>) -> AgentStep {
    let mut st = state.clone();
    let mut events = Vec::new();
    let mut outgoing = OutgoingExtras::default();

    apply_directives(&mut st, input, &mut events);
    refresh_owned(&mut st, input);

    let motion = match st.fsm {
        Fsm::NavInternal => step_nav_internal(&mut st, input, &mut events),
        Fsm::ExpandTriangle { .. } => step_expand_triangle(&mut st, input, &mut events, &mut outgoing),
        Fsm::WallFollow { .. } => step_wall_follow(&mut st, input, &mut events, &mut outgoing),
        Fsm::Frontier | Fsm::FrontierWall => step_stationary_frontier(&mut st, input),
        Fsm::Internal => MotionCmd::HOLD,
    };

    let message = assemble_message(&st, input, outgoing);
    AgentStep { state: st, message, motion, events }
}

#[derive(Default)]
struct OutgoingExtras {
    frontier_updates: Vec<FrontierUpdate>,
    disconnects: Vec<RobotId>,
}

/// Applies rewires and disconnects addressed to this robot, then retires it
/// to Internal if it no longer anchors any frontier edge.
fn apply_directives(st: &mut AgentState, input: &StepInput<'_>, events: &mut Vec<AgentEvent>) {
    if !matches!(st.fsm, Fsm::Frontier | Fsm::FrontierWall) {
        return;
    }
    let mut rewired = false;
    for msg in input.inbox.values() {
        for up in &msg.frontier_updates {
            if up.target != input.id {
                continue;
            }
            if st.left == Some(up.old) {
                st.left = Some(up.new);
                rewired = true;
            }
            if st.right == Some(up.old) {
                st.right = Some(up.new);
                rewired = true;
            }
        }
        if msg.disconnects.contains(&input.id) {
            // A neighbor sender cuts the shared edge; a non-neighbor sender
            // is an expander that interiorized every frontier edge we anchor.
            if st.left == Some(msg.sender) || st.right == Some(msg.sender) {
                if st.left == Some(msg.sender) {
                    st.left = None;
                }
                if st.right == Some(msg.sender) {
                    st.right = None;
                }
            } else {
                st.left = None;
                st.right = None;
            }
            rewired = true;
        }
    }
    if st.left.is_none() && st.right.is_none() {
        st.fsm = Fsm::Internal;
        events.push(AgentEvent::WentInternal);
        return;
    }
    if rewired {
        maintain_unexplored_ref(st, input);
    }
}

/// Keeps the unexplored-side reference stable across rewires: of the two
/// sweeps between the (possibly new) frontier neighbors, keep the one whose
/// bisector moved least.
fn maintain_unexplored_ref(st: &mut AgentState, input: &StepInput<'_>) {
    let (Some(l), Some(r)) = (st.left, st.right) else { return };
    let (Some(bl), Some(br)) = (input.view.bearing_to(l), input.view.bearing_to(r)) else {
        return;
    };
    let Some(prev) = st.unexplored_ref else { return };
    let (_, normal) = frontier_angle(bl, br, prev);
    st.unexplored_ref = Some(normal);
}

/// Recomputes owned-triangle frontier flags from current announcements and
/// refreshes the hop gradient (frontier triangles are hop-0 sources).
fn refresh_owned(st: &mut AgentState, input: &StepInput<'_>) {
    if st.owned.is_empty() {
        return;
    }
    let me = input.id;
    let my_fnbrs = (st.left, st.right);
    let edge_frontier = |p: RobotId, q: RobotId| -> bool {
        let f = |id: RobotId| -> (Option<RobotId>, Option<RobotId>) {
            if id == me {
                my_fnbrs
            } else {
                announced_fnbrs(input.inbox, id)
            }
        };
        let (pl, pr) = f(p);
        let (ql, qr) = f(q);
        (pr == Some(q) && ql == Some(p)) || (qr == Some(p) && pl == Some(q))
    };
    for t in st.owned.iter_mut() {
        t.is_frontier = t.key.edges().iter().any(|e| edge_frontier(e.0, e.1));
    }
    let mut adjacent: BTreeMap<TriKey, Option<u32>> = BTreeMap::new();
    for msg in input.inbox.values() {
        for e in &msg.tri_table {
            adjacent.insert(e.key, e.hop.map(u32::from));
        }
    }
    let mut rows: Vec<(TriKey, Option<u32>, bool)> =
        st.owned.iter().map(|t| (t.key, t.hop, t.is_frontier)).collect();
    update_triangle_hop(&mut rows, &adjacent);
    for (t, row) in st.owned.iter_mut().zip(rows) {
        t.hop = row.1;
    }
}

/// Candidate triangle as heard from its owner.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    key: TriKey,
    hop: Option<u32>,
    frontier: bool,
    owner: RobotId,
}

fn hear_candidates(input: &StepInput<'_>) -> Vec<Candidate> {
    let mut out: BTreeMap<TriKey, Candidate> = BTreeMap::new();
    for msg in input.inbox.values() {
        for e in &msg.tri_table {
            let c = Candidate {
                key: e.key,
                hop: e.hop.map(u32::from),
                frontier: e.frontier,
                owner: msg.sender,
            };
            match out.get(&e.key) {
                Some(prev) if prev.owner <= c.owner => {}
                _ => {
                    out.insert(e.key, c);
                }
            }
        }
    }
    out.into_values().collect()
}

fn occupancy_at(input: &StepInput<'_>, key: &TriKey) -> Option<bool> {
    let b: Vec<Angle> = key.0.iter().filter_map(|id| input.view.bearing_to(*id)).collect();
    if b.len() < 3 {
        return None;
    }
    crate::angle::occupancy_test(&b).ok()
}

/// Mutually announced frontier edges among a triangle's corners, oriented
/// so the second endpoint is the first one's right neighbor.
fn frontier_edges_of(
    input: &StepInput<'_>,
    key: &TriKey,
) -> Vec<(RobotId, RobotId)> {
    let mut out = Vec::new();
    for &x in &key.0 {
        let (_, xr) = announced_fnbrs(input.inbox, x);
        let Some(y) = xr else { continue };
        if !key.contains(y) {
            continue;
        }
        let (yl, _) = announced_fnbrs(input.inbox, y);
        if yl == Some(x) {
            out.push((x, y));
        }
    }
    out
}

/// True if some visible robot is mid-expansion over this edge.
fn edge_claimed(input: &StepInput<'_>, x: RobotId, y: RobotId) -> bool {
    input.inbox.values().any(|m| {
        matches!(m.state, FsmState::ExpandTriangle | FsmState::WallFollow)
            && ((m.fnbr_left == Some(x) && m.fnbr_right == Some(y))
                || (m.fnbr_left == Some(y) && m.fnbr_right == Some(x)))
    })
}

/// Congestion gate: refuses to expand a frontier edge when some stationary
/// robot that is not part of the local frontier chain sits ahead of the
/// edge on its unexplored side. This keeps converging frontier arms from
/// building overlapping triangles into the same shrinking pocket: with the
/// communication range a few triangle-edges long, any robot of an opposing
/// arm shows up in the edge robots' announced tables well before an
/// expansion could reach it.
fn expansion_gate_ok(input: &StepInput<'_>, me: RobotId, x: RobotId, y: RobotId) -> bool {
    fn walk_chain(
        inbox: &BTreeMap<RobotId, RoundMessage>,
        exempt: &mut Vec<RobotId>,
        start: RobotId,
        leftward: bool,
    ) {
        let mut cur = start;
        for _ in 0..4 {
            let (l, r) = announced_fnbrs(inbox, cur);
            let next = if leftward { l } else { r };
            let Some(next) = next else { break };
            if exempt.contains(&next) {
                break;
            }
            exempt.push(next);
            cur = next;
        }
    }
    let mut exempt: Vec<RobotId> = alloc::vec![me, x, y];
    walk_chain(input.inbox, &mut exempt, x, true);
    walk_chain(input.inbox, &mut exempt, y, false);
    let frontal_margin = FRAC_PI_2 + PI / 8.0;
    for (near, far) in [(x, y), (y, x)] {
        let Some(msg) = input.inbox.get(&near) else { return false };
        let Some(b_far) = announced_bearing(input.inbox, near, far, input.sectors) else {
            return false;
        };
        for e in &msg.angle_table {
            let z = e.id;
            if exempt.contains(&z) {
                continue;
            }
            let b_z = crate::view::from_wire_sector(e.sector, input.sectors);
            // Unexplored space lies left of the directed frontier edge
            // x→y; z's side follows from the sweep between the announced
            // bearings, both taken at the same observer.
            let on_unexplored = if near == x {
                b_far.ccw_sweep_to(b_z) < PI
            } else {
                b_z.ccw_sweep_to(b_far) < PI
            };
            if on_unexplored && b_z.diff(b_far) <= frontal_margin {
                return false;
            }
        }
    }
    true
}

fn step_nav_internal(
    st: &mut AgentState,
    input: &StepInput<'_>,
    events: &mut Vec<AgentEvent>,
) -> MotionCmd {
    let params = input.params;
    let candidates = hear_candidates(input);
    let containing: Vec<&Candidate> = candidates
        .iter()
        .filter(|c| occupancy_at(input, &c.key) == Some(true))
        .collect();
    let current = containing
        .iter()
        .min_by_key(|c| (c.hop.unwrap_or(u32::MAX), c.key))
        .copied();

    if let Some(tc) = current {
        st.entered_once = true;
        if tc.frontier {
            // Expand here: claim the smallest open frontier edge.
            let mut edges = frontier_edges_of(input, &tc.key);
            edges.sort_unstable_by_key(|e| crate::msg::sorted_pair(e.0, e.1));
            for (x, y) in edges {
                if edge_claimed(input, x, y) {
                    continue;
                }
                if !expansion_gate_ok(input, input.id, x, y) {
                    continue;
                }
                st.fsm = Fsm::ExpandTriangle { crossed: false, settling: false };
                st.left = Some(x);
                st.right = Some(y);
                events.push(AgentEvent::Claimed { left: x, right: y });
                return MotionCmd::HOLD;
            }
            return MotionCmd::HOLD;
        }
        // Descend the hop gradient toward the frontier.
        let next = candidates
            .iter()
            .filter(|c| c.key != tc.key && c.hop.is_some())
            .filter(|c| c.key.shared_edge(&tc.key).is_some())
            .min_by_key(|c| (c.hop.unwrap(), c.owner, c.key));
        if let Some(next) = next {
            let (a, b) = next.key.shared_edge(&tc.key).expect("adjacent");
            let (Some(ba), Some(bb)) = (input.view.bearing_to(a), input.view.bearing_to(b)) else {
                return MotionCmd::HOLD;
            };
            let heading = ba.bisector_short(bb);
            return drive(heading, params);
        }
        return MotionCmd::HOLD;
    }

    if candidates.is_empty() {
        // Nothing built yet: the only frontier edge is the base edge.
        let mut pairs: Vec<(RobotId, RobotId)> = Vec::new();
        for id in input.view.ids() {
            let (_, r) = announced_fnbrs(input.inbox, id);
            if let Some(y) = r {
                let (yl, _) = announced_fnbrs(input.inbox, y);
                if yl == Some(id) && input.view.contains(y) {
                    pairs.push((id, y));
                }
            }
        }
        pairs.sort_unstable_by_key(|e| crate::msg::sorted_pair(e.0, e.1));
        for (x, y) in pairs {
            if edge_claimed(input, x, y) {
                continue;
            }
            st.fsm = Fsm::ExpandTriangle { crossed: false, settling: false };
            st.left = Some(x);
            st.right = Some(y);
            events.push(AgentEvent::Claimed { left: x, right: y });
            return MotionCmd::HOLD;
        }
        return MotionCmd::HOLD;
    }

    if !st.entered_once {
        // Walk in through the base edge: head at the reachable triangle
        // nearest the frontier.
        let target = candidates
            .iter()
            .filter(|c| c.key.0.iter().all(|id| input.view.contains(*id)))
            .min_by_key(|c| (c.hop.unwrap_or(u32::MAX), c.key));
        if let Some(t) = target {
            let mut vx = 0.0;
            let mut vy = 0.0;
            for id in t.key.0 {
                let b = input.view.bearing_to(id).expect("vertex visible");
                vx += crate::fm::cos(b.radians());
                vy += crate::fm::sin(b.radians());
            }
            if vx != 0.0 || vy != 0.0 {
                return drive(Angle::new(crate::fm::atan2(vy, vx)), params);
            }
        }
    }
    // Lost: hold position and re-evaluate next round.
    MotionCmd::HOLD
}

fn drive(local_heading: Angle, params: &AgentParams) -> MotionCmd {
    MotionCmd { turn_rate: local_heading.signed() / params.dt, forward: params.speed }
}

fn revert_to_navigation(st: &mut AgentState, events: &mut Vec<AgentEvent>) -> MotionCmd {
    st.fsm = Fsm::NavInternal;
    st.left = None;
    st.right = None;
    events.push(AgentEvent::Reverted);
    MotionCmd::HOLD
}

fn step_expand_triangle(
    st: &mut AgentState,
    input: &StepInput<'_>,
    events: &mut Vec<AgentEvent>,
    outgoing: &mut OutgoingExtras,
) -> MotionCmd {
    let Fsm::ExpandTriangle { mut crossed, mut settling } = st.fsm else { unreachable!() };
    let (Some(x), Some(y)) = (st.left, st.right) else {
        return revert_to_navigation(st, events);
    };
    let (Some(b_x), Some(b_y)) = (input.view.bearing_to(x), input.view.bearing_to(y)) else {
        // Lost sight of an edge robot mid-expansion.
        return revert_to_navigation(st, events);
    };

    if !crossed {
        // Someone else may have consumed this edge between our claim and
        // now (stale-announcement window), or a lower-id robot may hold a
        // competing claim. Re-validate until we commit by crossing.
        let (_, xr) = announced_fnbrs(input.inbox, x);
        let (yl, _) = announced_fnbrs(input.inbox, y);
        if xr != Some(y) || yl != Some(x) {
            return revert_to_navigation(st, events);
        }
        let competing = input.inbox.values().any(|m| {
            m.sender < input.id
                && matches!(m.state, FsmState::ExpandTriangle | FsmState::WallFollow)
                && ((m.fnbr_left == Some(x) && m.fnbr_right == Some(y))
                    || (m.fnbr_left == Some(y) && m.fnbr_right == Some(x)))
        });
        if competing {
            return revert_to_navigation(st, events);
        }
    }

    let on_unexplored = side_of_edge(b_x, b_y) == Side::Left;
    if on_unexplored && !crossed {
        crossed = true;
        st.fsm = Fsm::ExpandTriangle { crossed, settling };
        events.push(AgentEvent::Crossed { left: x, right: y });
    }
    if !on_unexplored {
        // Head through the edge into unexplored space.
        st.fsm = Fsm::ExpandTriangle { crossed, settling: false };
        return drive(b_x.bisector_short(b_y), input.params);
    }

    // Wall ahead of the outward direction interrupts the expansion.
    let outward = b_x.bisector_short(b_y).opposite();
    if let Some(wb) = input.wall.wall_bearing {
        if input.wall.near_wall && wb.diff(outward) < FRAC_PI_2 {
            st.fsm = Fsm::WallFollow { settling: false };
            return MotionCmd::HOLD;
        }
    }

    let Some(theta) = inner_angles_for(input.inbox, input.id, x, y, input.sectors) else {
        return MotionCmd::HOLD;
    };
    match expansion_controller(theta, b_x, b_y, input.params.goal_tol) {
        ExpandAction::Move(h) => {
            st.fsm = Fsm::ExpandTriangle { crossed, settling: false };
            drive(h, input.params)
        }
        ExpandAction::Goal => {
            if !settling {
                // Stand still one round so neighbors re-measure us at the
                // final position before we derive discovery geometry.
                settling = true;
                st.fsm = Fsm::ExpandTriangle { crossed, settling };
                return MotionCmd::HOLD;
            }
            finish_expansion(st, input, (x, y), (b_x, b_y), events, outgoing);
            MotionCmd::HOLD
        }
    }
}

fn finish_expansion(
    st: &mut AgentState,
    input: &StepInput<'_>,
    edge: (RobotId, RobotId),
    bearings: (Angle, Angle),
    events: &mut Vec<AgentEvent>,
    outgoing: &mut OutgoingExtras,
) {
    let (x, y) = edge;
    let (b_x, b_y) = bearings;
    let me = input.id;
    debug_assert!(st.owned.is_empty(), "a robot expands once");

    let expansion = TriKey::new(me, x, y);
    st.owned.push(OwnedTri {
        key: expansion,
        kind: TriKind::Expansion,
        hop: None,
        is_frontier: true,
        created_round: input.round,
    });
    events.push(AgentEvent::Expanded { key: expansion });

    let left_scan =
        discover_triangles(me, ScanSide::Left, x, y, input.view, input.inbox, input.params, input.sectors);
    let right_scan =
        discover_triangles(me, ScanSide::Right, y, x, input.view, input.inbox, input.params, input.sectors);
    for scan in [&left_scan, &right_scan] {
        for key in &scan.accepted {
            st.owned.push(OwnedTri {
                key: *key,
                kind: TriKind::Discovery,
                hop: None,
                is_frontier: false,
                created_round: input.round,
            });
            events.push(AgentEvent::Discovered { key: *key });
        }
        for d in &scan.disconnects {
            events.push(AgentEvent::Disconnected { target: *d });
        }
    }

    st.left = Some(left_scan.final_neighbor);
    st.right = Some(right_scan.final_neighbor);
    outgoing.frontier_updates.push(left_scan.update);
    outgoing.frontier_updates.push(right_scan.update);
    outgoing.disconnects.extend(left_scan.disconnects);
    outgoing.disconnects.extend(right_scan.disconnects);
    outgoing.disconnects.sort_unstable();
    outgoing.disconnects.dedup();

    st.unexplored_ref = Some(b_x.bisector_short(b_y).opposite());
    st.fsm = Fsm::Frontier;
}

fn step_wall_follow(
    st: &mut AgentState,
    input: &StepInput<'_>,
    events: &mut Vec<AgentEvent>,
    outgoing: &mut OutgoingExtras,
) -> MotionCmd {
    let Fsm::WallFollow { mut settling } = st.fsm else { unreachable!() };
    let (Some(x), Some(y)) = (st.left, st.right) else {
        return revert_to_navigation(st, events);
    };
    let (Some(b_x), Some(b_y)) = (input.view.bearing_to(x), input.view.bearing_to(y)) else {
        return revert_to_navigation(st, events);
    };
    if input.wall.contact {
        // Back off along the wall normal before continuing.
        if let Some(wb) = input.wall.wall_bearing {
            return drive(wb.opposite(), input.params);
        }
    }
    let Some(theta) = inner_angles_for(input.inbox, input.id, x, y, input.sectors) else {
        return MotionCmd::HOLD;
    };
    if (theta.theta_l - theta.theta_r).abs() <= input.params.goal_tol {
        if !settling {
            settling = true;
            st.fsm = Fsm::WallFollow { settling };
            return MotionCmd::HOLD;
        }
        finish_wall_triangle(st, input, (x, y), (b_x, b_y), events, outgoing);
        return MotionCmd::HOLD;
    }
    settling = false;
    st.fsm = Fsm::WallFollow { settling };

    // Slide along the wall toward the side whose inner angle is smaller,
    // with a slight inward bias; the clearance clamp keeps the standoff.
    let toward = if theta.theta_l > theta.theta_r { b_y } else { b_x };
    let tangent_base = match input.wall.wall_bearing {
        Some(wb) if input.wall.near_wall => wb,
        _ => b_x.bisector_short(b_y).opposite().add(FRAC_PI_2),
    };
    let t1 = tangent_base.add(FRAC_PI_2);
    let t2 = tangent_base.add(-FRAC_PI_2);
    let mut heading = if t1.diff(toward) <= t2.diff(toward) { t1 } else { t2 };
    if let Some(wb) = input.wall.wall_bearing {
        if input.wall.near_wall {
            // Bias into the wall so the slide hugs it.
            let delta = Angle::new(wb.radians() - heading.radians()).signed();
            heading = heading.add(0.2 * if delta >= 0.0 { 1.0 } else { -1.0 });
        }
    }
    drive(heading, input.params)
}

fn finish_wall_triangle(
    st: &mut AgentState,
    input: &StepInput<'_>,
    edge: (RobotId, RobotId),
    bearings: (Angle, Angle),
    events: &mut Vec<AgentEvent>,
    outgoing: &mut OutgoingExtras,
) {
    let (x, y) = edge;
    let (b_x, b_y) = bearings;
    let me = input.id;
    let key = TriKey::new(me, x, y);
    st.owned.push(OwnedTri {
        key,
        kind: TriKind::Wall,
        hop: None,
        is_frontier: false,
        created_round: input.round,
    });
    events.push(AgentEvent::WallTriangle { key });
    st.ever_wall = true;

    // A frontier edge toward a robot that is itself against the wall would
    // have both endpoints in wall contact: it becomes a wall edge, so that
    // neighbor is cut loose instead of rewired.
    let mut keep_left = true;
    let mut keep_right = true;
    for (nbr, keep) in [(x, &mut keep_left), (y, &mut keep_right)] {
        let wallbound = input
            .inbox
            .get(&nbr)
            .map(|m| m.state == FsmState::FrontierWall)
            .unwrap_or(false);
        if wallbound {
            *keep = false;
            outgoing.disconnects.push(nbr);
            events.push(AgentEvent::Disconnected { target: nbr });
        }
    }
    if keep_left {
        outgoing.frontier_updates.push(FrontierUpdate { target: x, old: y, new: me });
        st.left = Some(x);
    } else {
        st.left = None;
    }
    if keep_right {
        outgoing.frontier_updates.push(FrontierUpdate { target: y, old: x, new: me });
        st.right = Some(y);
    } else {
        st.right = None;
    }
    st.unexplored_ref = Some(b_x.bisector_short(b_y).opposite());
    st.fsm = Fsm::FrontierWall;
    if st.left.is_none() && st.right.is_none() {
        st.fsm = Fsm::Internal;
        events.push(AgentEvent::WentInternal);
    }
}

fn step_stationary_frontier(st: &mut AgentState, input: &StepInput<'_>) -> MotionCmd {
    // Keep the unexplored-side reference aligned with the current sweep.
    if st.left.is_some() && st.right.is_some() {
        maintain_unexplored_ref(st, input);
    }
    MotionCmd::HOLD
}

/// Builds the outgoing broadcast from the post-step state.
fn assemble_message(
    st: &AgentState,
    input: &StepInput<'_>,
    outgoing: OutgoingExtras,
) -> RoundMessage {
    let mut msg = RoundMessage::empty(input.id, st.fsm.tag());
    msg.fnbr_left = st.left;
    msg.fnbr_right = st.right;

    // Angle table: everything sensed, deterministically trimmed to the cap
    // by dropping the entries with the farthest off-axis bearings.
    let mut entries: Vec<&crate::view::NeighborInfo> = input.view.entries().iter().collect();
    entries.sort_by(|a, b| {
        let ka = crate::fm::abs(a.bearing.signed());
        let kb = crate::fm::abs(b.bearing.signed());
        ka.partial_cmp(&kb).unwrap().then(a.id.cmp(&b.id))
    });
    entries.truncate(input.caps.max_degree);
    entries.sort_by_key(|e| e.id);
    msg.angle_table = entries
        .iter()
        .map(|e| AngleEntry { id: e.id, sector: to_wire_sector(e.bearing, input.sectors) })
        .collect();

    msg.tri_table = st
        .owned
        .iter()
        .map(|t| TriEntry {
            key: t.key,
            hop: t.hop.map(|h| h.min(254) as u8),
            frontier: t.is_frontier,
            kind: t.kind,
        })
        .collect();

    if matches!(st.fsm, Fsm::Frontier | Fsm::FrontierWall) {
        if let (Some(l), Some(r), Some(refa)) = (st.left, st.right, st.unexplored_ref) {
            if let (Some(bl), Some(br)) = (input.view.bearing_to(l), input.view.bearing_to(r)) {
                let (theta_f, _) = frontier_angle(bl, br, refa);
                msg.frontier_angle =
                    Some(to_wire_sector(Angle::new(theta_f), input.sectors));
            }
        }
    }

    msg.frontier_updates = outgoing.frontier_updates;
    msg.disconnects = outgoing.disconnects;
    msg
}
