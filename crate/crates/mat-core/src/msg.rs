//! The per-round broadcast: constant-size schema and wire codec.
//!
//! Every field is a fixed-width slot or a capped, padded table, so the
//! serialized size depends only on the table caps and the ID width — never
//! on how many robots the network actually has beyond the bits needed to
//! name them.

use alloc::vec::Vec;
use core::fmt;

use crate::error::CoreError;

/// Robot identifier; fits in ⌈log₂ n⌉ bits, carried in 1 or 2 bytes on the
/// wire depending on the population size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RobotId(pub u16);

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// Triangle key: the sorted triple of its corner robots. Sorting makes
/// ownership and dual edges independent of announcement order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriKey(pub [RobotId; 3]);

impl TriKey {
    pub fn new(a: RobotId, b: RobotId, c: RobotId) -> TriKey {
        let mut v = [a, b, c];
        v.sort_unstable();
        TriKey(v)
    }

    pub fn contains(&self, id: RobotId) -> bool {
        self.0.contains(&id)
    }

    /// The three edges, each as a sorted pair.
    pub fn edges(&self) -> [(RobotId, RobotId); 3] {
        let [a, b, c] = self.0;
        [(a, b), (a, c), (b, c)]
    }

    /// The shared edge with another triangle, if they are adjacent.
    pub fn shared_edge(&self, other: &TriKey) -> Option<(RobotId, RobotId)> {
        let common: Vec<RobotId> =
            self.0.iter().copied().filter(|id| other.contains(*id)).collect();
        if common.len() == 2 {
            Some(sorted_pair(common[0], common[1]))
        } else {
            None
        }
    }

    /// The vertex opposite the given edge.
    pub fn apex(&self, edge: (RobotId, RobotId)) -> Option<RobotId> {
        let e = sorted_pair(edge.0, edge.1);
        if !self.contains(e.0) || !self.contains(e.1) {
            return None;
        }
        self.0.iter().copied().find(|id| *id != e.0 && *id != e.1)
    }
}

impl fmt::Display for TriKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.0[0].0, self.0[1].0, self.0[2].0)
    }
}

/// Sorted robot-id pair; the canonical edge representation.
pub fn sorted_pair(a: RobotId, b: RobotId) -> (RobotId, RobotId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Controller state tag carried in every broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(u8)]
pub enum FsmState {
    NavInternal = 0,
    ExpandTriangle = 1,
    WallFollow = 2,
    Frontier = 3,
    FrontierWall = 4,
    Internal = 5,
}

impl FsmState {
    pub fn from_u8(v: u8) -> Option<FsmState> {
        Some(match v {
            0 => FsmState::NavInternal,
            1 => FsmState::ExpandTriangle,
            2 => FsmState::WallFollow,
            3 => FsmState::Frontier,
            4 => FsmState::FrontierWall,
            5 => FsmState::Internal,
            _ => return None,
        })
    }

    /// States in which the robot stands still and participates in the
    /// structure (owns records, anchors frontier edges).
    pub fn is_stationary_member(self) -> bool {
        matches!(self, FsmState::Frontier | FsmState::FrontierWall | FsmState::Internal)
    }

    pub fn name(self) -> &'static str {
        match self {
            FsmState::NavInternal => "nav-internal",
            FsmState::ExpandTriangle => "expand-triangle",
            FsmState::WallFollow => "wall-follow",
            FsmState::Frontier => "frontier",
            FsmState::FrontierWall => "frontier-wall",
            FsmState::Internal => "internal",
        }
    }
}

/// How a triangle came to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(u8)]
pub enum TriKind {
    /// Built by driving to the far point beyond a frontier edge.
    Expansion = 0,
    /// Recognized from local two-hop geometry without motion.
    Discovery = 1,
    /// Closed against a wall at the isosceles stop.
    Wall = 2,
}

impl TriKind {
    pub fn from_u8(v: u8) -> Option<TriKind> {
        Some(match v {
            0 => TriKind::Expansion,
            1 => TriKind::Discovery,
            2 => TriKind::Wall,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            TriKind::Expansion => "expansion",
            TriKind::Discovery => "discovery",
            TriKind::Wall => "wall",
        }
    }
}

/// Table caps fixing the message size budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableCaps {
    /// Neighbor-bearing table entries.
    pub max_degree: usize,
    /// Owned-triangle table entries.
    pub max_owned: usize,
    /// Frontier-rewire directives per message.
    pub max_updates: usize,
    /// Disconnect directives per message.
    pub max_disconnects: usize,
}

impl Default for TableCaps {
    fn default() -> TableCaps {
        TableCaps { max_degree: 16, max_owned: 8, max_updates: 4, max_disconnects: 6 }
    }
}

/// One neighbor-bearing announcement: who, and in which sector I see them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleEntry {
    pub id: RobotId,
    pub sector: u8,
}

/// One owned-triangle announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriEntry {
    pub key: TriKey,
    /// Dual-graph hops to the nearest frontier triangle; `None` = unknown.
    pub hop: Option<u8>,
    pub frontier: bool,
    pub kind: TriKind,
}

/// Directive: `target`, replace frontier neighbor `old` with `new`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrontierUpdate {
    pub target: RobotId,
    pub old: RobotId,
    pub new: RobotId,
}

/// The complete per-round broadcast.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMessage {
    pub sender: RobotId,
    pub state: FsmState,
    /// Current frontier neighbors (left, right), when set.
    pub fnbr_left: Option<RobotId>,
    pub fnbr_right: Option<RobotId>,
    /// Frontier angle, as a wire sector index.
    pub frontier_angle: Option<u8>,
    /// Bearings to neighbors, quantized to wire sectors.
    pub angle_table: Vec<AngleEntry>,
    /// Hops and flags of owned triangles.
    pub tri_table: Vec<TriEntry>,
    /// Frontier-neighbor rewires requested by an arriving robot.
    pub frontier_updates: Vec<FrontierUpdate>,
    /// Robots whose frontier edges this sender just interiorized.
    pub disconnects: Vec<RobotId>,
}

impl RoundMessage {
    pub fn empty(sender: RobotId, state: FsmState) -> RoundMessage {
        RoundMessage {
            sender,
            state,
            fnbr_left: None,
            fnbr_right: None,
            frontier_angle: None,
            angle_table: Vec::new(),
            tri_table: Vec::new(),
            frontier_updates: Vec::new(),
            disconnects: Vec::new(),
        }
    }
}

/// Bytes needed per robot id for an n-robot population (⌈log₂ n⌉ bits,
/// byte-aligned on the wire).
pub fn id_width_for(n: usize) -> usize {
    if n <= 256 {
        1
    } else {
        2
    }
}

/// Exact serialized size of every message under the given caps and id
/// width. Tables are padded, so this is an equality, not just a bound.
pub fn size_budget(caps: &TableCaps, id_width: usize) -> usize {
    let w = id_width;
    let header = w + 1 + 1 + 2 * w + 1 + 1; // sender, state, fnbr flags+ids, fangle flag+sector
    let angles = 1 + caps.max_degree * (w + 1);
    let tris = 1 + caps.max_owned * (3 * w + 2);
    let updates = 1 + caps.max_updates * (3 * w);
    let disconnects = 1 + caps.max_disconnects * w;
    header + angles + tris + updates + disconnects
}

const HOP_UNSET: u8 = 0xFF;

struct Writer {
    buf: Vec<u8>,
    id_width: usize,
}

impl Writer {
    fn id(&mut self, id: RobotId) {
        if self.id_width == 1 {
            self.buf.push(id.0 as u8);
        } else {
            self.buf.extend_from_slice(&id.0.to_le_bytes());
        }
    }

    fn byte(&mut self, b: u8) {
        self.buf.push(b);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    id_width: usize,
}

impl<'a> Reader<'a> {
    fn id(&mut self) -> Result<RobotId, CoreError> {
        if self.pos + self.id_width > self.buf.len() {
            return Err(CoreError::MessageCorrupt);
        }
        let v = if self.id_width == 1 {
            self.buf[self.pos] as u16
        } else {
            u16::from_le_bytes([self.buf[self.pos], self.buf[self.pos + 1]])
        };
        self.pos += self.id_width;
        Ok(RobotId(v))
    }

    fn byte(&mut self) -> Result<u8, CoreError> {
        let b = *self.buf.get(self.pos).ok_or(CoreError::MessageCorrupt)?;
        self.pos += 1;
        Ok(b)
    }
}

/// Serializes a message into its fixed-size wire form. Fails if any table
/// exceeds its cap; never truncates silently.
pub fn encode(msg: &RoundMessage, caps: &TableCaps, id_width: usize) -> Result<Vec<u8>, CoreError> {
    let check = |name: &'static str, len: usize, cap: usize| -> Result<(), CoreError> {
        if len > cap {
            Err(CoreError::MessageCap { field: name, len, cap })
        } else {
            Ok(())
        }
    };
    check("angle_table", msg.angle_table.len(), caps.max_degree)?;
    check("tri_table", msg.tri_table.len(), caps.max_owned)?;
    check("frontier_updates", msg.frontier_updates.len(), caps.max_updates)?;
    check("disconnects", msg.disconnects.len(), caps.max_disconnects)?;

    let mut w = Writer { buf: Vec::with_capacity(size_budget(caps, id_width)), id_width };
    w.id(msg.sender);
    w.byte(msg.state as u8);
    let flags = (msg.fnbr_left.is_some() as u8) | ((msg.fnbr_right.is_some() as u8) << 1);
    w.byte(flags);
    w.id(msg.fnbr_left.unwrap_or(RobotId(0)));
    w.id(msg.fnbr_right.unwrap_or(RobotId(0)));
    w.byte(msg.frontier_angle.is_some() as u8);
    w.byte(msg.frontier_angle.unwrap_or(0));

    w.byte(msg.angle_table.len() as u8);
    for e in &msg.angle_table {
        w.id(e.id);
        w.byte(e.sector);
    }
    for _ in msg.angle_table.len()..caps.max_degree {
        w.id(RobotId(0));
        w.byte(0);
    }

    w.byte(msg.tri_table.len() as u8);
    for e in &msg.tri_table {
        for v in e.key.0 {
            w.id(v);
        }
        w.byte(e.hop.unwrap_or(HOP_UNSET));
        w.byte((e.frontier as u8) | ((e.kind as u8) << 1));
    }
    for _ in msg.tri_table.len()..caps.max_owned {
        for _ in 0..3 {
            w.id(RobotId(0));
        }
        w.byte(0);
        w.byte(0);
    }

    w.byte(msg.frontier_updates.len() as u8);
    for u in &msg.frontier_updates {
        w.id(u.target);
        w.id(u.old);
        w.id(u.new);
    }
    for _ in msg.frontier_updates.len()..caps.max_updates {
        for _ in 0..3 {
            w.id(RobotId(0));
        }
    }

    w.byte(msg.disconnects.len() as u8);
    for d in &msg.disconnects {
        w.id(*d);
    }
    for _ in msg.disconnects.len()..caps.max_disconnects {
        w.id(RobotId(0));
    }

    debug_assert_eq!(w.buf.len(), size_budget(caps, id_width));
    Ok(w.buf)
}

/// Decodes a wire message produced by [`encode`] under the same caps.
pub fn decode(bytes: &[u8], caps: &TableCaps, id_width: usize) -> Result<RoundMessage, CoreError> {
    if bytes.len() != size_budget(caps, id_width) {
        return Err(CoreError::MessageCorrupt);
    }
    let mut r = Reader { buf: bytes, pos: 0, id_width };
    let sender = r.id()?;
    let state = FsmState::from_u8(r.byte()?).ok_or(CoreError::MessageCorrupt)?;
    let flags = r.byte()?;
    let l = r.id()?;
    let rr = r.id()?;
    let fa_flag = r.byte()?;
    let fa = r.byte()?;
    let mut msg = RoundMessage::empty(sender, state);
    msg.fnbr_left = (flags & 1 != 0).then_some(l);
    msg.fnbr_right = (flags & 2 != 0).then_some(rr);
    msg.frontier_angle = (fa_flag != 0).then_some(fa);

    let n = r.byte()? as usize;
    if n > caps.max_degree {
        return Err(CoreError::MessageCorrupt);
    }
    for i in 0..caps.max_degree {
        let id = r.id()?;
        let sector = r.byte()?;
        if i < n {
            msg.angle_table.push(AngleEntry { id, sector });
        }
    }

    let n = r.byte()? as usize;
    if n > caps.max_owned {
        return Err(CoreError::MessageCorrupt);
    }
    for i in 0..caps.max_owned {
        let a = r.id()?;
        let b = r.id()?;
        let c = r.id()?;
        let hop = r.byte()?;
        let fl = r.byte()?;
        if i < n {
            msg.tri_table.push(TriEntry {
                key: TriKey::new(a, b, c),
                hop: (hop != HOP_UNSET).then_some(hop),
                frontier: fl & 1 != 0,
                kind: TriKind::from_u8(fl >> 1).ok_or(CoreError::MessageCorrupt)?,
            });
        }
    }

    let n = r.byte()? as usize;
    if n > caps.max_updates {
        return Err(CoreError::MessageCorrupt);
    }
    for i in 0..caps.max_updates {
        let target = r.id()?;
        let old = r.id()?;
        let new = r.id()?;
        if i < n {
            msg.frontier_updates.push(FrontierUpdate { target, old, new });
        }
    }

    let n = r.byte()? as usize;
    if n > caps.max_disconnects {
        return Err(CoreError::MessageCorrupt);
    }
    for i in 0..caps.max_disconnects {
        let id = r.id()?;
        if i < n {
            msg.disconnects.push(id);
        }
    }
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_msg(max_id: u16) -> impl Strategy<Value = RoundMessage> {
        let id = (0..max_id).prop_map(RobotId);
        let caps = TableCaps::default();
        (
            id.clone(),
            0u8..6,
            proptest::collection::vec((id.clone(), any::<u8>()), 0..caps.max_degree),
            proptest::collection::vec(
                (id.clone(), id.clone(), id.clone(), proptest::option::of(0u8..200), any::<bool>(), 0u8..3),
                0..caps.max_owned,
            ),
            proptest::collection::vec((id.clone(), id.clone(), id.clone()), 0..caps.max_updates),
            proptest::collection::vec(id, 0..caps.max_disconnects),
        )
            .prop_map(|(sender, st, angles, tris, ups, disc)| RoundMessage {
                sender,
                state: FsmState::from_u8(st).unwrap(),
                fnbr_left: None,
                fnbr_right: Some(sender),
                frontier_angle: Some(3),
                angle_table: angles
                    .into_iter()
                    .map(|(id, sector)| AngleEntry { id, sector })
                    .collect(),
                tri_table: tris
                    .into_iter()
                    .map(|(a, b, c, hop, frontier, k)| TriEntry {
                        key: TriKey::new(a, b, c),
                        hop: hop.filter(|h| *h != 0xFF),
                        frontier,
                        kind: TriKind::from_u8(k).unwrap(),
                    })
                    .collect(),
                frontier_updates: ups
                    .into_iter()
                    .map(|(target, old, new)| FrontierUpdate { target, old, new })
                    .collect(),
                disconnects: disc,
            })
    }

    proptest! {
        #[test]
        fn roundtrip_and_exact_size(msg in arb_msg(200)) {
            let caps = TableCaps::default();
            let w = id_width_for(200);
            let bytes = encode(&msg, &caps, w).unwrap();
            prop_assert_eq!(bytes.len(), size_budget(&caps, w));
            let back = decode(&bytes, &caps, w).unwrap();
            prop_assert_eq!(back, msg);
        }

        #[test]
        fn size_independent_of_population(msg in arb_msg(250)) {
            let caps = TableCaps::default();
            let b8 = encode(&msg, &caps, id_width_for(8)).unwrap();
            let b64 = encode(&msg, &caps, id_width_for(64)).unwrap();
            let b512 = encode(&msg, &caps, id_width_for(512)).unwrap();
            prop_assert_eq!(b8.len(), b64.len());
            // The 512-robot form differs only by the wider id fields.
            let id_fields = 3 + caps.max_degree + 3 * caps.max_owned
                + 3 * caps.max_updates + caps.max_disconnects;
            prop_assert_eq!(b512.len(), b8.len() + id_fields);
        }
    }

    #[test]
    fn cap_violation_rejected() {
        let caps = TableCaps::default();
        let mut msg = RoundMessage::empty(RobotId(1), FsmState::Frontier);
        msg.disconnects = (0..caps.max_disconnects as u16 + 1).map(RobotId).collect();
        assert!(matches!(
            encode(&msg, &caps, 1),
            Err(CoreError::MessageCap { field: "disconnects", .. })
        ));
    }

    #[test]
    fn trikey_sorted_and_edges() {
        let k = TriKey::new(RobotId(5), RobotId(1), RobotId(3));
        assert_eq!(k.0, [RobotId(1), RobotId(3), RobotId(5)]);
        assert_eq!(k.apex((RobotId(3), RobotId(1))), Some(RobotId(5)));
        let k2 = TriKey::new(RobotId(3), RobotId(5), RobotId(9));
        assert_eq!(k.shared_edge(&k2), Some((RobotId(3), RobotId(5))));
    }
}
