//! The distributed triangulation as data: triangle records, edge classes,
//! hop propagation, and the analysis-side checkers for the ownership
//! guarantees the routing layer depends on.
//!
//! Records live on their owner robots during a run; everything here works
//! on immutable snapshots collected between rounds.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::msg::{sorted_pair, RobotId, TriKey, TriKind};

/// Snapshot of one owned triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriangleRecord {
    pub key: TriKey,
    pub owner: RobotId,
    /// Dual-graph distance to the nearest frontier triangle; `None` until
    /// the gradient reaches it.
    pub hop: Option<u32>,
    pub is_frontier: bool,
    pub kind: TriKind,
    pub created_round: u64,
}

/// Classification of a triangulation edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Borders one triangle, at least one endpoint off the walls: the
    /// boundary between explored and unexplored space.
    Frontier,
    /// Shared by two triangles.
    Internal,
    /// Borders one triangle with both endpoints in wall contact.
    Wall,
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Frontier => "frontier",
            EdgeKind::Internal => "internal",
            EdgeKind::Wall => "wall",
        }
    }
}

/// A classified edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeClass {
    pub edge: (RobotId, RobotId),
    pub kind: EdgeKind,
}

/// Classifies every edge of the triangulation by incidence count and wall
/// contact. An edge incident to three or more triangles means overlapping
/// triangles, which is structural corruption.
pub fn classify_edges(
    records: &[TriangleRecord],
    wall_contact: &BTreeSet<RobotId>,
) -> Result<Vec<EdgeClass>, CoreError> {
    let mut incidence: BTreeMap<(RobotId, RobotId), u8> = BTreeMap::new();
    for rec in records {
        for e in rec.key.edges() {
            let n = incidence.entry(e).or_insert(0);
            *n += 1;
            if *n >= 3 {
                return Err(CoreError::EdgeOverlap { edge: e });
            }
        }
    }
    Ok(incidence
        .into_iter()
        .map(|(edge, count)| {
            let kind = if count == 2 {
                EdgeKind::Internal
            } else if wall_contact.contains(&edge.0) && wall_contact.contains(&edge.1) {
                EdgeKind::Wall
            } else {
                EdgeKind::Frontier
            };
            EdgeClass { edge, kind }
        })
        .collect())
}

/// One robot's owned-hop refresh: frontier triangles are sources at hop 0;
/// anything else becomes 1 + the minimum known hop among adjacent
/// triangles, and stays unset while no adjacent hop is known.
pub fn update_triangle_hop(
    owned: &mut [(TriKey, Option<u32>, bool)],
    adjacent_hops: &BTreeMap<TriKey, Option<u32>>,
) {
    // Hops of this robot's own records also count as adjacency input: a fan
    // owner bridges its own triangles.
    let own: BTreeMap<TriKey, Option<u32>> =
        owned.iter().map(|(k, h, f)| (*k, if *f { Some(0) } else { *h })).collect();
    for (key, hop, frontier) in owned.iter_mut() {
        if *frontier {
            *hop = Some(0);
            continue;
        }
        let mut best: Option<u32> = None;
        for edge in key.edges() {
            for (other, other_hop) in adjacent_hops.iter().chain(own.iter()) {
                if other == key || other.shared_edge(key) != Some(edge) {
                    continue;
                }
                if let Some(h) = other_hop {
                    best = Some(best.map_or(*h, |b: u32| b.min(*h)));
                }
            }
        }
        if let Some(b) = best {
            *hop = Some(b + 1);
        }
    }
}

/// Frontier-edge ownership check: every triangle carrying a frontier edge
/// must be owned by one of that edge's endpoints. Returns the offending
/// records.
pub fn check_owner_lemma(records: &[TriangleRecord], edges: &[EdgeClass]) -> Vec<TriangleRecord> {
    let frontier: BTreeSet<(RobotId, RobotId)> = edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Frontier)
        .map(|e| e.edge)
        .collect();
    let mut bad = Vec::new();
    for rec in records {
        for e in rec.key.edges() {
            if frontier.contains(&e) && rec.owner != e.0 && rec.owner != e.1 {
                bad.push(*rec);
                break;
            }
        }
    }
    bad
}

/// Owner-connectivity check: owners of adjacent triangles must be the same
/// robot or direct communication neighbors. Returns offending dual edges.
pub fn check_owner_connectivity(
    records: &[TriangleRecord],
    primal_edges: &BTreeSet<(RobotId, RobotId)>,
) -> Vec<(TriKey, TriKey)> {
    let mut bad = Vec::new();
    for i in 0..records.len() {
        for j in i + 1..records.len() {
            let (a, b) = (&records[i], &records[j]);
            if a.key.shared_edge(&b.key).is_none() {
                continue;
            }
            if a.owner == b.owner {
                continue;
            }
            if !primal_edges.contains(&sorted_pair(a.owner, b.owner)) {
                bad.push((a.key, b.key));
            }
        }
    }
    bad
}

/// The dual graph: one vertex per triangle, one edge per shared primal edge.
#[derive(Debug, Clone, Default)]
pub struct DualGraph {
    adj: BTreeMap<TriKey, Vec<TriKey>>,
}

impl DualGraph {
    pub fn nodes(&self) -> impl Iterator<Item = TriKey> + '_ {
        self.adj.keys().copied()
    }

    pub fn neighbors(&self, key: &TriKey) -> &[TriKey] {
        self.adj.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, key: &TriKey) -> bool {
        self.adj.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(Vec::len).sum::<usize>() / 2
    }

    /// BFS hop distances from one node.
    pub fn bfs(&self, from: TriKey) -> BTreeMap<TriKey, u32> {
        let mut dist = BTreeMap::new();
        if !self.contains(&from) {
            return dist;
        }
        dist.insert(from, 0);
        let mut q = VecDeque::new();
        q.push_back(from);
        while let Some(cur) = q.pop_front() {
            let d = dist[&cur];
            for &n in self.neighbors(&cur) {
                if let alloc::collections::btree_map::Entry::Vacant(e) = dist.entry(n) {
                    e.insert(d + 1);
                    q.push_back(n);
                }
            }
        }
        dist
    }

    /// BFS distances from a set of sources (all at distance 0).
    pub fn bfs_multi(&self, sources: &[TriKey]) -> BTreeMap<TriKey, u32> {
        let mut dist = BTreeMap::new();
        let mut q = VecDeque::new();
        for s in sources {
            if self.contains(s) && !dist.contains_key(s) {
                dist.insert(*s, 0);
                q.push_back(*s);
            }
        }
        while let Some(cur) = q.pop_front() {
            let d = dist[&cur];
            for &n in self.neighbors(&cur) {
                if let alloc::collections::btree_map::Entry::Vacant(e) = dist.entry(n) {
                    e.insert(d + 1);
                    q.push_back(n);
                }
            }
        }
        dist
    }

    /// Longest shortest path over the graph (0 for empty or singleton).
    pub fn diameter(&self) -> u32 {
        let mut best = 0;
        for n in self.nodes() {
            for d in self.bfs(n).values() {
                best = best.max(*d);
            }
        }
        best
    }
}

/// Extracts the dual graph from a snapshot: vertices are triangles, edges
/// connect triangles sharing a primal edge.
pub fn extract_dual_graph(records: &[TriangleRecord]) -> Result<DualGraph, CoreError> {
    let mut by_edge: BTreeMap<(RobotId, RobotId), Vec<TriKey>> = BTreeMap::new();
    for rec in records {
        for e in rec.key.edges() {
            let list = by_edge.entry(e).or_default();
            list.push(rec.key);
            if list.len() >= 3 {
                return Err(CoreError::EdgeOverlap { edge: e });
            }
        }
    }
    let mut g = DualGraph::default();
    for rec in records {
        g.adj.entry(rec.key).or_default();
    }
    for list in by_edge.values() {
        if list.len() == 2 {
            g.adj.get_mut(&list[0]).unwrap().push(list[1]);
            g.adj.get_mut(&list[1]).unwrap().push(list[0]);
        }
    }
    for v in g.adj.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(a: u16, b: u16, c: u16, owner: u16) -> TriangleRecord {
        TriangleRecord {
            key: TriKey::new(RobotId(a), RobotId(b), RobotId(c)),
            owner: RobotId(owner),
            hop: None,
            is_frontier: false,
            kind: TriKind::Expansion,
            created_round: 0,
        }
    }

    #[test]
    fn classify_single_triangle_all_frontier() {
        let classes = classify_edges(&[rec(0, 1, 2, 2)], &BTreeSet::new()).unwrap();
        assert_eq!(classes.len(), 3);
        assert!(classes.iter().all(|e| e.kind == EdgeKind::Frontier));
    }

    #[test]
    fn classify_shared_edge_internal() {
        let classes =
            classify_edges(&[rec(0, 1, 2, 2), rec(1, 2, 3, 3)], &BTreeSet::new()).unwrap();
        let kinds: BTreeMap<_, _> = classes.iter().map(|e| (e.edge, e.kind)).collect();
        assert_eq!(kinds[&(RobotId(1), RobotId(2))], EdgeKind::Internal);
        assert_eq!(kinds.values().filter(|k| **k == EdgeKind::Frontier).count(), 4);
    }

    #[test]
    fn classify_wall_edge_needs_both_contacts() {
        let walls: BTreeSet<RobotId> = [RobotId(0), RobotId(1)].into_iter().collect();
        let classes = classify_edges(&[rec(0, 1, 2, 2)], &walls).unwrap();
        let kinds: BTreeMap<_, _> = classes.iter().map(|e| (e.edge, e.kind)).collect();
        assert_eq!(kinds[&(RobotId(0), RobotId(1))], EdgeKind::Wall);
        assert_eq!(kinds[&(RobotId(0), RobotId(2))], EdgeKind::Frontier);
    }

    #[test]
    fn classify_detects_overlap() {
        let r = classify_edges(
            &[rec(0, 1, 2, 2), rec(0, 1, 3, 3), rec(0, 1, 4, 4)],
            &BTreeSet::new(),
        );
        assert!(matches!(r, Err(CoreError::EdgeOverlap { edge: (RobotId(0), RobotId(1)) })));
    }

    #[test]
    fn classification_matches_incidence_recount() {
        // Fan of triangles around a hub with a wall pair; recount incidence
        // by brute force and compare.
        let walls: BTreeSet<RobotId> = [RobotId(4), RobotId(5)].into_iter().collect();
        let records = vec![rec(0, 1, 2, 1), rec(0, 2, 3, 2), rec(0, 3, 4, 3), rec(0, 4, 5, 4)];
        let classes = classify_edges(&records, &walls).unwrap();
        for ec in &classes {
            let count = records.iter().filter(|r| {
                r.key.contains(ec.edge.0) && r.key.contains(ec.edge.1) && {
                    let apex = r.key.apex(ec.edge);
                    apex.is_some()
                }
            });
            let n = count.count();
            match ec.kind {
                EdgeKind::Internal => assert_eq!(n, 2),
                EdgeKind::Frontier | EdgeKind::Wall => assert_eq!(n, 1),
            }
        }
    }

    #[test]
    fn hop_update_sources_and_min_plus_one() {
        let k0 = TriKey::new(RobotId(0), RobotId(1), RobotId(2));
        let k1 = TriKey::new(RobotId(1), RobotId(2), RobotId(3));
        let mut owned = vec![(k0, None, true), (k1, None, false)];
        let mut adj = BTreeMap::new();
        adj.insert(TriKey::new(RobotId(2), RobotId(3), RobotId(4)), Some(3));
        update_triangle_hop(&mut owned, &adj);
        assert_eq!(owned[0].1, Some(0), "frontier triangle is a source");
        // k1 is adjacent to both the owner's own frontier triangle (hop 0)
        // and the announced hop-3 record.
        assert_eq!(owned[1].1, Some(1));
    }

    #[test]
    fn hop_update_leaves_unknown_unset() {
        let k = TriKey::new(RobotId(0), RobotId(1), RobotId(2));
        let mut owned = vec![(k, None, false)];
        update_triangle_hop(&mut owned, &BTreeMap::new());
        assert_eq!(owned[0].1, None);
    }

    #[test]
    fn hop_strip_converges_to_bfs() {
        // Strip of 6 triangles, frontier at one end; iterate the distributed
        // rule and compare with the BFS oracle after 6 rounds.
        let keys: Vec<TriKey> = (0..6u16)
            .map(|i| TriKey::new(RobotId(i), RobotId(i + 1), RobotId(i + 2)))
            .collect();
        let mut hops: Vec<Option<u32>> = vec![None; 6];
        for _ in 0..6 {
            let announced: BTreeMap<TriKey, Option<u32>> =
                keys.iter().copied().zip(hops.iter().copied()).collect();
            for (i, key) in keys.iter().enumerate() {
                let mut owned = [(*key, hops[i], i == 0)];
                update_triangle_hop(&mut owned, &announced);
                hops[i] = owned[0].1;
            }
        }
        let records: Vec<TriangleRecord> = keys
            .iter()
            .enumerate()
            .map(|(i, k)| TriangleRecord {
                key: *k,
                owner: RobotId(i as u16 + 2),
                hop: hops[i],
                is_frontier: i == 0,
                kind: TriKind::Expansion,
                created_round: 0,
            })
            .collect();
        let dual = extract_dual_graph(&records).unwrap();
        let oracle = dual.bfs(keys[0]);
        for (i, k) in keys.iter().enumerate() {
            assert_eq!(hops[i], Some(oracle[k]), "triangle {i}");
        }
    }

    #[test]
    fn owner_lemma_flags_constructed_violation() {
        // Frontier edge (0,1); apex 2 owning the triangle violates the rule.
        let records = [rec(0, 1, 2, 2)];
        let classes = classify_edges(&records, &BTreeSet::new()).unwrap();
        let bad = check_owner_lemma(&records, &classes);
        assert_eq!(bad.len(), 1);
        // Owned by an edge endpoint instead: clean.
        let ok = [rec(0, 1, 2, 0)];
        assert!(check_owner_lemma(&ok, &classes).is_empty());
    }

    #[test]
    fn owner_lemma_fuzzed_mutations_detected() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        // Legal fan: each triangle owned by a frontier-edge endpoint.
        let base = vec![rec(0, 1, 2, 1), rec(1, 2, 3, 2), rec(2, 3, 4, 3)];
        let classes = classify_edges(&base, &BTreeSet::new()).unwrap();
        assert!(check_owner_lemma(&base, &classes).is_empty());
        for _ in 0..50 {
            let mut mutated = base.clone();
            let idx = rng.random_range(0..mutated.len());
            // Move ownership to the apex of this record's frontier edge.
            let frontier_edges: Vec<(RobotId, RobotId)> = classes
                .iter()
                .filter(|e| e.kind == EdgeKind::Frontier)
                .map(|e| e.edge)
                .collect();
            let rec = &mut mutated[idx];
            let Some(edge) = rec.key.edges().into_iter().find(|e| frontier_edges.contains(e))
            else {
                continue;
            };
            rec.owner = rec.key.apex(edge).unwrap();
            let bad = check_owner_lemma(&mutated, &classes);
            assert_eq!(bad.len(), 1);
            assert_eq!(bad[0].key, mutated[idx].key);
        }
    }

    #[test]
    fn owner_connectivity_requires_primal_edge() {
        let records = [rec(0, 1, 2, 0), rec(1, 2, 3, 3)];
        let mut primal: BTreeSet<(RobotId, RobotId)> = BTreeSet::new();
        primal.insert(sorted_pair(RobotId(0), RobotId(3)));
        assert!(check_owner_connectivity(&records, &primal).is_empty());
        primal.clear();
        let bad = check_owner_connectivity(&records, &primal);
        assert_eq!(bad.len(), 1);
        // Same owner needs no edge.
        let same = [rec(0, 1, 2, 1), rec(1, 2, 3, 1)];
        assert!(check_owner_connectivity(&same, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn dual_graph_shapes() {
        let single = extract_dual_graph(&[rec(0, 1, 2, 0)]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.edge_count(), 0);

        // Fan of 4 triangles around hub robot 0: a path of 3 dual edges.
        let fan = extract_dual_graph(&[
            rec(0, 1, 2, 1),
            rec(0, 2, 3, 2),
            rec(0, 3, 4, 3),
            rec(0, 4, 5, 4),
        ])
        .unwrap();
        assert_eq!(fan.len(), 4);
        assert_eq!(fan.edge_count(), 3);
        assert_eq!(fan.diameter(), 3);
    }

    #[test]
    fn dual_graph_matches_shared_edge_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut records = Vec::new();
        for i in 0..16u16 {
            let a = rng.random_range(0..10u16);
            let b = (a + 1 + rng.random_range(0..3u16)) % 12;
            let c = (b + 1 + rng.random_range(0..3u16)) % 14;
            if a == b || b == c || a == c {
                continue;
            }
            let key = TriKey::new(RobotId(a), RobotId(b), RobotId(c));
            if records.iter().any(|r: &TriangleRecord| r.key == key) {
                continue;
            }
            records.push(TriangleRecord {
                key,
                owner: RobotId(a),
                hop: None,
                is_frontier: false,
                kind: TriKind::Discovery,
                created_round: i as u64,
            });
        }
        let Ok(dual) = extract_dual_graph(&records) else {
            return; // random set exceeded incidence 2; nothing to compare
        };
        for a in &records {
            for b in &records {
                if a.key >= b.key {
                    continue;
                }
                let adjacent = a.key.shared_edge(&b.key).is_some();
                assert_eq!(dual.neighbors(&a.key).contains(&b.key), adjacent);
            }
        }
    }
}
