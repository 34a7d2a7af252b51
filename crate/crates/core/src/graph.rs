//! Layered min-cost flow network for data association.
//!
//! Every detection owns an in-node `U` and an out-node `V` joined by a
//! detection edge. The source feeds every `U` through an entry edge, every
//! `V` drains to the sink through an exit edge, and link edges join `V` of
//! frame `t` to `U` of frame `t + 1`. All capacities are one.
//!
//! Nodes and edges live in generational slabs so the online tracker can
//! drop whole frames and reuse the slots without stale ids aliasing.

use std::collections::{BTreeMap, VecDeque};

use crate::cost::EdgeCosts;
use crate::detection::{DetId, Detection};
use crate::error::{Error, Result};
use crate::solution::FlowSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    idx: u32,
    gen: u32,
}

impl NodeId {
    pub fn index(self) -> usize {
        self.idx as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId {
    idx: u32,
    gen: u32,
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.idx as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Source,
    Sink,
    /// `U` node of a detection.
    In(DetId),
    /// `V` node of a detection.
    Out(DetId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Entry,
    Detection,
    Link,
    Exit,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub frame: Option<i64>,
    pub out_edges: Vec<EdgeId>,
    pub in_edges: Vec<EdgeId>,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
    pub cost: f64,
    /// Track whose clipped prefix this entry edge stands for.
    pub origin_track: Option<u64>,
    /// Graph modification stamp of the last change to this edge.
    pub stamp: u64,
}

#[derive(Debug, Clone)]
pub struct DetEntry {
    pub det: Detection,
    pub u: NodeId,
    pub v: NodeId,
    pub entry: EdgeId,
    pub detection: EdgeId,
    pub exit: EdgeId,
}

#[derive(Debug, Clone)]
struct Slot<T> {
    gen: u32,
    item: Option<T>,
}

#[derive(Debug, Clone)]
struct Slab<T> {
    slots: Vec<Slot<T>>,
    free: Vec<u32>,
    live: usize,
}

impl<T> Slab<T> {
    fn new() -> Self {
        Self {
            slots: Vec::new(),
            free: Vec::new(),
            live: 0,
        }
    }

    fn insert(&mut self, item: T) -> (u32, u32) {
        self.live += 1;
        if let Some(idx) = self.free.pop() {
            let slot = &mut self.slots[idx as usize];
            slot.gen += 1;
            slot.item = Some(item);
            (idx, slot.gen)
        } else {
            self.slots.push(Slot {
                gen: 0,
                item: Some(item),
            });
            ((self.slots.len() - 1) as u32, 0)
        }
    }

    fn get(&self, idx: u32, gen: u32) -> Option<&T> {
        self.slots
            .get(idx as usize)
            .filter(|s| s.gen == gen)
            .and_then(|s| s.item.as_ref())
    }

    fn get_mut(&mut self, idx: u32, gen: u32) -> Option<&mut T> {
        self.slots
            .get_mut(idx as usize)
            .filter(|s| s.gen == gen)
            .and_then(|s| s.item.as_mut())
    }

    fn remove(&mut self, idx: u32, gen: u32) -> Option<T> {
        let slot = self.slots.get_mut(idx as usize).filter(|s| s.gen == gen)?;
        let item = slot.item.take()?;
        self.free.push(idx);
        self.live -= 1;
        Some(item)
    }
}

/// Result of dropping the oldest frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClipReport {
    pub frame: i64,
    pub removed_detections: Vec<DetId>,
    /// Successor detections whose entry edge now carries a remembered prefix.
    pub remembered: Vec<(DetId, u64, f64)>,
}

#[derive(Debug, Clone)]
pub struct TrackingGraph {
    nodes: Slab<Node>,
    edges: Slab<Edge>,
    source: NodeId,
    sink: NodeId,
    dets: BTreeMap<DetId, DetEntry>,
    frames: VecDeque<Vec<DetId>>,
    first_frame: Option<i64>,
    next_det: u64,
    stamp: u64,
    change_log: Vec<(u64, EdgeId)>,
}

impl Default for TrackingGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl TrackingGraph {
    pub fn new() -> Self {
        let mut nodes = Slab::new();
        let (si, sg) = nodes.insert(Node {
            kind: NodeKind::Source,
            frame: None,
            out_edges: Vec::new(),
            in_edges: Vec::new(),
        });
        let (ti, tg) = nodes.insert(Node {
            kind: NodeKind::Sink,
            frame: None,
            out_edges: Vec::new(),
            in_edges: Vec::new(),
        });
        Self {
            nodes,
            edges: Slab::new(),
            source: NodeId { idx: si, gen: sg },
            sink: NodeId { idx: ti, gen: tg },
            dets: BTreeMap::new(),
            frames: VecDeque::new(),
            first_frame: None,
            next_det: 0,
            stamp: 0,
            change_log: Vec::new(),
        }
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.idx, id.gen)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(id.idx, id.gen)
    }

    /// Node lookup for ids the caller knows to be live.
    pub(crate) fn node_ref(&self, id: NodeId) -> &Node {
        self.node(id).expect("stale node id")
    }

    pub(crate) fn edge_ref(&self, id: EdgeId) -> &Edge {
        self.edge(id).expect("stale edge id")
    }

    /// Upper bound (exclusive) on node slot indices, for dense per-node arrays.
    pub fn node_slots(&self) -> usize {
        self.nodes.slots.len()
    }

    pub fn edge_slots(&self) -> usize {
        self.edges.slots.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.live
    }

    pub fn edge_count(&self) -> usize {
        self.edges.live
    }

    pub fn detection_count(&self) -> usize {
        self.dets.len()
    }

    pub fn stamp(&self) -> u64 {
        self.stamp
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes.slots.iter().enumerate().filter_map(|(i, s)| {
            s.item.as_ref().map(|n| {
                (
                    NodeId {
                        idx: i as u32,
                        gen: s.gen,
                    },
                    n,
                )
            })
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges.slots.iter().enumerate().filter_map(|(i, s)| {
            s.item.as_ref().map(|e| {
                (
                    EdgeId {
                        idx: i as u32,
                        gen: s.gen,
                    },
                    e,
                )
            })
        })
    }

    pub fn detection(&self, id: DetId) -> Option<&DetEntry> {
        self.dets.get(&id)
    }

    pub fn detections(&self) -> impl Iterator<Item = (DetId, &DetEntry)> {
        self.dets.iter().map(|(k, v)| (*k, v))
    }

    pub fn det_of(&self, node: NodeId) -> Option<DetId> {
        match self.node(node)?.kind {
            NodeKind::In(d) | NodeKind::Out(d) => Some(d),
            _ => None,
        }
    }

    /// Frame index of the oldest frame still in the graph.
    pub fn t_min(&self) -> Option<i64> {
        self.first_frame
    }

    pub fn t_max(&self) -> Option<i64> {
        self.first_frame
            .map(|f| f + self.frames.len() as i64 - 1)
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Detections of frame `t`, in insertion order.
    pub fn frame(&self, t: i64) -> &[DetId] {
        match self.first_frame {
            Some(f) if t >= f => self
                .frames
                .get((t - f) as usize)
                .map(Vec::as_slice)
                .unwrap_or(&[]),
            _ => &[],
        }
    }

    pub fn max_detections_per_frame(&self) -> usize {
        self.frames.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Finds a detection by its (frame, local index) key.
    pub fn find_detection(&self, frame: i64, local_index: usize) -> Option<DetId> {
        self.frame(frame)
            .iter()
            .copied()
            .find(|d| self.dets[d].det.local_index == local_index)
    }

    pub fn link_between(&self, from: DetId, to: DetId) -> Option<EdgeId> {
        let a = self.dets.get(&from)?;
        let b = self.dets.get(&to)?;
        self.node_ref(a.v)
            .out_edges
            .iter()
            .copied()
            .find(|e| self.edge_ref(*e).to == b.u)
    }

    /// Edges created or re-costed after `stamp`.
    pub fn changed_since(&self, stamp: u64) -> Vec<EdgeId> {
        let start = self.change_log.partition_point(|(s, _)| *s <= stamp);
        let mut out: Vec<EdgeId> = self.change_log[start..]
            .iter()
            .map(|(_, e)| *e)
            .filter(|e| self.edge(*e).is_some())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Forget change records at or before `stamp`.
    pub fn prune_changes(&mut self, stamp: u64) {
        let cut = self.change_log.partition_point(|(s, _)| *s <= stamp);
        self.change_log.drain(..cut);
    }

    fn bump(&mut self) -> u64 {
        self.stamp += 1;
        self.stamp
    }

    fn add_node(&mut self, kind: NodeKind, frame: Option<i64>) -> NodeId {
        let (idx, gen) = self.nodes.insert(Node {
            kind,
            frame,
            out_edges: Vec::new(),
            in_edges: Vec::new(),
        });
        NodeId { idx, gen }
    }

    fn add_edge(&mut self, from: NodeId, to: NodeId, kind: EdgeKind, cost: f64) -> EdgeId {
        let stamp = self.bump();
        let (idx, gen) = self.edges.insert(Edge {
            from,
            to,
            kind,
            cost,
            origin_track: None,
            stamp,
        });
        let id = EdgeId { idx, gen };
        self.nodes
            .get_mut(from.idx, from.gen)
            .expect("edge tail")
            .out_edges
            .push(id);
        self.nodes
            .get_mut(to.idx, to.gen)
            .expect("edge head")
            .in_edges
            .push(id);
        self.change_log.push((stamp, id));
        id
    }

    fn remove_edge(&mut self, id: EdgeId) {
        if let Some(e) = self.edges.remove(id.idx, id.gen) {
            if let Some(n) = self.nodes.get_mut(e.from.idx, e.from.gen) {
                n.out_edges.retain(|x| *x != id);
            }
            if let Some(n) = self.nodes.get_mut(e.to.idx, e.to.gen) {
                n.in_edges.retain(|x| *x != id);
            }
        }
    }

    /// Re-costs an edge and records the change.
    pub fn set_edge_cost(&mut self, id: EdgeId, cost: f64, origin_track: Option<u64>) -> Result<()> {
        if !cost.is_finite() {
            return Err(Error::NonFiniteCost { what: "edge" });
        }
        let stamp = self.bump();
        let e = self
            .edges
            .get_mut(id.idx, id.gen)
            .ok_or_else(|| Error::Rejected("unknown edge".into()))?;
        e.cost = cost;
        e.origin_track = origin_track;
        e.stamp = stamp;
        self.change_log.push((stamp, id));
        Ok(())
    }

    /// Builds the full network for a batch of detections.
    ///
    /// Frames missing from the input between the first and last frame
    /// become empty layers.
    pub fn build_batch(detections: Vec<Detection>, costs: &impl EdgeCosts) -> Result<Self> {
        let mut by_frame: BTreeMap<i64, Vec<Detection>> = BTreeMap::new();
        for d in detections {
            by_frame.entry(d.frame).or_default().push(d);
        }
        let mut g = Self::new();
        let (Some(&first), Some(&last)) = (by_frame.keys().next(), by_frame.keys().next_back()) else {
            return Ok(g);
        };
        for t in first..=last {
            g.append_frame(t, by_frame.remove(&t).unwrap_or_default(), costs)?;
        }
        Ok(g)
    }

    /// Adds one frame of detections at `t_max + 1` (or any frame when empty).
    pub fn append_frame(
        &mut self,
        frame: i64,
        detections: Vec<Detection>,
        costs: &impl EdgeCosts,
    ) -> Result<()> {
        if let Some(t_max) = self.t_max() {
            if frame != t_max + 1 {
                return Err(Error::FrameGap {
                    expected_after: t_max,
                    got: frame,
                });
            }
        } else if frame < 0 {
            return Err(Error::InvalidDetection {
                frame,
                reason: "negative frame index".into(),
            });
        }

        // validate everything before touching the graph
        let mut seen = std::collections::BTreeSet::new();
        let mut unary = Vec::with_capacity(detections.len());
        for d in &detections {
            d.validate()?;
            if d.frame != frame {
                return Err(Error::InvalidDetection {
                    frame: d.frame,
                    reason: format!("detection listed under frame {frame}"),
                });
            }
            if !seen.insert(d.local_index) {
                return Err(Error::InvalidDetection {
                    frame,
                    reason: format!("duplicate local index {}", d.local_index),
                });
            }
            let (en, det, ex) = (costs.entry(d), costs.detection(d), costs.exit(d));
            if !en.is_finite() {
                return Err(Error::NonFiniteCost { what: "entry" });
            }
            if !det.is_finite() {
                return Err(Error::NonFiniteCost { what: "detection" });
            }
            if !ex.is_finite() {
                return Err(Error::NonFiniteCost { what: "exit" });
            }
            unary.push((en, det, ex));
        }

        let prev: Vec<DetId> = if self.first_frame.is_some() {
            self.frame(frame - 1).to_vec()
        } else {
            Vec::new()
        };
        let mut ids = Vec::with_capacity(detections.len());
        for (d, (en, dc, ex)) in detections.into_iter().zip(unary) {
            let id = DetId(self.next_det);
            self.next_det += 1;
            let u = self.add_node(NodeKind::In(id), Some(frame));
            let v = self.add_node(NodeKind::Out(id), Some(frame));
            let entry = self.add_edge(self.source, u, EdgeKind::Entry, en);
            let detection = self.add_edge(u, v, EdgeKind::Detection, dc);
            let exit = self.add_edge(v, self.sink, EdgeKind::Exit, ex);
            for p in &prev {
                let pe = &self.dets[p];
                if let Some(c) = costs.link(&pe.det, &d).filter(|c| c.is_finite()) {
                    let pv = pe.v;
                    self.add_edge(pv, u, EdgeKind::Link, c);
                }
            }
            self.dets.insert(
                id,
                DetEntry {
                    det: d,
                    u,
                    v,
                    entry,
                    detection,
                    exit,
                },
            );
            ids.push(id);
        }
        if self.first_frame.is_none() {
            self.first_frame = Some(frame);
        }
        self.frames.push_back(ids);
        Ok(())
    }

    /// Removes the oldest frame, folding each trajectory's clipped prefix
    /// into the entry edge of its successor in the next frame.
    ///
    /// The new entry cost of a successor `v` of clipped node `u` is
    /// `(entry(u) + det(u)) + link(u, v)`, the exact prefix cost of the
    /// trajectory up to `v`. Successors not on a surviving prefix get the
    /// plain entry cost from `costs` back.
    pub fn clip_oldest_frame(
        &mut self,
        solution: &FlowSolution,
        costs: &impl EdgeCosts,
    ) -> Result<ClipReport> {
        if self.frames.len() < 2 {
            return Err(Error::Rejected("cannot clip the only frame".into()));
        }
        let t = self.first_frame.expect("non-empty graph");
        let mut report = ClipReport {
            frame: t,
            ..Default::default()
        };

        let mut remembered: BTreeMap<DetId, (f64, u64)> = BTreeMap::new();
        for traj in &solution.trajectories {
            let (Some(&first), Some(&next)) = (traj.detections.first(), traj.detections.get(1)) else {
                continue;
            };
            let Some(fe) = self.dets.get(&first) else { continue };
            if fe.det.frame != t {
                continue;
            }
            let link = self.link_between(first, next).ok_or_else(|| {
                Error::invariant(format!("trajectory uses missing link {first} -> {next}"))
            })?;
            let prefix = (self.edge_ref(fe.entry).cost + self.edge_ref(fe.detection).cost)
                + self.edge_ref(link).cost;
            remembered.insert(next, (prefix, traj.track_id));
        }

        let removed = self.frames.pop_front().expect("checked above");
        for id in &removed {
            let entry = self.dets.remove(id).expect("frame detection");
            let mut incident: Vec<EdgeId> = Vec::new();
            for n in [entry.u, entry.v] {
                let node = self.node_ref(n);
                incident.extend(&node.in_edges);
                incident.extend(&node.out_edges);
            }
            incident.sort_unstable();
            incident.dedup();
            for e in incident {
                self.remove_edge(e);
            }
            self.nodes.remove(entry.u.idx, entry.u.gen);
            self.nodes.remove(entry.v.idx, entry.v.gen);
        }
        report.removed_detections = removed;
        self.first_frame = Some(t + 1);

        let next: Vec<DetId> = self.frame(t + 1).to_vec();
        for id in next {
            let entry = self.dets[&id].entry;
            let current = self.edge_ref(entry);
            match remembered.get(&id) {
                Some(&(cost, track)) => {
                    self.set_edge_cost(entry, cost, Some(track))?;
                    report.remembered.push((id, track, cost));
                }
                None => {
                    let plain = costs.entry(&self.dets[&id].det);
                    if current.cost != plain || current.origin_track.is_some() {
                        self.set_edge_cost(entry, plain, None)?;
                    }
                }
            }
        }
        Ok(report)
    }

    /// Checks the layered-DAG structure and bookkeeping invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |m: String| Err(Error::invariant(m));
        if self.node_count() != 2 * self.dets.len() + 2 {
            return bad(format!(
                "{} nodes for {} detections",
                self.node_count(),
                self.dets.len()
            ));
        }
        let (lo, hi) = match (self.t_min(), self.t_max()) {
            (Some(a), Some(b)) => (a, b),
            _ => (i64::MIN, i64::MAX),
        };
        for (id, e) in self.edges() {
            let (Some(a), Some(b)) = (self.node(e.from), self.node(e.to)) else {
                return bad(format!("edge {id:?} has a dangling endpoint"));
            };
            let ok = match (e.kind, a.kind, b.kind) {
                (EdgeKind::Entry, NodeKind::Source, NodeKind::In(_)) => true,
                (EdgeKind::Exit, NodeKind::Out(_), NodeKind::Sink) => true,
                (EdgeKind::Detection, NodeKind::In(x), NodeKind::Out(y)) => x == y,
                (EdgeKind::Link, NodeKind::Out(_), NodeKind::In(_)) => {
                    b.frame.zip(a.frame).map(|(fb, fa)| fb == fa + 1) == Some(true)
                }
                _ => false,
            };
            if !ok {
                return bad(format!("edge {id:?} breaks the layered structure"));
            }
            if !e.cost.is_finite() {
                return bad(format!("edge {id:?} has a non-finite cost"));
            }
        }
        for (id, d) in &self.dets {
            if d.det.frame < lo || d.det.frame > hi {
                return bad(format!("detection {id} lies outside [{lo}, {hi}]"));
            }
        }
        Ok(())
    }

    /// Canonical listing of all edges for structural comparison.
    pub fn edge_listing(&self) -> Vec<(NodeKind, NodeKind, EdgeKind, f64)> {
        let mut v: Vec<_> = self
            .edges()
            .map(|(_, e)| (self.node_ref(e.from).kind, self.node_ref(e.to).kind, e.kind, e.cost))
            .collect();
        v.sort_by_key(|a| (a.0, a.1, a.2));
        v
    }

    /// Same nodes, edges and costs (to `tol`) as `other`.
    pub fn structurally_equal(&self, other: &Self, tol: f64) -> bool {
        let mut na: Vec<_> = self.nodes().map(|(_, n)| (n.kind, n.frame)).collect();
        let mut nb: Vec<_> = other.nodes().map(|(_, n)| (n.kind, n.frame)).collect();
        na.sort();
        nb.sort();
        if na != nb {
            return false;
        }
        let (ea, eb) = (self.edge_listing(), other.edge_listing());
        ea.len() == eb.len()
            && ea
                .iter()
                .zip(&eb)
                .all(|(a, b)| (a.0, a.1, a.2) == (b.0, b.1, b.2) && (a.3 - b.3).abs() <= tol)
    }
}
