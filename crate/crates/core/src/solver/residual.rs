use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, NodeId, TrackingGraph};

use super::EPS;

/// A residual-graph arc: an edge traversed forward (no flow) or backward
/// (carrying flow). `cost` is the signed original cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub edge: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub reversed: bool,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pred {
    pub node: NodeId,
    pub edge: EdgeId,
    pub reversed: bool,
}

/// Distance label of one node. `dist` is in original cost units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Label {
    pub node: NodeId,
    pub dist: f64,
    pub pred: Option<Pred>,
}

/// Shortest-path predecessor and distance labels, indexed by node slot.
///
/// A slot holding `None` is unknown; a label with infinite distance marks
/// a node known to be unreachable.
#[derive(Debug, Clone, Default)]
pub struct PredecessorMap {
    labels: Vec<Option<Label>>,
}

impl PredecessorMap {
    /// All live nodes unreachable, source at distance zero.
    pub fn unreached(graph: &TrackingGraph) -> Self {
        let mut labels = vec![None; graph.node_slots()];
        for (id, _) in graph.nodes() {
            labels[id.index()] = Some(Label {
                node: id,
                dist: f64::INFINITY,
                pred: None,
            });
        }
        let s = graph.source();
        labels[s.index()] = Some(Label {
            node: s,
            dist: 0.0,
            pred: None,
        });
        Self { labels }
    }

    pub fn get(&self, node: NodeId) -> Option<&Label> {
        self.labels
            .get(node.index())
            .and_then(Option::as_ref)
            .filter(|l| l.node == node)
    }

    pub(crate) fn slot(&self, idx: usize) -> Option<&Label> {
        self.labels.get(idx).and_then(Option::as_ref)
    }

    pub(crate) fn slots(&self) -> usize {
        self.labels.len()
    }

    pub fn dist(&self, node: NodeId) -> f64 {
        self.get(node).map_or(f64::INFINITY, |l| l.dist)
    }

    pub fn pred(&self, node: NodeId) -> Option<Pred> {
        self.get(node).and_then(|l| l.pred)
    }

    pub fn set(&mut self, node: NodeId, dist: f64, pred: Option<Pred>) {
        if self.labels.len() <= node.index() {
            self.labels.resize(node.index() + 1, None);
        }
        self.labels[node.index()] = Some(Label { node, dist, pred });
    }

    /// Drops labels of nodes no longer in `graph`.
    pub fn retain_live(&mut self, graph: &TrackingGraph) {
        for slot in &mut self.labels {
            if slot.is_some_and(|l| graph.node(l.node).is_none()) {
                *slot = None;
            }
        }
    }

    /// Walks predecessors back from `target` to the source.
    pub fn path_to(&self, res: &ResidualGraph<'_>, target: NodeId) -> Result<Option<ShortestPath>> {
        let dist = self.dist(target);
        if !dist.is_finite() {
            return Ok(None);
        }
        let graph = res.graph();
        let mut arcs = Vec::new();
        let mut cur = target;
        while cur != graph.source() {
            let p = self
                .pred(cur)
                .ok_or_else(|| Error::invariant("labelled node without predecessor"))?;
            let e = graph
                .edge(p.edge)
                .ok_or_else(|| Error::invariant("predecessor edge is gone"))?;
            arcs.push(Arc {
                edge: p.edge,
                from: p.node,
                to: cur,
                reversed: p.reversed,
                cost: if p.reversed { -e.cost } else { e.cost },
            });
            if arcs.len() > graph.node_count() {
                return Err(Error::invariant("predecessor cycle"));
            }
            cur = p.node;
        }
        arcs.reverse();
        Ok(Some(ShortestPath { arcs, cost: dist }))
    }
}

/// A source-to-sink path in the residual graph with its original cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    pub arcs: Vec<Arc>,
    pub cost: f64,
}

impl ShortestPath {
    /// Interior nodes in path order (source and sink excluded).
    pub fn inner_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.arcs.iter().skip(1).map(|a| a.from)
    }
}

/// Flow state and node potentials over a borrowed [`TrackingGraph`].
#[derive(Debug, Clone)]
pub struct ResidualGraph<'g> {
    graph: &'g TrackingGraph,
    flow: Vec<bool>,
    flow_edges: BTreeSet<EdgeId>,
    potential: Vec<f64>,
    iteration: usize,
    strict: bool,
}

impl<'g> ResidualGraph<'g> {
    pub fn new(graph: &'g TrackingGraph) -> Self {
        Self {
            graph,
            flow: vec![false; graph.edge_slots()],
            flow_edges: BTreeSet::new(),
            potential: vec![0.0; graph.node_slots()],
            iteration: 0,
            strict: false,
        }
    }

    /// Enables full reduced-cost audits in [`Self::convert_edge_costs`].
    pub fn with_strict_checks(mut self, on: bool) -> Self {
        self.strict = on;
        self
    }

    pub fn graph(&self) -> &'g TrackingGraph {
        self.graph
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn has_flow(&self, e: EdgeId) -> bool {
        self.flow[e.index()]
    }

    pub fn flow_edges(&self) -> &BTreeSet<EdgeId> {
        &self.flow_edges
    }

    pub fn potential(&self, n: NodeId) -> f64 {
        self.potential[n.index()]
    }

    pub fn arc_for(&self, e: EdgeId) -> Arc {
        let edge = self.graph.edge_ref(e);
        if self.flow[e.index()] {
            Arc {
                edge: e,
                from: edge.to,
                to: edge.from,
                reversed: true,
                cost: -edge.cost,
            }
        } else {
            Arc {
                edge: e,
                from: edge.from,
                to: edge.to,
                reversed: false,
                cost: edge.cost,
            }
        }
    }

    /// Arcs leaving `n` in the residual graph.
    pub fn out_arcs(&self, n: NodeId) -> impl Iterator<Item = Arc> + '_ {
        let node = self.graph.node_ref(n);
        let fwd = node
            .out_edges
            .iter()
            .filter(move |e| !self.flow[e.index()]);
        let back = node.in_edges.iter().filter(move |e| self.flow[e.index()]);
        fwd.chain(back).map(move |e| self.arc_for(*e))
    }

    /// Arcs entering `n` in the residual graph.
    pub fn in_arcs(&self, n: NodeId) -> impl Iterator<Item = Arc> + '_ {
        let node = self.graph.node_ref(n);
        let fwd = node.in_edges.iter().filter(move |e| !self.flow[e.index()]);
        let back = node.out_edges.iter().filter(move |e| self.flow[e.index()]);
        fwd.chain(back).map(move |e| self.arc_for(*e))
    }

    /// `c + p(from) - p(to)`.
    pub fn reduced_cost(&self, arc: &Arc) -> f64 {
        arc.cost + self.potential(arc.from) - self.potential(arc.to)
    }

    /// Adopts `labels` as node potentials, so every arc's reduced cost
    /// becomes `c + d(u) - d(v)`.
    ///
    /// In strict mode every arc between reachable nodes is audited and a
    /// reduced cost below `-EPS` is reported as an invariant breach.
    pub fn convert_edge_costs(&mut self, labels: &PredecessorMap) -> Result<()> {
        if self.potential.len() < self.graph.node_slots() {
            self.potential.resize(self.graph.node_slots(), 0.0);
        }
        for (id, _) in self.graph.nodes() {
            self.potential[id.index()] = labels.dist(id);
        }
        if self.strict {
            self.min_reduced_cost().map(|_| ())
        } else {
            Ok(())
        }
    }

    /// Smallest reduced cost over arcs whose endpoints are both reachable.
    pub fn min_reduced_cost(&self) -> Result<f64> {
        let mut min = f64::INFINITY;
        for (e, _) in self.graph.edges() {
            let a = self.arc_for(e);
            if !(self.potential(a.from).is_finite() && self.potential(a.to).is_finite()) {
                continue;
            }
            let rc = self.reduced_cost(&a);
            if rc < -EPS {
                return Err(Error::invariant(format!(
                    "reduced cost {rc} on {e:?} after conversion"
                )));
            }
            min = min.min(rc);
        }
        Ok(min)
    }

    /// Pushes one unit of flow along `path`, reversing its arcs.
    ///
    /// An arc that was already reversed gets its flow cancelled.
    pub fn build_residual(&mut self, path: &ShortestPath) -> Result<()> {
        let (Some(first), Some(last)) = (path.arcs.first(), path.arcs.last()) else {
            return Err(Error::Rejected("empty augmenting path".into()));
        };
        if first.from != self.graph.source() || last.to != self.graph.sink() {
            return Err(Error::Rejected("path does not run from source to sink".into()));
        }
        for w in path.arcs.windows(2) {
            if w[0].to != w[1].from {
                return Err(Error::Rejected("path is not connected".into()));
            }
        }
        for a in &path.arcs {
            if self.graph.edge(a.edge).is_none() || self.flow[a.edge.index()] != a.reversed {
                return Err(Error::Rejected("path arc does not match the residual graph".into()));
            }
        }
        for a in &path.arcs {
            let f = &mut self.flow[a.edge.index()];
            *f = !*f;
            if *f {
                self.flow_edges.insert(a.edge);
            } else {
                self.flow_edges.remove(&a.edge);
            }
        }
        self.iteration += 1;
        Ok(())
    }
}
