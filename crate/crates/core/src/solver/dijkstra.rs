use std::collections::{BTreeSet, BinaryHeap};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, NodeId};

use super::residual::{Arc, Pred, PredecessorMap, ResidualGraph, ShortestPath};
use super::{QueueItem, SolverStats, EPS};

/// Labels from an earlier search used to seed [`dynamic_broadcast`].
#[derive(Debug, Clone, Copy)]
pub struct WarmStart<'a> {
    pub labels: &'a PredecessorMap,
    /// Graph stamp at the time `labels` were computed.
    pub stamp: u64,
    /// Flow-carrying edges at the time `labels` were computed.
    pub flows: &'a BTreeSet<EdgeId>,
}

/// Label-correcting search keyed on reduced distance.
///
/// Keys are `d(v) - p(v)`; stored labels are absolute original-cost
/// distances. Nodes with infinite potential were unreachable when the
/// potentials were set and stay unreachable, so they are skipped.
struct Search<'r, 'g> {
    res: &'r ResidualGraph<'g>,
    key: Vec<f64>,
    labels: PredecessorMap,
    heap: BinaryHeap<QueueItem>,
}

impl<'r, 'g> Search<'r, 'g> {
    fn new(res: &'r ResidualGraph<'g>) -> Self {
        let graph = res.graph();
        Self {
            res,
            key: vec![f64::INFINITY; graph.node_slots()],
            labels: PredecessorMap::unreached(graph),
            heap: BinaryHeap::new(),
        }
    }

    fn relax(&mut self, arc: &Arc, stats: &mut SolverStats) -> Result<()> {
        stats.relaxations += 1;
        let ku = self.key[arc.from.index()];
        let pv = self.res.potential(arc.to);
        if !ku.is_finite() || !pv.is_finite() {
            return Ok(());
        }
        let rc = self.res.reduced_cost(arc);
        if rc < -EPS {
            return Err(Error::invariant(format!(
                "negative reduced cost {rc} on {:?}",
                arc.edge
            )));
        }
        let cand = ku + rc.max(0.0);
        if cand < self.key[arc.to.index()] {
            self.key[arc.to.index()] = cand;
            self.labels.set(
                arc.to,
                cand + pv,
                Some(Pred {
                    node: arc.from,
                    edge: arc.edge,
                    reversed: arc.reversed,
                }),
            );
            self.heap.push(QueueItem {
                key: cand,
                node: arc.to,
            });
            stats.queue_pushes += 1;
        }
        Ok(())
    }

    fn run(&mut self, stats: &mut SolverStats) -> Result<()> {
        let res = self.res;
        while let Some(item) = self.heap.pop() {
            if item.key > self.key[item.node.index()] {
                continue;
            }
            for arc in res.out_arcs(item.node) {
                self.relax(&arc, stats)?;
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<(Option<ShortestPath>, PredecessorMap)> {
        let path = self.labels.path_to(self.res, self.res.graph().sink())?;
        Ok((path, self.labels))
    }
}

/// Shortest paths from the source to every node by Dijkstra on reduced costs.
pub fn dijkstra_full(
    res: &ResidualGraph<'_>,
    stats: &mut SolverStats,
) -> Result<(Option<ShortestPath>, PredecessorMap)> {
    let mut s = Search::new(res);
    let src = res.graph().source();
    s.key[src.index()] = 0.0;
    s.heap.push(QueueItem { key: 0.0, node: src });
    stats.queue_pushes += 1;
    s.run(stats)?;
    s.finish()
}

/// Shortest paths by repairing an earlier shortest-path tree.
///
/// Nodes whose tree path from the source is unchanged since `warm` keep
/// their old labels as upper bounds. Every other reachable node is first
/// relaxed from its valid in-neighbours, then every arc that was created,
/// re-costed or flipped since `warm` is relaxed from its tail, and the
/// search continues from the affected nodes only. The result equals
/// [`dijkstra_full`] on the same residual graph.
pub fn dynamic_broadcast(
    res: &ResidualGraph<'_>,
    warm: &WarmStart<'_>,
    stats: &mut SolverStats,
) -> Result<(Option<ShortestPath>, PredecessorMap)> {
    let graph = res.graph();
    let slots = graph.node_slots();
    let mut s = Search::new(res);
    let mut valid = vec![false; slots];

    // Children lists of the old tree in compressed form.
    let old = warm.labels;
    let mut counts = vec![0u32; slots + 1];
    for i in 0..old.slots().min(slots) {
        if let Some(p) = old.slot(i).and_then(|l| l.pred) {
            if p.node.index() < slots {
                counts[p.node.index() + 1] += 1;
            }
        }
    }
    for i in 0..slots {
        counts[i + 1] += counts[i];
    }
    let mut fill = counts.clone();
    let mut children = vec![0u32; counts[slots] as usize];
    for i in 0..old.slots().min(slots) {
        if let Some(p) = old.slot(i).and_then(|l| l.pred) {
            if p.node.index() < slots {
                children[fill[p.node.index()] as usize] = i as u32;
                fill[p.node.index()] += 1;
            }
        }
    }

    let src = graph.source();
    s.key[src.index()] = 0.0;
    valid[src.index()] = true;
    let mut stack = vec![src];
    while let Some(u) = stack.pop() {
        let range = counts[u.index()] as usize..counts[u.index() + 1] as usize;
        for &c in &children[range] {
            let Some(l) = old.slot(c as usize).copied() else { continue };
            let Some(p) = l.pred else { continue };
            if p.node != u || graph.node(l.node).is_none() {
                continue;
            }
            let Some(e) = graph.edge(p.edge) else { continue };
            if e.stamp > warm.stamp || res.has_flow(p.edge) != p.reversed {
                continue;
            }
            let pv = res.potential(l.node);
            if !pv.is_finite() {
                continue;
            }
            let key = l.dist - pv;
            if key < -EPS {
                return Err(Error::invariant("warm label below its potential"));
            }
            valid[c as usize] = true;
            s.key[c as usize] = key.max(0.0);
            s.labels.set(l.node, l.dist, Some(p));
            stack.push(l.node);
        }
    }

    // Old entries already known to be unreachable stay unreachable.
    for (id, _) in graph.nodes() {
        if !valid[id.index()] {
            if let Some(l) = old.get(id) {
                if l.pred.is_none() && !l.dist.is_finite() && id != src {
                    valid[id.index()] = true;
                }
            }
        }
    }

    let invalid: Vec<NodeId> = graph
        .nodes()
        .map(|(id, _)| id)
        .filter(|id| !valid[id.index()] && res.potential(*id).is_finite())
        .collect();
    for v in &invalid {
        for arc in res.in_arcs(*v) {
            if valid[arc.from.index()] {
                s.relax(&arc, stats)?;
            }
        }
    }

    let mut changed: BTreeSet<EdgeId> = graph.changed_since(warm.stamp).into_iter().collect();
    changed.extend(
        warm.flows
            .symmetric_difference(res.flow_edges())
            .filter(|e| graph.edge(**e).is_some()),
    );
    for e in changed {
        let arc = res.arc_for(e);
        if valid[arc.from.index()] {
            s.relax(&arc, stats)?;
        }
    }

    s.run(stats)?;
    s.finish()
}
