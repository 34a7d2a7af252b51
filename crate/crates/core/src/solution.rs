//! Flow solutions and trajectories.

use std::collections::BTreeMap;

use crate::detection::DetId;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, EdgeKind, TrackingGraph};

/// One unit of flow: detections in strictly consecutive frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub track_id: u64,
    pub detections: Vec<DetId>,
    pub start_frame: i64,
    pub cost: f64,
    /// Set when the trajectory enters through a remembered entry edge.
    pub origin_track: Option<u64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn end_frame(&self) -> i64 {
        self.start_frame + self.detections.len() as i64 - 1
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowSolution {
    pub trajectories: Vec<Trajectory>,
    pub total_cost: f64,
    /// Edges carrying one unit of flow, sorted.
    pub flow_edges: Vec<EdgeId>,
}

impl FlowSolution {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a solution from detection chains, computing costs from `graph`.
    ///
    /// Trajectory costs are summed edge by edge from the source, which is
    /// the order clipping uses when it folds a prefix into an entry edge.
    pub fn from_chains(graph: &TrackingGraph, chains: Vec<Vec<DetId>>) -> Result<Self> {
        let mut trajectories = Vec::with_capacity(chains.len());
        let mut flow_edges = Vec::new();
        for chain in chains {
            let (cost, edges) = chain_cost(graph, &chain)?;
            let first = graph
                .detection(chain[0])
                .ok_or_else(|| Error::invariant("unknown detection in chain"))?;
            let origin_track = graph.edge_ref(first.entry).origin_track;
            flow_edges.extend(edges);
            trajectories.push(Trajectory {
                track_id: 0,
                start_frame: first.det.frame,
                detections: chain,
                cost,
                origin_track,
            });
        }
        trajectories.sort_by_key(|t| {
            let d = &graph.detection(t.detections[0]).expect("checked").det;
            (t.start_frame, d.local_index)
        });
        for (i, t) in trajectories.iter_mut().enumerate() {
            t.track_id = i as u64;
        }
        let total_cost = trajectories.iter().map(|t| t.cost).sum();
        flow_edges.sort_unstable();
        Ok(Self {
            trajectories,
            total_cost,
            flow_edges,
        })
    }

    pub fn detection_count(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    /// Verifies flow conservation at every detection and disjointness.
    pub fn check(&self, graph: &TrackingGraph) -> Result<()> {
        let mut flow = vec![false; graph.edge_slots()];
        for e in &self.flow_edges {
            if graph.edge(*e).is_none() {
                return Err(Error::invariant("flow on a missing edge"));
            }
            if std::mem::replace(&mut flow[e.index()], true) {
                return Err(Error::invariant("edge carries more than one unit"));
            }
        }
        let f = |e: EdgeId| flow[e.index()] as i32;
        for (id, d) in graph.detections() {
            let u_in: i32 = graph.node_ref(d.u).in_edges.iter().map(|e| f(*e)).sum();
            let v_out: i32 = graph.node_ref(d.v).out_edges.iter().map(|e| f(*e)).sum();
            let det = f(d.detection);
            if u_in != det || v_out != det {
                return Err(Error::invariant(format!(
                    "flow conservation fails at {id}: in {u_in}, det {det}, out {v_out}"
                )));
            }
        }
        let mut seen = BTreeMap::new();
        for t in &self.trajectories {
            if t.detections.is_empty() {
                return Err(Error::invariant("empty trajectory"));
            }
            for (k, d) in t.detections.iter().enumerate() {
                if seen.insert(*d, t.track_id).is_some() {
                    return Err(Error::invariant(format!("{d} used twice")));
                }
                let frame = graph.detection(*d).map(|e| e.det.frame);
                if frame != Some(t.start_frame + k as i64) {
                    return Err(Error::invariant("trajectory frames are not consecutive"));
                }
            }
        }
        Ok(())
    }
}

/// Cost and edges of a trajectory through `chain`.
pub fn chain_cost(graph: &TrackingGraph, chain: &[DetId]) -> Result<(f64, Vec<EdgeId>)> {
    let entry_of = |d: &DetId| {
        graph
            .detection(*d)
            .ok_or_else(|| Error::invariant(format!("unknown detection {d}")))
    };
    let first = entry_of(chain.first().ok_or_else(|| Error::invariant("empty chain"))?)?;
    let mut edges = vec![first.entry, first.detection];
    let mut cost = graph.edge_ref(first.entry).cost + graph.edge_ref(first.detection).cost;
    for pair in chain.windows(2) {
        let link = graph.link_between(pair[0], pair[1]).ok_or_else(|| {
            Error::invariant(format!("no link edge {} -> {}", pair[0], pair[1]))
        })?;
        let next = entry_of(&pair[1])?;
        cost += graph.edge_ref(link).cost;
        cost += graph.edge_ref(next.detection).cost;
        edges.push(link);
        edges.push(next.detection);
    }
    let last = entry_of(chain.last().expect("non-empty"))?;
    cost += graph.edge_ref(last.exit).cost;
    edges.push(last.exit);
    debug_assert!(edges.iter().all(|e| graph.edge(*e).is_some()));
    debug_assert_eq!(graph.edge_ref(first.entry).kind, EdgeKind::Entry);
    Ok((cost, edges))
}
